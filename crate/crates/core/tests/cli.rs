use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_freebound");

fn config(h: (f64, f64), g: (f64, f64), h0: f64, mu: f64) -> String {
    format!(
        r#"schema = "freebound.config/v1"

[model]
d1 = 1.0
d2 = 1.0
a = 1.0
b = 1.0
mu1 = {mu}
mu2 = {mu}
h0 = {h0}
fixed_end = "dirichlet"

[nonlinearity.h]
family = "monod"
alpha = {}
beta = {}

[nonlinearity.g]
family = "monod"
alpha = {}
beta = {}

[solver]
n = 128
dt = 0.002
t_max = 100.0
output_dt = 0.5
"#,
        h.0, h.1, g.0, g.1
    )
}

fn sym(dir: &Path) -> PathBuf {
    let p = dir.join("sym.toml");
    std::fs::write(&p, config((2.0, 1.0), (2.0, 1.0), 1.5, 1.0)).unwrap();
    p
}

fn subcrit(dir: &Path) -> PathBuf {
    let p = dir.join("subcrit.toml");
    std::fs::write(&p, config((1.0, 1.0), (0.5, 1.0), 2.0, 1.0)).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn eigen_vanishes_at_pi_for_symmetric_case() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = sym(tmp.path());
    let csv = tmp.path().join("eig.csv");
    let out = run(&["eigen", "--config", s(&cfg), "--l", "3.14159", "--eigenfunction", s(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["lambda"].as_f64().unwrap().abs() < 1e-5);
    assert!((v["l0"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-12);
    assert!(v["nu1"].is_number() && v["p"].is_number());
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("x,phi,psi\n"));
}

#[test]
fn simulate_subcritical_vanishes_and_writes_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = subcrit(tmp.path());
    let out_dir = tmp.path().join("out");
    let out = run(&["simulate", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["class"], "Vanishing");
    assert!(v["h_inf"].is_number());
    assert_eq!(v["evidence"]["rule"], "extinct_and_stalled");
    let timeline = std::fs::read_to_string(out_dir.join("timeline.csv")).unwrap();
    assert!(timeline.starts_with("t,h,h_prime,sup_u,sup_v,mass_u,mass_v\n"));
    let second = timeline.lines().nth(1).unwrap();
    assert_eq!(second.split(',').next().unwrap(), "0.000000000000e+00");
    let snap = std::fs::read_to_string(out_dir.join("final_state.csv")).unwrap();
    assert!(snap.starts_with("y,x,u,v\n"));
    assert_eq!(snap.lines().count(), 130);
    assert!(out_dir.join("outcome.json").exists());
}

#[test]
fn validation_failures_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.toml");
    let out = run(&["simulate", "--config", s(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.toml"));

    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, config((2.0, 1.0), (2.0, 1.0), 1.5, 1.0).replace("config/v1", "config/v9")).unwrap();
    let out = run(&["critical-length", "--config", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema"));

    let cfg = subcrit(tmp.path());
    assert_eq!(run(&["critical-length", "--config", s(&cfg)]).status.code(), Some(2));
    assert_eq!(run(&["critical-mu", "--config", s(&cfg)]).status.code(), Some(2));
    let out = run(&["steady", "--config", s(&cfg), "--l", "5.0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["eigen", "--config", s(&cfg), "--l", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn critical_length_and_steady_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = sym(tmp.path());
    let out = run(&["critical-length", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["l0"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-12);
    assert_eq!(v["r0"].as_f64().unwrap(), 4.0);

    let dir = tmp.path().join("steady");
    let out = run(&["steady", "--config", s(&cfg), "--l", "6.2832", "--kind", "elevated", "--n", "200", "--out", s(&dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["kind"], "elevated");
    assert!(v["residual"].as_f64().unwrap() < 1e-8);
    assert!(v["iterations"].as_u64().unwrap() > 0);
    let csv = std::fs::read_to_string(dir.join("steady.csv")).unwrap();
    assert!(csv.starts_with("x,u,v\n"));
    assert_eq!(csv.lines().count(), 202);
}

#[test]
fn hypotheses_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = sym(tmp.path());
    let out = run(&["check-hypotheses", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["clauses"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert_eq!(v["grid_density"], 1000);
}

#[test]
fn critical_mu_writes_result_and_probe_log() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("mu.toml");
    let text = config((2.0, 1.0), (2.0, 1.0), 1.5, 1.0).replace("n = 128", "n = 64") + "\n[criteria]\ntol = 0.1\n";
    std::fs::write(&cfg, text).unwrap();
    let dir = tmp.path().join("mu");
    let out = run(&["critical-mu", "--config", s(&cfg), "--out", s(&dir)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["name"], "mu1_star");
    let (lo, hi) = (v["bracket"][0].as_f64().unwrap(), v["bracket"][1].as_f64().unwrap());
    assert!(lo < hi && hi - lo < 0.1);
    let csv = std::fs::read_to_string(dir.join("mu1_star_probes.csv")).unwrap();
    assert!(csv.starts_with("param_value,outcome,t_resolved,h_final\n"));
    assert!(dir.join("mu1_star.json").exists());
}

#[test]
fn plot_outputs_and_parse_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = sym(tmp.path());
    let sim = tmp.path().join("sim");
    assert_eq!(
        run(&["simulate", "--config", s(&cfg), "--out", s(&sim), "--full"]).status.code(),
        Some(0)
    );
    let figs = tmp.path().join("figs");
    let out = run(&[
        "plot",
        "--timeline",
        s(&sim.join("timeline.csv")),
        "--snapshot",
        s(&sim.join("final_state.csv")),
        "--config",
        s(&cfg),
        "--out",
        s(&figs),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let front = std::fs::read_to_string(figs.join("front.svg")).unwrap();
    assert!(front.contains("stroke-dasharray"));
    assert!(figs.join("norm.svg").exists() && figs.join("profiles.svg").exists());

    let empty = tmp.path().join("empty.csv");
    std::fs::write(&empty, "t,h,h_prime,sup_u,sup_v,mass_u,mass_v\n").unwrap();
    let out = run(&["plot", "--timeline", s(&empty), "--out", s(&figs)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}
