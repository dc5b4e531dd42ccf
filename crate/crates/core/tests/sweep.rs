use std::f64::consts::PI;
use std::path::Path;

use freebound::harness::{run_sweep, Axis, AxisName, RunConfig, SweepSpec};
use freebound::model::{CouplingSpec, FixedEnd, ModelParams};
use freebound::stefan::Controls;

fn base() -> RunConfig {
    let model = ModelParams {
        d1: 1.0,
        d2: 1.0,
        a: 1.0,
        b: 1.0,
        mu1: 1.0,
        mu2: 1.0,
        h0: 0.5 * PI,
        fixed_end: FixedEnd::Dirichlet,
    };
    let monod = CouplingSpec::Monod { alpha: 2.0, beta: 1.0 };
    let mut cfg = RunConfig::new(model, monod.clone(), monod);
    cfg.solver = Controls {
        n: 64,
        dt: 2e-3,
        t_max: 200.0,
        output_dt: 0.5,
    };
    cfg
}

fn axis(name: AxisName, values: &[f64]) -> Axis {
    Axis {
        name,
        values: values.to_vec(),
    }
}

fn manifest_in(dir: &Path) -> std::path::PathBuf {
    dir.join("sweep").join("manifest.csv")
}

#[test]
fn front_beyond_critical_length_spreads() {
    let tmp = tempfile::tempdir().unwrap();
    let m = manifest_in(tmp.path());
    let values: Vec<f64> = [0.5, 0.8, 1.2, 1.5].iter().map(|f| f * PI).collect();
    let spec = SweepSpec::new(m.display().to_string(), vec![axis(AxisName::H0, &values)]);
    let summary = run_sweep(&base(), &spec, &m).unwrap();
    assert_eq!(summary.executed, 4);
    for row in &summary.manifest.rows {
        if row.values[0] >= PI {
            assert_eq!(row.class, "Spreading", "{row:?}");
        }
    }
    let runs = m.parent().unwrap().join("runs");
    let json = std::fs::read_to_string(runs.join("r00002.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["outcome"]["class"], "Spreading");
    assert!((v["params"]["h0"].as_f64().unwrap() - values[2]).abs() < 1e-14);
}

#[test]
fn empty_axes_is_a_single_baseline_run() {
    let tmp = tempfile::tempdir().unwrap();
    let m = manifest_in(tmp.path());
    let summary = run_sweep(&base(), &SweepSpec::new(m.display().to_string(), vec![]), &m).unwrap();
    assert_eq!(summary.manifest.rows.len(), 1);
    let text = std::fs::read_to_string(&m).unwrap();
    assert_eq!(text.lines().next(), Some("run_id,class,h_final"));
}

fn phase_spec(m: &Path, workers: usize) -> SweepSpec {
    let mut spec = SweepSpec::new(
        m.display().to_string(),
        vec![
            axis(AxisName::Mu1, &[0.5, 1.0, 2.0, 4.0]),
            axis(AxisName::Tau, &[0.25, 0.5, 1.0, 2.0, 4.0]),
        ],
    );
    spec.workers = Some(workers);
    spec
}

#[test]
fn phase_map_is_a_monotone_staircase_and_worker_independent() {
    let tmp = tempfile::tempdir().unwrap();
    let (m1, m4) = (tmp.path().join("one/m.csv"), tmp.path().join("four/m.csv"));
    let one = run_sweep(&base(), &phase_spec(&m1, 1), &m1).unwrap();
    run_sweep(&base(), &phase_spec(&m4, 4), &m4).unwrap();
    assert_eq!(std::fs::read(&m1).unwrap(), std::fs::read(&m4).unwrap());
    for r in ["r00000.json", "r00013.json", "r00019.json"] {
        assert_eq!(
            std::fs::read(m1.parent().unwrap().join("runs").join(r)).unwrap(),
            std::fs::read(m4.parent().unwrap().join("runs").join(r)).unwrap()
        );
    }

    // no Spreading cell below-left of a Vanishing one
    let rows = &one.manifest.rows;
    let spreads = |r: &freebound::harness::ManifestRow| r.class == "Spreading";
    for a in rows.iter().filter(|r| spreads(r)) {
        for b in rows.iter().filter(|r| !spreads(r)) {
            let dominated = b.values[0] >= a.values[0] && b.values[1] >= a.values[1];
            assert!(!dominated, "{a:?} spreads but {b:?} does not");
        }
    }
    assert!(rows.iter().any(spreads) && rows.iter().any(|r| !spreads(r)));
}

#[test]
fn resume_skips_completed_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let m = manifest_in(tmp.path());
    let spec = phase_spec(&m, 2);
    let first = run_sweep(&base(), &spec, &m).unwrap();
    let full = std::fs::read_to_string(&m).unwrap();

    // drop five rows as if the sweep had been interrupted
    let kept: Vec<&str> = full.lines().enumerate().filter(|(i, _)| i % 4 != 1).map(|(_, l)| l).collect();
    std::fs::write(&m, kept.join("\n") + "\n").unwrap();
    let again = run_sweep(&base(), &spec, &m).unwrap();
    assert_eq!(again.executed, 5);
    assert_eq!(again.skipped, first.manifest.rows.len() - 5);
    assert_eq!(std::fs::read_to_string(&m).unwrap(), full);

    let mut other = spec.clone();
    other.axes.pop();
    assert!(run_sweep(&base(), &other, &m).is_err());
}

#[test]
fn failed_runs_are_recorded_and_the_sweep_continues() {
    let tmp = tempfile::tempdir().unwrap();
    let m = manifest_in(tmp.path());
    let spec = SweepSpec::new(m.display().to_string(), vec![axis(AxisName::D1, &[-1.0, 1.0])]);
    let summary = run_sweep(&base(), &spec, &m).unwrap();
    assert_eq!(summary.failed, 1);
    assert_eq!(summary.manifest.rows[0].class, "Failed");
    assert!(summary.manifest.rows[0].h_final.is_nan());
    assert_ne!(summary.manifest.rows[1].class, "Failed");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(m.parent().unwrap().join("runs/r00000.json")).unwrap()).unwrap();
    assert!(v["error"].as_str().unwrap().contains("d1"));
    assert!(v["outcome"].is_null());
}
