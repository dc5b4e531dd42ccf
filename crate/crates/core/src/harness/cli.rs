use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use super::config::{ConfigError, RunConfig};
use super::plot;
use super::sweep::{run_sweep, Manifest, SweepError, SweepSpec};
use crate::criteria::{find_mu1_star, find_tau_star, CriteriaError, ThresholdResult};
use crate::dichotomy::{classify, simulate_and_classify};
use crate::elliptic::{SteadyError, SteadyKind, SteadySolver};
use crate::io::{csv_text, sci, write_text};
use crate::model::{default_z_max, reproduction_number, validate_hypotheses, FixedEnd, ModelError};
use crate::par::Execution;
use crate::spectral::{critical_length, eigenpair, LinearCoeffs, SpectralError};
use crate::stefan::{simulate, StefanError, Timeline};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "freebound", version, about = "Two-species epidemic model with a Stefan free boundary")]
struct Cli {
    /// Accepted for scripts; every pipeline is deterministic and uses no RNG.
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the free-boundary simulation and classify the outcome.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to output.dir of the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// March to t_max even after the classifier has fired.
        #[arg(long)]
        full: bool,
    },
    /// Principal eigenvalue on (0, l).
    Eigen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        l: f64,
        /// Write x,phi,psi samples to this CSV.
        #[arg(long)]
        eigenfunction: Option<PathBuf>,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
    },
    /// Steady state on (0, l).
    Steady {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        l: f64,
        /// homogeneous, elevated or semi_infinite
        #[arg(long, default_value = "homogeneous")]
        kind: SteadyKind,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical length l0.
    CriticalLength {
        #[arg(long)]
        config: PathBuf,
    },
    /// Bracket the critical expansion rate mu1* (mu2 = Q(mu1)).
    CriticalMu {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bracket the critical initial amplitude tau*.
    CriticalTau {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate over a parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the worker count of the spec.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Sampled check of the structural hypotheses on H and G.
    CheckHypotheses {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        z_max: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        grid: usize,
    },
    /// Render SVG charts from a timeline, snapshot or sweep manifest.
    Plot {
        #[arg(long)]
        timeline: Option<PathBuf>,
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Critical length guideline; computed from --config when omitted.
        #[arg(long)]
        l0: Option<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::BracketingFailure(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<SpectralError> for Failure {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::NonConvergence { .. }
            | SpectralError::NonPositiveEigenvector
            | SpectralError::Postcondition(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<StefanError> for Failure {
    fn from(e: StefanError) -> Self {
        match e {
            StefanError::InvalidControls(_) | StefanError::Model(_) => Failure::Validation(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<SteadyError> for Failure {
    fn from(e: SteadyError) -> Self {
        match e {
            SteadyError::Subcritical { .. }
            | SteadyError::GridTooSmall(_)
            | SteadyError::Precondition(_)
            | SteadyError::Model(_) => Failure::Validation(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<CriteriaError> for Failure {
    fn from(e: CriteriaError) -> Self {
        match e {
            CriteriaError::Precondition(_) | CriteriaError::InvalidLink(_) | CriteriaError::BudgetTooSmall(_) => {
                Failure::Validation(e.to_string())
            }
            CriteriaError::Simulation(s) => s.into(),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Io { .. } => Failure::Numerical(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    write_text(path, text).map_err(|e| Failure::Numerical(format!("{}: {e}", path.display())))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    let cfg = RunConfig::load(path)?;
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &RunConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
}

/// Parse `args` (program name first), execute, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(stdout) => {
            print!("{stdout}");
            EXIT_OK
        }
        Err(f) => {
            eprintln!("freebound: {}", f.message());
            f.code()
        }
    }
}

#[derive(Serialize)]
struct EigenReport {
    l: f64,
    lambda: f64,
    nu1: f64,
    p: f64,
    l0: Option<f64>,
    fixed_end: FixedEnd,
}

#[derive(Serialize)]
struct LengthReport {
    l0: f64,
    r0: f64,
    fixed_end: FixedEnd,
}

fn execute(command: Command) -> Result<String, Failure> {
    match command {
        Command::Simulate { config, out, full } => {
            let cfg = load(&config)?;
            let nl = cfg.nonlinearity()?;
            let init = cfg.initial_data()?;
            let (result, outcome) = if full {
                let r = simulate(&cfg.model, &nl, &init, &cfg.solver)?;
                let o = classify(&r.timeline, &cfg.model, &nl, &cfg.thresholds);
                (r, o)
            } else {
                simulate_and_classify(&cfg.model, &nl, &init, &cfg.solver, &cfg.thresholds)?
            };
            if result.ceiling_exceedances > 0 {
                eprintln!(
                    "freebound: warning: fields exceeded (K1, K2) = ({}, {}) at {} output times",
                    result.ceilings.k1, result.ceilings.k2, result.ceiling_exceedances
                );
            }
            let dir = out_dir(&cfg, out);
            let report = outcome.to_json() + "\n";
            write(&dir.join("timeline.csv"), &result.timeline.to_csv())?;
            write(&dir.join("final_state.csv"), &result.final_state.snapshot_csv())?;
            write(&dir.join("outcome.json"), &report)?;
            Ok(report)
        }
        Command::Eigen {
            config,
            l,
            eigenfunction,
            samples,
        } => {
            let cfg = load(&config)?;
            let nl = cfg.nonlinearity()?;
            let eig = eigenpair(&LinearCoeffs::new(&cfg.model, &nl), l, samples)?;
            let l0 = if reproduction_number(&nl, &cfg.model) > 1.0 {
                Some(critical_length(&cfg.model, &nl)?)
            } else {
                None
            };
            if let Some(path) = eigenfunction {
                let rows = (0..eig.x.len()).map(|i| vec![sci(eig.x[i]), sci(eig.phi[i]), sci(eig.psi[i])]);
                write(&path, &csv_text(&["x", "phi", "psi"], rows))?;
            }
            Ok(json(&EigenReport {
                l,
                lambda: eig.lambda,
                nu1: eig.nu1,
                p: eig.p,
                l0,
                fixed_end: eig.fixed_end,
            }))
        }
        Command::Steady { config, l, kind, n, out } => {
            let cfg = load(&config)?;
            let nl = cfg.nonlinearity()?;
            let profile = SteadySolver::new(&cfg.model, &nl).grid(n).solve(l, kind)?;
            let dir = out_dir(&cfg, out);
            let rows = (0..profile.x.len()).map(|i| vec![sci(profile.x[i]), sci(profile.u[i]), sci(profile.v[i])]);
            write(&dir.join("steady.csv"), &csv_text(&["x", "u", "v"], rows))?;
            let meta = json(&profile);
            write(&dir.join("steady.json"), &meta)?;
            Ok(meta)
        }
        Command::CriticalLength { config } => {
            let cfg = load(&config)?;
            let nl = cfg.nonlinearity()?;
            let l0 = critical_length(&cfg.model, &nl)?;
            Ok(json(&LengthReport {
                l0,
                r0: reproduction_number(&nl, &cfg.model),
                fixed_end: cfg.model.fixed_end,
            }))
        }
        Command::CriticalMu { config, out } => {
            let cfg = load(&config)?;
            let nl = cfg.nonlinearity()?;
            let init = cfg.initial_data()?;
            let r = find_mu1_star(
                &cfg.model,
                &nl,
                &init,
                &cfg.criteria.link,
                &cfg.search_options(Execution::Parallel),
            )?;
            threshold_outputs(&r, &out_dir(&cfg, out), "mu1_star")
        }
        Command::CriticalTau { config, out } => {
            let cfg = load(&config)?;
            let nl = cfg.nonlinearity()?;
            let shapes = cfg.initial_data()?;
            let r = find_tau_star(&cfg.model, &nl, &shapes, &cfg.search_options(Execution::Parallel))?;
            threshold_outputs(&r, &out_dir(&cfg, out), "tau_star")
        }
        Command::Sweep { config, spec, workers } => {
            let cfg = load(&config)?;
            let mut spec = SweepSpec::load(&spec)?;
            if workers.is_some() {
                spec.workers = workers;
            }
            let manifest = PathBuf::from(&spec.manifest);
            let summary = run_sweep(&cfg, &spec, &manifest)?;
            if summary.failed > 0 {
                eprintln!("freebound: {} of {} runs failed", summary.failed, summary.executed);
            }
            Ok(format!(
                "{}: {} runs ({} executed, {} resumed, {} failed)\n",
                manifest.display(),
                summary.manifest.rows.len(),
                summary.executed,
                summary.skipped,
                summary.failed
            ))
        }
        Command::CheckHypotheses { config, z_max, grid } => {
            let cfg = RunConfig::load(&config)?;
            let nl = cfg.nonlinearity()?;
            let init = cfg.initial_data()?;
            let z_max = z_max.unwrap_or_else(|| default_z_max(init.sup_u().max(init.sup_v())));
            let report = validate_hypotheses(&nl, &cfg.model, grid, z_max)?;
            let text = json(&report);
            if report.all_passed() {
                Ok(text)
            } else {
                print!("{text}");
                Err(Failure::Validation("hypotheses violated".into()))
            }
        }
        Command::Plot {
            timeline,
            snapshot,
            manifest,
            l0,
            config,
            out,
        } => {
            if timeline.is_none() && snapshot.is_none() && manifest.is_none() {
                return Err(Failure::Validation(
                    "nothing to plot: pass --timeline, --snapshot or --manifest".into(),
                ));
            }
            let l0 = match (l0, config) {
                (Some(l), _) => Some(l),
                (None, Some(c)) => {
                    let cfg = RunConfig::load(&c)?;
                    critical_length(&cfg.model, &cfg.nonlinearity()?).ok()
                }
                (None, None) => None,
            };
            let mut written = Vec::new();
            let parse = |p: &Path, e: crate::io::ParseError| Failure::Validation(format!("{}: {e}", p.display()));
            if let Some(p) = timeline {
                let tl = Timeline::from_csv(&read(&p)?).map_err(|e| parse(&p, e))?;
                written.push(("front.svg", plot::front_chart(&tl, l0)));
                written.push(("norm.svg", plot::norm_chart(&tl)));
            }
            if let Some(p) = snapshot {
                written.push(("profiles.svg", plot::profile_chart(&read(&p)?).map_err(|e| parse(&p, e))?));
            }
            if let Some(p) = manifest {
                let m = Manifest::parse(&read(&p)?).map_err(|e| parse(&p, e))?;
                written.push(("phase.svg", plot::phase_map(&m).map_err(|e| parse(&p, e))?));
            }
            let mut listing = String::new();
            for (name, svg) in written {
                let path = out.join(name);
                write(&path, &svg)?;
                listing.push_str(&format!("{}\n", path.display()));
            }
            Ok(listing)
        }
    }
}

fn threshold_outputs(r: &ThresholdResult, dir: &Path, stem: &str) -> Result<String, Failure> {
    let report = r.to_json() + "\n";
    write(&dir.join(format!("{stem}.json")), &report)?;
    write(&dir.join(format!("{stem}_probes.csv")), &r.probe_csv())?;
    Ok(report)
}
