use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{ConfigError, RunConfig};
use crate::dichotomy::{simulate_and_classify, Outcome};
use crate::io::{csv_text, sci, write_text, ParseError};
use crate::par;

pub const SWEEP_SCHEMA: &str = "freebound.sweep/v1";
pub const DEFAULT_CAP: usize = 10_000;
pub const FAILED: &str = "Failed";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep spec: {0}")]
    Invalid(String),
    #[error("{size} runs exceed the cap of {cap}")]
    TooLarge { size: usize, cap: usize },
    #[error("existing manifest {path} has columns `{found}`, this sweep needs `{expected}`")]
    ManifestMismatch { path: String, found: String, expected: String },
    #[error("manifest {path}: {source}")]
    Manifest { path: String, source: ParseError },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

fn io_err(path: &Path, e: std::io::Error) -> SweepError {
    SweepError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisName {
    H0,
    Mu1,
    Mu2,
    Tau,
    D1,
    D2,
    A,
    B,
}

impl AxisName {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisName::H0 => "h0",
            AxisName::Mu1 => "mu1",
            AxisName::Mu2 => "mu2",
            AxisName::Tau => "tau",
            AxisName::D1 => "d1",
            AxisName::D2 => "d2",
            AxisName::A => "a",
            AxisName::B => "b",
        }
    }

    pub fn apply(self, cfg: &mut RunConfig, value: f64) {
        let m = &mut cfg.model;
        match self {
            AxisName::H0 => m.h0 = value,
            AxisName::Mu1 => m.mu1 = value,
            AxisName::Mu2 => m.mu2 = value,
            AxisName::Tau => cfg.initial.tau = value,
            AxisName::D1 => m.d1 = value,
            AxisName::D2 => m.d2 = value,
            AxisName::A => m.a = value,
            AxisName::B => m.b = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisName,
    pub values: Vec<f64>,
}

fn default_cap() -> usize {
    DEFAULT_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub schema: String,
    /// worker threads; the global pool when absent
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_cap")]
    pub cap: usize,
    pub manifest: String,
    #[serde(default)]
    pub axes: Vec<Axis>,
}

impl SweepSpec {
    pub fn new(manifest: impl Into<String>, axes: Vec<Axis>) -> Self {
        Self {
            schema: SWEEP_SCHEMA.into(),
            workers: None,
            cap: DEFAULT_CAP,
            manifest: manifest.into(),
            axes,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SweepError> {
        let spec: Self = toml::from_str(text).map_err(|e| SweepError::Invalid(e.to_string()))?;
        if spec.schema != SWEEP_SCHEMA {
            return Err(SweepError::Invalid(format!(
                "unsupported schema `{}` (expected `{SWEEP_SCHEMA}`)",
                spec.schema
            )));
        }
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, SweepError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn size(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let mut seen = BTreeSet::new();
        for axis in &self.axes {
            if !seen.insert(axis.name) {
                return Err(SweepError::Invalid(format!("axis `{}` listed twice", axis.name.as_str())));
            }
            if axis.values.is_empty() {
                return Err(SweepError::Invalid(format!("axis `{}` has no values", axis.name.as_str())));
            }
            if axis.values.iter().any(|v| !v.is_finite()) {
                return Err(SweepError::Invalid(format!("axis `{}` has a non-finite value", axis.name.as_str())));
            }
        }
        if self.workers == Some(0) {
            return Err(SweepError::Invalid("workers must be ≥ 1".into()));
        }
        let size = self.size();
        if size > self.cap {
            return Err(SweepError::TooLarge { size, cap: self.cap });
        }
        Ok(())
    }

    /// Cartesian product, first axis slowest. No axes gives one empty point.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut points = vec![Vec::new()];
        for axis in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        points
    }

    pub fn columns(&self) -> Vec<String> {
        let mut cols = vec!["run_id".to_string()];
        cols.extend(self.axes.iter().map(|a| a.name.as_str().to_string()));
        cols.push("class".into());
        cols.push("h_final".into());
        cols
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub run_id: String,
    pub values: Vec<f64>,
    /// "Spreading", "Vanishing", "Undetermined" or "Failed"
    pub class: String,
    pub h_final: f64,
}

impl ManifestRow {
    fn cells(&self) -> Vec<String> {
        let mut cells = vec![self.run_id.clone()];
        cells.extend(self.values.iter().map(|&v| sci(v)));
        cells.push(self.class.clone());
        cells.push(sci(self.h_final));
        cells
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub axes: Vec<String>,
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or(ParseError {
            line: 1,
            message: "empty manifest".into(),
        })?;
        let cols: Vec<&str> = head.split(',').map(str::trim).collect();
        let k = cols.len();
        if k < 3 || cols[0] != "run_id" || cols[k - 2] != "class" || cols[k - 1] != "h_final" {
            return Err(ParseError {
                line: 1,
                message: format!("expected run_id,<axes>,class,h_final, found `{head}`"),
            });
        }
        let axes: Vec<String> = cols[1..k - 2].iter().map(|s| s.to_string()).collect();
        let mut rows = Vec::new();
        for (i, line) in lines {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != k {
                return Err(ParseError {
                    line: i + 1,
                    message: format!("expected {k} columns, found {}", cells.len()),
                });
            }
            let num = |c: &str| {
                c.parse::<f64>().map_err(|_| ParseError {
                    line: i + 1,
                    message: format!("`{c}` is not a number"),
                })
            };
            rows.push(ManifestRow {
                run_id: cells[0].to_string(),
                values: cells[1..k - 2].iter().map(|c| num(c)).collect::<Result<_, _>>()?,
                class: cells[k - 2].to_string(),
                h_final: num(cells[k - 1])?,
            });
        }
        Ok(Self { axes, rows })
    }

    pub fn to_csv(&self) -> String {
        let mut header = vec!["run_id"];
        header.extend(self.axes.iter().map(String::as_str));
        header.extend(["class", "h_final"]);
        csv_text(&header, self.rows.iter().map(ManifestRow::cells))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct RunRecord<'a> {
    run_id: &'a str,
    params: BTreeMap<&'static str, f64>,
    outcome: Option<Outcome>,
    error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub manifest: Manifest,
    pub executed: usize,
    pub skipped: usize,
    pub failed: usize,
}

pub fn run_id(index: usize) -> String {
    format!("r{index:05}")
}

/// Per-run JSON files live next to the manifest under `runs/`.
pub fn run_dir(manifest_path: &Path) -> PathBuf {
    manifest_path.parent().unwrap_or(Path::new(".")).join("runs")
}

/// Simulate + classify every grid point, skipping rows already completed in an
/// existing manifest. Rows are appended as runs finish and the manifest is
/// rewritten sorted by run id at the end.
pub fn run_sweep(base: &RunConfig, spec: &SweepSpec, manifest_path: &Path) -> Result<SweepSummary, SweepError> {
    spec.validate()?;
    let columns = spec.columns();
    let header = columns.join(",");
    let axes: Vec<String> = columns[1..columns.len() - 2].to_vec();

    let mut done: BTreeMap<String, ManifestRow> = BTreeMap::new();
    if manifest_path.exists() {
        let text = std::fs::read_to_string(manifest_path).map_err(|e| io_err(manifest_path, e))?;
        let first = text.lines().next().unwrap_or("").trim().to_string();
        if first != header {
            return Err(SweepError::ManifestMismatch {
                path: manifest_path.display().to_string(),
                found: first,
                expected: header,
            });
        }
        let old = Manifest::parse(&text).map_err(|source| SweepError::Manifest {
            path: manifest_path.display().to_string(),
            source,
        })?;
        for row in old.rows {
            if row.class != FAILED {
                done.insert(row.run_id.clone(), row);
            }
        }
    } else {
        write_text(manifest_path, &format!("{header}\n")).map_err(|e| io_err(manifest_path, e))?;
    }

    let points = spec.points();
    let todo: Vec<(usize, Vec<f64>)> = points
        .iter()
        .enumerate()
        .filter(|(i, p)| match done.get(&run_id(*i)) {
            Some(row) => row.values.iter().zip(p.iter()).any(|(a, b)| sci(*a) != sci(*b)),
            None => true,
        })
        .map(|(i, p)| (i, p.clone()))
        .collect();
    let skipped = points.len() - todo.len();

    let runs = run_dir(manifest_path);
    std::fs::create_dir_all(&runs).map_err(|e| io_err(&runs, e))?;

    let (tx, rx) = mpsc::channel::<ManifestRow>();
    let collected = std::thread::scope(|scope| {
        let collector = scope.spawn(|| -> Result<Vec<ManifestRow>, SweepError> {
            let mut file = OpenOptions::new()
                .append(true)
                .open(manifest_path)
                .map_err(|e| io_err(manifest_path, e))?;
            let mut rows = Vec::new();
            for row in rx {
                writeln!(file, "{}", row.cells().join(",")).map_err(|e| io_err(manifest_path, e))?;
                rows.push(row);
            }
            Ok(rows)
        });
        let results = par::with_workers(spec.workers, || {
            par::map(&todo, |(index, point)| {
                let row = execute(base, spec, &runs, *index, point);
                if let Ok(row) = &row {
                    let _ = tx.send(row.clone());
                }
                row
            })
        });
        drop(tx);
        let rows = collector.join().expect("collector thread");
        results.into_iter().collect::<Result<Vec<_>, _>>()?;
        rows
    })?;

    let executed = collected.len();
    let failed = collected.iter().filter(|r| r.class == FAILED).count();
    for row in collected {
        done.insert(row.run_id.clone(), row);
    }
    let manifest = Manifest {
        axes,
        rows: done.into_values().collect(),
    };
    write_text(manifest_path, &manifest.to_csv()).map_err(|e| io_err(manifest_path, e))?;
    Ok(SweepSummary {
        manifest,
        executed,
        skipped,
        failed,
    })
}

fn execute(base: &RunConfig, spec: &SweepSpec, runs: &Path, index: usize, point: &[f64]) -> Result<ManifestRow, SweepError> {
    let id = run_id(index);
    let mut cfg = base.clone();
    let mut params = BTreeMap::new();
    for (axis, &value) in spec.axes.iter().zip(point) {
        axis.name.apply(&mut cfg, value);
        params.insert(axis.name.as_str(), value);
    }
    let attempt = (|| -> Result<(Outcome, f64), String> {
        cfg.validate().map_err(|e| e.to_string())?;
        let nl = cfg.nonlinearity().map_err(|e| e.to_string())?;
        let init = cfg.initial_data().map_err(|e| e.to_string())?;
        let (result, outcome) =
            simulate_and_classify(&cfg.model, &nl, &init, &cfg.solver, &cfg.thresholds).map_err(|e| e.to_string())?;
        Ok((outcome, result.final_state.h))
    })();
    let (record, row) = match attempt {
        Ok((outcome, h)) => (
            RunRecord {
                run_id: &id,
                params,
                outcome: Some(outcome),
                error: None,
            },
            ManifestRow {
                run_id: id.clone(),
                values: point.to_vec(),
                class: outcome.class.as_str().into(),
                h_final: h,
            },
        ),
        Err(message) => (
            RunRecord {
                run_id: &id,
                params,
                outcome: None,
                error: Some(message),
            },
            ManifestRow {
                run_id: id.clone(),
                values: point.to_vec(),
                class: FAILED.into(),
                h_final: f64::NAN,
            },
        ),
    };
    let path = runs.join(format!("{id}.json"));
    let json = serde_json::to_string_pretty(&record).expect("run record serializes");
    write_text(&path, &(json + "\n")).map_err(|e| io_err(&path, e))?;
    Ok(row)
}
