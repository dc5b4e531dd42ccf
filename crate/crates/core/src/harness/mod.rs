//! Run configuration, command line, parameter sweeps and SVG output.

pub mod cli;
pub mod config;
pub mod plot;
pub mod sweep;

pub use config::{ConfigError, RunConfig, CONFIG_SCHEMA};
pub use sweep::{run_sweep, Axis, AxisName, Manifest, ManifestRow, SweepSpec, SweepSummary};
