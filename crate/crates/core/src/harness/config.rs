use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::criteria::{LinkFunction, SearchOptions};
use crate::dichotomy::Thresholds;
use crate::model::{CouplingSpec, InitialData, ModelError, ModelParams, NonlinearitySpec};
use crate::par::Execution;
use crate::stefan::Controls;

pub const CONFIG_SCHEMA: &str = "freebound.config/v1";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("config parse: {0}")]
    Parse(String),
    #[error("unsupported schema `{found}` (expected `{expected}`)")]
    Schema { found: String, expected: &'static str },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityConfig {
    pub h: CouplingSpec,
    pub g: CouplingSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Bump,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub generator: Generator,
    pub amp_u: f64,
    pub amp_v: f64,
    pub tau: f64,
    pub samples: usize,
    /// CSV with columns x,u0,v0 (generator = "file")
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            generator: Generator::Bump,
            amp_u: 0.5,
            amp_v: 0.5,
            tau: 1.0,
            samples: 513,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriteriaConfig {
    pub tol: f64,
    pub budget: usize,
    pub link: LinkFunction,
}

impl Default for CriteriaConfig {
    fn default() -> Self {
        Self {
            tol: 1e-2,
            budget: 40,
            link: LinkFunction::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// Everything one run needs. Input paths inside the file resolve against the
/// directory holding the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub model: ModelParams,
    pub nonlinearity: NonlinearityConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub solver: Controls,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub criteria: CriteriaConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(model: ModelParams, h: CouplingSpec, g: CouplingSpec) -> Self {
        Self {
            schema: CONFIG_SCHEMA.into(),
            model,
            nonlinearity: NonlinearityConfig { h, g },
            initial: InitialConfig::default(),
            solver: Controls::default(),
            thresholds: Thresholds::default(),
            criteria: CriteriaConfig::default(),
            output: OutputConfig::default(),
            base_dir: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        // check the tag before the full parse so an old file gets the clearer error
        let raw: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        match raw.get("schema").and_then(|v| v.as_str()) {
            Some(CONFIG_SCHEMA) => {}
            Some(other) => {
                return Err(ConfigError::Schema {
                    found: other.into(),
                    expected: CONFIG_SCHEMA,
                })
            }
            None => {
                return Err(ConfigError::Schema {
                    found: "<missing>".into(),
                    expected: CONFIG_SCHEMA,
                })
            }
        }
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn nonlinearity(&self) -> Result<NonlinearitySpec, ConfigError> {
        let base = self.base_dir.as_deref();
        Ok(NonlinearitySpec::new(
            self.nonlinearity.h.build(base)?,
            self.nonlinearity.g.build(base)?,
        ))
    }

    /// Bump shapes are generated on [0, h0]; file shapes are stretched onto it.
    pub fn initial_data(&self) -> Result<InitialData, ConfigError> {
        let ic = &self.initial;
        let shapes = match ic.generator {
            Generator::Bump => InitialData::bump(self.model.fixed_end, self.model.h0, ic.amp_u, ic.amp_v, ic.samples),
            Generator::File => {
                let rel = ic
                    .path
                    .as_deref()
                    .ok_or_else(|| ConfigError::Invalid("initial.generator = \"file\" needs initial.path".into()))?;
                let p = Path::new(rel);
                let full = match &self.base_dir {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.to_path_buf(),
                };
                let data = InitialData::from_csv(&full)?;
                if (data.h0() - self.model.h0).abs() > 1e-12 * self.model.h0 {
                    data.rescaled(self.model.h0)
                } else {
                    data
                }
            }
        };
        Ok(shapes.with_tau(ic.tau))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model.validate()?;
        self.solver.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let t = &self.thresholds;
        if !(t.delta_s > 0.0 && t.eps_v > 0.0 && t.eps_h > 0.0) {
            return Err(ConfigError::Invalid("thresholds must be positive".into()));
        }
        if !(self.initial.tau >= 0.0) {
            return Err(ConfigError::Invalid(format!("initial.tau = {} must be ≥ 0", self.initial.tau)));
        }
        self.nonlinearity()?;
        self.initial_data()?.check(self.model.fixed_end)?;
        Ok(())
    }

    pub fn search_options(&self, execution: Execution) -> SearchOptions {
        SearchOptions {
            tol: self.criteria.tol,
            budget: self.criteria.budget,
            controls: self.solver,
            thresholds: self.thresholds,
            execution,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FixedEnd;

    const SAMPLE: &str = r#"
schema = "freebound.config/v1"

[model]
d1 = 1.0
d2 = 1.0
a = 1.0
b = 1.0
mu1 = 1.0
mu2 = 1.0
h0 = 4.0
fixed_end = "dirichlet"

[nonlinearity.h]
family = "monod"
alpha = 2.0
beta = 1.0

[nonlinearity.g]
family = "linear"
slope = 0.5

[solver]
n = 256
dt = 0.002

[criteria.link]
family = "power"
coef = 2.0
exponent = 0.5
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = RunConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.model.fixed_end, FixedEnd::Dirichlet);
        assert_eq!(cfg.solver.n, 256);
        assert_eq!(cfg.solver.t_max, Controls::default().t_max);
        assert_eq!(cfg.initial, InitialConfig::default());
        assert_eq!(cfg.criteria.link, LinkFunction::Power { coef: 2.0, exponent: 0.5 });
        cfg.validate().unwrap();
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = RunConfig::from_toml_str(SAMPLE).unwrap();
        let text = cfg.to_toml_string();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml_string(), text);
    }

    #[test]
    fn schema_is_checked() {
        let old = SAMPLE.replace("freebound.config/v1", "freebound.config/v0");
        assert!(matches!(RunConfig::from_toml_str(&old), Err(ConfigError::Schema { .. })));
        let none = SAMPLE.replace("schema = \"freebound.config/v1\"", "");
        assert!(matches!(RunConfig::from_toml_str(&none), Err(ConfigError::Schema { .. })));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let typo = SAMPLE.replace("[solver]", "[solver]\nsteps = 3");
        assert!(matches!(RunConfig::from_toml_str(&typo), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn file_generator_needs_path() {
        let mut cfg = RunConfig::from_toml_str(SAMPLE).unwrap();
        cfg.initial.generator = Generator::File;
        assert!(matches!(cfg.initial_data(), Err(ConfigError::Invalid(_))));
    }
}
