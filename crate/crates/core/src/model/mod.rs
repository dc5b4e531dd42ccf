//! Model parameters, coupling functions, initial data and the
//! spatially homogeneous equilibrium.

mod equilibrium;
mod hypotheses;
mod initial;
mod nonlinearity;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use equilibrium::{equilibrium, equilibrium_with_tolerance, Equilibrium};
pub use hypotheses::{default_z_max, validate_hypotheses, Clause, ClauseResult, ValidationReport};
pub use initial::{InitialData, InitialSource};
pub use nonlinearity::{Coupling, CouplingSpec, CubicSpline, NonlinearitySpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("{which}'({z}) = {value:e} is not positive: model outside the theory")]
    NonPositiveDerivative { which: &'static str, z: f64, value: f64 },
    #[error("no ẑ ≤ {z_max} with G(H(ẑ)/a) < bẑ; enlarge Z_max")]
    NoWitness { z_max: f64 },
    #[error("{0}(0) ≠ 0")]
    NonzeroAtOrigin(&'static str),
    #[error("no positive equilibrium: R0 = {r0} ≤ 1")]
    NoPositiveRoot { r0: f64 },
    #[error("f(v) = G(H(v)/a) - bv has no sign change below {0:e}")]
    BracketingFailure(f64),
    #[error("table: {0}")]
    Table(String),
    #[error("initial data: {0}")]
    InitialData(String),
}

/// Boundary operator at the fixed end x = 0: w(0) = 0 or w'(0) = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixedEnd {
    Dirichlet,
    Neumann,
}

impl FixedEnd {
    pub fn as_str(self) -> &'static str {
        match self {
            FixedEnd::Dirichlet => "dirichlet",
            FixedEnd::Neumann => "neumann",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub d1: f64,
    pub d2: f64,
    pub a: f64,
    pub b: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub h0: f64,
    pub fixed_end: FixedEnd,
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [("d1", self.d1), ("d2", self.d2), ("a", self.a), ("b", self.b), ("h0", self.h0)];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ModelError::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("mu1", self.mu1), ("mu2", self.mu2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(ModelError::InvalidParams(format!("{name} must be ≥ 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// R₀ = H'(0)G'(0)/(ab).
pub fn reproduction_number(nl: &NonlinearitySpec, params: &ModelParams) -> f64 {
    nl.h_prime0() * nl.g_prime0() / (params.a * params.b)
}

/// Sign of a + b - sqrt((a-b)² + 4G'(0)H'(0)): negative exactly when R₀ > 1.
pub fn homogeneous_growth_bound(nl: &NonlinearitySpec, params: &ModelParams) -> f64 {
    let (a, b) = (params.a, params.b);
    0.5 * (a + b - ((a - b).powi(2) + 4.0 * nl.g_prime0() * nl.h_prime0()).sqrt())
}
