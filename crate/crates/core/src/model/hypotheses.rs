use serde::Serialize;

use super::{ModelError, ModelParams, NonlinearitySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    HZero,
    GZero,
    HIncreasing,
    GIncreasing,
    HConcave,
    GConcave,
    Witness,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseResult {
    pub clause: Clause,
    pub passed: bool,
    /// Sample point witnessing the verdict (first violation, or the ẑ witness).
    pub at: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub z_max: f64,
    pub grid_density: usize,
    pub clauses: Vec<ClauseResult>,
    pub z_hat: Option<f64>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn clause(&self, c: Clause) -> Option<&ClauseResult> {
        self.clauses.iter().find(|r| r.clause == c)
    }
}

/// 10·max(1, v_scale).
pub fn default_z_max(v_scale: f64) -> f64 {
    10.0 * v_scale.max(1.0)
}

const DEGENERATE_CURVATURE: f64 = 1e-14;

/// Sampled check of condition (H) on `grid_density` points of (0, z_max].
pub fn validate_hypotheses(
    nl: &NonlinearitySpec,
    params: &ModelParams,
    grid_density: usize,
    z_max: f64,
) -> Result<ValidationReport, ModelError> {
    if !(z_max > 0.0) {
        return Err(ModelError::InvalidParams(format!("Z_max must be positive, got {z_max}")));
    }
    if grid_density < 100 {
        return Err(ModelError::InvalidParams(format!(
            "grid_density must be ≥ 100, got {grid_density}"
        )));
    }
    params.validate()?;
    let grid: Vec<f64> = (1..=grid_density)
        .map(|i| z_max * i as f64 / grid_density as f64)
        .collect();
    let mut clauses = Vec::with_capacity(7);
    let mut warnings = Vec::new();

    for (clause, name, f) in [(Clause::HZero, "H", &nl.h), (Clause::GZero, "G", &nl.g)] {
        let v = f.value(0.0);
        let passed = v.abs() <= 1e-12;
        clauses.push(ClauseResult {
            clause,
            passed,
            at: Some(0.0),
            note: (!passed).then(|| format!("{name}(0) = {v:e}")),
        });
    }

    for (clause, name, f) in [(Clause::HIncreasing, "H", &nl.h), (Clause::GIncreasing, "G", &nl.g)] {
        if let Some(&z) = std::iter::once(&0.0)
            .chain(grid.iter())
            .find(|&&z| !(f.derivative(z) > 0.0))
        {
            return Err(ModelError::NonPositiveDerivative {
                which: name,
                z,
                value: f.derivative(z),
            });
        }
        clauses.push(ClauseResult {
            clause,
            passed: true,
            at: None,
            note: None,
        });
    }

    for (clause, name, f) in [(Clause::HConcave, "H", &nl.h), (Clause::GConcave, "G", &nl.g)] {
        let violation = grid.iter().copied().find(|&z| !(f.second_derivative(z) < 0.0));
        let note = violation.map(|z| {
            let c = f.second_derivative(z);
            if c.abs() <= DEGENERATE_CURVATURE {
                format!("degenerate concavity: {name}'' = 0 at z = {z}")
            } else {
                format!("{name}'' = {c:e} ≥ 0 at z = {z}")
            }
        });
        if let Some(n) = &note {
            warnings.push(n.clone());
        }
        clauses.push(ClauseResult {
            clause,
            passed: violation.is_none(),
            at: violation,
            note,
        });
    }

    let z_hat = grid
        .iter()
        .copied()
        .find(|&z| nl.g.value(nl.h.value(z) / params.a) < params.b * z)
        .ok_or(ModelError::NoWitness { z_max })?;
    clauses.push(ClauseResult {
        clause: Clause::Witness,
        passed: true,
        at: Some(z_hat),
        note: None,
    });

    Ok(ValidationReport {
        z_max,
        grid_density,
        clauses,
        z_hat: Some(z_hat),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Coupling, FixedEnd};

    fn unit_params() -> ModelParams {
        ModelParams {
            d1: 1.0,
            d2: 1.0,
            a: 1.0,
            b: 1.0,
            mu1: 1.0,
            mu2: 1.0,
            h0: 1.0,
            fixed_end: FixedEnd::Dirichlet,
        }
    }

    #[test]
    fn monod_passes_every_clause() {
        let nl = NonlinearitySpec::monod(2.0, 1.0, 3.0, 1.0);
        let r = validate_hypotheses(&nl, &unit_params(), 1000, 10.0).unwrap();
        assert!(r.all_passed(), "{r:?}");
        // f(z) = G(H(z)) - z turns negative just past v* = 5/3
        let z = r.z_hat.unwrap();
        assert!(z > 5.0 / 3.0 && z <= 5.0 / 3.0 + 0.01, "z_hat = {z}");
        let nl_sq = nl.g.value(nl.h.value(z));
        assert!(nl_sq < z);
    }

    #[test]
    fn linear_h_reports_degenerate_concavity() {
        let nl = NonlinearitySpec::new(Coupling::linear(1.0), Coupling::monod(3.0, 1.0));
        let r = validate_hypotheses(&nl, &unit_params(), 1000, 10.0).unwrap();
        let c = r.clause(Clause::HConcave).unwrap();
        assert!(!c.passed);
        assert!(c.note.as_deref().unwrap().contains("degenerate concavity"));
        assert!(r.clause(Clause::GConcave).unwrap().passed);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn decreasing_h_is_rejected() {
        let nl = NonlinearitySpec::new(Coupling::linear(-1.0), Coupling::monod(3.0, 1.0));
        let err = validate_hypotheses(&nl, &unit_params(), 1000, 10.0).unwrap_err();
        assert!(matches!(err, ModelError::NonPositiveDerivative { which: "H", .. }));
    }

    #[test]
    fn missing_witness_is_reported() {
        // G(H(z)) = 4z > z everywhere
        let nl = NonlinearitySpec::new(Coupling::linear(2.0), Coupling::linear(2.0));
        let err = validate_hypotheses(&nl, &unit_params(), 200, 10.0).unwrap_err();
        assert_eq!(err, ModelError::NoWitness { z_max: 10.0 });
    }

    #[test]
    fn preconditions_enforced() {
        let nl = NonlinearitySpec::monod(2.0, 1.0, 3.0, 1.0);
        assert!(validate_hypotheses(&nl, &unit_params(), 50, 10.0).is_err());
        assert!(validate_hypotheses(&nl, &unit_params(), 500, 0.0).is_err());
    }
}
