//! Spreading / vanishing classification of simulated runs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::simpson;
use crate::model::{reproduction_number, FixedEnd, InitialData, ModelParams, NonlinearitySpec};
use crate::spectral::critical_length;
use crate::stefan::{simulate_with, Controls, SimulationResult, StefanError, Timeline, TimelineRecord, Watch};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DichotomyError {
    #[error("decay-rate fit needs ≥ 20 samples in the window, found {0}")]
    InsufficientData(usize),
    #[error("R0 = {0} > 1: the vanishing bound only holds for R0 ≤ 1")]
    NotSubcritical(f64),
    #[error("the vanishing bound is only established for a Dirichlet fixed end")]
    NeumannUnsupported,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// relative margin over l₀ for declaring spreading
    pub delta_s: f64,
    /// sup_u + sup_v below this counts as extinct
    pub eps_v: f64,
    /// boundary speed below this counts as stalled
    pub eps_h: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            delta_s: 1e-3,
            eps_v: 1e-8,
            eps_h: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Class {
    Spreading,
    Vanishing,
    Undetermined,
}

impl Class {
    pub fn as_str(self) -> &'static str {
        match self {
            Class::Spreading => "Spreading",
            Class::Vanishing => "Vanishing",
            Class::Undetermined => "Undetermined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// h ≥ l₀(1 + δ_s) with R₀ > 1
    FrontBeyondCriticalLength,
    /// sup-norm < ε_v and h' < ε_h (and h < l₀ when R₀ > 1)
    ExtinctAndStalled,
    /// nothing fired before t_max
    HorizonReached,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub rule: Rule,
    pub t_fired: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub class: Class,
    pub h_inf: Option<f64>,
    pub decay_rate: Option<f64>,
    pub l0: Option<f64>,
    pub evidence: Evidence,
}

impl Outcome {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outcome serializes")
    }
}

/// Rule evaluation shared by the streaming monitor and the post-hoc classifier.
#[derive(Debug, Clone, Copy)]
pub struct DichotomyRules {
    r0: f64,
    l0: Option<f64>,
    thresholds: Thresholds,
}

impl DichotomyRules {
    pub fn new(params: &ModelParams, nl: &NonlinearitySpec, thresholds: Thresholds) -> Self {
        let r0 = reproduction_number(nl, params);
        let l0 = if r0 > 1.0 { critical_length(params, nl).ok() } else { None };
        Self { r0, l0, thresholds }
    }

    pub fn l0(&self) -> Option<f64> {
        self.l0
    }

    pub fn fire(&self, rec: &TimelineRecord) -> Option<(Class, Rule)> {
        if let Some(l0) = self.l0 {
            if rec.h >= l0 * (1.0 + self.thresholds.delta_s) {
                return Some((Class::Spreading, Rule::FrontBeyondCriticalLength));
            }
        }
        let extinct = rec.norm() < self.thresholds.eps_v && rec.h_prime < self.thresholds.eps_h;
        let inside = match self.l0 {
            Some(l0) => rec.h < l0,
            None => self.r0 <= 1.0,
        };
        (extinct && inside).then_some((Class::Vanishing, Rule::ExtinctAndStalled))
    }

    pub fn watch(&self, rec: &TimelineRecord) -> Watch {
        if self.fire(rec).is_some() {
            Watch::Stop
        } else {
            Watch::Continue
        }
    }
}

pub fn classify(timeline: &Timeline, params: &ModelParams, nl: &NonlinearitySpec, thresholds: &Thresholds) -> Outcome {
    let rules = DichotomyRules::new(params, nl, *thresholds);
    let fired = timeline
        .records
        .iter()
        .find_map(|rec| rules.fire(rec).map(|(class, rule)| (class, rule, rec)));
    match fired {
        Some((Class::Vanishing, rule, rec)) => Outcome {
            class: Class::Vanishing,
            h_inf: Some(rec.h),
            decay_rate: decay_rate_with(timeline, thresholds.eps_v).ok(),
            l0: rules.l0,
            evidence: Evidence { rule, t_fired: rec.t },
        },
        Some((class, rule, rec)) => Outcome {
            class,
            h_inf: None,
            decay_rate: None,
            l0: rules.l0,
            evidence: Evidence { rule, t_fired: rec.t },
        },
        None => Outcome {
            class: Class::Undetermined,
            h_inf: None,
            decay_rate: None,
            l0: rules.l0,
            evidence: Evidence {
                rule: Rule::HorizonReached,
                t_fired: timeline.last().map_or(0.0, |r| r.t),
            },
        },
    }
}

/// Simulate with early exit as soon as a dichotomy rule fires, then classify.
pub fn simulate_and_classify(
    params: &ModelParams,
    nl: &NonlinearitySpec,
    init: &InitialData,
    controls: &Controls,
    thresholds: &Thresholds,
) -> Result<(SimulationResult, Outcome), StefanError> {
    let rules = DichotomyRules::new(params, nl, *thresholds);
    let result = simulate_with(params, nl, init, controls, |rec| rules.watch(rec))?;
    let outcome = classify(&result.timeline, params, nl, thresholds);
    Ok((result, outcome))
}

pub fn decay_rate(timeline: &Timeline) -> Result<f64, DichotomyError> {
    decay_rate_with(timeline, Thresholds::default().eps_v)
}

/// −slope of the least-squares line through log(sup_u + sup_v) over the last
/// half of the records preceding the first drop below `eps_v`.
pub fn decay_rate_with(timeline: &Timeline, eps_v: f64) -> Result<f64, DichotomyError> {
    let cut = timeline
        .records
        .iter()
        .position(|r| r.norm() < eps_v)
        .unwrap_or(timeline.len());
    let usable = &timeline.records[..cut];
    let window: Vec<&TimelineRecord> = usable[usable.len() / 2..].iter().filter(|r| r.norm() > 0.0).collect();
    if window.len() < 20 {
        return Err(DichotomyError::InsufficientData(window.len()));
    }
    let m = window.len() as f64;
    let mean_t = window.iter().map(|r| r.t).sum::<f64>() / m;
    let mean_y = window.iter().map(|r| r.norm().ln()).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for r in &window {
        let dt = r.t - mean_t;
        sxy += dt * (r.norm().ln() - mean_y);
        sxx += dt * dt;
    }
    Ok(-sxy / sxx)
}

/// h₀ + max(μ₁, μ₂)/min(d₁, H'(0)d₂/b) · ∫₀^{h₀} (u₀ + (H'(0)/b) v₀) dx.
pub fn vanishing_bound(params: &ModelParams, nl: &NonlinearitySpec, init: &InitialData) -> Result<f64, DichotomyError> {
    let r0 = reproduction_number(nl, params);
    if r0 > 1.0 {
        return Err(DichotomyError::NotSubcritical(r0));
    }
    if params.fixed_end == FixedEnd::Neumann {
        return Err(DichotomyError::NeumannUnsupported);
    }
    let hp = nl.h_prime0();
    let weight = hp / params.b;
    let integrand: Vec<f64> = init
        .u0()
        .iter()
        .zip(init.v0())
        .map(|(u, v)| u + weight * v)
        .collect();
    let integral = simpson(&integrand, init.spacing());
    let mu = params.mu1.max(params.mu2);
    if mu == 0.0 {
        return Ok(params.h0);
    }
    Ok(params.h0 + mu / params.d1.min(hp * params.d2 / params.b) * integral)
}
