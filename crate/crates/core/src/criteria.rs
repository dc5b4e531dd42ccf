//! Critical expansion rate μ₁* and critical amplitude τ* by monotone bisection.
//!
//! Every probe is a full simulate + classify. Scouting probes (doubling up to a
//! spreading value, halving down to a vanishing one) run in batches through
//! [`crate::par`]; bisection is sequential.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dichotomy::{simulate_and_classify, Class, Thresholds};
use crate::io::{csv_text, sci};
use crate::model::{reproduction_number, InitialData, ModelParams, NonlinearitySpec};
use crate::par::Execution;
use crate::spectral::critical_length;
use crate::stefan::{Controls, StefanError};

pub const PROBE_COLUMNS: [&str; 4] = ["param_value", "outcome", "t_resolved", "h_final"];

const SCOUT_BATCH: usize = 4;
const SCOUT_LIMIT: u32 = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriteriaError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid link function: {0}")]
    InvalidLink(String),
    #[error("probe at {spreading} spread while the larger value {vanishing} did not")]
    InconsistentMonotonicity { spreading: f64, vanishing: f64 },
    #[error("no spreading value found up to {0}")]
    NoSpreading(f64),
    #[error("no vanishing value found down to {0}")]
    NoVanishing(f64),
    #[error("probe budget of {0} simulations cannot hold the scouting phase")]
    BudgetTooSmall(usize),
    #[error(transparent)]
    Simulation(#[from] StefanError),
}

/// μ₂ = Q(μ₁).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum LinkFunction {
    Linear { rho: f64 },
    Power { coef: f64, exponent: f64 },
}

impl Default for LinkFunction {
    fn default() -> Self {
        LinkFunction::Linear { rho: 1.0 }
    }
}

impl LinkFunction {
    pub fn eval(&self, mu: f64) -> f64 {
        match *self {
            LinkFunction::Linear { rho } => rho * mu,
            LinkFunction::Power { coef, exponent } => coef * mu.powf(exponent),
        }
    }

    /// Q(0) = 0, strictly increasing on a sample grid, and still growing at 1e6.
    pub fn validate(&self) -> Result<(), CriteriaError> {
        let finite = match *self {
            LinkFunction::Linear { rho } => rho.is_finite() && rho > 0.0,
            LinkFunction::Power { coef, exponent } => {
                coef.is_finite() && exponent.is_finite() && coef > 0.0 && exponent > 0.0
            }
        };
        if !finite {
            return Err(CriteriaError::InvalidLink(format!("{self:?} needs positive finite coefficients")));
        }
        if self.eval(0.0) != 0.0 {
            return Err(CriteriaError::InvalidLink("Q(0) ≠ 0".into()));
        }
        let grid: Vec<f64> = (0..=200).map(|k| 1e-3 * 1.1_f64.powi(k)).collect();
        if grid.windows(2).any(|w| self.eval(w[1]) <= self.eval(w[0])) {
            return Err(CriteriaError::InvalidLink("Q not strictly increasing".into()));
        }
        if self.eval(1e6) <= self.eval(1e3) {
            return Err(CriteriaError::InvalidLink("Q bounded".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdName {
    Mu1Star,
    TauStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Converged,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub param_value: f64,
    pub outcome: Class,
    pub t_resolved: f64,
    pub h_final: f64,
}

impl Probe {
    fn spreads(&self) -> bool {
        self.outcome == Class::Spreading
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub name: ThresholdName,
    pub bracket: (f64, f64),
    pub width: f64,
    pub runs: usize,
    pub status: SearchStatus,
    /// both endpoints re-simulated and re-classified identically
    pub verified: bool,
    pub t_max: f64,
    pub probes: Vec<Probe>,
}

impl ThresholdResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("threshold result serializes")
    }

    /// Probe log sorted by parameter value.
    pub fn probe_csv(&self) -> String {
        let mut probes = self.probes.clone();
        probes.sort_by(|a, b| a.param_value.total_cmp(&b.param_value));
        csv_text(
            &PROBE_COLUMNS,
            probes.iter().map(|p| {
                vec![
                    sci(p.param_value),
                    p.outcome.as_str().to_string(),
                    sci(p.t_resolved),
                    sci(p.h_final),
                ]
            }),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub tol: f64,
    pub budget: usize,
    pub controls: Controls,
    pub thresholds: Thresholds,
    pub execution: Execution,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            tol: 1e-2,
            budget: 40,
            controls: Controls::default(),
            thresholds: Thresholds::default(),
            execution: Execution::Parallel,
        }
    }
}

fn check_supercritical_small(params: &ModelParams, nl: &NonlinearitySpec, tol: f64) -> Result<f64, CriteriaError> {
    if !(tol > 0.0) {
        return Err(CriteriaError::Precondition(format!("tol = {tol} must be positive")));
    }
    let r0 = reproduction_number(nl, params);
    if r0 <= 1.0 {
        return Err(CriteriaError::Precondition(format!("R0 = {r0} ≤ 1: every run vanishes")));
    }
    let l0 = critical_length(params, nl).map_err(|e| CriteriaError::Precondition(e.to_string()))?;
    if params.h0 >= l0 {
        return Err(CriteriaError::Precondition(format!(
            "h0 = {} ≥ l0 = {l0}: every run spreads",
            params.h0
        )));
    }
    Ok(l0)
}

pub fn find_mu1_star(
    params: &ModelParams,
    nl: &NonlinearitySpec,
    init: &InitialData,
    link: &LinkFunction,
    opts: &SearchOptions,
) -> Result<ThresholdResult, CriteriaError> {
    check_supercritical_small(params, nl, opts.tol)?;
    link.validate()?;
    let run = |mu: f64, controls: &Controls| {
        let mut p = *params;
        p.mu1 = mu;
        p.mu2 = link.eval(mu);
        probe(&p, nl, init, mu, controls, &opts.thresholds)
    };
    bisect(ThresholdName::Mu1Star, run, opts)
}

/// `shapes` carries (ϑ₁, ϑ₂); its own τ is ignored and replaced by each probe value.
pub fn find_tau_star(
    params: &ModelParams,
    nl: &NonlinearitySpec,
    shapes: &InitialData,
    opts: &SearchOptions,
) -> Result<ThresholdResult, CriteriaError> {
    check_supercritical_small(params, nl, opts.tol)?;
    let unit = shapes.clone().with_tau(1.0);
    unit.check(params.fixed_end).map_err(|e| CriteriaError::Precondition(e.to_string()))?;
    let run = |tau: f64, controls: &Controls| {
        let init = unit.clone().with_tau(tau);
        probe(params, nl, &init, tau, controls, &opts.thresholds)
    };
    bisect(ThresholdName::TauStar, run, opts)
}

fn probe(
    params: &ModelParams,
    nl: &NonlinearitySpec,
    init: &InitialData,
    value: f64,
    controls: &Controls,
    thresholds: &Thresholds,
) -> Result<Probe, CriteriaError> {
    let (result, outcome) = simulate_and_classify(params, nl, init, controls, thresholds)?;
    Ok(Probe {
        param_value: value,
        outcome: outcome.class,
        t_resolved: outcome.evidence.t_fired,
        h_final: result.final_state.h,
    })
}

struct Search<'a, F> {
    run: F,
    opts: &'a SearchOptions,
    controls: Controls,
    extended: bool,
    probes: Vec<Probe>,
    runs: usize,
}

impl<F> Search<'_, F>
where
    F: Fn(f64, &Controls) -> Result<Probe, CriteriaError> + Sync + Send,
{
    /// Run a batch; an Undetermined probe doubles T_max once and is repeated.
    fn batch(&mut self, values: &[f64]) -> Result<Vec<Probe>, CriteriaError> {
        let controls = self.controls;
        let run = &self.run;
        let mut out = self
            .opts
            .execution
            .map(values, |&v| run(v, &controls))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        self.runs += out.len();
        if !self.extended && out.iter().any(|p| p.outcome == Class::Undetermined) {
            self.extended = true;
            self.controls.t_max *= 2.0;
            for p in out.iter_mut().filter(|p| p.outcome == Class::Undetermined) {
                *p = (self.run)(p.param_value, &self.controls)?;
                self.runs += 1;
            }
        }
        self.probes.extend(out.iter().copied());
        Ok(out)
    }

    /// Smallest spreading value above the largest non-spreading one.
    fn bracket(&self) -> (Option<f64>, Option<f64>) {
        let hi = self
            .probes
            .iter()
            .filter(|p| p.spreads())
            .map(|p| p.param_value)
            .min_by(f64::total_cmp);
        let lo = self
            .probes
            .iter()
            .filter(|p| !p.spreads() && hi.is_none_or(|h| p.param_value < h))
            .map(|p| p.param_value)
            .max_by(f64::total_cmp);
        (lo, hi)
    }

    fn monotone(&self) -> Result<(), (f64, f64)> {
        let mut sorted = self.probes.clone();
        sorted.sort_by(|a, b| a.param_value.total_cmp(&b.param_value));
        let mut first_spread: Option<f64> = None;
        for p in &sorted {
            match (p.spreads(), first_spread) {
                (true, None) => first_spread = Some(p.param_value),
                (false, Some(s)) if p.param_value > s => return Err((s, p.param_value)),
                _ => {}
            }
        }
        Ok(())
    }

    /// `None` when a batch broke monotonicity.
    fn scout(&mut self) -> Result<Option<(f64, f64)>, CriteriaError> {
        let mut k = 0;
        while self.bracket().1.is_none() {
            if k >= SCOUT_LIMIT {
                return Err(CriteriaError::NoSpreading(2f64.powi(k as i32 - 1)));
            }
            let values: Vec<f64> = (k..k + SCOUT_BATCH as u32).map(|j| 2f64.powi(j as i32)).collect();
            k += SCOUT_BATCH as u32;
            self.batch(&values)?;
            if self.monotone().is_err() {
                return Ok(None);
            }
        }
        let mut k = 1;
        while self.bracket().0.is_none() {
            if k > SCOUT_LIMIT {
                return Err(CriteriaError::NoVanishing(self.bracket().1.unwrap_or(1.0) / 2f64.powi(k as i32 - 1)));
            }
            let hi = self.bracket().1.expect("spreading value found");
            let values: Vec<f64> = (k..k + SCOUT_BATCH as u32).map(|j| hi / 2f64.powi(j as i32)).collect();
            k += SCOUT_BATCH as u32;
            self.batch(&values)?;
            if self.monotone().is_err() {
                return Ok(None);
            }
        }
        let (lo, hi) = self.bracket();
        Ok(Some((lo.expect("vanishing value found"), hi.expect("spreading value found"))))
    }
}

fn bisect<F>(name: ThresholdName, run: F, opts: &SearchOptions) -> Result<ThresholdResult, CriteriaError>
where
    F: Fn(f64, &Controls) -> Result<Probe, CriteriaError> + Sync + Send,
{
    if opts.budget < 2 * SCOUT_BATCH + 2 {
        return Err(CriteriaError::BudgetTooSmall(opts.budget));
    }
    let mut search = Search {
        run,
        opts,
        controls: opts.controls,
        extended: false,
        probes: Vec::new(),
        runs: 0,
    };
    let mut retried = false;
    loop {
        let (mut lo, mut hi) = match search.scout()? {
            Some(b) => b,
            None => {
                restart_or_fail(&mut search, &mut retried)?;
                continue;
            }
        };
        let mut status = SearchStatus::Converged;
        let mut restart = false;
        // two runs are held back for endpoint verification
        while hi - lo >= opts.tol {
            if search.runs + 3 > opts.budget {
                status = SearchStatus::BudgetExhausted;
                break;
            }
            let mid = 0.5 * (lo + hi);
            let p = search.batch(&[mid])?[0];
            if search.monotone().is_err() {
                restart = true;
                break;
            }
            if p.spreads() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if restart {
            restart_or_fail(&mut search, &mut retried)?;
            continue;
        }

        let logged = |v: f64| search.probes.iter().rev().find(|p| p.param_value == v).map(|p| p.outcome);
        let (lo_class, hi_class) = (logged(lo), logged(hi));
        let controls = search.controls;
        let again = opts.execution.map(&[lo, hi], |&v| (search.run)(v, &controls));
        search.runs += 2;
        let again = again.into_iter().collect::<Result<Vec<_>, _>>()?;
        let verified = Some(again[0].outcome) == lo_class && Some(again[1].outcome) == hi_class;

        return Ok(ThresholdResult {
            name,
            bracket: (lo, hi),
            width: hi - lo,
            runs: search.runs,
            status,
            verified,
            t_max: search.controls.t_max,
            probes: search.probes,
        });
    }
}

/// One fresh search with doubled T_max; a second inconsistency is an error.
fn restart_or_fail<F>(search: &mut Search<'_, F>, retried: &mut bool) -> Result<(), CriteriaError> {
    if *retried {
        let mut sorted = search.probes.clone();
        sorted.sort_by(|a, b| a.param_value.total_cmp(&b.param_value));
        let spreading = sorted.iter().find(|p| p.spreads()).map_or(f64::NAN, |p| p.param_value);
        let vanishing = sorted
            .iter()
            .rev()
            .find(|p| !p.spreads())
            .map_or(f64::NAN, |p| p.param_value);
        return Err(CriteriaError::InconsistentMonotonicity { spreading, vanishing });
    }
    *retried = true;
    search.controls.t_max *= 2.0;
    search.extended = true;
    search.probes.clear();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake(threshold: f64) -> impl Fn(f64, &Controls) -> Result<Probe, CriteriaError> + Sync + Send {
        move |v, _| {
            Ok(Probe {
                param_value: v,
                outcome: if v > threshold { Class::Spreading } else { Class::Vanishing },
                t_resolved: 1.0,
                h_final: v,
            })
        }
    }

    fn opts() -> SearchOptions {
        SearchOptions {
            execution: Execution::Sequential,
            ..SearchOptions::default()
        }
    }

    #[test]
    fn link_checks() {
        assert!(LinkFunction::Linear { rho: 2.0 }.validate().is_ok());
        assert!(LinkFunction::Power { coef: 1.0, exponent: 0.5 }.validate().is_ok());
        assert!(LinkFunction::Linear { rho: 0.0 }.validate().is_err());
        assert!(LinkFunction::Power { coef: 1.0, exponent: -1.0 }.validate().is_err());
        assert_eq!(LinkFunction::Linear { rho: 3.0 }.eval(2.0), 6.0);
    }

    #[test]
    fn bisection_brackets_a_known_threshold() {
        for t in [0.013, 0.7, 1.0, 1.37, 55.5] {
            let r = bisect(ThresholdName::Mu1Star, fake(t), &opts()).unwrap();
            let (lo, hi) = r.bracket;
            assert!(lo <= t && t < hi, "{t}: {lo} {hi}");
            assert!(r.width < 1e-2);
            assert!(r.runs <= 40, "{t}: {} runs", r.runs);
            assert!(r.verified);
            assert_eq!(r.status, SearchStatus::Converged);
        }
    }

    #[test]
    fn budget_exhaustion_keeps_best_bracket() {
        let o = SearchOptions { budget: 12, ..opts() };
        let r = bisect(ThresholdName::TauStar, fake(0.3), &o).unwrap();
        assert_eq!(r.status, SearchStatus::BudgetExhausted);
        assert!(r.bracket.0 <= 0.3 && 0.3 < r.bracket.1);
        assert!(r.runs <= 12);
    }

    #[test]
    fn undetermined_doubles_horizon_once() {
        let run = |v: f64, c: &Controls| {
            let outcome = if v > 1.0 {
                Class::Spreading
            } else if c.t_max < 1000.0 && v > 0.5 {
                Class::Undetermined
            } else {
                Class::Vanishing
            };
            Ok(Probe {
                param_value: v,
                outcome,
                t_resolved: 0.0,
                h_final: 0.0,
            })
        };
        let r = bisect(ThresholdName::Mu1Star, run, &opts()).unwrap();
        assert_eq!(r.t_max, 1000.0);
        assert!(r.bracket.0 <= 1.0 && 1.0 < r.bracket.1);
    }

    #[test]
    fn non_monotone_oracle_is_reported() {
        let run = |v: f64, _: &Controls| {
            Ok(Probe {
                param_value: v,
                outcome: if (1.5..3.0).contains(&v) { Class::Spreading } else { Class::Vanishing },
                t_resolved: 0.0,
                h_final: 0.0,
            })
        };
        let err = bisect(ThresholdName::Mu1Star, run, &opts()).unwrap_err();
        assert!(matches!(err, CriteriaError::InconsistentMonotonicity { .. }));
    }

    #[test]
    fn probe_csv_is_sorted() {
        let r = bisect(ThresholdName::TauStar, fake(0.42), &opts()).unwrap();
        let csv = r.probe_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("param_value,outcome,t_resolved,h_final"));
        let values: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn preconditions() {
        let nl = NonlinearitySpec::monod(2.0, 1.0, 2.0, 1.0);
        let mut p = ModelParams {
            d1: 1.0,
            d2: 1.0,
            a: 1.0,
            b: 1.0,
            mu1: 1.0,
            mu2: 1.0,
            h0: 4.0,
            fixed_end: crate::model::FixedEnd::Dirichlet,
        };
        let init = InitialData::bump(p.fixed_end, p.h0, 0.5, 0.5, 101);
        let link = LinkFunction::default();
        assert!(matches!(
            find_mu1_star(&p, &nl, &init, &link, &opts()),
            Err(CriteriaError::Precondition(_))
        ));
        p.h0 = 1.0;
        let sub = NonlinearitySpec::monod(1.0, 1.0, 0.5, 1.0);
        assert!(matches!(
            find_tau_star(&p, &sub, &init, &opts()),
            Err(CriteriaError::Precondition(_))
        ));
    }
}
