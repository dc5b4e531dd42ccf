//! Steady states of the cooperative system on (0, l):
//!
//! * `Homogeneous`: u(l) = v(l) = 0 at the right end,
//! * `Elevated`: u(l) = K₁, v(l) = K₂,
//! * `SemiInfinite`: a truncated approximation of the bounded profile (U, V) on (0, ∞).
//!
//! All three are computed by ordered upper/lower monotone iteration on the
//! second-order finite-difference discretisation, then polished with Newton.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{sup_distance, BandMatrix, Tridiagonal};
use crate::model::{
    equilibrium, reproduction_number, FixedEnd, InitialData, ModelError, ModelParams, NonlinearitySpec,
};
use crate::spectral::{LinearCoeffs, SpectralError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteadyError {
    #[error("λ(l) = {lambda:e} ≥ 0: only the trivial steady state exists")]
    Subcritical { lambda: f64, trivial: Box<SteadyProfile> },
    #[error("lower iterate exceeded upper iterate after {halvings} halvings of ε")]
    OrderingViolation { halvings: usize },
    #[error("no ceiling K₂ ≤ {limit:e} satisfies the barrier conditions")]
    SearchExhausted { limit: f64 },
    #[error("monotone iteration did not converge in {0} sweeps")]
    NoConvergence(usize),
    #[error("upper and lower limits differ by {0:e}")]
    GapNotClosed(f64),
    #[error("grid needs at least 16 intervals, got {0}")]
    GridTooSmall(usize),
    #[error("semi-infinite profile needs {0}")]
    Precondition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SteadyKind {
    Homogeneous,
    Elevated,
    SemiInfinite,
}

impl std::str::FromStr for SteadyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "homogeneous" => Ok(SteadyKind::Homogeneous),
            "elevated" => Ok(SteadyKind::Elevated),
            "semi_infinite" | "semi-infinite" => Ok(SteadyKind::SemiInfinite),
            other => Err(format!("unknown steady kind `{other}`")),
        }
    }
}

/// Ordering diagnostics for one sweep of the monotone iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord {
    /// min over nodes of lower_{k+1} − lower_k (≥ 0 when nondecreasing)
    pub lower_step: f64,
    /// min over nodes of upper_k − upper_{k+1}
    pub upper_step: f64,
    /// min over nodes of upper − lower
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyProfile {
    pub l: f64,
    pub kind: SteadyKind,
    pub fixed_end: FixedEnd,
    pub residual: f64,
    pub iterations: usize,
    pub epsilon: f64,
    /// sup distance between truncations at l and l/2 (SemiInfinite only)
    pub convergence_estimate: Option<f64>,
    #[serde(skip)]
    pub x: Vec<f64>,
    #[serde(skip)]
    pub u: Vec<f64>,
    #[serde(skip)]
    pub v: Vec<f64>,
    #[serde(skip)]
    pub trace: Vec<SweepRecord>,
}

impl SteadyProfile {
    /// Linear interpolation of (u, v) at x ∈ [0, l].
    pub fn sample(&self, x: f64) -> (f64, f64) {
        let n = self.x.len() - 1;
        let dx = self.l / n as f64;
        let k = ((x / dx).floor().max(0.0) as usize).min(n - 1);
        let t = ((x - self.x[k]) / dx).clamp(0.0, 1.0);
        (
            (1.0 - t) * self.u[k] + t * self.u[k + 1],
            (1.0 - t) * self.v[k] + t * self.v[k + 1],
        )
    }
}

/// Upper barrier pair (K₁, K₂).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CeilingConstants {
    pub k1: f64,
    pub k2: f64,
}

const CEILING_SEARCH_FACTOR: f64 = 1e9;

/// Smallest K₂ on a doubling ladder from max(v*, sup v0) with
/// K₂ > max(v*, sup v0), K₁ = H(K₂)/a > max(u*, sup u0) and G(K₁) < bK₂.
pub fn ceiling_constants(
    nl: &NonlinearitySpec,
    params: &ModelParams,
    init: &InitialData,
) -> Result<CeilingConstants, SteadyError> {
    ceiling_constants_for(nl, params, init.sup_u(), init.sup_v())
}

pub fn ceiling_constants_for(
    nl: &NonlinearitySpec,
    params: &ModelParams,
    sup_u0: f64,
    sup_v0: f64,
) -> Result<CeilingConstants, SteadyError> {
    let r0 = reproduction_number(nl, params);
    let (u_star, v_star) = equilibrium(nl, params)?.require_positive(r0)?;
    let base_v = v_star.max(sup_v0);
    let base_u = u_star.max(sup_u0);
    let limit = CEILING_SEARCH_FACTOR * v_star;
    let mut k2 = base_v;
    while k2 <= limit {
        let k1 = nl.h.value(k2) / params.a;
        if k2 > base_v && k1 > base_u && nl.g.value(k1) < params.b * k2 {
            return Ok(CeilingConstants { k1, k2 });
        }
        k2 *= 2.0;
    }
    Err(SteadyError::SearchExhausted { limit })
}

/// Ceilings for time-marching: the barrier pair when attainable, otherwise an
/// invariant rectangle C₂ ≥ sup v0, C₁ = max(H(C₂)/a, sup u0), G(C₁) ≤ bC₂.
pub fn operational_ceilings(
    nl: &NonlinearitySpec,
    params: &ModelParams,
    init: &InitialData,
) -> Result<CeilingConstants, SteadyError> {
    if let Ok(c) = ceiling_constants(nl, params, init) {
        return Ok(c);
    }
    let v_star = equilibrium(nl, params)?.v_star;
    let mut c2 = init.sup_v().max(v_star).max(1e-6);
    for _ in 0..200 {
        let c1 = (nl.h.value(c2) / params.a).max(init.sup_u());
        if nl.g.value(c1) <= params.b * c2 {
            return Ok(CeilingConstants { k1: c1, k2: c2 });
        }
        c2 *= 2.0;
    }
    Err(SteadyError::SearchExhausted { limit: c2 })
}

pub fn solve_steady(
    params: &ModelParams,
    nl: &NonlinearitySpec,
    l: f64,
    kind: SteadyKind,
    n: usize,
) -> Result<SteadyProfile, SteadyError> {
    SteadySolver::new(params, nl).grid(n).solve(l, kind)
}

pub fn semi_infinite_profile(
    params: &ModelParams,
    nl: &NonlinearitySpec,
    l_big: f64,
    n: usize,
) -> Result<SteadyProfile, SteadyError> {
    SteadySolver::new(params, nl).grid(n).semi_infinite(l_big)
}

const SWEEP_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 200_000;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone)]
pub struct SteadySolver<'a> {
    params: &'a ModelParams,
    nl: &'a NonlinearitySpec,
    n: usize,
    ceilings: Option<CeilingConstants>,
    record_trace: bool,
}

impl<'a> SteadySolver<'a> {
    pub fn new(params: &'a ModelParams, nl: &'a NonlinearitySpec) -> Self {
        Self {
            params,
            nl,
            n: 1000,
            ceilings: None,
            record_trace: false,
        }
    }

    pub fn grid(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn ceilings(mut self, c: CeilingConstants) -> Self {
        self.ceilings = Some(c);
        self
    }

    pub fn record_trace(mut self, on: bool) -> Self {
        self.record_trace = on;
        self
    }

    pub fn solve(&self, l: f64, kind: SteadyKind) -> Result<SteadyProfile, SteadyError> {
        match kind {
            SteadyKind::Homogeneous => self.homogeneous(l, self.n),
            SteadyKind::Elevated => self.elevated(l, self.n),
            SteadyKind::SemiInfinite => self.semi_infinite(l),
        }
    }

    fn check_grid(&self, n: usize) -> Result<(), SteadyError> {
        if n < 16 {
            return Err(SteadyError::GridTooSmall(n));
        }
        Ok(())
    }

    fn trivial(&self, l: f64, n: usize) -> SteadyProfile {
        SteadyProfile {
            l,
            kind: SteadyKind::Homogeneous,
            fixed_end: self.params.fixed_end,
            residual: 0.0,
            iterations: 0,
            epsilon: 0.0,
            convergence_estimate: None,
            x: grid_nodes(l, n),
            u: vec![0.0; n + 1],
            v: vec![0.0; n + 1],
            trace: Vec::new(),
        }
    }

    fn homogeneous(&self, l: f64, n: usize) -> Result<SteadyProfile, SteadyError> {
        self.check_grid(n)?;
        let coeffs = LinearCoeffs::new(self.params, self.nl);
        let lambda = coeffs.lambda(l);
        if !(lambda < 0.0) {
            return Err(SteadyError::Subcritical {
                lambda,
                trivial: Box::new(self.trivial(l, n)),
            });
        }
        let r0 = reproduction_number(self.nl, self.params);
        let (u_star, v_star) = equilibrium(self.nl, self.params)?.require_positive(r0)?;
        let disc = Discretisation::new(self.params, l, n, (0.0, 0.0));

        // discrete principal eigenpair: the sampled base mode is an exact eigenvector of D²
        let dx = l / n as f64;
        let theta = match self.params.fixed_end {
            FixedEnd::Dirichlet => PI * dx / l,
            FixedEnd::Neumann => PI * dx / (2.0 * l),
        };
        let nu_h = 4.0 * (0.5 * theta).sin().powi(2) / (dx * dx);
        let lambda_h = coeffs.lambda_at_nu(nu_h);
        let p = coeffs.h_prime0 / (coeffs.d1 * nu_h + coeffs.a - lambda_h);
        let omega: Vec<f64> = disc
            .x
            .iter()
            .map(|&x| match self.params.fixed_end {
                FixedEnd::Dirichlet => (PI * x / l).sin(),
                FixedEnd::Neumann => (PI * x / (2.0 * l)).cos(),
            })
            .collect();
        let phi_max = p.max(1.0);
        let mut eps = 1e-3 * u_star.min(v_star) / phi_max;

        let upper = (
            disc.with_boundary(vec![u_star; n + 1], 0.0),
            disc.with_boundary(vec![v_star; n + 1], 0.0),
        );
        let mut halvings = 0;
        loop {
            let lower = (
                disc.with_boundary(omega.iter().map(|w| eps * p * w).collect(), 0.0),
                disc.with_boundary(omega.iter().map(|w| eps * w).collect(), 0.0),
            );
            if disc.is_strict_lower(self.nl, &lower.0, &lower.1) {
                match self.iterate(&disc, lower, upper.clone()) {
                    Ok((u, v, iterations, trace)) => {
                        return Ok(self.finish(&disc, u, v, iterations, trace, eps, SteadyKind::Homogeneous));
                    }
                    Err(SteadyError::OrderingViolation { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(SteadyError::OrderingViolation { halvings: MAX_HALVINGS });
            }
            eps *= 0.5;
        }
    }

    fn elevated(&self, l: f64, n: usize) -> Result<SteadyProfile, SteadyError> {
        self.check_grid(n)?;
        let ceilings = match self.ceilings {
            Some(c) => c,
            None => ceiling_constants_for(self.nl, self.params, 0.0, 0.0)?,
        };
        let base = self.homogeneous(l, n)?;
        let disc = Discretisation::new(self.params, l, n, (ceilings.k1, ceilings.k2));
        let lower = (base.u.clone(), base.v.clone());
        let upper = (
            disc.with_boundary(vec![ceilings.k1; n + 1], ceilings.k1),
            disc.with_boundary(vec![ceilings.k2; n + 1], ceilings.k2),
        );
        let lower = (
            disc.with_boundary(lower.0, ceilings.k1),
            disc.with_boundary(lower.1, ceilings.k2),
        );
        let (u, v, iterations, trace) = self.iterate(&disc, lower, upper)?;
        Ok(self.finish(&disc, u, v, iterations, trace, base.epsilon, SteadyKind::Elevated))
    }

    fn semi_infinite(&self, l_big: f64) -> Result<SteadyProfile, SteadyError> {
        if self.params.fixed_end != FixedEnd::Dirichlet {
            return Err(SteadyError::Precondition("a Dirichlet fixed end".into()));
        }
        let l0 = crate::spectral::critical_length(self.params, self.nl)?;
        if l_big < 10.0 * l0 {
            return Err(SteadyError::Precondition(format!(
                "l_big ≥ 10·l0 = {}, got {l_big}",
                10.0 * l0
            )));
        }
        let n = self.n + self.n % 2;
        let full = self.homogeneous(l_big, n)?;
        let half = self.homogeneous(0.5 * l_big, n / 2)?;
        let m = n / 2;
        // each truncation is trusted on its first half, so compare on [0, l_big/4]
        let q = n / 4;
        let estimate = sup_distance(&full.u[..=q], &half.u[..=q]).max(sup_distance(&full.v[..=q], &half.v[..=q]));
        Ok(SteadyProfile {
            l: 0.5 * l_big,
            kind: SteadyKind::SemiInfinite,
            convergence_estimate: Some(estimate),
            x: full.x[..=m].to_vec(),
            u: full.u[..=m].to_vec(),
            v: full.v[..=m].to_vec(),
            ..full
        })
    }

    #[allow(clippy::type_complexity)]
    fn iterate(
        &self,
        disc: &Discretisation,
        lower: (Vec<f64>, Vec<f64>),
        upper: (Vec<f64>, Vec<f64>),
    ) -> Result<(Vec<f64>, Vec<f64>, usize, Vec<SweepRecord>), SteadyError> {
        let (mut lu, mut lv) = lower;
        let (mut uu, mut uv) = upper;
        let scale = uu.iter().chain(&uv).fold(1.0_f64, |m, v| m.max(v.abs()));
        let slack = 1e-12 * scale;
        let mut trace = Vec::new();
        let mut solver = disc.solvers();
        for sweep in 1..=MAX_SWEEPS {
            let (nlu, nlv) = disc.picard(self.nl, &lu, &lv, &mut solver);
            let (nuu, nuv) = disc.picard(self.nl, &uu, &uv, &mut solver);
            let rec = SweepRecord {
                lower_step: min_diff(&nlu, &lu).min(min_diff(&nlv, &lv)),
                upper_step: min_diff(&uu, &nuu).min(min_diff(&uv, &nuv)),
                gap: min_diff(&nuu, &nlu).min(min_diff(&nuv, &nlv)),
            };
            if rec.lower_step < -slack || rec.upper_step < -slack || rec.gap < -slack {
                return Err(SteadyError::OrderingViolation { halvings: 0 });
            }
            if self.record_trace {
                trace.push(rec);
            }
            let moved = sup_distance(&nlu, &lu)
                .max(sup_distance(&nlv, &lv))
                .max(sup_distance(&nuu, &uu))
                .max(sup_distance(&nuv, &uv));
            lu = nlu;
            lv = nlv;
            uu = nuu;
            uv = nuv;
            if moved < SWEEP_TOL {
                let gap = sup_distance(&lu, &uu).max(sup_distance(&lv, &uv));
                if gap > 1e-8 * scale {
                    return Err(SteadyError::GapNotClosed(gap));
                }
                let u = lu.iter().zip(&uu).map(|(a, b)| 0.5 * (a + b)).collect();
                let v = lv.iter().zip(&uv).map(|(a, b)| 0.5 * (a + b)).collect();
                return Ok((u, v, sweep, trace));
            }
        }
        Err(SteadyError::NoConvergence(MAX_SWEEPS))
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        disc: &Discretisation,
        mut u: Vec<f64>,
        mut v: Vec<f64>,
        iterations: usize,
        trace: Vec<SweepRecord>,
        epsilon: f64,
        kind: SteadyKind,
    ) -> SteadyProfile {
        let mut residual = disc.residual(self.nl, &u, &v);
        for _ in 0..3 {
            let Some((nu, nv)) = disc.newton_step(self.nl, &u, &v) else { break };
            let r = disc.residual(self.nl, &nu, &nv);
            if !(r < residual) {
                break;
            }
            u = nu;
            v = nv;
            residual = r;
        }
        SteadyProfile {
            l: disc.l,
            kind,
            fixed_end: self.params.fixed_end,
            residual,
            iterations,
            epsilon,
            convergence_estimate: None,
            x: disc.x.clone(),
            u,
            v,
            trace,
        }
    }
}

fn grid_nodes(l: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| l * i as f64 / n as f64).collect()
}

fn min_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(f64::INFINITY, |m, (x, y)| m.min(x - y))
}

/// Finite-difference operator -d w'' + c w on nodes 0..=n with the fixed-end
/// operator at x = 0 and prescribed values at x = l.
struct Discretisation {
    l: f64,
    n: usize,
    x: Vec<f64>,
    inv_dx2: f64,
    d: (f64, f64),
    decay: (f64, f64),
    right: (f64, f64),
    fixed_end: FixedEnd,
}

struct PicardSolvers {
    u: Tridiagonal,
    v: Tridiagonal,
}

impl Discretisation {
    fn new(params: &ModelParams, l: f64, n: usize, right: (f64, f64)) -> Self {
        let dx = l / n as f64;
        Self {
            l,
            n,
            x: grid_nodes(l, n),
            inv_dx2: 1.0 / (dx * dx),
            d: (params.d1, params.d2),
            decay: (params.a, params.b),
            right,
            fixed_end: params.fixed_end,
        }
    }

    fn first_unknown(&self) -> usize {
        match self.fixed_end {
            FixedEnd::Dirichlet => 1,
            FixedEnd::Neumann => 0,
        }
    }

    fn with_boundary(&self, mut w: Vec<f64>, right: f64) -> Vec<f64> {
        w[self.n] = right;
        if self.fixed_end == FixedEnd::Dirichlet {
            w[0] = 0.0;
        }
        w
    }

    fn tridiagonal(&self, d: f64, c: f64) -> Tridiagonal {
        let first = self.first_unknown();
        let m = self.n - first;
        let mut t = Tridiagonal::new(m);
        for k in 0..m {
            let j = first + k;
            t.diag[k] = 2.0 * d * self.inv_dx2 + c;
            t.lower[k] = -d * self.inv_dx2;
            t.upper[k] = if j == 0 { -2.0 * d * self.inv_dx2 } else { -d * self.inv_dx2 };
        }
        t
    }

    fn solvers(&self) -> PicardSolvers {
        PicardSolvers {
            u: self.tridiagonal(self.d.0, self.decay.0),
            v: self.tridiagonal(self.d.1, self.decay.1),
        }
    }

    /// (L₁⁻¹ H(v), L₂⁻¹ G(u)).
    fn picard(&self, nl: &NonlinearitySpec, u: &[f64], v: &[f64], s: &mut PicardSolvers) -> (Vec<f64>, Vec<f64>) {
        let first = self.first_unknown();
        let n = self.n;
        let mut out_u = vec![0.0; n + 1];
        let mut out_v = vec![0.0; n + 1];
        let mut rhs_u: Vec<f64> = (first..n).map(|j| nl.h.value(v[j])).collect();
        let mut rhs_v: Vec<f64> = (first..n).map(|j| nl.g.value(u[j])).collect();
        let last = rhs_u.len() - 1;
        rhs_u[last] += self.d.0 * self.inv_dx2 * self.right.0;
        rhs_v[last] += self.d.1 * self.inv_dx2 * self.right.1;
        s.u.solve_in_place(&mut rhs_u);
        s.v.solve_in_place(&mut rhs_v);
        out_u[first..n].copy_from_slice(&rhs_u);
        out_v[first..n].copy_from_slice(&rhs_v);
        out_u[n] = self.right.0;
        out_v[n] = self.right.1;
        (out_u, out_v)
    }

    /// (L₁u − H(v), L₂v − G(u)) at unknown nodes.
    fn defects(&self, nl: &NonlinearitySpec, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let first = self.first_unknown();
        let lap = |w: &[f64], j: usize| -> f64 {
            let left = if j == 0 { w[1] } else { w[j - 1] };
            (2.0 * w[j] - left - w[j + 1]) * self.inv_dx2
        };
        let ru = (first..self.n)
            .map(|j| self.d.0 * lap(u, j) + self.decay.0 * u[j] - nl.h.value(v[j]))
            .collect();
        let rv = (first..self.n)
            .map(|j| self.d.1 * lap(v, j) + self.decay.1 * v[j] - nl.g.value(u[j]))
            .collect();
        (ru, rv)
    }

    fn residual(&self, nl: &NonlinearitySpec, u: &[f64], v: &[f64]) -> f64 {
        let (ru, rv) = self.defects(nl, u, v);
        crate::linalg::sup_norm(&ru).max(crate::linalg::sup_norm(&rv))
    }

    fn is_strict_lower(&self, nl: &NonlinearitySpec, u: &[f64], v: &[f64]) -> bool {
        let (ru, rv) = self.defects(nl, u, v);
        ru.iter().chain(&rv).all(|&r| r < 0.0)
    }

    fn newton_step(&self, nl: &NonlinearitySpec, u: &[f64], v: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let first = self.first_unknown();
        let m = self.n - first;
        let mut jac = BandMatrix::zeros(2 * m, 2, 2);
        for k in 0..m {
            let j = first + k;
            for (comp, d, c, cross) in [
                (0usize, self.d.0, self.decay.0, nl.h.derivative(v[j])),
                (1usize, self.d.1, self.decay.1, nl.g.derivative(u[j])),
            ] {
                let row = 2 * k + comp;
                jac.set(row, row, 2.0 * d * self.inv_dx2 + c);
                jac.set(row, 2 * k + 1 - comp, -cross);
                if j == 0 {
                    jac.set(row, row + 2, -2.0 * d * self.inv_dx2);
                    continue;
                }
                if k > 0 {
                    jac.set(row, row - 2, -d * self.inv_dx2);
                }
                if k + 1 < m {
                    jac.set(row, row + 2, -d * self.inv_dx2);
                }
            }
        }
        let (ru, rv) = self.defects(nl, u, v);
        let mut rhs = vec![0.0; 2 * m];
        for k in 0..m {
            rhs[2 * k] = -ru[k];
            rhs[2 * k + 1] = -rv[k];
        }
        jac.factorize()?.solve_in_place(&mut rhs);
        let mut nu = u.to_vec();
        let mut nv = v.to_vec();
        for k in 0..m {
            nu[first + k] += rhs[2 * k];
            nv[first + k] += rhs[2 * k + 1];
        }
        Some((nu, nv))
    }
}
