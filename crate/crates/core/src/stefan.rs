//! Time marching of the free-boundary system on the front-fixed domain.
//!
//! With y = x/h(t) the moving interval (0, h(t)) maps to (0, 1) and
//!
//! ```text
//! ũ_t = (d1/h²) ũ_yy + y (h'/h) ũ_y − a ũ + H(ṽ)
//! ṽ_t = (d2/h²) ṽ_yy + y (h'/h) ṽ_y − b ṽ + G(ũ)
//! h'  = −(μ1 ũ_y(1) + μ2 ṽ_y(1)) / h
//! ```
//!
//! Each step: boundary speed from a second-order one-sided stencil, Euler
//! predictor for h, implicit diffusion (and linear decay) with explicit
//! coupling and advection, then a Heun corrector for h.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elliptic::{operational_ceilings, CeilingConstants, SteadyError};
use crate::io::{csv_text, sci, NumericTable, ParseError};
use crate::linalg::{trapezoid, Tridiagonal};
use crate::model::{FixedEnd, InitialData, ModelError, ModelParams, NonlinearitySpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StefanError {
    #[error("dt = {dt:e} exceeds the advection CFL bound {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("blow-up at t = {t}: sup u = {sup_u:e}, sup v = {sup_v:e} exceed 10× the ceilings")]
    BlowUp { t: f64, sup_u: f64, sup_v: f64 },
    #[error("invalid controls: {0}")]
    InvalidControls(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ceilings(#[from] SteadyError),
}

/// Minimum grid resolution; the boundary stencil needs a well-resolved layer.
pub const MIN_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Controls {
    pub n: usize,
    pub dt: f64,
    pub t_max: f64,
    pub output_dt: f64,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            n: 512,
            dt: 1e-3,
            t_max: 500.0,
            output_dt: 0.5,
        }
    }
}

impl Controls {
    pub fn validate(&self) -> Result<(), StefanError> {
        if self.n < MIN_GRID {
            return Err(StefanError::InvalidControls(format!("n must be ≥ {MIN_GRID}, got {}", self.n)));
        }
        for (name, v) in [("dt", self.dt), ("t_max", self.t_max), ("output_dt", self.output_dt)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(StefanError::InvalidControls(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Fields on the reference grid y_j = j/n.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub h: f64,
    pub h_prime: f64,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl SimState {
    pub fn initial(params: &ModelParams, init: &InitialData, n: usize) -> Self {
        let h = params.h0;
        let y: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
        let mut u: Vec<f64> = y.iter().map(|&yj| init.u_at(yj * h).max(0.0)).collect();
        let mut v: Vec<f64> = y.iter().map(|&yj| init.v_at(yj * h).max(0.0)).collect();
        u[n] = 0.0;
        v[n] = 0.0;
        if params.fixed_end == FixedEnd::Dirichlet {
            u[0] = 0.0;
            v[0] = 0.0;
        }
        Self {
            t: 0.0,
            h,
            h_prime: 0.0,
            y,
            u,
            v,
        }
    }

    pub fn n(&self) -> usize {
        self.y.len() - 1
    }

    pub fn sup_u(&self) -> f64 {
        self.u.iter().fold(0.0_f64, |m, v| m.max(*v))
    }

    pub fn sup_v(&self) -> f64 {
        self.v.iter().fold(0.0_f64, |m, v| m.max(*v))
    }

    pub fn mass_u(&self) -> f64 {
        self.h * trapezoid(&self.u, 1.0 / self.n() as f64)
    }

    pub fn mass_v(&self) -> f64 {
        self.h * trapezoid(&self.v, 1.0 / self.n() as f64)
    }

    /// Linear interpolation in physical x; zero beyond h.
    pub fn sample(&self, x: f64) -> (f64, f64) {
        let n = self.n();
        let s = (x / self.h).clamp(0.0, 1.0) * n as f64;
        let k = (s.floor() as usize).min(n - 1);
        let t = s - k as f64;
        (
            (1.0 - t) * self.u[k] + t * self.u[k + 1],
            (1.0 - t) * self.v[k] + t * self.v[k + 1],
        )
    }

    pub fn record(&self) -> TimelineRecord {
        TimelineRecord {
            t: self.t,
            h: self.h,
            h_prime: self.h_prime,
            sup_u: self.sup_u(),
            sup_v: self.sup_v(),
            mass_u: self.mass_u(),
            mass_v: self.mass_v(),
        }
    }

    /// `y,x,u,v` snapshot with x = y·h.
    pub fn snapshot_csv(&self) -> String {
        csv_text(
            &["y", "x", "u", "v"],
            (0..=self.n()).map(|j| {
                vec![
                    sci(self.y[j]),
                    sci(self.y[j] * self.h),
                    sci(self.u[j]),
                    sci(self.v[j]),
                ]
            }),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineRecord {
    pub t: f64,
    pub h: f64,
    pub h_prime: f64,
    pub sup_u: f64,
    pub sup_v: f64,
    pub mass_u: f64,
    pub mass_v: f64,
}

impl TimelineRecord {
    pub fn norm(&self) -> f64 {
        self.sup_u + self.sup_v
    }
}

pub const TIMELINE_COLUMNS: [&str; 7] = ["t", "h", "h_prime", "sup_u", "sup_v", "mass_u", "mass_v"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timeline {
    pub records: Vec<TimelineRecord>,
}

impl Timeline {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn last(&self) -> Option<&TimelineRecord> {
        self.records.last()
    }

    pub fn to_csv(&self) -> String {
        csv_text(
            &TIMELINE_COLUMNS,
            self.records.iter().map(|r| {
                [r.t, r.h, r.h_prime, r.sup_u, r.sup_v, r.mass_u, r.mass_v]
                    .iter()
                    .map(|&v| sci(v))
                    .collect()
            }),
        )
    }

    pub fn from_csv(text: &str) -> Result<Self, ParseError> {
        let table = NumericTable::parse(text)?;
        if table.header != TIMELINE_COLUMNS {
            return Err(ParseError {
                line: 1,
                message: format!("expected header {}", TIMELINE_COLUMNS.join(",")),
            });
        }
        if table.rows.is_empty() {
            return Err(ParseError {
                line: 2,
                message: "timeline has no records".into(),
            });
        }
        Ok(Self {
            records: table
                .rows
                .iter()
                .map(|r| TimelineRecord {
                    t: r[0],
                    h: r[1],
                    h_prime: r[2],
                    sup_u: r[3],
                    sup_v: r[4],
                    mass_u: r[5],
                    mass_v: r[6],
                })
                .collect(),
        })
    }
}

/// One-step integrator owning its scratch space.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    params: &'a ModelParams,
    nl: &'a NonlinearitySpec,
    ceilings: CeilingConstants,
    n: usize,
    dy: f64,
    tri: Tridiagonal,
    rhs_u: Vec<f64>,
    rhs_v: Vec<f64>,
    /// largest negative value clipped to zero so far
    pub max_undershoot: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(params: &'a ModelParams, nl: &'a NonlinearitySpec, ceilings: CeilingConstants, n: usize) -> Self {
        Self {
            params,
            nl,
            ceilings,
            n,
            dy: 1.0 / n as f64,
            tri: Tridiagonal::new(n),
            rhs_u: vec![0.0; n],
            rhs_v: vec![0.0; n],
            max_undershoot: 0.0,
        }
    }

    pub fn ceilings(&self) -> CeilingConstants {
        self.ceilings
    }

    /// u_x(t, h) from (3ũ_n − 4ũ_{n−1} + ũ_{n−2}) / (2Δy h) with ũ_n = 0.
    pub fn boundary_gradient(&self, w: &[f64], h: f64) -> f64 {
        let n = self.n;
        (-4.0 * w[n - 1] + w[n - 2]) / (2.0 * self.dy * h)
    }

    pub fn boundary_speed(&self, u: &[f64], v: &[f64], h: f64) -> f64 {
        -self.params.mu1 * self.boundary_gradient(u, h) - self.params.mu2 * self.boundary_gradient(v, h)
    }

    /// 0.5·Δy·h / max(|h'|, ε).
    pub fn cfl_limit(&self, state: &SimState) -> f64 {
        let speed = self.boundary_speed(&state.u, &state.v, state.h).abs().max(1e-300);
        0.5 * self.dy * state.h / speed
    }

    pub fn step(&mut self, state: &mut SimState, dt: f64) -> Result<(), StefanError> {
        let n = self.n;
        let h = state.h;
        let speed_old = self.boundary_speed(&state.u, &state.v, h);
        let limit = 0.5 * self.dy * h / speed_old.abs().max(1e-300);
        if dt > limit {
            return Err(StefanError::CflViolation { dt, limit });
        }
        let h_pred = h + dt * speed_old;
        let drift = speed_old / h_pred / (2.0 * self.dy);
        let first = match self.params.fixed_end {
            FixedEnd::Dirichlet => 1,
            FixedEnd::Neumann => 0,
        };

        let (u, v) = (&state.u, &state.v);
        for j in first..n {
            let left = |w: &[f64]| if j == 0 { w[1] } else { w[j - 1] };
            let y = state.y[j];
            self.rhs_u[j] = u[j] + dt * (y * drift * (u[j + 1] - left(u)) + self.nl.h.value(v[j]));
            self.rhs_v[j] = v[j] + dt * (y * drift * (v[j + 1] - left(v)) + self.nl.g.value(u[j]));
        }

        let coeff = dt / (h_pred * h_pred * self.dy * self.dy);
        let mut undershoot = self.max_undershoot;
        for (d, decay, rhs, out) in [
            (self.params.d1, self.params.a, &mut self.rhs_u, &mut state.u),
            (self.params.d2, self.params.b, &mut self.rhs_v, &mut state.v),
        ] {
            let r = d * coeff;
            let m = n - first;
            self.tri.lower.resize(m, 0.0);
            self.tri.diag.resize(m, 0.0);
            self.tri.upper.resize(m, 0.0);
            for k in 0..m {
                let j = first + k;
                self.tri.lower[k] = -r;
                self.tri.diag[k] = 1.0 + 2.0 * r + dt * decay;
                self.tri.upper[k] = if j == 0 { -2.0 * r } else { -r };
            }
            let sol = &mut rhs[first..n];
            self.tri.solve_in_place(sol);
            for (dst, &val) in out[first..n].iter_mut().zip(sol.iter()) {
                if val < 0.0 {
                    undershoot = undershoot.max(-val);
                    *dst = 0.0;
                } else {
                    *dst = val;
                }
            }
            out[n] = 0.0;
            if first == 1 {
                out[0] = 0.0;
            }
        }
        self.max_undershoot = undershoot;

        let speed_new = self.boundary_speed(&state.u, &state.v, h_pred);
        state.h = h + 0.5 * dt * (speed_old + speed_new);
        state.h_prime = speed_new;
        state.t += dt;

        let (su, sv) = (state.sup_u(), state.sup_v());
        if !(su <= 10.0 * self.ceilings.k1) || !(sv <= 10.0 * self.ceilings.k2) {
            return Err(StefanError::BlowUp {
                t: state.t,
                sup_u: su,
                sup_v: sv,
            });
        }
        Ok(())
    }
}

/// What the observer wants after seeing a timeline record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Watch {
    Continue,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub timeline: Timeline,
    pub final_state: SimState,
    pub ceilings: CeilingConstants,
    pub stopped_early: bool,
    /// output records where the fields exceeded (K₁, K₂)
    pub ceiling_exceedances: usize,
    pub max_undershoot: f64,
}

pub fn simulate(
    params: &ModelParams,
    nl: &NonlinearitySpec,
    init: &InitialData,
    controls: &Controls,
) -> Result<SimulationResult, StefanError> {
    simulate_with(params, nl, init, controls, |_| Watch::Continue)
}

/// March until `t_max` or until `observer` asks to stop; records every `output_dt`.
pub fn simulate_with(
    params: &ModelParams,
    nl: &NonlinearitySpec,
    init: &InitialData,
    controls: &Controls,
    mut observer: impl FnMut(&TimelineRecord) -> Watch,
) -> Result<SimulationResult, StefanError> {
    params.validate()?;
    controls.validate()?;
    init.check(params.fixed_end)?;
    let ceilings = operational_ceilings(nl, params, init)?;
    let mut state = SimState::initial(params, init, controls.n);
    let mut stepper = Stepper::new(params, nl, ceilings, controls.n);
    state.h_prime = stepper.boundary_speed(&state.u, &state.v, state.h);

    let mut timeline = Timeline::default();
    let mut exceed = 0;
    let mut push = |state: &SimState, timeline: &mut Timeline| {
        let rec = state.record();
        if rec.sup_u > ceilings.k1 * (1.0 + 1e-9) || rec.sup_v > ceilings.k2 * (1.0 + 1e-9) {
            exceed += 1;
        }
        timeline.records.push(rec);
        observer(&rec)
    };

    let mut stopped = push(&state, &mut timeline) == Watch::Stop;
    let mut k_out: u64 = 1;
    while !stopped && state.t < controls.t_max * (1.0 - 1e-14) {
        let next_out = (k_out as f64 * controls.output_dt).min(controls.t_max);
        let mut dt = controls.dt.min(next_out - state.t);
        let limit = stepper.cfl_limit(&state);
        while dt > limit {
            dt *= 0.5;
        }
        stepper.step(&mut state, dt)?;
        if state.t >= next_out - 1e-9 * controls.dt {
            state.t = next_out;
            k_out += 1;
            stopped = push(&state, &mut timeline) == Watch::Stop;
        }
    }

    Ok(SimulationResult {
        timeline,
        final_state: state,
        ceilings,
        stopped_early: stopped,
        ceiling_exceedances: exceed,
        max_undershoot: stepper.max_undershoot,
    })
}
