use serde::Serialize;

use super::{reproduction_number, ModelError, ModelParams, NonlinearitySpec};

/// Positive constant steady state (u*, v*) with a·u* = H(v*), b·v* = G(u*).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub u_star: f64,
    pub v_star: f64,
    pub exists: bool,
}

impl Equilibrium {
    pub const TRIVIAL: Equilibrium = Equilibrium {
        u_star: 0.0,
        v_star: 0.0,
        exists: false,
    };

    pub fn require_positive(&self, r0: f64) -> Result<(f64, f64), ModelError> {
        if self.exists {
            Ok((self.u_star, self.v_star))
        } else {
            Err(ModelError::NoPositiveRoot { r0 })
        }
    }

    /// max(|a u* - H(v*)| / max(|a u*|, tiny), |b v* - G(u*)| / ...)
    pub fn relative_residual(&self, nl: &NonlinearitySpec, params: &ModelParams) -> f64 {
        let r1 = (params.a * self.u_star - nl.h.value(self.v_star)).abs() / (params.a * self.u_star).abs().max(1e-300);
        let r2 = (params.b * self.v_star - nl.g.value(self.u_star)).abs() / (params.b * self.v_star).abs().max(1e-300);
        r1.max(r2)
    }
}

const BRACKET_LOW: f64 = 1e-12;
const BRACKET_CAP: f64 = 1e12;

/// Positive root of f(v) = G(H(v)/a) - bv; `exists = false` when R₀ ≤ 1.
pub fn equilibrium(nl: &NonlinearitySpec, params: &ModelParams) -> Result<Equilibrium, ModelError> {
    equilibrium_with_tolerance(nl, params, 1e-10)
}

/// Bisection down to bracket width `width`, then two Newton polishing steps.
pub fn equilibrium_with_tolerance(
    nl: &NonlinearitySpec,
    params: &ModelParams,
    width: f64,
) -> Result<Equilibrium, ModelError> {
    if reproduction_number(nl, params) <= 1.0 {
        return Ok(Equilibrium::TRIVIAL);
    }
    let a = params.a;
    let b = params.b;
    let f = |v: f64| nl.g.value(nl.h.value(v) / a) - b * v;
    let df = |v: f64| nl.g.derivative(nl.h.value(v) / a) * nl.h.derivative(v) / a - b;

    let mut lo = BRACKET_LOW;
    if !(f(lo) > 0.0) {
        return Err(ModelError::BracketingFailure(lo));
    }
    let mut hi = 1.0_f64.max(2.0 * lo);
    while f(hi) >= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > BRACKET_CAP {
            return Err(ModelError::BracketingFailure(BRACKET_CAP));
        }
    }
    while hi - lo > width * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut v = 0.5 * (lo + hi);
    for _ in 0..2 {
        let d = df(v);
        if d != 0.0 && d.is_finite() {
            let next = v - f(v) / d;
            if next > 0.0 && next.is_finite() {
                v = next;
            }
        }
    }
    let u = nl.h.value(v) / a;
    Ok(Equilibrium {
        u_star: u,
        v_star: v,
        exists: true,
    })
}
