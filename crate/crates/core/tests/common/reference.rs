//! Fixed-domain reference solver for u_t = d1 u_xx − a u + H(v), v_t = d2 v_xx − b v + G(u)
//! on (0, l) with w(l) = 0, coded directly on the physical grid.
//! Backward Euler for diffusion and decay, forward Euler for the coupling.

use freebound::model::{FixedEnd, ModelParams, NonlinearitySpec};

pub struct FixedDomain {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Thomas algorithm on a constant-coefficient tridiagonal matrix (first row may differ).
fn thomas(first_upper: f64, lower: f64, diag: f64, upper: f64, rhs: &mut [f64]) {
    let m = rhs.len();
    let mut c = vec![0.0; m];
    c[0] = first_upper / diag;
    rhs[0] /= diag;
    for i in 1..m {
        let denom = diag - lower * c[i - 1];
        c[i] = upper / denom;
        rhs[i] = (rhs[i] - lower * rhs[i - 1]) / denom;
    }
    for i in (0..m - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

#[allow(clippy::too_many_arguments)]
pub fn solve(
    params: &ModelParams,
    nl: &NonlinearitySpec,
    l: f64,
    n: usize,
    u0: impl Fn(f64) -> f64,
    v0: impl Fn(f64) -> f64,
    dt: f64,
    steps: usize,
) -> FixedDomain {
    let dx = l / n as f64;
    let x: Vec<f64> = (0..=n).map(|i| i as f64 * dx).collect();
    let mut u: Vec<f64> = x.iter().map(|&xi| u0(xi)).collect();
    let mut v: Vec<f64> = x.iter().map(|&xi| v0(xi)).collect();
    u[n] = 0.0;
    v[n] = 0.0;
    let dirichlet = params.fixed_end == FixedEnd::Dirichlet;
    if dirichlet {
        u[0] = 0.0;
        v[0] = 0.0;
    }
    // unknowns: 1..n-1 (Dirichlet) or 0..n-1 (Neumann, mirrored ghost w_{-1} = w_1)
    let start = if dirichlet { 1 } else { 0 };
    for _ in 0..steps {
        let ru = dt * params.d1 / (dx * dx);
        let rv = dt * params.d2 / (dx * dx);
        let mut bu: Vec<f64> = (start..n).map(|i| u[i] + dt * nl.h.value(v[i])).collect();
        let mut bv: Vec<f64> = (start..n).map(|i| v[i] + dt * nl.g.value(u[i])).collect();
        let fu = if dirichlet { -ru } else { -2.0 * ru };
        let fv = if dirichlet { -rv } else { -2.0 * rv };
        thomas(fu, -ru, 1.0 + 2.0 * ru + dt * params.a, -ru, &mut bu);
        thomas(fv, -rv, 1.0 + 2.0 * rv + dt * params.b, -rv, &mut bv);
        for (k, i) in (start..n).enumerate() {
            u[i] = bu[k];
            v[i] = bv[k];
        }
    }
    FixedDomain { x, u, v }
}
