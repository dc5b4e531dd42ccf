//! Principal eigenvalue of the linearised cooperative system
//!
//! ```text
//! -d1 φ'' + a φ - H'(0) ψ = λ φ,   -d2 ψ'' + b ψ - G'(0) φ = λ ψ   on (0, l),
//! B[φ](0) = B[ψ](0) = φ(l) = ψ(l) = 0,
//! ```
//!
//! in closed form and through an independent finite-difference oracle, plus
//! the critical length l₀ where it changes sign.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::BandMatrix;
use crate::model::{reproduction_number, FixedEnd, ModelParams, NonlinearitySpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("interval length must be positive, got {0}")]
    BadLength(f64),
    #[error("oracle grid needs n ≥ 16, got {0}")]
    GridTooSmall(usize),
    #[error("inverse iteration did not converge after {iterations} iterations (shift {shift})")]
    NonConvergence { iterations: usize, shift: f64 },
    #[error("oracle eigenvector is not positive; the shift picked a non-principal mode")]
    NonPositiveEigenvector,
    #[error("R0 = {0} ≤ 1: no critical length")]
    NotSupercritical(f64),
    #[error("λ(l0) = {0:e} does not vanish")]
    Postcondition(f64),
}

/// Coefficients of the linearisation at (0, 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearCoeffs {
    pub d1: f64,
    pub d2: f64,
    pub a: f64,
    pub b: f64,
    pub h_prime0: f64,
    pub g_prime0: f64,
    pub fixed_end: FixedEnd,
}

impl LinearCoeffs {
    pub fn new(params: &ModelParams, nl: &NonlinearitySpec) -> Self {
        Self {
            d1: params.d1,
            d2: params.d2,
            a: params.a,
            b: params.b,
            h_prime0: nl.h_prime0(),
            g_prime0: nl.g_prime0(),
            fixed_end: params.fixed_end,
        }
    }

    pub fn r0(&self) -> f64 {
        self.h_prime0 * self.g_prime0 / (self.a * self.b)
    }

    /// Lower branch λ₋ of the 2×2 symbol at scalar eigenvalue ν.
    pub fn lambda_at_nu(&self, nu: f64) -> f64 {
        let p = self.d1 * nu + self.a;
        let q = self.d2 * nu + self.b;
        0.5 * (p + q - ((p - q).powi(2) + 4.0 * self.g_prime0 * self.h_prime0).sqrt())
    }

    pub fn lambda(&self, l: f64) -> f64 {
        self.lambda_at_nu(base_eigenvalue(self.fixed_end, l))
    }

    /// λ(∞) = ½(a + b − sqrt((a−b)² + 4G'(0)H'(0))).
    pub fn lambda_infinity(&self) -> f64 {
        self.lambda_at_nu(0.0)
    }

    pub fn critical_length(&self) -> Result<f64, SpectralError> {
        let r0 = self.r0();
        if !(r0 > 1.0) {
            return Err(SpectralError::NotSupercritical(r0));
        }
        let (d1, d2, a, b) = (self.d1, self.d2, self.a, self.b);
        let hg = self.h_prime0 * self.g_prime0;
        let disc = ((a * d2 - b * d1).powi(2) + 4.0 * d1 * d2 * hg).sqrt();
        let root = ((a * d2 + b * d1 + disc) / (2.0 * (hg - a * b))).sqrt();
        let l0 = match self.fixed_end {
            FixedEnd::Dirichlet => PI * root,
            FixedEnd::Neumann => 0.5 * PI * root,
        };
        let check = self.lambda(l0);
        let scale = self.a + self.b + hg.sqrt();
        if check.abs() > 1e-10 * scale.max(1.0) {
            return Err(SpectralError::Postcondition(check));
        }
        Ok(l0)
    }
}

/// ν₁ of -ω'' = νω on (0, l) with B[ω](0) = ω(l) = 0.
pub fn base_eigenvalue(fixed_end: FixedEnd, l: f64) -> f64 {
    match fixed_end {
        FixedEnd::Dirichlet => PI * PI / (l * l),
        FixedEnd::Neumann => PI * PI / (4.0 * l * l),
    }
}

fn base_mode(fixed_end: FixedEnd, l: f64, x: f64) -> f64 {
    match fixed_end {
        FixedEnd::Dirichlet => (PI * x / l).sin(),
        FixedEnd::Neumann => (PI * x / (2.0 * l)).cos(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenResult {
    pub lambda: f64,
    pub nu1: f64,
    pub p: f64,
    pub l: f64,
    pub fixed_end: FixedEnd,
    #[serde(skip)]
    pub x: Vec<f64>,
    #[serde(skip)]
    pub phi: Vec<f64>,
    #[serde(skip)]
    pub psi: Vec<f64>,
    #[serde(skip)]
    pub coeffs: LinearCoeffs,
}

impl EigenResult {
    /// Sup-norm defect of the eigen-system at the samples, using ω'' = -ν₁ω.
    pub fn residual(&self) -> f64 {
        let c = &self.coeffs;
        let mut worst = 0.0_f64;
        for (&phi, &psi) in self.phi.iter().zip(&self.psi) {
            let phi_xx = -self.nu1 * phi;
            let psi_xx = -self.nu1 * psi;
            let r1 = -c.d1 * phi_xx + c.a * phi - c.h_prime0 * psi - self.lambda * phi;
            let r2 = -c.d2 * psi_xx + c.b * psi - c.g_prime0 * phi - self.lambda * psi;
            worst = worst.max(r1.abs()).max(r2.abs());
        }
        worst
    }
}

/// Closed-form principal eigenpair with eigenfunctions on 1001 samples.
pub fn lambda_closed_form(params: &ModelParams, nl: &NonlinearitySpec, l: f64) -> Result<EigenResult, SpectralError> {
    eigenpair(&LinearCoeffs::new(params, nl), l, 1001)
}

pub fn eigenpair(coeffs: &LinearCoeffs, l: f64, samples: usize) -> Result<EigenResult, SpectralError> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(SpectralError::BadLength(l));
    }
    let samples = samples.max(2);
    let nu1 = base_eigenvalue(coeffs.fixed_end, l);
    let lambda = coeffs.lambda_at_nu(nu1);
    let p = coeffs.h_prime0 / (coeffs.d1 * nu1 + coeffs.a - lambda);
    let x: Vec<f64> = (0..samples).map(|i| l * i as f64 / (samples - 1) as f64).collect();
    let mut psi: Vec<f64> = x.iter().map(|&xi| base_mode(coeffs.fixed_end, l, xi)).collect();
    psi[samples - 1] = 0.0;
    if coeffs.fixed_end == FixedEnd::Dirichlet {
        psi[0] = 0.0;
    }
    let phi = psi.iter().map(|w| p * w).collect();
    Ok(EigenResult {
        lambda,
        nu1,
        p,
        l,
        fixed_end: coeffs.fixed_end,
        x,
        phi,
        psi,
        coeffs: *coeffs,
    })
}

/// l₀ with λ(l₀) = 0; requires R₀ > 1.
pub fn critical_length(params: &ModelParams, nl: &NonlinearitySpec) -> Result<f64, SpectralError> {
    let r0 = reproduction_number(nl, params);
    if !(r0 > 1.0) {
        return Err(SpectralError::NotSupercritical(r0));
    }
    LinearCoeffs::new(params, nl).critical_length()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteEigen {
    pub lambda: f64,
    pub iterations: usize,
    pub shift: f64,
    /// Interleaved (u, v) nodal eigenvector, positive, unit Euclidean norm.
    pub vector: Vec<f64>,
}

/// Smallest eigenvalue of the second-order finite-difference discretisation on n intervals.
pub fn lambda_discrete_oracle(params: &ModelParams, nl: &NonlinearitySpec, l: f64, n: usize) -> Result<f64, SpectralError> {
    discrete_eigen(&LinearCoeffs::new(params, nl), l, n).map(|e| e.lambda)
}

/// Assemble the block operator with (u_j, v_j) interleaved, so the matrix is pentadiagonal.
/// Dirichlet nodes are eliminated; the Neumann end uses a ghost mirror u₋₁ = u₁.
pub fn assemble_operator(coeffs: &LinearCoeffs, l: f64, n: usize) -> BandMatrix {
    let dx = l / n as f64;
    let inv = 1.0 / (dx * dx);
    let (first, nodes) = match coeffs.fixed_end {
        FixedEnd::Dirichlet => (1usize, n - 1),
        FixedEnd::Neumann => (0usize, n),
    };
    let dim = 2 * nodes;
    let mut m = BandMatrix::zeros(dim, 2, 2);
    for k in 0..nodes {
        let j = first + k;
        for (comp, d, decay, cross) in [
            (0usize, coeffs.d1, coeffs.a, coeffs.h_prime0),
            (1usize, coeffs.d2, coeffs.b, coeffs.g_prime0),
        ] {
            let row = 2 * k + comp;
            m.set(row, row, 2.0 * d * inv + decay);
            // partner component at the same node
            let partner = 2 * k + (1 - comp);
            m.set(row, partner, -cross);
            if j == 0 {
                m.set(row, row + 2, -2.0 * d * inv);
                continue;
            }
            if k > 0 {
                m.set(row, row - 2, -d * inv);
            }
            if k + 1 < nodes {
                m.set(row, row + 2, -d * inv);
            }
        }
    }
    m
}

const MAX_INVERSE_ITERATIONS: usize = 2000;

pub fn discrete_eigen(coeffs: &LinearCoeffs, l: f64, n: usize) -> Result<DiscreteEigen, SpectralError> {
    if n < 16 {
        return Err(SpectralError::GridTooSmall(n));
    }
    if !(l > 0.0) {
        return Err(SpectralError::BadLength(l));
    }
    let guess = coeffs.lambda(l);
    let mut last_err = SpectralError::NonConvergence {
        iterations: 0,
        shift: guess,
    };
    // retry with the spectrum shifted further away
    for offset in [0.1, 0.5, 2.0] {
        let shift = guess - offset * (1.0 + guess.abs());
        match inverse_iteration(coeffs, l, n, shift) {
            Ok(r) => return Ok(r),
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

fn inverse_iteration(coeffs: &LinearCoeffs, l: f64, n: usize, shift: f64) -> Result<DiscreteEigen, SpectralError> {
    let mut m = assemble_operator(coeffs, l, n);
    let dim = m.dim();
    for i in 0..dim {
        m.add(i, i, -shift);
    }
    let lu = m.factorize().ok_or(SpectralError::NonConvergence { iterations: 0, shift })?;
    let mut x = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut y = vec![0.0; dim];
    let mut estimate = f64::NAN;
    let mut settled = 0;
    for it in 1..=MAX_INVERSE_ITERATIONS {
        y.copy_from_slice(&x);
        lu.solve_in_place(&mut y);
        let xy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let next = shift + 1.0 / xy;
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let sign = if y.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = sign * yi / norm;
        }
        if (next - estimate).abs() <= 4.0 * f64::EPSILON * (1.0 + next.abs()) {
            settled += 1;
            if settled >= 3 {
                if x.iter().any(|&v| !(v > 0.0)) {
                    return Err(SpectralError::NonPositiveEigenvector);
                }
                return Ok(DiscreteEigen {
                    lambda: next,
                    iterations: it,
                    shift,
                    vector: x,
                });
            }
        } else {
            settled = 0;
        }
        estimate = next;
    }
    Err(SpectralError::NonConvergence {
        iterations: MAX_INVERSE_ITERATIONS,
        shift,
    })
}
