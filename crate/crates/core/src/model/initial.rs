use std::f64::consts::PI;
use std::path::Path;

use super::{FixedEnd, ModelError};

/// Where the initial shapes came from.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSource {
    /// u0 = amp_u·ω, v0 = amp_v·ω with ω the principal mode of the fixed-end operator on [0, h0].
    Bump { amp_u: f64, amp_v: f64 },
    File(String),
}

/// Initial profiles (u0, v0) = τ·(ϑ₁, ϑ₂) sampled on a uniform grid over [0, h0].
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    x: Vec<f64>,
    shape_u: Vec<f64>,
    shape_v: Vec<f64>,
    pub tau: f64,
    pub source: InitialSource,
}

impl InitialData {
    pub fn bump(fixed_end: FixedEnd, h0: f64, amp_u: f64, amp_v: f64, samples: usize) -> Self {
        let samples = samples.max(3);
        let dx = h0 / (samples - 1) as f64;
        let x: Vec<f64> = (0..samples).map(|i| i as f64 * dx).collect();
        let mode = |xi: f64| match fixed_end {
            FixedEnd::Dirichlet => (PI * xi / h0).sin(),
            FixedEnd::Neumann => (PI * xi / (2.0 * h0)).cos(),
        };
        let mut omega: Vec<f64> = x.iter().map(|&xi| mode(xi)).collect();
        // exact zeros at the pinned ends
        omega[samples - 1] = 0.0;
        if fixed_end == FixedEnd::Dirichlet {
            omega[0] = 0.0;
        }
        Self {
            shape_u: omega.iter().map(|w| amp_u * w).collect(),
            shape_v: omega.iter().map(|w| amp_v * w).collect(),
            x,
            tau: 1.0,
            source: InitialSource::Bump { amp_u, amp_v },
        }
    }

    /// Uniform samples given directly (x must start at 0 and be uniformly spaced).
    pub fn from_samples(x: Vec<f64>, u0: Vec<f64>, v0: Vec<f64>, source: InitialSource) -> Result<Self, ModelError> {
        if x.len() < 3 || x.len() != u0.len() || x.len() != v0.len() {
            return Err(ModelError::InitialData("need ≥3 samples of equal length".into()));
        }
        if x[0].abs() > 1e-12 {
            return Err(ModelError::InitialData("x must start at 0".into()));
        }
        let dx = x[1] - x[0];
        if dx <= 0.0 {
            return Err(ModelError::InitialData("x must be increasing".into()));
        }
        for (i, w) in x.windows(2).enumerate() {
            if ((w[1] - w[0]) - dx).abs() > 1e-9 * dx.max(1.0) {
                return Err(ModelError::InitialData(format!(
                    "x must be uniformly spaced (row {})",
                    i + 2
                )));
            }
        }
        Ok(Self {
            x,
            shape_u: u0,
            shape_v: v0,
            tau: 1.0,
            source,
        })
    }

    /// CSV with columns `x,u0,v0` (header optional).
    pub fn from_csv(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::InitialData(format!("{}: {e}", path.display())))?;
        let (mut x, mut u, mut v) = (Vec::new(), Vec::new(), Vec::new());
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums: Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
            match nums {
                Ok(cols) if cols.len() == 3 => {
                    x.push(cols[0]);
                    u.push(cols[1]);
                    v.push(cols[2]);
                }
                Err(_) if x.is_empty() && lineno == 0 => continue,
                _ => {
                    return Err(ModelError::InitialData(format!(
                        "line {}: expected three numbers x,u0,v0",
                        lineno + 1
                    )))
                }
            }
        }
        Self::from_samples(x, u, v, InitialSource::File(path.display().to_string()))
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    /// Stretch the shapes onto [0, h0].
    pub fn rescaled(&self, h0: f64) -> Self {
        let s = h0 / self.h0();
        let mut out = self.clone();
        for xi in &mut out.x {
            *xi *= s;
        }
        out
    }

    pub fn h0(&self) -> f64 {
        *self.x.last().expect("nonempty grid")
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn spacing(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn u0(&self) -> Vec<f64> {
        self.shape_u.iter().map(|s| self.tau * s).collect()
    }

    pub fn v0(&self) -> Vec<f64> {
        self.shape_v.iter().map(|s| self.tau * s).collect()
    }

    pub fn sup_u(&self) -> f64 {
        self.tau * self.shape_u.iter().fold(0.0_f64, |m, v| m.max(*v))
    }

    pub fn sup_v(&self) -> f64 {
        self.tau * self.shape_v.iter().fold(0.0_f64, |m, v| m.max(*v))
    }

    fn interp(&self, shape: &[f64], x: f64) -> f64 {
        let h0 = self.h0();
        if x <= 0.0 {
            return self.tau * shape[0];
        }
        if x >= h0 {
            return self.tau * shape[shape.len() - 1];
        }
        let dx = self.spacing();
        let k = ((x / dx) as usize).min(shape.len() - 2);
        let t = (x - self.x[k]) / dx;
        self.tau * ((1.0 - t) * shape[k] + t * shape[k + 1])
    }

    pub fn u_at(&self, x: f64) -> f64 {
        self.interp(&self.shape_u, x)
    }

    pub fn v_at(&self, x: f64) -> f64 {
        self.interp(&self.shape_v, x)
    }

    /// Condition (I) on the sample grid. w'(0) uses the second-order one-sided stencil.
    pub fn check(&self, fixed_end: FixedEnd) -> Result<(), ModelError> {
        self.check_profile("u0", &self.u0(), fixed_end)?;
        self.check_profile("v0", &self.v0(), fixed_end)
    }

    fn check_profile(&self, name: &str, w: &[f64], fixed_end: FixedEnd) -> Result<(), ModelError> {
        let n = w.len();
        let dx = self.spacing();
        let scale = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let fail = |msg: String| Err(ModelError::InitialData(format!("{name}: {msg}")));
        if scale == 0.0 {
            return fail("identically zero".into());
        }
        let zero_tol = 1e-12 * scale;
        if w[n - 1].abs() > zero_tol {
            return fail(format!("w(h0) = {:e} ≠ 0", w[n - 1]));
        }
        let slope0 = (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * dx);
        match fixed_end {
            FixedEnd::Dirichlet => {
                if w[0].abs() > zero_tol {
                    return fail(format!("w(0) = {:e} ≠ 0", w[0]));
                }
                if let Some(i) = (1..n - 1).find(|&i| w[i] <= 0.0) {
                    return fail(format!("not positive at x = {}", self.x[i]));
                }
                if slope0 <= 0.0 {
                    return fail("w'(0) must be positive".into());
                }
            }
            FixedEnd::Neumann => {
                if let Some(i) = (0..n - 1).find(|&i| w[i] <= 0.0) {
                    return fail(format!("not positive at x = {}", self.x[i]));
                }
                if slope0.abs() > 1e-3 * scale / self.h0() {
                    return fail(format!("w'(0) = {slope0:e} ≠ 0"));
                }
            }
        }
        Ok(())
    }
}
