//! Coupling functions H (v → u-source) and G (u → v-source).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// A scalar coupling z ↦ F(z) with analytic first and second derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    /// α z / (1 + β z)
    Monod { alpha: f64, beta: f64 },
    /// c z. Concavity degenerates (F'' ≡ 0).
    Linear { slope: f64 },
    /// Natural cubic spline through user samples, extended linearly past the last knot.
    Tabulated(CubicSpline),
}

impl Coupling {
    pub fn monod(alpha: f64, beta: f64) -> Self {
        Coupling::Monod { alpha, beta }
    }

    pub fn linear(slope: f64) -> Self {
        Coupling::Linear { slope }
    }

    pub fn value(&self, z: f64) -> f64 {
        match self {
            Coupling::Monod { alpha, beta } => alpha * z / (1.0 + beta * z),
            Coupling::Linear { slope } => slope * z,
            Coupling::Tabulated(s) => s.value(z),
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        match self {
            Coupling::Monod { alpha, beta } => {
                let d = 1.0 + beta * z;
                alpha / (d * d)
            }
            Coupling::Linear { slope } => *slope,
            Coupling::Tabulated(s) => s.derivative(z),
        }
    }

    pub fn second_derivative(&self, z: f64) -> f64 {
        match self {
            Coupling::Monod { alpha, beta } => {
                let d = 1.0 + beta * z;
                -2.0 * alpha * beta / (d * d * d)
            }
            Coupling::Linear { .. } => 0.0,
            Coupling::Tabulated(s) => s.second_derivative(z),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Coupling::Monod { .. } => "monod",
            Coupling::Linear { .. } => "linear",
            Coupling::Tabulated(_) => "tabulated",
        }
    }
}

/// The pair (H, G) driving the reaction terms.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySpec {
    pub h: Coupling,
    pub g: Coupling,
}

impl NonlinearitySpec {
    pub fn new(h: Coupling, g: Coupling) -> Self {
        Self { h, g }
    }

    /// H(v) = α₁v/(1+β₁v), G(u) = α₂u/(1+β₂u).
    pub fn monod(alpha1: f64, beta1: f64, alpha2: f64, beta2: f64) -> Self {
        Self::new(Coupling::monod(alpha1, beta1), Coupling::monod(alpha2, beta2))
    }

    pub fn h_prime0(&self) -> f64 {
        self.h.derivative(0.0)
    }

    pub fn g_prime0(&self) -> f64 {
        self.g.derivative(0.0)
    }
}

/// Natural cubic spline on strictly increasing knots.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    // second derivatives at the knots
    moments: Vec<f64>,
}

impl CubicSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self, ModelError> {
        if knots.len() != values.len() {
            return Err(ModelError::Table("knot/value length mismatch".into()));
        }
        if knots.len() < 3 {
            return Err(ModelError::Table("need at least 3 samples".into()));
        }
        if let Some(i) = knots.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(ModelError::Table(format!(
                "z must be strictly increasing (row {})",
                i + 2
            )));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(ModelError::Table("non-finite sample".into()));
        }
        let n = knots.len();
        let mut moments = vec![0.0; n];
        // tridiagonal system for interior moments, natural ends
        let m = n - 2;
        let mut sys = crate::linalg::Tridiagonal::new(m);
        let mut rhs = vec![0.0; m];
        for i in 1..n - 1 {
            let h0 = knots[i] - knots[i - 1];
            let h1 = knots[i + 1] - knots[i];
            sys.lower[i - 1] = h0;
            sys.diag[i - 1] = 2.0 * (h0 + h1);
            sys.upper[i - 1] = h1;
            rhs[i - 1] = 6.0 * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0);
        }
        sys.solve_in_place(&mut rhs);
        moments[1..n - 1].copy_from_slice(&rhs);
        Ok(Self {
            knots,
            values,
            moments,
        })
    }

    /// Two-column CSV `z,value`; a non-numeric first row is treated as a header.
    pub fn from_csv(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Table(format!("{}: {e}", path.display())))?;
        let mut knots = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 2 {
                return Err(ModelError::Table(format!(
                    "line {}: expected 2 columns",
                    lineno + 1
                )));
            }
            match (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
                (Ok(z), Ok(v)) => {
                    knots.push(z);
                    values.push(v);
                }
                _ if knots.is_empty() && lineno == 0 => continue,
                _ => {
                    return Err(ModelError::Table(format!(
                        "line {}: not a number",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(knots, values)
    }

    fn segment(&self, z: f64) -> usize {
        let n = self.knots.len();
        match self
            .knots
            .binary_search_by(|k| k.partial_cmp(&z).expect("finite knots"))
        {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    fn end_slope(&self) -> f64 {
        let n = self.knots.len();
        let h = self.knots[n - 1] - self.knots[n - 2];
        (self.values[n - 1] - self.values[n - 2]) / h + h * (self.moments[n - 2] + 2.0 * self.moments[n - 1]) / 6.0
    }

    pub fn value(&self, z: f64) -> f64 {
        let n = self.knots.len();
        if z > self.knots[n - 1] {
            return self.values[n - 1] + self.end_slope() * (z - self.knots[n - 1]);
        }
        let i = self.segment(z);
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let h = x1 - x0;
        let (a, b) = ((x1 - z) / h, (z - x0) / h);
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.moments[i] + (b * b * b - b) * self.moments[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, z: f64) -> f64 {
        let n = self.knots.len();
        if z > self.knots[n - 1] {
            return self.end_slope();
        }
        let i = self.segment(z);
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let h = x1 - x0;
        let (a, b) = ((x1 - z) / h, (z - x0) / h);
        (self.values[i + 1] - self.values[i]) / h
            + ((1.0 - 3.0 * a * a) * self.moments[i] + (3.0 * b * b - 1.0) * self.moments[i + 1]) * h / 6.0
    }

    pub fn second_derivative(&self, z: f64) -> f64 {
        let n = self.knots.len();
        if z > self.knots[n - 1] {
            return 0.0;
        }
        let i = self.segment(z);
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let h = x1 - x0;
        ((x1 - z) * self.moments[i] + (z - x0) * self.moments[i + 1]) / h
    }
}

/// Serializable description of a coupling; tabulated entries reference a CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CouplingSpec {
    Monod { alpha: f64, beta: f64 },
    Linear { slope: f64 },
    Tabulated { path: String },
}

impl CouplingSpec {
    /// Relative table paths resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<Coupling, ModelError> {
        Ok(match self {
            CouplingSpec::Monod { alpha, beta } => Coupling::monod(*alpha, *beta),
            CouplingSpec::Linear { slope } => Coupling::linear(*slope),
            CouplingSpec::Tabulated { path } => {
                let p = Path::new(path);
                let full = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.to_path_buf(),
                };
                Coupling::Tabulated(CubicSpline::from_csv(&full)?)
            }
        })
    }
}
