//! Small dense-free linear solvers used by the discretisations.
//!
//! Every matrix assembled in this crate is a (possibly nonsymmetric)
//! nonsingular M-matrix, so elimination without pivoting is stable.

/// Tridiagonal system `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// `lower[0]` and `upper[n-1]` are ignored.
#[derive(Debug, Clone, Default)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    scratch: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Thomas algorithm. Overwrites `rhs` with the solution.
    pub fn solve_in_place(&mut self, rhs: &mut [f64]) {
        let n = self.diag.len();
        assert_eq!(rhs.len(), n, "rhs length mismatch");
        if n == 0 {
            return;
        }
        let c = &mut self.scratch;
        c.resize(n, 0.0);
        let mut beta = self.diag[0];
        c[0] = self.upper[0] / beta;
        rhs[0] /= beta;
        for i in 1..n {
            beta = self.diag[i] - self.lower[i] * c[i - 1];
            c[i] = if i + 1 < n { self.upper[i] / beta } else { 0.0 };
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) / beta;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= c[i] * rhs[i + 1];
        }
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
    }
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals, row-major band storage.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    // row i holds columns i-kl ..= i+ku at offsets 0 ..= kl+ku
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn offset(&self, row: usize, col: usize) -> Option<usize> {
        if col + self.kl < row || col > row + self.ku || row >= self.n || col >= self.n {
            return None;
        }
        Some(row * (self.kl + self.ku + 1) + (col + self.kl - row))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.offset(row, col).map_or(0.0, |k| self.data[k])
    }

    /// Panics if `(row, col)` lies outside the band.
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let k = self
            .offset(row, col)
            .unwrap_or_else(|| panic!("({row}, {col}) outside band"));
        self.data[k] = value;
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        let k = self
            .offset(row, col)
            .unwrap_or_else(|| panic!("({row}, {col}) outside band"));
        self.data[k] += value;
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            *yi = (lo..=hi).map(|j| self.get(i, j) * x[j]).sum();
        }
    }

    /// In-place LU without pivoting. Returns `None` on a zero pivot.
    pub fn factorize(mut self) -> Option<BandLu> {
        let n = self.n;
        for k in 0..n {
            let pivot = self.get(k, k);
            if pivot == 0.0 || !pivot.is_finite() {
                return None;
            }
            let row_end = (k + self.kl).min(n - 1);
            let col_end = (k + self.ku).min(n - 1);
            for i in k + 1..=row_end {
                let factor = self.get(i, k) / pivot;
                self.set(i, k, factor);
                for j in k + 1..=col_end {
                    let v = self.get(k, j);
                    if v != 0.0 {
                        self.add(i, j, -factor * v);
                    }
                }
            }
        }
        Some(BandLu { lu: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
}

impl BandLu {
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let m = &self.lu;
        let n = m.n;
        for i in 0..n {
            let lo = i.saturating_sub(m.kl);
            let s: f64 = (lo..i).map(|j| m.get(i, j) * rhs[j]).sum();
            rhs[i] -= s;
        }
        for i in (0..n).rev() {
            let hi = (i + m.ku).min(n - 1);
            let s: f64 = (i + 1..=hi).map(|j| m.get(i, j) * rhs[j]).sum();
            rhs[i] = (rhs[i] - s) / m.get(i, i);
        }
    }
}

pub fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn sup_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
}

/// Composite trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], spacing: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            spacing * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Composite Simpson rule on a uniform grid; an odd interval count closes
/// with Simpson's 3/8 rule on the last three intervals.
pub fn simpson(values: &[f64], spacing: f64) -> f64 {
    let intervals = values.len().saturating_sub(1);
    match intervals {
        0 => 0.0,
        1 => 0.5 * spacing * (values[0] + values[1]),
        2 => spacing / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        3 => 3.0 * spacing / 8.0 * (values[0] + 3.0 * values[1] + 3.0 * values[2] + values[3]),
        _ => {
            let even = if intervals.is_multiple_of(2) { intervals } else { intervals - 3 };
            let mut s = values[0] + values[even];
            for (i, v) in values.iter().enumerate().take(even).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = spacing / 3.0 * s;
            if even != intervals {
                let t = &values[even..];
                total += 3.0 * spacing / 8.0 * (t[0] + 3.0 * t[1] + 3.0 * t[2] + t[3]);
            }
            total
        }
    }
}
