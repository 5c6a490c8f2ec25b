//! Symmetric tridiagonal matrices: products, linear solves and Sturm counts.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    /// Main diagonal, length `n`.
    pub diag: Vec<f64>,
    /// Sub/super diagonal, length `n - 1`.
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::Parameter(format!(
                "tridiagonal shape mismatch: {} diagonal, {} off-diagonal",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    pub fn zeros(n: usize) -> Self {
        Self { diag: vec![0.0; n], off: vec![0.0; n.saturating_sub(1)] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        Self {
            diag: self.diag.iter().zip(&other.diag).map(|(a, b)| a + s * b).collect(),
            off: self.off.iter().zip(&other.off).map(|(a, b)| a + s * b).collect(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    pub fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matvec(x).iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// Pivots of the `LDLᵀ` factorization (no pivoting).
    pub fn pivots(&self) -> Vec<f64> {
        let n = self.len();
        let mut d = Vec::with_capacity(n);
        let mut prev: f64 = self.diag[0];
        d.push(prev);
        for i in 1..n {
            let b = self.off[i - 1];
            let cur = self.diag[i] - b * b / guard(prev);
            d.push(cur);
            prev = cur;
        }
        d
    }

    /// Number of negative pivots of `LDLᵀ`, i.e. the negative inertia.
    pub fn negative_count(&self) -> usize {
        self.pivots().iter().filter(|&&p| p < 0.0).count()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.pivots().iter().all(|&p| p > 0.0)
    }

    /// Solves `self · x = rhs` by the Thomas algorithm.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::Parameter("right-hand side length mismatch".into()));
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Degenerate("singular tridiagonal system".into()));
        }
        if n > 1 {
            c[0] = self.off[0] / denom;
        }
        d[0] = rhs[0] / denom;
        for i in 1..n {
            let b = self.off[i - 1];
            denom = self.diag[i] - b * c[i - 1];
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::Degenerate("singular tridiagonal system".into()));
            }
            if i + 1 < n {
                c[i] = self.off[i] / denom;
            }
            d[i] = (rhs[i] - b * d[i - 1]) / denom;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}

/// Replaces an exact zero pivot by a tiny positive number (standard Sturm-sequence convention).
fn guard(p: f64) -> f64 {
    if p == 0.0 {
        f64::MIN_POSITIVE.sqrt()
    } else {
        p
    }
}

/// Number of generalized eigenvalues of `(K, M)` below `sigma` (`M` positive definite).
pub fn count_below(k: &SymTridiag, m: &SymTridiag, sigma: f64) -> usize {
    k.axpy(-sigma, m).negative_count()
}
