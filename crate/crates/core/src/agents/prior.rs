//! Kronecker-structured Gaussian prior `β ~ N(μ1, M ⊗ M)` with
//! `M = aI + bJ` (`J` the all-ones matrix).
//!
//! The covariance takes three values: `(a+b)²` on the diagonal, `(a+b)b`
//! between coefficients sharing exactly one of (history item, action), and
//! `b²` otherwise. Both `Σ` and `Σ⁻¹` are applied through the Kronecker
//! factors, never as `K² × K²` matrices.

use alloc::vec::Vec;

use super::FitError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub mu: f64,
    pub a: f64,
    pub b: f64,
    pub num_items: usize,
}

impl PriorSpec {
    pub fn new(mu: f64, a: f64, b: f64, num_items: usize) -> Result<Self, FitError> {
        let prior = Self {
            mu,
            a,
            b,
            num_items,
        };
        prior.validate()?;
        Ok(prior)
    }

    /// `μ = -6`, `a = b = 0.01`.
    pub fn recommended(num_items: usize) -> Self {
        Self {
            mu: -6.0,
            a: 0.01,
            b: 0.01,
            num_items,
        }
    }

    pub fn validate(&self) -> Result<(), FitError> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(FitError::InvalidPrior("a must be positive"));
        }
        if !(self.b >= 0.0) || !self.b.is_finite() {
            return Err(FitError::InvalidPrior("b must be non-negative"));
        }
        if !self.mu.is_finite() {
            return Err(FitError::InvalidPrior("mu must be finite"));
        }
        if self.num_items == 0 {
            return Err(FitError::InvalidPrior("num_items must be positive"));
        }
        Ok(())
    }

    /// The three distinct covariance entries: diagonal, one index shared,
    /// nothing shared.
    pub fn covariance_levels(&self) -> (f64, f64, f64) {
        let d = self.a + self.b;
        (d * d, d * self.b, self.b * self.b)
    }

    /// Covariance between coefficients `(i, j)` and `(k, l)`.
    pub fn covariance_entry(&self, (i, j): (usize, usize), (k, l): (usize, usize)) -> f64 {
        let m = |x: usize, y: usize| if x == y { self.a + self.b } else { self.b };
        m(i, k) * m(j, l)
    }

    fn check_len(&self, v: &[f64]) -> Result<(), FitError> {
        let expected = self.num_items * self.num_items;
        if v.len() != expected {
            return Err(FitError::Dimension {
                expected,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `Σv = (M ⊗ M)v`.
    pub fn covariance_apply(&self, v: &[f64]) -> Result<Vec<f64>, FitError> {
        self.validate()?;
        self.check_len(v)?;
        // Viewing v as the K×K matrix V, (M ⊗ M)v = vec(M V M).
        // (MVM)_ij = a²V_ij + ab(R_i + C_j) + b²T
        let (rows, cols, total) = sums(v, self.num_items);
        let (a, b) = (self.a, self.b);
        let k = self.num_items;
        Ok((0..k * k)
            .map(|idx| {
                let (i, j) = (idx / k, idx % k);
                a * a * v[idx] + a * b * (rows[i] + cols[j]) + b * b * total
            })
            .collect())
    }

    /// `Σ⁻¹v` using `M⁻¹ = (I - cJ)/a` with `c = b / (a + Kb)`.
    pub fn precision_apply(&self, v: &[f64]) -> Result<Vec<f64>, FitError> {
        self.validate()?;
        self.check_len(v)?;
        let k = self.num_items;
        let (rows, cols, total) = sums(v, k);
        let c = self.b / (self.a + k as f64 * self.b);
        let scale = 1.0 / (self.a * self.a);
        Ok((0..k * k)
            .map(|idx| {
                let (i, j) = (idx / k, idx % k);
                scale * (v[idx] - c * (rows[i] + cols[j]) + c * c * total)
            })
            .collect())
    }

    /// `(β - μ1)ᵀ Σ⁻¹ (β - μ1)`, together with `Σ⁻¹(β - μ1)`.
    pub(crate) fn mahalanobis(&self, beta: &[f64]) -> Result<(f64, Vec<f64>), FitError> {
        let delta: Vec<f64> = beta.iter().map(|b| b - self.mu).collect();
        let prec = self.precision_apply(&delta)?;
        let quad = delta.iter().zip(&prec).map(|(d, p)| d * p).sum();
        Ok((quad, prec))
    }
}

/// Row sums, column sums and total of `v` viewed as a `K × K` matrix.
fn sums(v: &[f64], k: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let mut rows = alloc::vec![0.0; k];
    let mut cols = alloc::vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            let x = v[i * k + j];
            rows[i] += x;
            cols[j] += x;
        }
    }
    let total = rows.iter().sum();
    (rows, cols, total)
}

/// `Σ⁻¹v` for the prior.
pub fn prior_precision_apply(prior: &PriorSpec, v: &[f64]) -> Result<Vec<f64>, FitError> {
    prior.precision_apply(v)
}
