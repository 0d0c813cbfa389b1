//! Symmetric covariance matrices, Cholesky factors and Gaussian log-densities.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative size of the single diagonal jitter applied when a first
/// factorization attempt fails: `JITTER_SCALE * trace / dim`.
pub const JITTER_SCALE: f64 = 1e-12;

/// A symmetric positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    inner: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Wraps `m` after checking squareness and symmetry (1e-12 relative).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), actual: m.ncols() });
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidParameter {
                        name: "covariance",
                        reason: format!("not symmetric at ({i}, {j})"),
                    });
                }
            }
        }
        Ok(Self { inner: m })
    }

    pub(crate) fn from_symmetric_unchecked(m: DMatrix<f64>) -> Self {
        Self { inner: m }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { inner: DMatrix::zeros(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &CovarianceMatrix, factor: f64) -> Self {
        Self { inner: &self.inner + &other.inner * factor }
    }

    /// Adds `diag` to the diagonal.
    pub fn plus_diagonal(&self, diag: &[f64]) -> Self {
        let mut m = self.inner.clone();
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] += d;
        }
        Self { inner: m }
    }

    /// Cholesky factor with the jitter policy: one retry with
    /// `JITTER_SCALE * trace / dim` added to the diagonal, then a hard error.
    pub fn factor(&self, context: &'static str) -> Result<CholeskyFactor> {
        let dim = self.dim();
        if let Some(c) = Cholesky::new(self.inner.clone()) {
            return Ok(CholeskyFactor { chol: c });
        }
        let jitter = JITTER_SCALE * self.inner.trace() / dim.max(1) as f64;
        let mut m = self.inner.clone();
        for i in 0..dim {
            m[(i, i)] += jitter;
        }
        Cholesky::new(m).map(|chol| CholeskyFactor { chol }).ok_or(Error::Factorization { context, dimension: dim })
    }
}

/// Lower-triangular Cholesky factor of a covariance matrix.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    chol: Cholesky<f64, Dyn>,
}

impl CholeskyFactor {
    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// `v^T Σ^{-1} v` via one triangular solve.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let mut w = DVector::from_column_slice(v);
        self.chol.l_dirty().solve_lower_triangular_mut(&mut w);
        w.norm_squared()
    }

    /// Log-density of `N(mean, Σ)` at `x`, `mean = 0` when `None`.
    pub fn log_density(&self, x: &[f64], mean: Option<&[f64]>) -> f64 {
        let n = x.len() as f64;
        let q = match mean {
            Some(m) => {
                let d: Vec<f64> = x.iter().zip(m).map(|(a, b)| a - b).collect();
                self.quad_form(&d)
            }
            None => self.quad_form(x),
        };
        -0.5 * (q + self.log_det() + n * (2.0 * std::f64::consts::PI).ln())
    }

    /// `L z` for a standard normal vector `z`, i.e. a draw from `N(0, Σ)`.
    pub fn correlate(&self, z: &[f64]) -> Vec<f64> {
        let l = self.chol.l_dirty();
        let n = z.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..=i {
                s += l[(i, j)] * z[j];
            }
            out[i] = s;
        }
        out
    }
}

/// Log-density of independent `N(mean_i, var_i)` coordinates.
pub fn diagonal_log_density(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    x.iter().zip(mean).zip(var).map(|((x, m), v)| -0.5 * ((x - m) * (x - m) / v + v.ln() + ln2pi)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_det_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0, 0.5]));
        let c = CovarianceMatrix::new(m).unwrap().factor("test").unwrap();
        assert!((c.log_det() - 3.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(CovarianceMatrix::new(m).is_err());
    }

    #[test]
    fn jitter_rescues_rank_deficient() {
        // rank-one PSD matrix: plain Cholesky fails, jitter succeeds
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let m = &v * v.transpose();
        let c = CovarianceMatrix::new(m).unwrap();
        assert!(c.factor("rank one").is_ok());
    }

    #[test]
    fn indefinite_is_hard_error() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let c = CovarianceMatrix::new(m).unwrap();
        assert!(matches!(c.factor("indef"), Err(Error::Factorization { .. })));
    }

    #[test]
    fn density_matches_diagonal_route() {
        let var = [0.5, 2.0, 1.5];
        let m = DMatrix::from_diagonal(&DVector::from_column_slice(&var));
        let c = CovarianceMatrix::new(m).unwrap().factor("t").unwrap();
        let x = [0.3, -1.0, 2.0];
        let mu = [0.1, 0.0, -0.5];
        let a = c.log_density(&x, Some(&mu));
        let b = diagonal_log_density(&x, &mu, &var);
        assert!((a - b).abs() < 1e-12);
    }
}
