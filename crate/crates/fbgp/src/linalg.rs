//! Dense symmetric linear algebra on small matrices.
//!
//! The GP works with kernel matrices of at most a few hundred rows, so a
//! straightforward Cholesky with explicit triangular solves is both fast
//! enough and keeps the jitter-escalation policy under our control.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a jittered SPD matrix.
#[derive(Debug)]
pub(crate) struct CholeskyFactor {
    l: Array2<f64>,
    /// Jitter that was added to the diagonal to make the factorization succeed.
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) jitter: f64,
}

/// Plain Cholesky; `None` when the matrix is not numerically positive definite.
fn cholesky(a: &Array2<f64>, jitter: f64) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            if i == j {
                sum += jitter;
            }
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Some(l)
}

impl CholeskyFactor {
    /// Factor `a`, escalating diagonal jitter from 0 through
    /// `1e-8..=1e-2 × mean(diag)` in decade steps before giving up.
    pub(crate) fn with_jitter(a: &Array2<f64>) -> Result<Self> {
        let n = a.nrows();
        debug_assert_eq!(n, a.ncols());
        let mean_diag = (0..n).map(|i| a[[i, i]]).sum::<f64>() / n as f64;
        // Kernel matrices have unit-plus-noise diagonals; the abs/floor only
        // guards pathological inputs so the ladder still terminates.
        let mean_diag = mean_diag.abs().max(1e-12);
        let mut jitter = 0.0;
        let mut scale = 1e-8;
        loop {
            if let Some(l) = cholesky(a, jitter) {
                return Ok(CholeskyFactor { l, jitter });
            }
            if scale > 1e-2 {
                return Err(Error::Numerical {
                    what: "Cholesky factorization failed".into(),
                    attempted_jitter: jitter,
                });
            }
            jitter = scale * mean_diag;
            scale *= 10.0;
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// log|A| from the factor diagonal.
    pub(crate) fn log_det(&self) -> f64 {
        2.0 * self.l.diag().iter().map(|v| v.ln()).sum::<f64>()
    }

    /// Solve L x = b (forward substitution).
    pub(crate) fn solve_lower(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.dim();
        let mut x = b.clone();
        for i in 0..n {
            for k in 0..i {
                let v = x[k];
                x[i] -= self.l[[i, k]] * v;
            }
            x[i] /= self.l[[i, i]];
        }
        x
    }

    /// Solve Lᵀ x = b (back substitution).
    pub(crate) fn solve_lower_transpose(&self, b: &Array1<f64>) -> Array1<f64> {
        let n = self.dim();
        let mut x = b.clone();
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let v = x[k];
                x[i] -= self.l[[k, i]] * v;
            }
            x[i] /= self.l[[i, i]];
        }
        x
    }

    /// Solve A x = b via the two triangular solves.
    pub(crate) fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        self.solve_lower_transpose(&self.solve_lower(b))
    }

    /// Explicit A⁻¹, column by column.
    pub(crate) fn inverse(&self) -> Array2<f64> {
        let n = self.dim();
        let mut inv = Array2::<f64>::zeros((n, n));
        let mut e = Array1::<f64>::zeros(n);
        for j in 0..n {
            e.fill(0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            inv.column_mut(j).assign(&col);
        }
        inv
    }
}
