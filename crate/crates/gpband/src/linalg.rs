//! Thin wrappers over LAPACK for the symmetric positive-definite systems
//! used by the posterior and the band samplers.

use crate::error::{Error, Result};
use ndarray::prelude::*;
use ndarray_linalg::{Cholesky, Eigh, SolveTriangular, UPLO};

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: Array2<f64>,
}

impl CholeskyFactor {
    pub fn new(matrix: &Array2<f64>) -> Result<Self> {
        let lower = matrix
            .cholesky(UPLO::Lower)
            .map_err(|e| Error::Factorization(format!("cholesky: {e}")))?;
        Ok(Self { lower })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &Array2<f64> {
        &self.lower
    }

    /// Solve A x = b through the two triangular systems.
    pub fn solve_vec(&self, b: &Array1<f64>) -> Result<Array1<f64>> {
        let y = self
            .lower
            .solve_triangular(UPLO::Lower, ndarray_linalg::Diag::NonUnit, b)
            .map_err(|e| Error::Factorization(format!("forward solve: {e}")))?;
        self.lower
            .t()
            .solve_triangular(UPLO::Upper, ndarray_linalg::Diag::NonUnit, &y)
            .map_err(|e| Error::Factorization(format!("backward solve: {e}")))
    }

    /// Solve L y = B column-wise (forward substitution only).
    pub fn forward_solve_mat(&self, b: &Array2<f64>) -> Result<Array2<f64>> {
        self.lower
            .solve_triangular(UPLO::Lower, ndarray_linalg::Diag::NonUnit, b)
            .map_err(|e| Error::Factorization(format!("forward solve: {e}")))
    }

    /// L * x for a vector x.
    pub fn lower_mul(&self, x: &Array1<f64>) -> Array1<f64> {
        self.lower.dot(x)
    }
}

/// Eigenvalues of a symmetric matrix, ascending. Test-oracle use.
pub fn symmetric_eigenvalues(matrix: &Array2<f64>) -> Result<Array1<f64>> {
    let (vals, _) = matrix
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Factorization(format!("eigh: {e}")))?;
    Ok(vals)
}

/// Cholesky with escalating diagonal jitter.
///
/// Starts from `initial_jitter` (already applied by the caller or zero) and
/// multiplies by 10 up to `max_steps` times, relative to the largest diagonal
/// entry. Returns the factor together with the jitter actually applied.
pub fn cholesky_with_jitter(
    matrix: &Array2<f64>,
    initial_rel_jitter: f64,
    max_rel_jitter: f64,
) -> Result<(CholeskyFactor, f64)> {
    let max_diag = matrix
        .diag()
        .iter()
        .fold(0.0_f64, |acc, &d| acc.max(d.abs()));
    let scale = if max_diag > 0.0 { max_diag } else { 1.0 };

    let mut rel = initial_rel_jitter;
    loop {
        let mut work = matrix.clone();
        if rel > 0.0 {
            let jitter = rel * scale;
            for i in 0..work.nrows() {
                work[[i, i]] += jitter;
            }
        }
        match CholeskyFactor::new(&work) {
            Ok(f) => return Ok((f, rel * scale)),
            Err(_) if rel == 0.0 => rel = 1e-10,
            Err(_) if rel * 10.0 <= max_rel_jitter => rel *= 10.0,
            Err(e) => return Err(e),
        }
    }
}
