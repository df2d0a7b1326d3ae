//! Dense factorization for the coarsest level.

use nalgebra::{Cholesky, DVector, Dyn, LU};

use super::CsrMatrix;
use crate::error::LinalgError;

/// Pivots below this fraction of the largest pivot count as zero.
const SINGULAR_RATIO: f64 = 1e-14;

#[derive(Debug, Clone)]
pub enum DenseFactorization {
    Cholesky(Cholesky<f64, Dyn>),
    /// Partial-pivoting LU, used when Cholesky meets a non-positive pivot.
    Lu(LU<f64, Dyn, Dyn>),
}

/// Factors a square matrix, preferring Cholesky.
pub fn dense_factor(a: &CsrMatrix) -> Result<DenseFactorization, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimensionMismatch(format!(
            "dense_factor: matrix is {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let dense = a.to_dense();
    if let Some(ch) = Cholesky::new(dense.clone()) {
        let l = ch.l_dirty();
        let diag_max = (0..l.nrows()).map(|i| l[(i, i)].abs()).fold(0.0, f64::max);
        let ok = (0..l.nrows()).all(|i| l[(i, i)] > SINGULAR_RATIO.sqrt() * diag_max);
        if ok {
            return Ok(DenseFactorization::Cholesky(ch));
        }
    }
    log::debug!("cholesky failed on {}x{} coarse matrix, using LU", a.nrows(), a.ncols());
    let lu = LU::new(dense);
    let u = lu.u();
    let pivot_max = (0..u.nrows()).map(|i| u[(i, i)].abs()).fold(0.0, f64::max);
    for i in 0..u.nrows() {
        if u[(i, i)].abs() <= SINGULAR_RATIO * pivot_max || pivot_max == 0.0 {
            return Err(LinalgError::Singular { column: i, pivot: u[(i, i)] });
        }
    }
    Ok(DenseFactorization::Lu(lu))
}

impl DenseFactorization {
    pub fn dim(&self) -> usize {
        match self {
            DenseFactorization::Cholesky(c) => c.l_dirty().nrows(),
            DenseFactorization::Lu(l) => l.l().nrows(),
        }
    }

    pub fn is_cholesky(&self) -> bool {
        matches!(self, DenseFactorization::Cholesky(_))
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.dim() {
            return Err(LinalgError::DimensionMismatch(format!(
                "dense_solve: factor is {0}x{0}, rhs has {1}",
                self.dim(),
                b.len()
            )));
        }
        let rhs = DVector::from_column_slice(b);
        let x = match self {
            DenseFactorization::Cholesky(c) => c.solve(&rhs),
            DenseFactorization::Lu(l) => l.solve(&rhs).ok_or(LinalgError::Singular { column: 0, pivot: 0.0 })?,
        };
        Ok(x.as_slice().to_vec())
    }
}

/// Solves `A x = b` directly through a dense factorization.
pub fn dense_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    dense_factor(a)?.solve(b)
}
