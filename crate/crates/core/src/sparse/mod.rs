//! Compressed sparse row matrices and the kernels the multigrid needs.
//!
//! CSR with strictly increasing column indices per row is the only storage
//! format; triplets are accepted at assembly boundaries and summed.

mod coloring;
mod dense;
pub mod mtx;
mod relax;

use std::cell::Cell;

use nalgebra::DMatrix;

use crate::error::LinalgError;

pub use coloring::{greedy_color, Coloring};
pub use dense::{dense_factor, dense_solve, DenseFactorization};
pub use relax::{damped_jacobi, gauss_seidel, Ordering, Smoother};

thread_local! {
    static TRIPLE_PRODUCTS: Cell<u64> = const { Cell::new(0) };
}

/// Number of Galerkin triple products computed on the current thread.
pub fn triple_product_count() -> u64 {
    TRIPLE_PRODUCTS.with(|c| c.get())
}

/// Relative tolerance under which mirrored entries of a triple product are
/// averaged to restore exact symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Validates raw CSR arrays.
    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, LinalgError> {
        if indptr.len() != nrows + 1 || indptr[0] != 0 || indptr[nrows] != indices.len() {
            return Err(LinalgError::Invalid("row offsets inconsistent with entry count".into()));
        }
        if indices.len() != values.len() {
            return Err(LinalgError::Invalid("index and value arrays differ in length".into()));
        }
        for r in 0..nrows {
            if indptr[r] > indptr[r + 1] {
                return Err(LinalgError::Invalid(format!("row offsets decrease at row {r}")));
            }
            let cols = &indices[indptr[r]..indptr[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(LinalgError::Invalid(format!("columns not strictly increasing in row {r}")));
            }
            if cols.last().is_some_and(|&c| c >= ncols) {
                return Err(LinalgError::Invalid(format!("column out of range in row {r}")));
            }
        }
        Ok(CsrMatrix { nrows, ncols, indptr, indices, values })
    }

    /// Sums duplicate triplets and drops entries that end up exactly zero.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, LinalgError> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(LinalgError::DimensionMismatch(format!(
                    "triplet ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
            counts[r + 1] += 1;
        }
        for r in 0..nrows {
            counts[r + 1] += counts[r];
        }
        let mut fill = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[fill[r]] = c;
            vals[fill[r]] = v;
            fill[r] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            row.clear();
            row.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut s = 0.0;
                while k < row.len() && row[k].0 == c {
                    s += row[k].1;
                    k += 1;
                }
                if s != 0.0 {
                    indices.push(c);
                    values.push(s);
                }
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix { nrows, ncols, indptr, indices, values })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix { nrows, ncols, indptr: vec![0; nrows + 1], indices: vec![], values: vec![] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        indptr.push(0);
        for (i, &v) in d.iter().enumerate() {
            if v != 0.0 {
                indices.push(i);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: n, ncols: n, indptr, indices, values }
    }

    /// Converts a dense matrix, skipping exact zeros.
    pub fn from_dense(d: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for r in 0..d.nrows() {
            for c in 0..d.ncols() {
                if d[(r, c)] != 0.0 {
                    t.push((r, c, d[(r, c)]));
                }
            }
        }
        Self::from_triplets(d.nrows(), d.ncols(), &t).expect("in range")
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row_iter(r) {
                d[(r, c)] = v;
            }
        }
        d
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn row_iter(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (c, v) = self.row(r);
        c.iter().copied().zip(v.iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.ncols {
            return Err(LinalgError::DimensionMismatch(format!(
                "spmv: matrix has {} columns, vector has {}",
                self.ncols,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without dimension checks beyond debug assertions.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (r, out) in y.iter_mut().enumerate() {
            let (s, e) = (self.indptr[r], self.indptr[r + 1]);
            let mut acc = 0.0;
            for k in s..e {
                acc += self.values[k] * x[self.indices[k]];
            }
            *out = acc;
        }
    }

    /// `y = Aᵀ x` without forming the transpose.
    pub fn spmv_transpose_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        y.iter_mut().for_each(|v| *v = 0.0);
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += self.values[k] * xr;
            }
        }
    }

    /// `r = b - A x`.
    pub fn residual_into(&self, x: &[f64], b: &[f64], r: &mut [f64]) {
        for row in 0..self.nrows {
            let mut acc = b[row];
            for k in self.indptr[row]..self.indptr[row + 1] {
                acc -= self.values[k] * x[self.indices[k]];
            }
            r[row] = acc;
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let mut fill = counts.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                indices[fill[c]] = r;
                values[fill[c]] = self.values[k];
                fill[c] += 1;
            }
        }
        CsrMatrix { nrows: self.ncols, ncols: self.nrows, indptr: counts, indices, values }
    }

    pub fn scale(&self, s: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Multiplies row `r` by `d[r]`.
    pub fn scale_rows(&self, d: &[f64]) -> Result<CsrMatrix, LinalgError> {
        if d.len() != self.nrows {
            return Err(LinalgError::DimensionMismatch("scale_rows: length differs from row count".into()));
        }
        let mut out = self.clone();
        for r in 0..self.nrows {
            for k in out.indptr[r]..out.indptr[r + 1] {
                out.values[k] *= d[r];
            }
        }
        Ok(out)
    }

    /// `alpha * A + beta * B`, keeping the union pattern (explicit zeros from
    /// cancellation stay until [`CsrMatrix::prune`]).
    pub fn axpby(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Result<CsrMatrix, LinalgError> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(LinalgError::DimensionMismatch(format!(
                "add: {}x{} vs {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        indptr.push(0);
        for r in 0..self.nrows {
            let (ca, va) = self.row(r);
            let (cb, vb) = other.row(r);
            let (mut i, mut j) = (0, 0);
            while i < ca.len() || j < cb.len() {
                let take_a = j >= cb.len() || (i < ca.len() && ca[i] < cb[j]);
                let take_b = i >= ca.len() || (j < cb.len() && cb[j] < ca[i]);
                if take_a {
                    indices.push(ca[i]);
                    values.push(alpha * va[i]);
                    i += 1;
                } else if take_b {
                    indices.push(cb[j]);
                    values.push(beta * vb[j]);
                    j += 1;
                } else {
                    indices.push(ca[i]);
                    values.push(alpha * va[i] + beta * vb[j]);
                    i += 1;
                    j += 1;
                }
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix { nrows: self.nrows, ncols: self.ncols, indptr, indices, values })
    }

    pub fn add(&self, other: &CsrMatrix) -> Result<CsrMatrix, LinalgError> {
        self.axpby(1.0, other, 1.0)
    }

    /// Drops entries with `|v| <= tol`.
    pub fn prune(&self, tol: f64) -> CsrMatrix {
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        indptr.push(0);
        for r in 0..self.nrows {
            for (c, v) in self.row_iter(r) {
                if v.abs() > tol {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols, indptr, indices, values }
    }

    /// Sparse product with a row-wise dense accumulator.
    pub fn matmul(&self, other: &CsrMatrix) -> Result<CsrMatrix, LinalgError> {
        if self.ncols != other.nrows {
            return Err(LinalgError::DimensionMismatch(format!(
                "matmul: {}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let n = other.ncols;
        let mut acc = vec![0.0; n];
        let mut marker = vec![usize::MAX; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for r in 0..self.nrows {
            touched.clear();
            for (k, a) in self.row_iter(r) {
                for (c, b) in other.row_iter(k) {
                    if marker[c] != r {
                        marker[c] = r;
                        acc[c] = 0.0;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                indices.push(c);
                values.push(acc[c]);
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix { nrows: self.nrows, ncols: n, indptr, indices, values })
    }

    /// Max over mirrored pairs of `|a_ij - a_ji| / max(|a_ij|, |a_ji|)`.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for r in 0..self.nrows {
            for (c, v) in self.row_iter(r) {
                let w = self.get(c, r);
                let scale = v.abs().max(w.abs());
                if scale > 0.0 {
                    worst = worst.max((v - w).abs() / scale);
                }
            }
        }
        worst
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.asymmetry() <= tol
    }

    /// Averages mirrored entries that differ by at most `tol` times the
    /// largest entry magnitude.
    pub fn symmetrize_within(&mut self, tol: f64) {
        if !self.is_square() {
            return;
        }
        let limit = tol * self.max_abs();
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                if c <= r {
                    continue;
                }
                let (cols, _) = self.row(c);
                if let Ok(pos) = cols.binary_search(&r) {
                    let m = self.indptr[c] + pos;
                    let (a, b) = (self.values[k], self.values[m]);
                    if a != b && (a - b).abs() <= limit {
                        let avg = 0.5 * (a + b);
                        self.values[k] = avg;
                        self.values[m] = avg;
                    }
                }
            }
        }
    }

    /// Rows `rows` (in the given order) of this matrix.
    pub fn select_rows(&self, rows: &[usize]) -> CsrMatrix {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for &r in rows {
            let (c, v) = self.row(r);
            indices.extend_from_slice(c);
            values.extend_from_slice(v);
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: rows.len(), ncols: self.ncols, indptr, indices, values }
    }

    /// Keeps the columns with `map[c] = Some(new_index)`; `new_cols` is the
    /// resulting width. The map must be increasing over kept columns.
    pub fn remap_columns(&self, map: &[Option<usize>], new_cols: usize) -> CsrMatrix {
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        let mut indices = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        indptr.push(0);
        for r in 0..self.nrows {
            for (c, v) in self.row_iter(r) {
                if let Some(nc) = map[c] {
                    indices.push(nc);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: self.nrows, ncols: new_cols, indptr, indices, values }
    }

    /// Per column, the maximum absolute value (0 for empty columns).
    pub fn column_max_abs(&self) -> Vec<f64> {
        let mut m = vec![0.0f64; self.ncols];
        for (&c, &v) in self.indices.iter().zip(&self.values) {
            m[c] = m[c].max(v.abs());
        }
        m
    }

    /// Maximum absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Galerkin coarse operator `Pᵀ A P`, computed as `(Pᵀ A) P`. Mirrored
/// entries within [`SYMMETRY_TOL`] of the largest entry are averaged.
pub fn galerkin_triple(p: &CsrMatrix, a: &CsrMatrix) -> Result<CsrMatrix, LinalgError> {
    if !a.is_square() || a.nrows() != p.nrows() {
        return Err(LinalgError::DimensionMismatch(format!(
            "galerkin: A is {}x{}, P is {}x{}",
            a.nrows(),
            a.ncols(),
            p.nrows(),
            p.ncols()
        )));
    }
    TRIPLE_PRODUCTS.with(|c| c.set(c.get() + 1));
    let pt = p.transpose();
    let pta = pt.matmul(a)?;
    let mut c = pta.matmul(p)?;
    c.symmetrize_within(SYMMETRY_TOL);
    Ok(c)
}
