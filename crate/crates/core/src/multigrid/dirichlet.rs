//! Elimination of known values: the multigrid runs on the unknown rows
//! only, `A_uu x_u = b_u - A_uk x_k`.

use super::{LevelStack, SolveReport, SolverConfig};
use crate::error::SolverError;
use crate::sparse::CsrMatrix;

/// The reduced system and what is needed to scatter its solution back.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    /// Unknown variables in increasing order.
    pub unknown: Vec<usize>,
    /// Reduced right-hand side `b_u - A_uk x_k`.
    pub rhs: Vec<f64>,
    /// `None` when every variable is known.
    pub stack: Option<LevelStack>,
    /// Full-length vector holding the known values and zeros elsewhere.
    template: Vec<f64>,
}

/// Reduces `A x = b` with `x[known_idx] = known_vals` and builds the level
/// stack of `A_uu`. The finest prolongation keeps only the unknown rows;
/// coarse variables whose prolongation column becomes all zero are removed
/// along with the matching rows one level down.
pub fn reduce_dirichlet(
    a: &CsrMatrix,
    b: &[f64],
    known_idx: &[usize],
    known_vals: &[f64],
    prolongations: &[CsrMatrix],
    config: &SolverConfig,
) -> Result<ReducedSystem, SolverError> {
    let n = a.nrows();
    if !a.is_square() || b.len() != n {
        return Err(SolverError::DimensionMismatch(format!(
            "system {}x{} with right-hand side of {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if known_idx.len() != known_vals.len() {
        return Err(SolverError::DimensionMismatch(format!(
            "{} known indices but {} values",
            known_idx.len(),
            known_vals.len()
        )));
    }
    let mut template = vec![0.0; n];
    let mut known = vec![false; n];
    for (&i, &v) in known_idx.iter().zip(known_vals) {
        if i >= n {
            return Err(SolverError::InvalidProblem(format!("known index {i} out of range")));
        }
        if std::mem::replace(&mut known[i], true) {
            return Err(SolverError::InvalidProblem(format!("known index {i} repeated")));
        }
        template[i] = v;
    }
    let unknown: Vec<usize> = (0..n).filter(|&i| !known[i]).collect();
    let mut new_index = vec![None; n];
    for (k, &i) in unknown.iter().enumerate() {
        new_index[i] = Some(k);
    }

    let mut triplets = Vec::new();
    let mut rhs = Vec::with_capacity(unknown.len());
    for (k, &i) in unknown.iter().enumerate() {
        let mut bi = b[i];
        for (c, v) in a.row_iter(i) {
            match new_index[c] {
                Some(kc) => triplets.push((k, kc, v)),
                None => bi -= v * template[c],
            }
        }
        rhs.push(bi);
    }
    if unknown.is_empty() {
        return Ok(ReducedSystem { unknown, rhs, stack: None, template });
    }
    let a_uu = CsrMatrix::from_triplets(unknown.len(), unknown.len(), &triplets)?;
    let mut reduced: Vec<CsrMatrix> = Vec::with_capacity(prolongations.len());
    if let Some(p) = prolongations.first() {
        if p.nrows() != n {
            return Err(SolverError::DimensionMismatch(format!(
                "system has {n} rows but the finest prolongation has {}",
                p.nrows()
            )));
        }
        reduced.push(p.select_rows(&unknown));
        reduced.extend(prolongations[1..].iter().cloned());
    }
    let stack = LevelStack::new(a_uu, &reduced, config)?;
    Ok(ReducedSystem { unknown, rhs, stack: Some(stack), template })
}

impl ReducedSystem {
    /// Inserts unknown values into the full vector of length `n`.
    pub fn scatter(&self, x_u: &[f64]) -> Vec<f64> {
        let mut x = self.template.clone();
        for (&i, &v) in self.unknown.iter().zip(x_u) {
            x[i] = v;
        }
        x
    }

    /// The unknown entries of a full vector.
    pub fn gather(&self, x: &[f64]) -> Vec<f64> {
        self.unknown.iter().map(|&i| x[i]).collect()
    }

    /// Solves the reduced system and scatters the result. `x0` is a full
    /// length initial guess.
    pub fn solve(&self, x0: Option<&[f64]>, config: &SolverConfig) -> Result<(Vec<f64>, SolveReport), SolverError> {
        let Some(stack) = &self.stack else {
            return Ok((self.template.clone(), SolveReport::trivial()));
        };
        let start = x0.map(|x| self.gather(x));
        let (x_u, report) = stack.solve(&self.rhs, start.as_deref(), config)?;
        Ok((self.scatter(&x_u), report))
    }
}
