//! Data smoothing `(α Q + (1 - α) M) x = (1 - α) M f` with the coarse
//! operators of `Q` and `M` computed once, so that changing `α` only costs
//! scaled sparse additions.

use std::time::Instant;

use super::{prune_prolongations, LevelStack, RelaxOrder, SolveReport, SolverConfig};
use crate::error::SolverError;
use crate::sparse::{galerkin_triple, greedy_color, Coloring, CsrMatrix};

/// Per-level `Q_h` and `M_h`.
#[derive(Debug, Clone)]
pub struct SmoothingStack {
    q: Vec<CsrMatrix>,
    m: Vec<CsrMatrix>,
    prolongations: Vec<CsrMatrix>,
    colorings: Option<Vec<Coloring>>,
    setup_ms: f64,
}

/// Precomputes `Pᵀ Q P` and `Pᵀ M P` on every level.
pub fn smoothing_fast_setup(
    q: &CsrMatrix,
    m: &CsrMatrix,
    prolongations: &[CsrMatrix],
    config: &SolverConfig,
) -> Result<SmoothingStack, SolverError> {
    let start = Instant::now();
    if !q.is_square() || q.nrows() != m.nrows() || !m.is_square() {
        return Err(SolverError::DimensionMismatch(format!(
            "Q is {}x{}, M is {}x{}",
            q.nrows(),
            q.ncols(),
            m.nrows(),
            m.ncols()
        )));
    }
    let prolongations = prune_prolongations(prolongations);
    let mut qs = vec![q.clone()];
    let mut ms = vec![m.clone()];
    for p in &prolongations {
        qs.push(galerkin_triple(p, qs.last().expect("non-empty"))?);
        ms.push(galerkin_triple(p, ms.last().expect("non-empty"))?);
    }
    let colorings = match config.order {
        RelaxOrder::Colored { .. } => Some(
            (0..prolongations.len())
                .map(|h| qs[h].add(&ms[h]).map(|pattern| greedy_color(&pattern)))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        RelaxOrder::Natural => None,
    };
    Ok(SmoothingStack { q: qs, m: ms, prolongations, colorings, setup_ms: start.elapsed().as_secs_f64() * 1e3 })
}

impl SmoothingStack {
    pub fn depth(&self) -> usize {
        self.prolongations.len()
    }

    pub fn setup_ms(&self) -> f64 {
        self.setup_ms
    }

    /// `α Q_h + (1 - α) M_h`
    pub fn level_matrix(&self, h: usize, alpha: f64) -> Result<CsrMatrix, SolverError> {
        Ok(self.q[h].axpby(alpha, &self.m[h], 1.0 - alpha)?.prune(0.0))
    }

    /// The level stack for one `α`, assembled without triple products.
    pub fn stack(&self, alpha: f64, config: &SolverConfig) -> Result<LevelStack, SolverError> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(SolverError::InvalidProblem(format!("alpha {alpha} outside [0, 1)")));
        }
        let matrices = (0..=self.depth()).map(|h| self.level_matrix(h, alpha)).collect::<Result<Vec<_>, _>>()?;
        let colorings = match config.order {
            RelaxOrder::Colored { .. } => self.colorings.clone(),
            RelaxOrder::Natural => None,
        };
        LevelStack::from_matrices(matrices, self.prolongations.clone(), colorings, config)
    }

    /// `(1 - α) M f`
    pub fn rhs(&self, alpha: f64, f: &[f64]) -> Result<Vec<f64>, SolverError> {
        let mut b = self.m[0].spmv(f)?;
        for v in &mut b {
            *v *= 1.0 - alpha;
        }
        Ok(b)
    }
}

/// Smooths `f` with weight `alpha` using the precomputed levels.
pub fn smoothing_solve(
    pre: &SmoothingStack,
    alpha: f64,
    f: &[f64],
    x0: Option<&[f64]>,
    config: &SolverConfig,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    let stack = pre.stack(alpha, config)?;
    let b = pre.rhs(alpha, f)?;
    stack.solve(&b, x0, config)
}
