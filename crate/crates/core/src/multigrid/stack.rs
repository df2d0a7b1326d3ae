//! Per-level system matrices and the V-cycle.

use std::time::Instant;

use super::{PhaseTimes, RelaxOrder, Relaxation, SolveReport, SolverConfig};
use crate::error::{LinalgError, SolverError};
use crate::selfparam::Hierarchy;
use crate::sparse::{dense_factor, galerkin_triple, greedy_color, Coloring, CsrMatrix, DenseFactorization, Ordering, Smoother};

/// Largest coarsest level accepted for the dense factorization.
pub const MAX_COARSE_DIM: usize = 8000;

/// System matrices `A₀ … A_H` with `A_{h+1} = P_{h+1}ᵀ A_h P_{h+1}`, their
/// smoothers and the dense factorization of `A_H`. Immutable once built, so
/// one stack can serve concurrent solves.
#[derive(Debug, Clone)]
pub struct LevelStack {
    matrices: Vec<CsrMatrix>,
    prolongations: Vec<CsrMatrix>,
    restrictions: Vec<CsrMatrix>,
    smoothers: Vec<Smoother>,
    colorings: Option<Vec<Coloring>>,
    coarse: DenseFactorization,
    setup_ms: f64,
}

/// Drops prolongation columns whose largest magnitude is exactly zero,
/// together with the matching rows of the next prolongation. The chain is
/// cut at the first level left without columns.
pub fn prune_prolongations(prolongations: &[CsrMatrix]) -> Vec<CsrMatrix> {
    let mut out = Vec::with_capacity(prolongations.len());
    let mut keep_rows: Option<Vec<usize>> = None;
    for p in prolongations {
        let p = match keep_rows.take() {
            Some(rows) => p.select_rows(&rows),
            None => p.clone(),
        };
        let maxima = p.column_max_abs();
        let keep: Vec<usize> = (0..p.ncols()).filter(|&c| maxima[c] != 0.0).collect();
        if keep.is_empty() {
            log::debug!("prolongation {} has no non-zero column; hierarchy truncated", out.len() + 1);
            break;
        }
        if keep.len() == p.ncols() {
            out.push(p);
            continue;
        }
        let mut map = vec![None; p.ncols()];
        for (new, &c) in keep.iter().enumerate() {
            map[c] = Some(new);
        }
        out.push(p.remap_columns(&map, keep.len()));
        keep_rows = Some(keep);
    }
    out
}

fn check_square(a: &CsrMatrix) -> Result<(), SolverError> {
    if !a.is_square() {
        return Err(SolverError::DimensionMismatch(format!("system matrix is {}x{}", a.nrows(), a.ncols())));
    }
    Ok(())
}

/// Builds the level stack of `a` over the prolongations of `hierarchy`.
pub fn setup(a: CsrMatrix, hierarchy: &Hierarchy, config: &SolverConfig) -> Result<LevelStack, SolverError> {
    LevelStack::new(a, &hierarchy.prolongations, config)
}

impl LevelStack {
    /// Galerkin coarse matrices of `a` over `prolongations` (finest first).
    pub fn new(a: CsrMatrix, prolongations: &[CsrMatrix], config: &SolverConfig) -> Result<Self, SolverError> {
        let start = Instant::now();
        check_square(&a)?;
        if let Some(p) = prolongations.first() {
            if p.nrows() != a.nrows() {
                return Err(SolverError::DimensionMismatch(format!(
                    "system has {} rows but the finest prolongation has {}",
                    a.nrows(),
                    p.nrows()
                )));
            }
        }
        let mut prolongations = prune_prolongations(prolongations);
        if let Some(k) = prolongations.iter().position(|p| p.ncols() >= p.nrows()) {
            log::debug!("level {} does not coarsen; hierarchy truncated", k + 1);
            prolongations.truncate(k);
        }
        let mut matrices = vec![a];
        for p in &prolongations {
            let coarse = galerkin_triple(p, matrices.last().expect("non-empty"))?;
            matrices.push(coarse);
        }
        // A restricted prolongation may lose rank; the coarsest Galerkin
        // matrix is then singular and the level above becomes the coarsest.
        let mut stack = loop {
            match Self::from_matrices(matrices.clone(), prolongations.clone(), None, config) {
                Err(SolverError::Linalg(LinalgError::Singular { .. })) if !prolongations.is_empty() => {
                    log::debug!("coarsest of {} levels is singular; dropping it", matrices.len());
                    prolongations.pop();
                    matrices.pop();
                }
                other => break other?,
            }
        };
        stack.setup_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(stack)
    }

    /// Assembles a stack from precomputed level matrices. `colorings`, when
    /// given, must hold one coloring per non-coarsest level.
    pub fn from_matrices(
        matrices: Vec<CsrMatrix>,
        prolongations: Vec<CsrMatrix>,
        colorings: Option<Vec<Coloring>>,
        config: &SolverConfig,
    ) -> Result<Self, SolverError> {
        let start = Instant::now();
        config.validate()?;
        if matrices.len() != prolongations.len() + 1 {
            return Err(SolverError::DimensionMismatch(format!(
                "{} level matrices for {} prolongations",
                matrices.len(),
                prolongations.len()
            )));
        }
        for (h, p) in prolongations.iter().enumerate() {
            check_square(&matrices[h])?;
            if p.nrows() != matrices[h].nrows() || p.ncols() != matrices[h + 1].nrows() {
                return Err(SolverError::DimensionMismatch(format!(
                    "prolongation {} is {}x{} between levels of size {} and {}",
                    h + 1,
                    p.nrows(),
                    p.ncols(),
                    matrices[h].nrows(),
                    matrices[h + 1].nrows()
                )));
            }
        }
        let depth = prolongations.len();
        let coarsest = &matrices[depth];
        check_square(coarsest)?;
        if coarsest.nrows() > MAX_COARSE_DIM {
            return Err(SolverError::InvalidProblem(format!(
                "coarsest level has {} unknowns; the dense solve accepts at most {MAX_COARSE_DIM}",
                coarsest.nrows()
            )));
        }
        let coarse = dense_factor(coarsest)?;
        let smoothers = matrices[..depth].iter().map(Smoother::new).collect::<Result<Vec<_>, _>>()?;
        let colorings = match (colorings, config.order) {
            (Some(c), _) => {
                if c.len() != depth {
                    return Err(SolverError::DimensionMismatch(format!("{} colorings for {depth} levels", c.len())));
                }
                Some(c)
            }
            (None, RelaxOrder::Colored { .. }) => Some(matrices[..depth].iter().map(greedy_color).collect()),
            (None, RelaxOrder::Natural) => None,
        };
        let restrictions = prolongations.iter().map(CsrMatrix::transpose).collect();
        Ok(LevelStack {
            matrices,
            prolongations,
            restrictions,
            smoothers,
            colorings,
            coarse,
            setup_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    /// Number of coarse levels `H`.
    pub fn depth(&self) -> usize {
        self.prolongations.len()
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn matrix(&self, h: usize) -> &CsrMatrix {
        &self.matrices[h]
    }

    pub fn matrices(&self) -> &[CsrMatrix] {
        &self.matrices
    }

    pub fn prolongations(&self) -> &[CsrMatrix] {
        &self.prolongations
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.matrices.iter().map(CsrMatrix::nrows).collect()
    }

    /// Wall time spent building this stack, in milliseconds.
    pub fn setup_ms(&self) -> f64 {
        self.setup_ms
    }

    fn check_level(&self, h: usize, x: &[f64], b: &[f64]) -> Result<(), SolverError> {
        if h > self.depth() {
            return Err(SolverError::InvalidProblem(format!("level {h} beyond depth {}", self.depth())));
        }
        let n = self.matrices[h].nrows();
        if x.len() != n || b.len() != n {
            return Err(SolverError::DimensionMismatch(format!(
                "level {h} has {n} unknowns, got x of {} and b of {}",
                x.len(),
                b.len()
            )));
        }
        Ok(())
    }

    /// Relaxes `A_h x = b` in place with the configured method.
    pub fn relax(&self, h: usize, x: &mut [f64], b: &[f64], sweeps: usize, config: &SolverConfig) {
        if sweeps == 0 {
            return;
        }
        let a = &self.matrices[h];
        match config.relaxation {
            Relaxation::GaussSeidel => {
                let ordering = match (config.order, &self.colorings) {
                    (RelaxOrder::Colored { parallel }, Some(c)) => Ordering::Colored { coloring: &c[h], parallel },
                    _ => Ordering::Natural,
                };
                self.smoothers[h].sweep(a, x, b, sweeps, ordering);
            }
            Relaxation::DampedJacobi { omega } => {
                self.smoothers[h].jacobi(a, x, b, sweeps, omega, &mut Vec::new());
            }
        }
    }

    /// One V-cycle on level `h`, updating `x` in place.
    pub fn vcycle(&self, h: usize, x: &mut [f64], b: &[f64], config: &SolverConfig) -> Result<(), SolverError> {
        self.check_level(h, x, b)?;
        let mut times = PhaseTimes::default();
        self.vcycle_timed(h, x, b, config, &mut times)
    }

    pub(super) fn vcycle_timed(
        &self,
        h: usize,
        x: &mut [f64],
        b: &[f64],
        config: &SolverConfig,
        times: &mut PhaseTimes,
    ) -> Result<(), SolverError> {
        if h == self.depth() {
            let t = Instant::now();
            let sol = self.coarse.solve(b)?;
            x.copy_from_slice(&sol);
            times.coarse_ms += ms(t);
            return Ok(());
        }
        let t = Instant::now();
        self.relax(h, x, b, config.pre_sweeps, config);
        times.relax_ms += ms(t);

        let t = Instant::now();
        let mut r = vec![0.0; x.len()];
        self.matrices[h].residual_into(x, b, &mut r);
        times.residual_ms += ms(t);

        let t = Instant::now();
        let coarse_n = self.matrices[h + 1].nrows();
        let mut rc = vec![0.0; coarse_n];
        self.restrictions[h].spmv_into(&r, &mut rc);
        let mut xc = vec![0.0; coarse_n];
        times.transfer_ms += ms(t);

        self.vcycle_timed(h + 1, &mut xc, &rc, config, times)?;

        let t = Instant::now();
        self.prolongations[h].spmv_into(&xc, &mut r);
        for (xi, ci) in x.iter_mut().zip(&r) {
            *xi += ci;
        }
        times.transfer_ms += ms(t);

        let t = Instant::now();
        self.relax(h, x, b, config.post_sweeps, config);
        times.relax_ms += ms(t);
        Ok(())
    }

    /// Iterates V-cycles from `x0` (zero when absent) until the relative
    /// residual reaches `config.tolerance` or `config.max_cycles` run out.
    /// Non-convergence is reported through the flag, not as an error; the
    /// returned iterate is the one with the smallest residual.
    pub fn solve(&self, b: &[f64], x0: Option<&[f64]>, config: &SolverConfig) -> Result<(Vec<f64>, SolveReport), SolverError> {
        config.validate()?;
        let n = self.dim();
        let mut x = match x0 {
            Some(x0) => x0.to_vec(),
            None => vec![0.0; n],
        };
        self.check_level(0, &x, b)?;
        let start = Instant::now();
        let mut report = SolveReport::new(self.setup_ms);
        let b_norm = super::norm2(b);
        let scale = if b_norm > 0.0 { b_norm } else { 1.0 };
        let mut r = vec![0.0; n];

        let t = Instant::now();
        self.matrices[0].residual_into(&x, b, &mut r);
        let mut best_res = super::norm2(&r) / scale;
        let mut best = x.clone();
        report.phases.residual_ms += ms(t);
        report.push(best_res, ms(start));

        while best_res > config.tolerance && report.cycles < config.max_cycles {
            self.vcycle_timed(0, &mut x, b, config, &mut report.phases)?;
            let t = Instant::now();
            self.matrices[0].residual_into(&x, b, &mut r);
            let res = super::norm2(&r) / scale;
            if res < best_res {
                best_res = res;
                best.copy_from_slice(&x);
            }
            report.phases.residual_ms += ms(t);
            report.push(res, ms(start));
            if !res.is_finite() {
                break;
            }
        }
        report.converged = best_res <= config.tolerance;
        report.solve_ms = ms(start);
        if !report.converged {
            log::warn!("multigrid stopped at relative residual {best_res:.3e} after {} cycles", report.cycles);
        }
        Ok((best, report))
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}
