//! Convergence history and per-phase timings of a solve.

use std::io::Write;

use crate::error::SolverError;

/// Wall time per solver phase, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct PhaseTimes {
    pub relax_ms: f64,
    pub transfer_ms: f64,
    pub coarse_ms: f64,
    pub residual_ms: f64,
}

impl PhaseTimes {
    pub fn total_ms(&self) -> f64 {
        self.relax_ms + self.transfer_ms + self.coarse_ms + self.residual_ms
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SolveReport {
    /// Relative residual after each cycle; entry 0 is the initial guess.
    pub residuals: Vec<f64>,
    /// Milliseconds since the solve started, per entry of `residuals`.
    pub cumulative_ms: Vec<f64>,
    pub cycles: usize,
    pub converged: bool,
    /// Time spent building the level stack.
    pub setup_ms: f64,
    pub phases: PhaseTimes,
    /// Wall time of the solve loop.
    pub solve_ms: f64,
}

impl SolveReport {
    pub(super) fn new(setup_ms: f64) -> Self {
        SolveReport {
            residuals: Vec::new(),
            cumulative_ms: Vec::new(),
            cycles: 0,
            converged: false,
            setup_ms,
            phases: PhaseTimes::default(),
            solve_ms: 0.0,
        }
    }

    pub(super) fn push(&mut self, residual: f64, elapsed_ms: f64) {
        if !self.residuals.is_empty() {
            self.cycles += 1;
        }
        self.residuals.push(residual);
        self.cumulative_ms.push(elapsed_ms);
    }

    /// A report for a system solved without iterating (nothing unknown).
    pub fn trivial() -> Self {
        let mut r = SolveReport::new(0.0);
        r.push(0.0, 0.0);
        r.converged = true;
        r
    }

    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }

    /// Geometric mean of the per-cycle residual ratios.
    pub fn contraction_factor(&self) -> Option<f64> {
        let first = *self.residuals.first()?;
        if self.cycles == 0 || first == 0.0 {
            return None;
        }
        Some((self.final_residual() / first).powf(1.0 / self.cycles as f64))
    }

    /// Writes `cycle,relative_residual,cumulative_ms` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SolverError> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| SolverError::InvalidProblem(format!("writing report: {e}"));
        out.write_record(["cycle", "relative_residual", "cumulative_ms"]).map_err(io)?;
        for (k, (r, t)) in self.residuals.iter().zip(&self.cumulative_ms).enumerate() {
            out.write_record([k.to_string(), format!("{r:.6e}"), format!("{t:.3}")]).map_err(io)?;
        }
        out.flush().map_err(|e| SolverError::InvalidProblem(format!("writing report: {e}")))?;
        Ok(())
    }
}
