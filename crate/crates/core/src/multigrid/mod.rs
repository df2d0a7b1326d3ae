//! Galerkin multigrid: the level stack of coarse operators, the V-cycle and
//! outer solve loop, Dirichlet reduction and the fast smoothing path.

mod dirichlet;
mod report;
mod smoothing;
mod stack;

use crate::error::SolverError;

pub use dirichlet::{reduce_dirichlet, ReducedSystem};
pub use report::{PhaseTimes, SolveReport};
pub use smoothing::{smoothing_fast_setup, smoothing_solve, SmoothingStack};
pub use stack::{prune_prolongations, setup, LevelStack, MAX_COARSE_DIM};

/// Relaxation method used on every level but the coarsest.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Relaxation {
    GaussSeidel,
    DampedJacobi { omega: f64 },
}

impl Relaxation {
    pub const DEFAULT_JACOBI_OMEGA: f64 = 0.8;
}

/// Gauss-Seidel node order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelaxOrder {
    Natural,
    /// Multi-color order; `parallel` lets nodes of one color update concurrently.
    Colored { parallel: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub pre_sweeps: usize,
    pub post_sweeps: usize,
    /// Stop once `‖b - A x‖₂ / ‖b‖₂` falls to this value.
    pub tolerance: f64,
    pub max_cycles: usize,
    pub relaxation: Relaxation,
    pub order: RelaxOrder,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            pre_sweeps: 2,
            post_sweeps: 2,
            tolerance: 1e-5,
            max_cycles: 100,
            relaxation: Relaxation::GaussSeidel,
            order: RelaxOrder::Natural,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        SolverConfig { tolerance, ..SolverConfig::default() }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(SolverError::InvalidProblem(format!("tolerance {} must be positive", self.tolerance)));
        }
        if let Relaxation::DampedJacobi { omega } = self.relaxation {
            if !(omega > 0.0 && omega <= 1.0) {
                return Err(SolverError::InvalidProblem(format!("Jacobi damping {omega} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// `‖v‖₂`
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests;
