//! Geometric multigrid for linear systems on triangle-mesh surfaces.
//!
//! The pipeline decimates a manifold mesh while keeping a bijective map between
//! every pair of consecutive levels, turns that map into sparse barycentric
//! prolongation operators, and solves positive (semi-)definite systems on the
//! fine mesh with a Galerkin V-cycle.

pub mod error;
pub mod decimate;
pub mod fem;
pub mod flatten;
pub mod mesh;
pub mod multigrid;
pub mod selfparam;
pub mod sparse;

pub use error::{Error, Result};
