//! Error types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Failures while reading, validating or writing meshes and auxiliary files.
#[derive(Debug, Error)]
pub enum MeshError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("face {face} has {count} vertices; only triangles are supported")]
    NonTriangle { face: usize, count: usize },
    #[error("face {face} references vertex {vertex} out of range")]
    IndexOutOfRange { face: usize, vertex: i64 },
    #[error("face {face} repeats a vertex index")]
    RepeatedVertex { face: usize },
    #[error("face {face} is degenerate (area {area:e})")]
    DegenerateFace { face: usize, area: f64 },
    #[error("edge ({0}, {1}) is shared by more than two faces")]
    NonManifoldEdge(usize, usize),
    #[error("vertex {0} is not manifold (incident faces form more than one fan)")]
    NonManifoldVertex(usize),
    #[error("inconsistent orientation across edge ({0}, {1})")]
    InconsistentOrientation(usize, usize),
    #[error("mesh has no faces")]
    Empty,
    #[error("vertex {0} is isolated")]
    IsolatedVertex(usize),
    #[error("vertex index {0} out of range")]
    VertexOutOfRange(usize),
    #[error("({0}, {1}) is not an edge")]
    NotAnEdge(usize, usize),
    #[error("malformed file: {0}")]
    Format(String),
}

/// Failures inside the sparse and dense linear algebra kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),
    #[error("matrix is singular (pivot {pivot} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("invalid matrix data: {0}")]
    Invalid(String),
}

/// Failures while flattening a collapse patch.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlattenError {
    #[error("flattening system is rank deficient")]
    RankDeficient,
    #[error("boundary polylines of the two patches do not match")]
    BoundaryMismatch,
    #[error("degenerate face {0} in the local rotation fit")]
    DegenerateRotation(usize),
    #[error("every boundary configuration produced an invalid layout")]
    AllCasesInvalid,
    #[error("malformed patch: {0}")]
    Malformed(String),
}

/// Failures of the fine/coarse correspondence.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("point left the chart of collapse record {record} (min barycentric {min_weight:e})")]
    Breach { record: usize, min_weight: f64 },
    #[error("face {face} is not part of collapse record {record}")]
    FaceNotInRecord { record: usize, face: usize },
    #[error("removed vertex {0} has no neighbour to average from")]
    NoSurvivingNeighbour(usize),
    #[error("fine vertex {0} was not mapped")]
    Unmapped(usize),
    #[error("{0}")]
    Unsupported(String),
}

/// Failures while assembling operators or running the multigrid solver.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Umbrella error for the high-level pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Flatten(#[from] FlattenError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
