//! Single-column CSV files of per-vertex values and errors for the CLI.

use std::path::Path;
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] surfmg::Error),
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use surfmg::error::{LinalgError, SolverError};
        match self {
            CliError::Input(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Core(surfmg::Error::Solver(SolverError::Linalg(LinalgError::Singular { .. }))) => 3,
            CliError::Core(surfmg::Error::Config(_)) => 1,
            CliError::Core(_) => 2,
        }
    }
}

impl From<surfmg::error::SolverError> for CliError {
    fn from(e: surfmg::error::SolverError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<surfmg::error::LinalgError> for CliError {
    fn from(e: surfmg::error::LinalgError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<surfmg::error::MeshError> for CliError {
    fn from(e: surfmg::error::MeshError) -> Self {
        CliError::Core(e.into())
    }
}

pub fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// First column of every row. A first row that does not parse is taken as
/// a header.
pub fn read_column<T: FromStr>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_path(path)
        .map_err(|e| io_error(path, e))?;
    let mut out = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| io_error(path, e))?;
        let Some(field) = record.get(0).filter(|f| !f.is_empty()) else { continue };
        match field.parse() {
            Ok(v) => out.push(v),
            Err(_) if k == 0 => continue,
            Err(_) => return Err(io_error(path, format!("line {}: cannot parse {field:?}", k + 1))),
        }
    }
    Ok(out)
}

pub fn write_column(path: &Path, values: &[f64]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    for v in values {
        w.write_record([v.to_string()]).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| io_error(path, e))
}
