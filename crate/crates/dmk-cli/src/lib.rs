//! Command-line front end for the transport-network simulator: scenario
//! configuration, run orchestration over refinement levels and flux-exponent
//! sweeps, and the on-disk formats (diagnostics CSV, legacy VTK fields,
//! Triangle meshes, run summaries).

use std::fmt;
use std::path::PathBuf;

use dmk_core::dynamics::DynamicsError;
use dmk_core::forcing::ForcingError;
use dmk_core::mesh::MeshError;

pub mod check;
pub mod config;
pub mod report;
pub mod runner;
pub mod triangle_io;
pub mod vtk;

#[derive(Debug)]
pub enum CliError {
    /// Configuration rejected; the message names the offending key.
    Config { path: PathBuf, message: String },
    Io { path: PathBuf, source: std::io::Error },
    /// Text-format parse failure with a 1-based line number.
    Parse { path: PathBuf, line: usize, message: String },
    Mesh(MeshError),
    Forcing(ForcingError),
    Dynamics(DynamicsError),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { path, message } => {
                write!(f, "{}: {message}", path.display())
            }
            CliError::Io { path, source } => {
                write!(f, "{}: {source}", path.display())
            }
            CliError::Parse { path, line, message } => {
                write!(f, "{}:{line}: {message}", path.display())
            }
            CliError::Mesh(e) => write!(f, "mesh error: {e}"),
            CliError::Forcing(e) => write!(f, "forcing error: {e}"),
            CliError::Dynamics(e) => write!(f, "run error: {e}"),
        }
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CliError::Io { source, .. } => Some(source),
            CliError::Mesh(e) => Some(e),
            CliError::Forcing(e) => Some(e),
            CliError::Dynamics(e) => Some(e),
            _ => None,
        }
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        CliError::Mesh(e)
    }
}

impl From<ForcingError> for CliError {
    fn from(e: ForcingError) -> Self {
        CliError::Forcing(e)
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        CliError::Dynamics(e)
    }
}

/// Wraps an I/O error with the path it concerns.
pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
