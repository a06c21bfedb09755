//! Shared pieces of the `rqlab` binary: run configuration, output rendering,
//! saved hierarchy reports and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod emit;
pub mod reports;

use thiserror::Error;

use rqlab_core::bellnet::BellError;
use rqlab_core::hierarchy::HierarchyError;
use rqlab_core::measures::MeasuresError;
use rqlab_core::qmat::QmatError;
use rqlab_core::realsim::RealsimError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("input {path}: {msg}")]
    Input { path: String, msg: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Qmat(#[from] QmatError),
    #[error(transparent)]
    Bell(#[from] BellError),
    #[error(transparent)]
    Measures(#[from] MeasuresError),
    #[error(transparent)]
    Realsim(#[from] RealsimError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error("acceptance failed: {0}")]
    Acceptance(String),
}

impl CliError {
    /// 0 pass, 1 failure, 2 usage or configuration error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Input { .. } => 2,
            _ => 1,
        }
    }
}

/// Reads a file, mapping failures to an input error that names the path.
pub fn read_input(path: &std::path::Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}
