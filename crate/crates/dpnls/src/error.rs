use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum DpnlsError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("bad file format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DpnlsError>;
