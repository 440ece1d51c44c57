use std::path::PathBuf;

use thiserror::Error;

use singular_forge::braid::BraidError;
use singular_forge::construct::ConstructError;
use singular_forge::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Invalid(String),
    #[error("construction failed: {0}")]
    Construct(#[from] ConstructError),
    #[error("invalid braid: {0}")]
    Braid(#[from] BraidError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("{0}")]
    NotCertified(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::NotCertified(_) => 3,
            _ => 2,
        }
    }
}
