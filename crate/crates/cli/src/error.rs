use std::path::PathBuf;

use ruin_core::RuinError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("invalid config {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Ruin(#[from] RuinError),

    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    /// 1 for a reproduction mismatch, 3 for numeric failures, 2 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Mismatch(_) => 1,
            CliError::Ruin(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}
