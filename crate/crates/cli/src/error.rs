use std::path::PathBuf;

use thiserror::Error;

/// Configuration and I/O failures; all map to exit status 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("{path}: {message}")]
    Toml { path: PathBuf, message: String },

    #[error("{path}:{line}:{column}: in `{key}`: {message}")]
    Expression { path: PathBuf, key: String, line: usize, column: usize, message: String },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error(transparent)]
    Library(#[from] carre::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
