use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation; exit code 2.
    #[error("usage: {0}")]
    Usage(String),
    /// Input rejected or a computation failed; exit code 1.
    #[error("{0}")]
    Core(#[from] profilekit::Error),
    #[error("io: {path}: {message}")]
    Io { path: String, message: String },
    #[error("plot: {0}")]
    Plot(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

/// Lifts a module error into the tagged library error.
pub fn core<E: Into<profilekit::Error>>(e: E) -> CliError {
    CliError::Core(e.into())
}
