//! File formats, parallel grid evaluation and the `perdyn` command line on
//! top of [`perdyn_core`].

pub mod cli;
pub mod config;
pub mod family_file;
pub mod output;
pub mod parallel;

use thiserror::Error;

/// Failure of a command, carrying its exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config or input files. Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// A check ran and did not hold. Exit code 1.
    #[error("{0}")]
    Verification(String),
    #[error(transparent)]
    Compute(#[from] perdyn_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use perdyn_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Verification(_) => 1,
            CliError::Compute(E::CapExceeded(_) | E::Precondition(_) | E::NotFullyMarked | E::CriticalIndex { .. }) => 2,
            CliError::Compute(_) | CliError::Io { .. } => 1,
        }
    }
}

pub fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}
