//! Command-line front end for `dce_core`: spectra, mode tables, invariant
//! checks and parameter sweeps, written as deterministic CSV.

pub mod checks;
pub mod commands;
pub mod config;
pub mod table;

use thiserror::Error;

pub use config::RunConfig;
pub use table::Table;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] dce_core::Error),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 success, 1 validation failure, 2 config error, 3 numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
