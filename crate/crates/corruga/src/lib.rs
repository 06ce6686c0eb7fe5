//! File formats, analysis reports, verification suites and the `corruga`
//! command line on top of `corruga-core`.

use std::path::Path;

pub mod analysis;
pub mod config;
pub mod export;
pub mod report;
pub mod verify;

pub use corruga_core;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    /// Bad arguments, unreadable or invalid input, failed computation.
    pub const ERROR: i32 = 1;
    pub const VERIFICATION_FAILED: i32 = 2;
    pub const AMBIGUOUS_RANK: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{path}: {message}")]
    Csv { path: String, message: String },

    #[error(transparent)]
    Core(#[from] corruga_core::Error),

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn csv(path: &Path, e: csv::Error) -> Self {
        CliError::Csv { path: path.display().to_string(), message: e.to_string() }
    }
}

/// Applies `CORRUGA_THREADS` to the global thread pool, if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("CORRUGA_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("CORRUGA_THREADS must be a positive integer, got `{v}`")))?;
    // a pool that is already built (tests, repeated calls) is left as is
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}
