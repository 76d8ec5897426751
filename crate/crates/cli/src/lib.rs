//! The `snp` command-line pipeline: configuration, manifests and stage
//! orchestration on top of `snp-core`.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;

pub use commands::Cli;
pub use config::{Amount, BudgetSpec, PoolSource, RunConfig, Seeds};
pub use error::{CliError, CliResult};
pub use manifest::Manifest;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "SNP_THREADS";

/// Sizes the global thread pool from [`THREADS_ENV`], if set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("{THREADS_ENV}={value:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::config(format!("cannot size thread pool: {e}")))
}
