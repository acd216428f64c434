//! Command-line front end: reads a model, runs one computation and writes
//! CSV, JSON or OBJ files headed by a hash of the configuration.

pub mod commands;
pub mod config;
pub mod error;
pub mod model_file;

use std::path::PathBuf;

pub use config::{Cli, Command, RunConfig};
pub use error::{CliError, CliResult};

/// Builds the config, sizes the worker pool and runs the command.
pub fn run(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    let cfg = RunConfig::from_cli(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    pool.install(|| commands::execute(&cfg))
}
