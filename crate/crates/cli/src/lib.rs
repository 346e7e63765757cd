//! Configured experiment runner for `lapdecay`: every subcommand writes a CSV
//! table and a JSON manifest.

pub mod artifact;
pub mod config;
pub mod error;
pub mod experiments;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use artifact::{Outcome, Written, FORMAT_VERSION};
pub use config::ExperimentConfig;
pub use error::CliError;

/// Output directory: `OUTPUT_DIR` wins over `output.dir`.
pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    match std::env::var_os("OUTPUT_DIR") {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => PathBuf::from(&cfg.output.dir),
    }
}

pub fn run(name: &str, config_path: &Path, overrides: &[String]) -> Result<Written, CliError> {
    let cfg = ExperimentConfig::load(config_path, overrides)?;
    run_config(name, &cfg, &output_dir(&cfg))
}

pub fn run_config(name: &str, cfg: &ExperimentConfig, dir: &Path) -> Result<Written, CliError> {
    if !experiments::SUBCOMMANDS.contains(&name) {
        return Err(CliError::Config(format!("unknown subcommand '{name}'")));
    }
    let start = Instant::now();
    let outcome = experiments::run(name, cfg)?;
    artifact::write_outcome(name, dir, cfg, &outcome, start.elapsed())
}
