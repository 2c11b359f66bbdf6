//! Configuration-driven batch front end used by the `nozzleflow` binary.

mod config;
mod output;
mod run;

pub use config::{Mode, RawConfig, RunConfig, KNOWN_KEYS};
pub use output::{num, vtk_structured_grid, write_atomic, Cell, CsvTable, Snapshot};
pub use run::{run, Outcome, RunStatus, CYLINDER_TOLERANCE};

use std::path::{Path, PathBuf};

use crate::error::Result;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "NOZZLEFLOW_THREADS";

/// Loads `config_path`, applies `overrides` (`key=value`) and an optional
/// output directory, and validates the result.
pub fn load_config(
    config_path: &Path,
    output_dir: Option<PathBuf>,
    overrides: &[String],
) -> Result<RunConfig> {
    let mut raw = RawConfig::load(config_path)?;
    for o in overrides {
        raw.apply_override(o)?;
    }
    let mut config = RunConfig::from_raw(&raw)?;
    if let Some(dir) = output_dir {
        config.output_dir = dir;
    }
    Ok(config)
}

/// Sizes the global worker pool from [`THREADS_ENV`] when it is set.
pub fn configure_threads() -> std::result::Result<(), String> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}
