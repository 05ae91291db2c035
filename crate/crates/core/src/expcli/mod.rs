//! Configuration-driven experiment runs: parse a TOML file, check the
//! hypotheses, simulate, and write tables, plots and a manifest.

mod config;
mod plot;
mod run;

pub use config::{parse_config, parse_config_str, ConfigError, Overrides, RunSpec, CONFIG_VERSION};
pub use plot::{ratio_band_svg, read_aggregate_csv, untrimmed_max_svg, PlotError, PlotRow};
pub use run::{
    any_pointwise_violation, check_conditions, conditions_text, plot_file, run, sha256_hex,
    FileEntry, Manifest, RunOutcome, Timings, AGGREGATE_FILE, BUDGET_FILE, CONDITIONS_FILE,
    MANIFEST_FILE, RATIO_PLOT_FILE, TRACES_FILE, UNTRIMMED_PLOT_FILE,
};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::bounds::BoundsError;
use crate::montecarlo::McError;
use crate::trimming::TrimError;

/// Process exit status for a completed run with no pointwise violation.
pub const EXIT_OK: i32 = 0;
/// A pointwise hypothesis is violated on the condition grid.
pub const EXIT_VIOLATION: i32 = 1;
/// Invalid configuration or I/O failure.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Trim(#[from] TrimError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Simulation(#[from] McError),
    #[error("plot: {0}")]
    Plot(#[from] PlotError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
