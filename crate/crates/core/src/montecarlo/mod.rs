//! Coupled sample paths, trimmed and truncated sums at checkpoints,
//! aggregation across seeded replications and the diagnostic experiments.

mod aggregate;
mod diagnostics;
mod experiment;
mod rng;
mod sums;

pub use aggregate::{
    quantile_sorted, Aggregate, AggregateRow, Quantiles, AGGREGATE_COLUMNS, QUANTILE_LEVELS,
};
pub use diagnostics::{
    dichotomy_from_traces, sample_mean_instability, DichotomyRow, DichotomyTrace, InstabilityTable,
    INSTABILITY_LEVELS,
};
pub use experiment::{
    write_traces_csv, CheckpointPlan, ConvergenceTrace, Experiment, ExperimentConfig, Resources,
    TraceRow, DEFAULT_MEMORY_BUDGET_MB, DEFAULT_N_MAX,
};
pub use rng::UniformStream;
pub use sums::{exceedance_counts, trimmed_sum, trimmed_sum_with, truncated_sum};

use thiserror::Error;

use crate::bounds::BoundsError;
use crate::distributions::DistError;
use crate::trimming::TrimError;

#[derive(Debug, Error)]
pub enum McError {
    #[error("cannot trim {b} values from a prefix of length {n}")]
    TrimExceedsLength { b: usize, n: usize },
    #[error("invalid experiment: {0}")]
    InvalidConfig(String),
    #[error("one replication needs {required_mb} MB but the memory budget is {budget_mb} MB")]
    MemoryBudget { required_mb: u64, budget_mb: u64 },
    #[error("t_n at n = {n} exceeds the double range; cannot simulate")]
    ThresholdOutOfRange { n: u64 },
    #[error("distribution rejected outside test mode: {0}")]
    FiniteMean(DistError),
    #[error("trace of replication {replication} does not match the checkpoint grid")]
    GridMismatch { replication: u64 },
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Trim(#[from] TrimError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
