use serde::Serialize;

use super::experiment::{ConvergenceTrace, Experiment, ExperimentConfig};
use super::McError;
use crate::distributions::DistributionSpec;
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DichotomyRow {
    pub n: u64,
    /// S_n / d_n
    pub ratio: f64,
    pub running_max: f64,
    pub running_min: f64,
    /// The trimmed counterpart on the same path.
    pub ratio_trimmed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DichotomyTrace {
    pub replication: u64,
    pub rows: Vec<DichotomyRow>,
}

/// Running extremes of the untrimmed ratio S_n/d_n along each path.
pub fn dichotomy_from_traces(traces: &[ConvergenceTrace]) -> Vec<DichotomyTrace> {
    traces
        .iter()
        .map(|tr| {
            let mut hi = f64::NEG_INFINITY;
            let mut lo = f64::INFINITY;
            let rows = tr
                .rows
                .iter()
                .map(|r| {
                    let ratio = r.ratio_untrimmed();
                    hi = hi.max(ratio);
                    lo = lo.min(ratio);
                    DichotomyRow {
                        n: r.n,
                        ratio,
                        running_max: hi,
                        running_min: lo,
                        ratio_trimmed: r.ratio_trimmed,
                    }
                })
                .collect();
            DichotomyTrace {
                replication: tr.replication,
                rows,
            }
        })
        .collect()
}

impl Experiment {
    pub fn untrimmed_dichotomy_trace(&self) -> Result<Vec<DichotomyTrace>, McError> {
        Ok(dichotomy_from_traces(&self.run_all()?))
    }
}

pub const INSTABILITY_LEVELS: [u32; 3] = [100, 1000, 10_000];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstabilityTable {
    pub n: u64,
    /// (R, mean of S_n^{b_n} over replications 0..R)
    pub rows: Vec<(u32, f64)>,
    /// max over levels of the mean divided by the min.
    pub spread: f64,
}

/// Empirical means of the trimmed sum at a fixed n over nested replication
/// counts. The levels share replications: level R uses replications 0..R.
pub fn sample_mean_instability(
    config: &ExperimentConfig,
    n: u64,
    levels: &[u32],
) -> Result<InstabilityTable, McError> {
    if !config.test_mode && !matches!(config.plan.distribution, DistributionSpec::LogTail(_)) {
        return Err(McError::InvalidConfig(
            "sample-mean instability is defined for the log-tail law".into(),
        ));
    }
    let max_r =
        levels.iter().copied().max().ok_or_else(|| {
            McError::InvalidConfig("at least one replication level required".into())
        })?;
    let mut cfg = config.clone();
    cfg.checkpoints = vec![n];
    cfg.n_max = cfg.n_max.max(n);
    cfg.n0 = n;
    cfg.replications = max_r;
    let traces = Experiment::new(cfg)?.run_all()?;
    let mut rows = Vec::with_capacity(levels.len());
    for &r in levels {
        let s: CompensatedSum = traces[..r as usize]
            .iter()
            .map(|t| t.rows[0].s_trimmed)
            .collect();
        rows.push((r, s.value() / r as f64));
    }
    let hi = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(InstabilityTable {
        n,
        rows,
        spread: hi / lo,
    })
}
