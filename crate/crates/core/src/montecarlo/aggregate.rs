use std::io::Write;

use serde::Serialize;

use super::experiment::{ConvergenceTrace, Experiment};
use super::McError;
use crate::bounds::{bernstein_max_tail, BernsteinInput, BoundValue};

pub const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

/// 5/25/50/75/95 % quantiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantiles(pub [f64; 5]);

impl Quantiles {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self(QUANTILE_LEVELS.map(|p| quantile_sorted(&v, p)))
    }

    pub fn median(&self) -> f64 {
        self.0[2]
    }
}

/// Linear interpolation between order statistics (Hyndman-Fan type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    if m == 0 {
        return f64::NAN;
    }
    let h = (m - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(m - 1);
    let (a, b) = (sorted[lo], sorted[hi]);
    if a == b {
        a
    } else {
        a + (h - lo as f64) * (b - a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub n: u64,
    pub ratio_trimmed: Quantiles,
    pub ratio_truncated: Quantiles,
    /// |ratio_trimmed - 1|
    pub abs_dev_trimmed: Quantiles,
    /// Running max of S_k / d_k over checkpoints k <= n.
    pub untrimmed_running_max: Quantiles,
    /// Replications with |a_n^- - N_gt| >= c(a_n^-, n).
    pub exceedance_violations: u32,
    /// Bernstein bound on that event.
    pub exceedance_bound: BoundValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub replications: u32,
    pub n0: u64,
    pub rows: Vec<AggregateRow>,
    /// Per replication, sup over checkpoints n >= n0 of |ratio_trimmed - 1|.
    pub sup_abs_dev_after_n0: Vec<f64>,
}

impl Experiment {
    /// Per-checkpoint summaries across replications; traces must share the
    /// experiment's checkpoint grid.
    pub fn aggregate(&self, traces: &[ConvergenceTrace]) -> Result<Aggregate, McError> {
        if traces.is_empty() {
            return Err(McError::InvalidConfig(
                "aggregate needs at least one trace".into(),
            ));
        }
        let cps = self.checkpoints();
        for tr in traces {
            if tr.rows.len() != cps.len() || tr.rows.iter().zip(cps).any(|(r, c)| r.n != c.n) {
                return Err(McError::GridMismatch {
                    replication: tr.replication,
                });
            }
        }
        let running_max: Vec<Vec<f64>> = traces
            .iter()
            .map(|tr| {
                let mut m = f64::NEG_INFINITY;
                tr.rows
                    .iter()
                    .map(|r| {
                        m = m.max(r.ratio_untrimmed());
                        m
                    })
                    .collect()
            })
            .collect();
        let mut rows = Vec::with_capacity(cps.len());
        for (i, cp) in cps.iter().enumerate() {
            let col = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..traces.len()).map(f).collect() };
            let trimmed = col(&|j| traces[j].rows[i].ratio_trimmed);
            let truncated = col(&|j| traces[j].rows[i].ratio_truncated);
            let dev: Vec<f64> = trimmed.iter().map(|r| (r - 1.0).abs()).collect();
            let rmax = col(&|j| running_max[j][i]);
            let violations = traces
                .iter()
                .filter(|tr| (cp.a_minus - tr.rows[i].n_gt as f64).abs() >= cp.c_a_minus)
                .count() as u32;
            let p = (cp.a_minus / cp.n as f64).clamp(0.0, 1.0);
            let bound = bernstein_max_tail(&BernsteinInput {
                t: cp.c_a_minus,
                variance: cp.n as f64 * p * (1.0 - p),
                m: 1.0,
                n: cp.n,
            })?;
            rows.push(AggregateRow {
                n: cp.n,
                ratio_trimmed: Quantiles::of(&trimmed),
                ratio_truncated: Quantiles::of(&truncated),
                abs_dev_trimmed: Quantiles::of(&dev),
                untrimmed_running_max: Quantiles::of(&rmax),
                exceedance_violations: violations,
                exceedance_bound: bound,
            });
        }
        let n0 = self.config().n0;
        let sup_abs_dev_after_n0 = traces
            .iter()
            .map(|tr| {
                tr.rows
                    .iter()
                    .filter(|r| r.n >= n0)
                    .map(|r| (r.ratio_trimmed - 1.0).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        Ok(Aggregate {
            replications: traces.len() as u32,
            n0,
            rows,
            sup_abs_dev_after_n0,
        })
    }
}

pub const AGGREGATE_COLUMNS: [&str; 24] = [
    "n",
    "replications",
    "trimmed_q05",
    "trimmed_q25",
    "trimmed_q50",
    "trimmed_q75",
    "trimmed_q95",
    "truncated_q05",
    "truncated_q25",
    "truncated_q50",
    "truncated_q75",
    "truncated_q95",
    "absdev_q05",
    "absdev_q25",
    "absdev_q50",
    "absdev_q75",
    "absdev_q95",
    "untrimmed_max_q05",
    "untrimmed_max_q25",
    "untrimmed_max_q50",
    "untrimmed_max_q75",
    "untrimmed_max_q95",
    "exceedance_violations",
    "exceedance_bound_log10",
];

impl Aggregate {
    /// One row per checkpoint, columns [`AGGREGATE_COLUMNS`].
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), McError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(AGGREGATE_COLUMNS)?;
        for r in &self.rows {
            let mut rec = vec![r.n.to_string(), self.replications.to_string()];
            for q in [
                &r.ratio_trimmed,
                &r.ratio_truncated,
                &r.abs_dev_trimmed,
                &r.untrimmed_running_max,
            ] {
                rec.extend(q.0.iter().map(f64::to_string));
            }
            rec.push(r.exceedance_violations.to_string());
            rec.push(r.exceedance_bound.log10.to_string());
            out.write_record(&rec)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}
