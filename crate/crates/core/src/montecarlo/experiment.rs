use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::rng::UniformStream;
use super::sums::trimmed_sum_with;
use super::McError;
use crate::grid::ensure_increasing;
use crate::sum::CompensatedSum;
use crate::trimming::TrimmingPlan;

pub const DEFAULT_N_MAX: u64 = 10_000_000;
pub const DEFAULT_MEMORY_BUDGET_MB: u64 = 4096;

/// Parallelism and memory limits for a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Resources {
    /// Worker threads; `None` uses all cores.
    pub threads: Option<usize>,
    /// Upper bound on sample memory across in-flight replications;
    /// `None` uses [`DEFAULT_MEMORY_BUDGET_MB`].
    pub memory_budget_mb: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub plan: TrimmingPlan,
    pub checkpoints: Vec<u64>,
    pub replications: u32,
    pub seed: u64,
    pub n_max: u64,
    /// Start of the window for sup_{n >= n0} |ratio_trimmed - 1|.
    pub n0: u64,
    /// Allows finite-mean laws such as a point mass.
    pub test_mode: bool,
    pub resources: Resources,
}

impl ExperimentConfig {
    pub fn new(plan: TrimmingPlan, checkpoints: Vec<u64>, replications: u32, seed: u64) -> Self {
        let n0 = checkpoints.first().copied().unwrap_or(1);
        Self {
            plan,
            checkpoints,
            replications,
            seed,
            n_max: DEFAULT_N_MAX,
            n0,
            test_mode: false,
            resources: Resources::default(),
        }
    }
}

/// Plan values frozen at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckpointPlan {
    pub n: u64,
    pub b: u64,
    pub t: f64,
    pub d: f64,
    pub a_minus: f64,
    /// c(a_n^-, n) with the plan's psi.
    pub c_a_minus: f64,
}

/// One checkpoint of a replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: u64,
    pub s_n: f64,
    pub s_trimmed: f64,
    pub t_truncated: f64,
    pub n_gt: u64,
    pub n_ge: u64,
    pub b_n: u64,
    pub t_n: f64,
    pub d_n: f64,
    pub ratio_trimmed: f64,
    pub ratio_truncated: f64,
}

impl TraceRow {
    pub fn ratio_untrimmed(&self) -> f64 {
        self.s_n / self.d_n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    pub replication: u64,
    pub seed: u64,
    pub rows: Vec<TraceRow>,
}

/// A validated configuration with the plan evaluated at every checkpoint.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    checkpoints: Vec<CheckpointPlan>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, McError> {
        if config.replications == 0 {
            return Err(McError::InvalidConfig(
                "replications must be at least 1".into(),
            ));
        }
        ensure_increasing(&config.checkpoints)
            .map_err(|e| McError::InvalidConfig(e.to_string()))?;
        let last = *config.checkpoints.last().unwrap();
        if last > config.n_max {
            return Err(McError::InvalidConfig(format!(
                "checkpoint {last} exceeds n_max = {}",
                config.n_max
            )));
        }
        if !config.test_mode {
            config
                .plan
                .distribution
                .validate_infinite_mean(1e300)
                .map_err(McError::FiniteMean)?;
        }
        let mut checkpoints = Vec::with_capacity(config.checkpoints.len());
        for &n in &config.checkpoints {
            let p = config.plan.point(n)?;
            let t = p.t.ok_or(McError::ThresholdOutOfRange { n })?;
            checkpoints.push(CheckpointPlan {
                n,
                b: p.b,
                t,
                d: p.d(),
                a_minus: p.a_minus,
                c_a_minus: config.plan.c(p.a_minus, n)?,
            });
        }
        Ok(Self {
            config,
            checkpoints,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn checkpoints(&self) -> &[CheckpointPlan] {
        &self.checkpoints
    }

    fn path_len(&self) -> usize {
        self.checkpoints.last().unwrap().n as usize
    }

    /// Bytes held by one in-flight replication (path plus selection buffer).
    pub fn bytes_per_replication(&self) -> u64 {
        2 * 8 * self.path_len() as u64
    }

    /// X_1..X_N of one replication, N the last checkpoint. Every checkpoint
    /// reads a prefix of this one path.
    pub fn sample_path(&self, replication: u64) -> Vec<f64> {
        let d = &self.config.plan.distribution;
        let mut u = UniformStream::new(self.config.seed, replication);
        (0..self.path_len())
            .map(|_| d.sample(u.next_open01()))
            .collect()
    }

    pub fn run_replication(&self, replication: u64) -> ConvergenceTrace {
        let path = self.sample_path(replication);
        self.trace_path(replication, &path)
    }

    /// Evaluate every checkpoint on a given path.
    pub fn trace_path(&self, replication: u64, path: &[f64]) -> ConvergenceTrace {
        let mut scratch = Vec::with_capacity(path.len());
        let mut running = CompensatedSum::new();
        let mut done = 0;
        let mut rows = Vec::with_capacity(self.checkpoints.len());
        for cp in &self.checkpoints {
            let n = cp.n as usize;
            running.extend(path[done..n].iter().copied());
            done = n;
            let prefix = &path[..n];
            let s_trimmed = trimmed_sum_with(prefix, cp.b as usize, &mut scratch)
                .expect("plan clamps b_n to [0, n]");
            let (t_truncated, n_gt, n_ge) = truncate_and_count(prefix, cp.t);
            rows.push(TraceRow {
                n: cp.n,
                s_n: running.value(),
                s_trimmed,
                t_truncated,
                n_gt,
                n_ge,
                b_n: cp.b,
                t_n: cp.t,
                d_n: cp.d,
                ratio_trimmed: s_trimmed / cp.d,
                ratio_truncated: t_truncated / cp.d,
            });
        }
        ConvergenceTrace {
            replication,
            seed: self.config.seed,
            rows,
        }
    }

    /// Number of replications allowed in flight by the memory budget.
    pub fn max_in_flight(&self) -> Result<usize, McError> {
        let budget_mb = self
            .config
            .resources
            .memory_budget_mb
            .unwrap_or(DEFAULT_MEMORY_BUDGET_MB);
        let per = self.bytes_per_replication();
        let fits = (budget_mb.saturating_mul(1 << 20) / per.max(1)) as usize;
        if fits == 0 {
            return Err(McError::MemoryBudget {
                required_mb: per.div_ceil(1 << 20),
                budget_mb,
            });
        }
        Ok(fits)
    }

    /// All replications, in parallel, returned in replication order.
    pub fn run_all(&self) -> Result<Vec<ConvergenceTrace>, McError> {
        let fits = self.max_in_flight()?;
        let threads = self
            .config
            .resources
            .threads
            .unwrap_or_else(rayon::current_num_threads)
            .clamp(1, fits);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| McError::ThreadPool(e.to_string()))?;
        let reps = self.config.replications as u64;
        Ok(pool.install(|| {
            (0..reps)
                .into_par_iter()
                .map(|r| self.run_replication(r))
                .collect()
        }))
    }
}

fn truncate_and_count(prefix: &[f64], t: f64) -> (f64, u64, u64) {
    let mut sum = CompensatedSum::new();
    let mut gt = 0;
    let mut ge = 0;
    for &x in prefix {
        if x <= t {
            sum.add(x);
            if x == t {
                ge += 1;
            }
        } else {
            gt += 1;
            ge += 1;
        }
    }
    (sum.value(), gt, ge)
}

/// CSV with columns replication, n, S_n, S_trimmed, T_truncated, N_gt,
/// N_ge, b_n, t_n, d_n, ratio_trimmed, ratio_truncated.
pub fn write_traces_csv<W: Write>(traces: &[ConvergenceTrace], w: W) -> Result<(), McError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "replication",
        "n",
        "S_n",
        "S_trimmed",
        "T_truncated",
        "N_gt",
        "N_ge",
        "b_n",
        "t_n",
        "d_n",
        "ratio_trimmed",
        "ratio_truncated",
    ])?;
    for tr in traces {
        for r in &tr.rows {
            out.write_record([
                tr.replication.to_string(),
                r.n.to_string(),
                r.s_n.to_string(),
                r.s_trimmed.to_string(),
                r.t_truncated.to_string(),
                r.n_gt.to_string(),
                r.n_ge.to_string(),
                r.b_n.to_string(),
                r.t_n.to_string(),
                r.d_n.to_string(),
                r.ratio_trimmed.to_string(),
                r.ratio_truncated.to_string(),
            ])?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionSpec;
    use crate::trimming::{ThresholdRule, TrimRule, TrimmingPlan};

    fn point_mass_config(grid: Vec<u64>) -> ExperimentConfig {
        let plan = TrimmingPlan {
            kind: crate::trimming::PlanKind::General,
            distribution: DistributionSpec::point_mass(1.0).unwrap(),
            epsilon: 0.05,
            psi: crate::trimming::PsiFunction::Power { rho: 2.0 },
            psi_tilde: crate::trimming::PsiFunction::Power { rho: 2.0 },
            threshold_rule: ThresholdRule::power(0.5),
            trim_rule: TrimRule::Constant { count: 5 },
        };
        let mut c = ExperimentConfig::new(plan, grid, 3, 11);
        c.test_mode = true;
        c
    }

    #[test]
    fn point_mass_sums() {
        let e = Experiment::new(point_mass_config(vec![16, 100, 1000])).unwrap();
        let tr = e.run_replication(0);
        for r in &tr.rows {
            assert_eq!(r.s_n, r.n as f64);
            assert_eq!(r.s_trimmed, (r.n - 5) as f64);
            assert_eq!(r.n_gt, 0);
        }
    }

    #[test]
    fn finite_mean_needs_test_mode() {
        let mut c = point_mass_config(vec![16, 100]);
        c.test_mode = false;
        assert!(matches!(Experiment::new(c), Err(McError::FiniteMean(_))));
    }

    #[test]
    fn memory_budget_is_enforced_before_sampling() {
        let mut c = point_mass_config(vec![16, 1_000_000]);
        c.resources.memory_budget_mb = Some(1);
        let e = Experiment::new(c).unwrap();
        assert!(matches!(
            e.run_all(),
            Err(McError::MemoryBudget {
                required_mb: 16,
                budget_mb: 1
            })
        ));
    }

    #[test]
    fn parallel_run_matches_serial_replications() {
        let plan = TrimmingPlan::theorem_1_1(
            DistributionSpec::pareto(0.5, 1.0).unwrap(),
            ThresholdRule::power(0.8),
            0.05,
            &[100, 1000],
        )
        .unwrap();
        let mut c = ExperimentConfig::new(plan, vec![100, 1000], 6, 42);
        c.resources.threads = Some(3);
        let e = Experiment::new(c).unwrap();
        let all = e.run_all().unwrap();
        for (i, tr) in all.iter().enumerate() {
            assert_eq!(tr, &e.run_replication(i as u64));
        }
    }
}
