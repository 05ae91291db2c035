//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! The process exits 0 whatever the outcome so that `cargo test` reports
//! the suite without aborting the workspace run; set
//! `TRIMLAW_ACCEPTANCE_STRICT=1` to exit 1 when any criterion fails.

mod oracles;

use std::fs;
use std::time::{Duration, Instant};

use trimlaw_core::bounds::{bernstein_max_tail, BernsteinInput};
use trimlaw_core::distributions::{DistributionSpec, Quantile};
use trimlaw_core::expcli::{
    parse_config, run, Overrides, AGGREGATE_FILE, BUDGET_FILE, TRACES_FILE,
};
use trimlaw_core::grid::geometric_grid;
use trimlaw_core::montecarlo::{
    dichotomy_from_traces, trimmed_sum, ConvergenceTrace, Experiment, ExperimentConfig,
    UniformStream,
};
use trimlaw_core::trimming::{
    check_condition, omega_from_psi, ConditionId, PsiFunction, ThresholdRule, TrimmingPlan, Verdict,
};

type Outcome = Result<String, String>;
type Criterion<'a> = (u32, Duration, Box<dyn FnOnce() -> Outcome + 'a>);

const SEED: u64 = 20240601;
const REPLICATIONS: u32 = 100;

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let out = match out {
        Ok(msg) if took >= limit => Err(format!("{msg}; runtime {took:.2?} over limit {limit:?}")),
        other => other,
    };
    (out, took)
}

fn fixed_points() -> Outcome {
    let d = DistributionSpec::step_example();
    for k in 1..=5u32 {
        let x = 2f64.powi((k * k) as i32);
        let q = d.quantile(d.cdf(x)).map_err(|e| e.to_string())?;
        if q != Quantile::Finite(x) {
            return Err(format!("k = {k}: quantile(cdf({x})) = {q:?}"));
        }
    }
    Ok("F<-(F(2^{k^2})) = 2^{k^2} for k = 1..5".into())
}

fn moment_oracles() -> Outcome {
    let d = DistributionSpec::step_example();
    let mut worst_step = 0f64;
    for k in 1..=5u32 {
        let x = 2f64.powi((k * k) as i32);
        let exact = oracles::to_f64(&oracles::step_moment_exact(k));
        worst_step = worst_step.max((d.truncated_moment(x) / exact - 1.0).abs());
    }
    let mut worst_pareto = 0f64;
    for &(alpha, scale) in &[(0.5, 1.0), (0.3, 2.0), (0.9, 0.5), (0.7, 10.0)] {
        let d = DistributionSpec::pareto(alpha, scale).map_err(|e| e.to_string())?;
        let density = |x: f64| x * alpha * scale.powf(alpha) * x.powf(-alpha - 1.0);
        for &t in &[scale * 3.0, scale * 1e3, scale * 1e6] {
            let exact = d.truncated_moment(t);
            let quad = oracles::simpson(&density, scale, t, exact * 1e-12);
            worst_pareto = worst_pareto.max((exact / quad - 1.0).abs());
        }
    }
    let msg = format!(
        "step rel err {worst_step:.2e} (< 1e-12), Pareto vs quadrature {worst_pareto:.2e} (< 1e-9)"
    );
    if worst_step < 1e-12 && worst_pareto < 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn condition_checker() -> Outcome {
    let eps = 0.05;
    let grid = geometric_grid(1000, 10_000_000, 4).map_err(|e| e.to_string())?;
    let step = TrimmingPlan::theorem_1_1(
        DistributionSpec::step_example(),
        ThresholdRule::step_example(eps),
        eps,
        &grid,
    )
    .map_err(|e| e.to_string())?;
    let good = check_condition(&step, ConditionId::C1_2, &grid, 1e-2).map_err(|e| e.to_string())?;
    let sabotaged = TrimmingPlan::theorem_1_1(
        DistributionSpec::pareto(0.5, 1.0).map_err(|e| e.to_string())?,
        ThresholdRule::power(2.5),
        eps,
        &grid,
    )
    .map_err(|e| e.to_string())?;
    let bad =
        check_condition(&sabotaged, ConditionId::C1_2, &grid, 1e-2).map_err(|e| e.to_string())?;
    let final_value = good.rows.last().map(|r| r.1).unwrap_or(f64::NAN);
    let msg = format!(
        "step rule (1.2) {} (value {final_value:.3} at n = 1e7), sabotaged n^2.5 {}",
        good.verdict.as_str(),
        bad.verdict.as_str()
    );
    if good.verdict == Verdict::Satisfied && bad.verdict != Verdict::Satisfied {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn omega_exhaustive() -> Outcome {
    let psi = PsiFunction::power(2.0).map_err(|e| e.to_string())?;
    let omega = omega_from_psi(psi, std::f64::consts::E, 2.0).map_err(|e| e.to_string())?;
    for m in 8u64..=1_000_000 {
        let log2 = 63 - m.leading_zeros() as u64;
        let ln = (m as f64).ln().floor();
        let (lhs, rhs) = (omega.eval(log2), psi.eval(ln));
        if lhs > rhs {
            return Err(format!("m = {m}: omega = {lhs} > psi = {rhs}"));
        }
    }
    Ok("omega(floor(log2 m)) <= psi(floor(ln m)) for all m in [8, 1e6]".into())
}

fn bernstein_dominance() -> Outcome {
    let mut strict = 0;
    let mut tightest = f64::INFINITY;
    for &p in &[0.1, 0.5] {
        for &n in &[10usize, 20] {
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            for j in 1..=5 {
                let t = j as f64 * sd;
                let exact = oracles::bernoulli_max_deviation_dp(n, p, t);
                let bound = bernstein_max_tail(&BernsteinInput {
                    t,
                    variance: n as f64 * p * (1.0 - p),
                    m: p.max(1.0 - p),
                    n: n as u64,
                })
                .map_err(|e| e.to_string())?;
                if bound.raw > exact {
                    strict += 1;
                }
                tightest = tightest.min(bound.raw / exact);
            }
        }
    }
    let msg = format!("strict domination in {strict}/20 cases, min bound/exact {tightest:.3}");
    if strict == 20 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn selection_oracle() -> Outcome {
    let d = DistributionSpec::pareto(0.5, 1.0).map_err(|e| e.to_string())?;
    let mut u = UniformStream::new(31337, 0);
    let mut next = |m: u64| (u.next_open01() * m as f64) as u64;
    for i in 0..1000 {
        let n = 1 + next(20_000) as usize;
        let b = next(n as u64 + 1) as usize;
        let mut stream = UniformStream::new(8, i);
        // capped so the exact reference stays finite
        let prefix: Vec<f64> = (0..n)
            .map(|_| d.sample(stream.next_open01()).min(1e250))
            .collect();
        let got = trimmed_sum(&prefix, b).map_err(|e| e.to_string())?;
        let want = oracles::sorted_trimmed_sum(&prefix, b);
        if got.to_bits() != want.to_bits() {
            return Err(format!("instance {i} (n {n}, b {b}): {got} vs {want}"));
        }
    }
    Ok("1000/1000 instances bit-identical to the sorted reference".into())
}

struct SharedRun {
    experiment: Experiment,
    traces: Vec<ConvergenceTrace>,
    took: Duration,
}

fn shared_run() -> Result<SharedRun, String> {
    let checkpoints = geometric_grid(1000, 1_000_000, 10).map_err(|e| e.to_string())?;
    let plan = TrimmingPlan::theorem_1_1(
        DistributionSpec::pareto(0.5, 1.0).map_err(|e| e.to_string())?,
        ThresholdRule::power(0.8),
        0.05,
        &checkpoints,
    )
    .map_err(|e| e.to_string())?;
    let mut config = ExperimentConfig::new(plan, checkpoints, REPLICATIONS, SEED);
    config.n_max = 1_000_000;
    let start = Instant::now();
    let experiment = Experiment::new(config).map_err(|e| e.to_string())?;
    let traces = experiment.run_all().map_err(|e| e.to_string())?;
    Ok(SharedRun {
        experiment,
        traces,
        took: start.elapsed(),
    })
}

fn index_of(run: &SharedRun, n: u64) -> Result<usize, String> {
    run.experiment
        .checkpoints()
        .iter()
        .position(|c| c.n == n)
        .ok_or_else(|| format!("checkpoint {n} missing"))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn strong_law(run: &SharedRun) -> Outcome {
    let mut medians = Vec::new();
    for n in [1000, 10_000, 100_000] {
        let i = index_of(run, n)?;
        medians.push(median(
            run.traces
                .iter()
                .map(|t| (t.rows[i].ratio_trimmed - 1.0).abs())
                .collect(),
        ));
    }
    let monotone = medians.windows(2).all(|w| w[1] <= w[0]);
    let msg = format!(
        "median |S^b/d - 1| = {:.3}, {:.3}, {:.3} at 1e3, 1e4, 1e5 (monotone {monotone}, need < 0.15 at 1e5); run {:.2?}",
        medians[0], medians[1], medians[2], run.took
    );
    if monotone && medians[2] < 0.15 && run.took < Duration::from_secs(300) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn exceedance_concentration(run: &SharedRun) -> Outcome {
    let i = index_of(run, 100_000)?;
    let cp = run.experiment.checkpoints()[i];
    let violations = run
        .traces
        .iter()
        .filter(|t| (cp.a_minus - t.rows[i].n_gt as f64).abs() >= cp.c_a_minus)
        .count();
    let p = cp.a_minus / cp.n as f64;
    let bound = bernstein_max_tail(&BernsteinInput {
        t: cp.c_a_minus,
        variance: cp.n as f64 * p * (1.0 - p),
        m: 1.0,
        n: cp.n,
    })
    .map_err(|e| e.to_string())?;
    let aggregate = run
        .experiment
        .aggregate(&run.traces)
        .map_err(|e| e.to_string())?;
    let reported = aggregate.rows[i].exceedance_violations as usize;
    let msg = format!(
        "{violations}/{} replications with |a^- - N_gt| >= c = {:.1} at n = 1e5 (aggregate reports {reported}); Bernstein bound 10^{:.1}",
        run.traces.len(),
        cp.c_a_minus,
        bound.log10
    );
    if violations == 0 && reported == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn dichotomy(run: &SharedRun) -> Outcome {
    let lo = index_of(run, 1000)?;
    let hi = index_of(run, 1_000_000)?;
    let traces = dichotomy_from_traces(&run.traces);
    let grown = traces
        .iter()
        .filter(|t| t.rows[hi].running_max > 10.0 * t.rows[lo].running_max)
        .count();
    let in_band = traces
        .iter()
        .filter(|t| (0.5..=1.5).contains(&t.rows[hi].ratio_trimmed))
        .count();
    let msg = format!(
        "running max grew > 10x in {grown}/100 paths (need >= 80), trimmed ratio in [0.5, 1.5] at 1e6 on {in_band}/100"
    );
    if grown >= 80 && in_band == traces.len() {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn determinism() -> Outcome {
    let config = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/demo.toml");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut dirs = Vec::new();
    for k in 0..2 {
        let out_dir = tmp.path().join(format!("run{k}"));
        let overrides = Overrides {
            out_dir: Some(out_dir.clone()),
            ..Overrides::default()
        };
        let spec = parse_config(&config, &overrides).map_err(|e| e.to_string())?;
        run(&spec).map_err(|e| e.to_string())?;
        dirs.push(out_dir);
    }
    for name in [TRACES_FILE, AGGREGATE_FILE, BUDGET_FILE] {
        let a = fs::read(dirs[0].join(name)).map_err(|e| e.to_string())?;
        let b = fs::read(dirs[1].join(name)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{name} differs between runs"));
        }
    }
    Ok(format!(
        "{TRACES_FILE}, {AGGREGATE_FILE} and {BUDGET_FILE} byte-identical across two demo runs"
    ))
}

fn main() {
    let shared = shared_run();
    let with_run = |f: fn(&SharedRun) -> Outcome| {
        let shared = &shared;
        move || match shared {
            Ok(run) => f(run),
            Err(e) => Err(format!("shared run failed: {e}")),
        }
    };
    let criteria: Vec<Criterion> = vec![
        (1, Duration::from_secs(1), Box::new(fixed_points)),
        (2, Duration::from_secs(60), Box::new(moment_oracles)),
        (3, Duration::from_secs(1), Box::new(condition_checker)),
        (4, Duration::from_secs(10), Box::new(omega_exhaustive)),
        (5, Duration::from_secs(10), Box::new(bernstein_dominance)),
        (6, Duration::from_secs(30), Box::new(selection_oracle)),
        (7, Duration::from_secs(300), Box::new(with_run(strong_law))),
        (
            8,
            Duration::from_secs(300),
            Box::new(with_run(exceedance_concentration)),
        ),
        (9, Duration::from_secs(300), Box::new(with_run(dichotomy))),
        (10, Duration::from_secs(300), Box::new(determinism)),
    ];
    let mut failed = 0;
    for (id, limit, f) in criteria {
        let (out, took) = timed(limit, f);
        match out {
            Ok(msg) => println!("criterion {id}: PASS ({took:.2?}) {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id}: FAIL ({took:.2?}) {msg}");
            }
        }
    }
    println!("acceptance: {}/10 criteria passed", 10 - failed);
    if failed > 0 && std::env::var_os("TRIMLAW_ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
