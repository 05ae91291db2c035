use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::RunSpec;
use super::plot::{ratio_band_svg, read_aggregate_csv, untrimmed_max_svg};
use super::CliError;
use crate::bounds::borel_cantelli_budget;
use crate::montecarlo::{write_traces_csv, Experiment};
use crate::trimming::{check_condition, ConditionReport, Verdict};

pub const CONDITIONS_FILE: &str = "conditions.txt";
pub const BUDGET_FILE: &str = "budget.csv";
pub const TRACES_FILE: &str = "traces.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const RATIO_PLOT_FILE: &str = "ratio_bands.svg";
pub const UNTRIMMED_PLOT_FILE: &str = "untrimmed_max.svg";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timings {
    pub conditions_s: f64,
    pub simulation_s: f64,
    pub output_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub replications: u32,
    pub n_max: u64,
    pub plan: &'static str,
    pub distribution: &'static str,
    pub verdicts: BTreeMap<String, Verdict>,
    pub files: Vec<FileEntry>,
    pub timings: Timings,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub reports: Vec<ConditionReport>,
    pub manifest: Manifest,
}

impl RunOutcome {
    /// True when some pointwise hypothesis fails outright.
    pub fn pointwise_violation(&self) -> bool {
        any_pointwise_violation(&self.reports)
    }
}

pub fn any_pointwise_violation(reports: &[ConditionReport]) -> bool {
    reports
        .iter()
        .any(|r| r.id.is_pointwise() && r.verdict == Verdict::Violated)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Evaluate the configured hypotheses without sampling.
pub fn check_conditions(spec: &RunSpec) -> Result<Vec<ConditionReport>, CliError> {
    spec.conditions
        .iter()
        .map(|&id| {
            check_condition(
                &spec.experiment.plan,
                id,
                &spec.condition_grid,
                spec.tolerance,
            )
            .map_err(CliError::from)
        })
        .collect()
}

pub fn conditions_text(reports: &[ConditionReport]) -> String {
    reports
        .iter()
        .map(ConditionReport::to_text)
        .collect::<Vec<_>>()
        .join("\n")
}

fn write(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<FileEntry>) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    files.push(FileEntry {
        name: name.to_string(),
        sha256: sha256_hex(bytes),
        bytes: bytes.len() as u64,
    });
    Ok(())
}

/// Check conditions, simulate, and write every output file to the run
/// directory. Output contents depend only on the configuration (timings in
/// the manifest excepted).
pub fn run(spec: &RunSpec) -> Result<RunOutcome, CliError> {
    let dir = spec.out_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut files = Vec::new();

    let t0 = Instant::now();
    let reports = check_conditions(spec)?;
    write(
        &dir,
        CONDITIONS_FILE,
        conditions_text(&reports).as_bytes(),
        &mut files,
    )?;
    let budget =
        borel_cantelli_budget(&spec.experiment.plan, spec.budget_eps, &spec.condition_grid)?;
    let mut buf = Vec::new();
    budget.write_csv(&mut buf)?;
    write(&dir, BUDGET_FILE, &buf, &mut files)?;
    let conditions_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let experiment = Experiment::new(spec.experiment.clone())?;
    let traces = experiment.run_all()?;
    let aggregate = experiment.aggregate(&traces)?;
    let simulation_s = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    buf.clear();
    write_traces_csv(&traces, &mut buf)?;
    write(&dir, TRACES_FILE, &buf, &mut files)?;
    buf.clear();
    aggregate.write_csv(&mut buf)?;
    write(&dir, AGGREGATE_FILE, &buf, &mut files)?;
    let rows = read_aggregate_csv(buf.as_slice())?;
    write(
        &dir,
        RATIO_PLOT_FILE,
        ratio_band_svg(&rows).as_bytes(),
        &mut files,
    )?;
    write(
        &dir,
        UNTRIMMED_PLOT_FILE,
        untrimmed_max_svg(&rows).as_bytes(),
        &mut files,
    )?;
    let output_s = t2.elapsed().as_secs_f64();

    let cfg = &spec.experiment;
    let manifest = Manifest {
        tool: "trimlaw",
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: sha256_hex(spec.source.as_bytes()),
        seed: cfg.seed,
        replications: cfg.replications,
        n_max: cfg.n_max,
        plan: cfg.plan.kind.as_str(),
        distribution: cfg.plan.distribution.name(),
        verdicts: reports
            .iter()
            .map(|r| (r.id.to_string(), r.verdict))
            .collect(),
        files,
        timings: Timings {
            conditions_s,
            simulation_s,
            output_s,
        },
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, json + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(RunOutcome {
        out_dir: dir,
        reports,
        manifest,
    })
}

/// Render both plots of an aggregate CSV into `out_dir`.
pub fn plot_file(aggregate: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let text = fs::read(aggregate).map_err(|e| CliError::io(aggregate, e))?;
    let rows = read_aggregate_csv(text.as_slice())?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut written = Vec::new();
    for (name, svg) in [
        (RATIO_PLOT_FILE, ratio_band_svg(&rows)),
        (UNTRIMMED_PLOT_FILE, untrimmed_max_svg(&rows)),
    ] {
        let path = out_dir.join(name);
        fs::write(&path, svg).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
