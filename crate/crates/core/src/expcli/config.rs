//! Experiment configuration files (TOML). The grammar is documented in
//! `docs/config.md`.

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use crate::distributions::{Atom, Breakpoint, DistributionSpec};
use crate::grid::{geometric_grid, MIN_GRID_N};
use crate::montecarlo::{ExperimentConfig, Resources, DEFAULT_N_MAX};
use crate::trimming::{
    ConditionId, PsiFunction, ThresholdRule, TrimRule, TrimmingPlan, DEFAULT_TOLERANCE,
};

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_BUDGET_EPS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

/// Command-line values that replace the file's.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replications: Option<u32>,
    pub n_max: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub resources: Resources,
}

/// A parsed, validated configuration ready to run.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub experiment: ExperimentConfig,
    pub conditions: Vec<ConditionId>,
    pub tolerance: f64,
    pub condition_grid: Vec<u64>,
    pub budget_eps: f64,
    pub out_dir: PathBuf,
    /// The configuration text as read, for hashing.
    pub source: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    version: Option<Spanned<u32>>,
    seed: Option<u64>,
    replications: Option<Spanned<u32>>,
    n_max: Option<Spanned<u64>>,
    n0: Option<u64>,
    #[serde(default)]
    test_mode: bool,
    distribution: Spanned<RawDistribution>,
    plan: Spanned<RawPlan>,
    checkpoints: Spanned<RawGrid>,
    conditions: Option<RawConditions>,
    bounds: Option<RawBounds>,
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistribution {
    family: Spanned<String>,
    alpha: Option<f64>,
    scale: Option<f64>,
    threshold: Option<f64>,
    location: Option<f64>,
    atoms: Option<Vec<(f64, f64)>>,
    breakpoints: Option<Vec<(f64, f64, bool)>>,
    tail_alpha: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    rule: Spanned<String>,
    epsilon: Spanned<f64>,
    threshold: Option<Spanned<RawThreshold>>,
    trimming: Option<Spanned<RawTrimming>>,
    psi: Option<Spanned<RawPsi>>,
    psi_tilde: Option<Spanned<RawPsi>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThreshold {
    rule: Spanned<String>,
    exponent: Option<f64>,
    coefficient: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrimming {
    rule: Spanned<String>,
    factor: Option<f64>,
    count: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPsi {
    family: Spanned<String>,
    rho: Option<f64>,
    base: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    values: Option<Vec<u64>>,
    start: Option<u64>,
    stop: Option<u64>,
    per_decade: Option<u32>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConditions {
    ids: Option<Vec<Spanned<String>>>,
    tolerance: Option<f64>,
    grid: Option<Spanned<RawGrid>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    eps: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn of(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.0.len());
        self.0[..end].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err<T>(&self, span: Range<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError {
            line: Some(self.of(span)),
            message: message.into(),
        })
    }
}

pub fn parse_config(path: &Path, overrides: &Overrides) -> Result<RunSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        line: None,
        message: format!("reading {}: {e}", path.display()),
    })?;
    parse_config_str(&text, overrides)
}

pub fn parse_config_str(text: &str, overrides: &Overrides) -> Result<RunSpec, ConfigError> {
    let lines = Lines(text);
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
        line: e.span().map(|s| lines.of(s)),
        message: e.message().to_string(),
    })?;

    if let Some(v) = &raw.version {
        if *v.get_ref() != CONFIG_VERSION {
            return lines.err(
                v.span(),
                format!("unsupported config version {}", v.get_ref()),
            );
        }
    }
    let seed = match overrides.seed.or(raw.seed) {
        Some(s) => s,
        None => {
            return Err(ConfigError {
                line: None,
                message: "missing `seed`: every run must be seeded explicitly".into(),
            })
        }
    };
    let replications = match (overrides.replications, &raw.replications) {
        (Some(r), _) => r,
        (None, Some(r)) => *r.get_ref(),
        (None, None) => 1,
    };
    if replications == 0 {
        let span = raw.replications.as_ref().map_or(0..0, |r| r.span());
        return lines.err(span, "`replications` must be at least 1");
    }
    let n_max = overrides
        .n_max
        .or(raw.n_max.as_ref().map(|v| *v.get_ref()))
        .unwrap_or(DEFAULT_N_MAX);

    let checkpoints = build_grid(&lines, &raw.checkpoints, "checkpoints")?;
    if let Some(&last) = checkpoints.last() {
        if last > n_max {
            return lines.err(
                raw.checkpoints.span(),
                format!("checkpoint {last} exceeds n_max = {n_max}"),
            );
        }
    }

    let distribution = build_distribution(&lines, &raw.distribution, raw.test_mode)?;

    let conditions_raw = raw.conditions.as_ref();
    let condition_grid = match conditions_raw.and_then(|c| c.grid.as_ref()) {
        Some(g) => build_grid(&lines, g, "conditions.grid")?,
        None => checkpoints.clone(),
    };
    let mut plan_grid: Vec<u64> = checkpoints.iter().chain(&condition_grid).copied().collect();
    plan_grid.sort_unstable();
    plan_grid.dedup();
    let plan = build_plan(&lines, &raw.plan, distribution, &plan_grid)?;

    let conditions = match conditions_raw.and_then(|c| c.ids.as_ref()) {
        None => ConditionId::ALL.to_vec(),
        Some(ids) => ids
            .iter()
            .map(|s| {
                s.get_ref()
                    .parse::<ConditionId>()
                    .or_else(|e| lines.err(s.span(), e.to_string()))
            })
            .collect::<Result<_, _>>()?,
    };
    let tolerance = conditions_raw
        .and_then(|c| c.tolerance)
        .unwrap_or(DEFAULT_TOLERANCE);
    if !(tolerance > 0.0) {
        return Err(ConfigError {
            line: None,
            message: format!("conditions.tolerance = {tolerance} must be positive"),
        });
    }
    let budget_eps = raw
        .bounds
        .as_ref()
        .and_then(|b| b.eps)
        .unwrap_or(DEFAULT_BUDGET_EPS);
    if !(budget_eps > 0.0 && budget_eps.is_finite()) {
        return Err(ConfigError {
            line: None,
            message: format!("bounds.eps = {budget_eps} must be positive"),
        });
    }
    let out_dir = overrides
        .out_dir
        .clone()
        .or_else(|| raw.output.as_ref().and_then(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("trimlaw-out"));

    let n0 = raw.n0.unwrap_or(checkpoints[0]);
    Ok(RunSpec {
        experiment: ExperimentConfig {
            plan,
            checkpoints,
            replications,
            seed,
            n_max,
            n0,
            test_mode: raw.test_mode,
            resources: overrides.resources,
        },
        conditions,
        tolerance,
        condition_grid,
        budget_eps,
        out_dir,
        source: text.to_string(),
    })
}

fn build_grid(lines: &Lines, g: &Spanned<RawGrid>, what: &str) -> Result<Vec<u64>, ConfigError> {
    let span = g.span();
    let g = g.get_ref();
    let grid = match (&g.values, g.start, g.stop, g.per_decade) {
        (Some(v), None, None, None) => v.clone(),
        (None, Some(start), Some(stop), Some(per)) => match geometric_grid(start, stop, per) {
            Ok(v) => v,
            Err(e) => return lines.err(span, format!("{what}: {e}")),
        },
        _ => {
            return lines.err(
                span,
                format!("{what}: give either `values` or all of `start`, `stop`, `per_decade`"),
            )
        }
    };
    if grid.is_empty() {
        return lines.err(span, format!("{what}: empty checkpoint list"));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return lines.err(
            span,
            format!(
                "{what}: checkpoints must be strictly increasing ({} then {})",
                grid[i],
                grid[i + 1]
            ),
        );
    }
    if grid[0] < MIN_GRID_N {
        return lines.err(span, format!("{what}: checkpoints must be >= {MIN_GRID_N}"));
    }
    Ok(grid)
}

fn need<T: Copy>(
    lines: &Lines,
    span: Range<usize>,
    v: Option<T>,
    what: &str,
) -> Result<T, ConfigError> {
    match v {
        Some(x) => Ok(x),
        None => lines.err(span, format!("missing `{what}`")),
    }
}

fn build_distribution(
    lines: &Lines,
    d: &Spanned<RawDistribution>,
    test_mode: bool,
) -> Result<DistributionSpec, ConfigError> {
    let span = d.span();
    let d = d.get_ref();
    let fam_span = d.family.span();
    let built = match d.family.get_ref().as_str() {
        "pareto" => DistributionSpec::pareto(
            need(lines, span.clone(), d.alpha, "alpha")?,
            d.scale.unwrap_or(1.0),
        ),
        "log-tail" => DistributionSpec::log_tail(d.threshold.unwrap_or(std::f64::consts::E)),
        "step-example-1.2" => Ok(DistributionSpec::step_example()),
        "atomic" => {
            let atoms: Vec<Atom> = match &d.atoms {
                Some(a) => a
                    .iter()
                    .map(|&(location, mass)| Atom { location, mass })
                    .collect(),
                None => return lines.err(span, "missing `atoms`"),
            };
            DistributionSpec::atomic(&atoms)
        }
        "tabulated" => {
            let points: Vec<Breakpoint> = match &d.breakpoints {
                Some(b) => b
                    .iter()
                    .map(|&(x, cdf, continuous)| Breakpoint { x, cdf, continuous })
                    .collect(),
                None => return lines.err(span, "missing `breakpoints`"),
            };
            DistributionSpec::tabulated(
                points,
                need(lines, span.clone(), d.tail_alpha, "tail_alpha")?,
            )
        }
        "point-mass" => {
            if !test_mode {
                return lines.err(
                    fam_span,
                    "family `point-mass` has a finite mean; set test_mode = true",
                );
            }
            DistributionSpec::point_mass(need(lines, span.clone(), d.location, "location")?)
        }
        other => {
            return lines.err(
                fam_span,
                format!(
                    "unknown distribution family `{other}` (expected pareto, log-tail, \
                     step-example-1.2, atomic, tabulated or point-mass)"
                ),
            )
        }
    };
    built.or_else(|e| lines.err(span, e.to_string()))
}

fn build_psi(lines: &Lines, p: &Spanned<RawPsi>) -> Result<PsiFunction, ConfigError> {
    let span = p.span();
    let p = p.get_ref();
    let psi = match p.family.get_ref().as_str() {
        "power" => PsiFunction::power(need(lines, span.clone(), p.rho, "rho")?),
        "poly-log" => PsiFunction::poly_log(need(lines, span.clone(), p.rho, "rho")?),
        "exponential" => PsiFunction::exponential(need(lines, span.clone(), p.base, "base")?),
        other => {
            return lines.err(
                p.family.span(),
                format!("unknown psi family `{other}` (expected power, poly-log or exponential)"),
            )
        }
    };
    psi.or_else(|e| lines.err(span, e.to_string()))
}

fn build_plan(
    lines: &Lines,
    p: &Spanned<RawPlan>,
    distribution: DistributionSpec,
    grid: &[u64],
) -> Result<TrimmingPlan, ConfigError> {
    let span = p.span();
    let p = p.get_ref();
    let eps = *p.epsilon.get_ref();
    if !(eps > 0.0 && eps < 0.25) {
        return lines.err(
            p.epsilon.span(),
            format!("epsilon = {eps} must lie in (0, 1/4)"),
        );
    }
    let threshold = match &p.threshold {
        None => None,
        Some(t) => {
            let tspan = t.span();
            let t = t.get_ref();
            Some(match t.rule.get_ref().as_str() {
                "power" => ThresholdRule::Power {
                    exponent: need(lines, tspan.clone(), t.exponent, "exponent")?,
                    coefficient: t.coefficient.unwrap_or(1.0),
                },
                "atom-index" => ThresholdRule::AtomIndex {
                    exponent: t.exponent.unwrap_or(0.25 - eps / 2.0),
                },
                "quantile-fixed-point" => ThresholdRule::QuantileFixedPoint {
                    exponent: t.exponent.unwrap_or(0.5 - 2.0 * eps),
                },
                other => {
                    return lines.err(
                        t.rule.span(),
                        format!(
                            "unknown threshold rule `{other}` (expected power, atom-index or \
                             quantile-fixed-point)"
                        ),
                    )
                }
            })
        }
    };
    let rule_span = p.rule.span();
    let need_threshold = |t: Option<ThresholdRule>| match t {
        Some(t) => Ok(t),
        None => lines.err(span.clone(), "missing [plan.threshold]"),
    };
    let built = match p.rule.get_ref().as_str() {
        "theorem-1.1" => {
            TrimmingPlan::theorem_1_1(distribution, need_threshold(threshold)?, eps, grid)
        }
        "theorem-1.1-proof" => {
            TrimmingPlan::theorem_1_1_proof(distribution, need_threshold(threshold)?, eps, grid)
        }
        "default" => {
            if threshold.is_some() {
                return lines.err(rule_span, "plan `default` fixes its own threshold rule");
            }
            TrimmingPlan::default_rule(distribution, eps, grid)
        }
        "general" => {
            let trim = match &p.trimming {
                None => return lines.err(span.clone(), "plan `general` needs [plan.trimming]"),
                Some(t) => {
                    let tspan = t.span();
                    let t = t.get_ref();
                    match t.rule.get_ref().as_str() {
                        "correction" => TrimRule::Correction {
                            factor: t.factor.unwrap_or(1.0),
                        },
                        "constant" => TrimRule::Constant {
                            count: need(lines, tspan, t.count, "count")?,
                        },
                        "theorem-1.1" => TrimRule::Theorem11,
                        "theorem-1.1-proof" => TrimRule::Theorem11Proof,
                        other => {
                            return lines
                                .err(t.rule.span(), format!("unknown trimming rule `{other}`"))
                        }
                    }
                }
            };
            let psi = match &p.psi {
                Some(s) => build_psi(lines, s)?,
                None => PsiFunction::Power { rho: 9.0 / 8.0 },
            };
            let psi_tilde = match &p.psi_tilde {
                Some(s) => build_psi(lines, s)?,
                None => PsiFunction::Power { rho: 2.0 },
            };
            TrimmingPlan::general(
                distribution,
                need_threshold(threshold)?,
                trim,
                eps,
                psi,
                psi_tilde,
                grid,
            )
        }
        other => {
            return lines.err(
                rule_span,
                format!(
                    "unknown plan rule `{other}` (expected theorem-1.1, theorem-1.1-proof, \
                     default or general)"
                ),
            )
        }
    };
    built.or_else(|e| lines.err(rule_span, format!("plan construction failed: {e}")))
}
