use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::plan::{PlanPoint, TrimmingPlan};
use super::TrimError;
use crate::grid::validate_condition_grid;

pub const DEFAULT_TOLERANCE: f64 = 1e-2;

/// Hypotheses of the trimmed strong laws that a plan can be checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionId {
    /// t/d max{a^{1/2+eps} (ln ln n)^{1/2-eps}, ln n} -> 0
    #[serde(rename = "1.2")]
    C1_2,
    /// b >= a^- + c(a^-, n)
    #[serde(rename = "2.2")]
    C2_2,
    /// t/d max{gamma, ln psi~(n)} -> 0
    #[serde(rename = "2.3")]
    C2_3,
    /// b - a >= c(a, n), continuous tail only
    #[serde(rename = "2.4")]
    C2_4,
    /// t/d max{b - a, ln psi~(n)} -> 0, continuous tail only
    #[serde(rename = "2.5")]
    C2_5,
    /// t/d ln psi~(n) -> 0 (the truncated-sum law applied with psi~)
    #[serde(rename = "3.3")]
    C3_3,
}

impl ConditionId {
    pub const ALL: [ConditionId; 6] = [
        Self::C1_2,
        Self::C2_2,
        Self::C2_3,
        Self::C2_4,
        Self::C2_5,
        Self::C3_3,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::C1_2 => "1.2",
            Self::C2_2 => "2.2",
            Self::C2_3 => "2.3",
            Self::C2_4 => "2.4",
            Self::C2_5 => "2.5",
            Self::C3_3 => "3.3",
        }
    }

    /// Pointwise inequalities can be violated outright; the rest are limits.
    pub fn is_pointwise(&self) -> bool {
        matches!(self, Self::C2_2 | Self::C2_4)
    }

    fn needs_continuous_tail(&self) -> bool {
        matches!(self, Self::C2_4 | Self::C2_5)
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConditionId {
    type Err = TrimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| TrimError::UnknownCondition(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Satisfied => "satisfied",
            Self::Violated => "violated",
            Self::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Evaluated condition on a checkpoint grid.
///
/// For limit conditions `value` is the quantity that must tend to zero; for
/// pointwise ones it is the slack of the inequality (negative = violated).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub id: ConditionId,
    pub tolerance: f64,
    pub rows: Vec<(u64, f64)>,
    pub verdict: Verdict,
    pub final_value: f64,
    /// Least-squares slope of ln value against ln n over the last half of
    /// the grid (limit conditions only).
    pub trend: Option<f64>,
    /// Grid points where b_n was clamped to [0, n].
    pub clamped: Vec<u64>,
    pub diagnostics: Vec<String>,
}

impl ConditionReport {
    /// Plain-text block: id, tolerance, grid table, verdict and notes.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "condition {}", self.id);
        let _ = writeln!(s, "tolerance {:e}", self.tolerance);
        let _ = writeln!(s, "{:>14} {:>24}", "n", "value");
        for (n, v) in &self.rows {
            let _ = writeln!(s, "{n:>14} {v:>24.12e}");
        }
        let _ = writeln!(s, "final {:.12e}", self.final_value);
        match self.trend {
            Some(t) => {
                let _ = writeln!(s, "trend {t:.6}");
            }
            None => {
                let _ = writeln!(s, "trend n/a");
            }
        }
        if self.clamped.is_empty() {
            let _ = writeln!(s, "clamped none");
        } else {
            let list: Vec<String> = self.clamped.iter().map(u64::to_string).collect();
            let _ = writeln!(s, "clamped {}", list.join(" "));
        }
        for d in &self.diagnostics {
            let _ = writeln!(s, "note {d}");
        }
        let _ = writeln!(s, "verdict {}", self.verdict);
        s
    }
}

/// Slope of the least-squares line through (ln x, ln y).
pub fn log_log_slope(points: &[(u64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(_, y)| !(y > 0.0 && y.is_finite())) {
        return None;
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, y)| y.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn limit_value(id: ConditionId, plan: &TrimmingPlan, p: &PlanPoint) -> f64 {
    let nf = p.n as f64;
    let eps = plan.epsilon;
    let scale = match id {
        ConditionId::C1_2 => {
            (p.a_minus.powf(0.5 + eps) * nf.ln().ln().powf(0.5 - eps)).max(nf.ln())
        }
        ConditionId::C2_3 => p.gamma.max(plan.psi_tilde.ln_eval(nf)),
        ConditionId::C2_5 => p.gamma_tilde.max(plan.psi_tilde.ln_eval(nf)),
        ConditionId::C3_3 => plan.psi_tilde.ln_eval(nf),
        _ => unreachable!("pointwise condition"),
    };
    if scale <= 0.0 {
        return 0.0;
    }
    (p.ln_t - p.ln_d + scale.ln()).exp()
}

fn slack(id: ConditionId, plan: &TrimmingPlan, p: &PlanPoint) -> Result<f64, TrimError> {
    Ok(match id {
        ConditionId::C2_2 => p.b as f64 - p.a_minus - plan.c(p.a_minus, p.n)?,
        ConditionId::C2_4 => p.gamma_tilde - plan.c(p.a_minus, p.n)?,
        _ => unreachable!("limit condition"),
    })
}

/// Evaluate condition `id` of `plan` on `grid` and judge it.
///
/// Limit conditions are `satisfied` when the final value is below
/// `tolerance` and the log-log trend over the last half of the grid is
/// negative, `inconclusive` otherwise. Pointwise conditions are `violated`
/// as soon as one grid point fails.
pub fn check_condition(
    plan: &TrimmingPlan,
    id: ConditionId,
    grid: &[u64],
    tolerance: f64,
) -> Result<ConditionReport, TrimError> {
    validate_condition_grid(grid)?;
    let mut diagnostics = Vec::new();
    let mut points = plan.points(grid)?;
    let clamped: Vec<u64> = points.iter().filter(|p| p.b_clamped).map(|p| p.n).collect();
    if !clamped.is_empty() {
        diagnostics.push(format!(
            "b_n clamped to [0, n] at {} grid points",
            clamped.len()
        ));
    }

    if id.needs_continuous_tail() {
        match plan.distribution.continuous_beyond() {
            None => {
                diagnostics.push(
                    "F has atoms arbitrarily far out; the continuous-tail path does not apply"
                        .into(),
                );
                return Ok(ConditionReport {
                    id,
                    tolerance,
                    rows: Vec::new(),
                    verdict: Verdict::Inconclusive,
                    final_value: f64::NAN,
                    trend: None,
                    clamped,
                    diagnostics,
                });
            }
            Some(kappa) => {
                let before = points.len();
                points.retain(|p| p.ln_t > kappa.ln());
                if points.len() < before {
                    diagnostics.push(format!(
                        "{} grid points with t_n <= {kappa} skipped (F not continuous there)",
                        before - points.len()
                    ));
                }
                if points.is_empty() {
                    return Ok(ConditionReport {
                        id,
                        tolerance,
                        rows: Vec::new(),
                        verdict: Verdict::Inconclusive,
                        final_value: f64::NAN,
                        trend: None,
                        clamped,
                        diagnostics,
                    });
                }
            }
        }
    }

    if id.is_pointwise() {
        let rows = points
            .iter()
            .map(|p| Ok((p.n, slack(id, plan, p)?)))
            .collect::<Result<Vec<_>, TrimError>>()?;
        let failing: Vec<u64> = rows.iter().filter(|r| r.1 < 0.0).map(|r| r.0).collect();
        let verdict = if failing.is_empty() {
            Verdict::Satisfied
        } else {
            diagnostics.push(format!(
                "inequality fails at {} grid points, first at n = {}",
                failing.len(),
                failing[0]
            ));
            Verdict::Violated
        };
        let final_value = rows.last().map_or(f64::NAN, |r| r.1);
        return Ok(ConditionReport {
            id,
            tolerance,
            rows,
            verdict,
            final_value,
            trend: None,
            clamped,
            diagnostics,
        });
    }

    let zero_d: Vec<u64> = points
        .iter()
        .filter(|p| p.ln_d == f64::NEG_INFINITY)
        .map(|p| p.n)
        .collect();
    let rows: Vec<(u64, f64)> = points
        .iter()
        .map(|p| (p.n, limit_value(id, plan, p)))
        .collect();
    let final_value = rows.last().map_or(f64::NAN, |r| r.1);
    let trend = log_log_slope(&rows[rows.len() / 2..]);
    let verdict = if !zero_d.is_empty() {
        diagnostics.push(format!("d_n = 0 at n = {}", zero_d[0]));
        Verdict::Inconclusive
    } else if final_value < tolerance && trend.is_some_and(|t| t < 0.0) {
        Verdict::Satisfied
    } else {
        if final_value >= tolerance {
            diagnostics.push(format!(
                "final value {final_value:.4e} is not below the tolerance {tolerance:e}"
            ));
        }
        if trend.is_some_and(|t| t >= 0.0) {
            diagnostics.push("quantity does not decrease over the last half of the grid".into());
        }
        Verdict::Inconclusive
    };
    Ok(ConditionReport {
        id,
        tolerance,
        rows,
        verdict,
        final_value,
        trend,
        clamped,
        diagnostics,
    })
}
