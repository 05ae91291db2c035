//! Bernstein-type concentration bounds and the Borel-Cantelli budget of the
//! truncated-sum law. All bounds are computed in log space.

use std::f64::consts::{LN_10, LN_2};
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::trimming::{TrimError, TrimmingPlan};

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("invalid bound input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Trim(#[from] TrimError),
    #[error("writing budget table: {0}")]
    Csv(#[from] csv::Error),
}

/// Deviation `t`, variance of the partial sum, a.s. bound `m` on the
/// centred summands and the number of summands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernsteinInput {
    pub t: f64,
    pub variance: f64,
    pub m: f64,
    pub n: u64,
}

impl BernsteinInput {
    fn validate(&self) -> Result<(), BoundsError> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(BoundsError::InvalidInput(format!(
                "t = {} must be positive",
                self.t
            )));
        }
        if !(self.variance >= 0.0 && self.variance.is_finite()) {
            return Err(BoundsError::InvalidInput(format!(
                "variance = {} must be nonnegative",
                self.variance
            )));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(BoundsError::InvalidInput(format!(
                "M = {} must be positive",
                self.m
            )));
        }
        Ok(())
    }
}

/// A probability bound with its raw value (may exceed one), the value
/// clamped to [0, 1] and its natural and decimal logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    pub raw: f64,
    pub clamped: f64,
    pub ln: f64,
    pub log10: f64,
}

impl BoundValue {
    fn from_ln(ln: f64) -> Self {
        let raw = ln.exp();
        Self {
            raw,
            clamped: raw.min(1.0),
            ln,
            log10: ln / LN_10,
        }
    }
}

/// P(max_{k<=n} |Z_k - E Z_k| >= t) <= 2 exp(-t^2 / (2 V + (2/3) M t)).
pub fn bernstein_max_tail(input: &BernsteinInput) -> Result<BoundValue, BoundsError> {
    input.validate()?;
    let t = input.t;
    let expo = t * t / (2.0 * input.variance + 2.0 / 3.0 * input.m * t);
    Ok(BoundValue::from_ln(LN_2 - expo))
}

/// 3 kappa^2 / (6 + 2 kappa)
pub fn relative_rate(kappa: f64) -> f64 {
    3.0 * kappa * kappa / (6.0 + 2.0 * kappa)
}

/// For nonnegative i.i.d. summands bounded by `k`:
/// P(max |Z_j - E Z_j| >= kappa E Z_n) <= 2 exp(-3 kappa^2/(6 + 2 kappa) E Z_n / K).
pub fn bernstein_relative(kappa: f64, mean_total: f64, k: f64) -> Result<BoundValue, BoundsError> {
    for (name, v) in [("kappa", kappa), ("mean_total", mean_total), ("K", k)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(BoundsError::InvalidInput(format!(
                "{name} = {v} must be positive"
            )));
        }
    }
    Ok(BoundValue::from_ln(
        LN_2 - relative_rate(kappa) * mean_total / k,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetRow {
    pub n: u64,
    /// 3 eps^2 / (6 + 2 eps) * d_n / t_n
    pub exponent_arg: f64,
    pub log10_summand: f64,
    /// Running sum of the summands over the grid rows so far.
    pub partial_sum: f64,
    /// summand <= 1 / psi~(n)
    pub below_reciprocal_psi: bool,
}

/// Summands exp(-3 eps^2/(6+2 eps) d_n/t_n) along a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetTable {
    pub eps: f64,
    pub rows: Vec<BudgetRow>,
    /// Every row of the last half of the grid is below 1/psi~(n).
    pub tail_below_reciprocal_psi: bool,
}

impl BudgetTable {
    /// CSV with columns n, exponent_arg, log10_summand, partial_sum.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), BoundsError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["n", "exponent_arg", "log10_summand", "partial_sum"])?;
        for r in &self.rows {
            out.write_record([
                r.n.to_string(),
                format!("{:.17e}", r.exponent_arg),
                format!("{:.17e}", r.log10_summand),
                format!("{:.17e}", r.partial_sum),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Borel-Cantelli budget of the relative deviation `eps` of the truncated
/// sums, compared pointwise against 1/psi~(n) of the plan.
pub fn borel_cantelli_budget(
    plan: &TrimmingPlan,
    eps: f64,
    grid: &[u64],
) -> Result<BudgetTable, BoundsError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(BoundsError::InvalidInput(format!(
            "eps = {eps} must be positive"
        )));
    }
    let rate = relative_rate(eps);
    let mut rows = Vec::with_capacity(grid.len());
    let mut partial = 0.0;
    for p in plan.points(grid)? {
        let exponent_arg = rate * (p.ln_d - p.ln_t).exp();
        partial += (-exponent_arg).exp();
        rows.push(BudgetRow {
            n: p.n,
            exponent_arg,
            log10_summand: -exponent_arg / LN_10,
            partial_sum: partial,
            below_reciprocal_psi: exponent_arg >= plan.psi_tilde.ln_eval(p.n as f64),
        });
    }
    let tail_below_reciprocal_psi = !rows.is_empty()
        && rows[rows.len() / 2..]
            .iter()
            .all(|r| r.below_reciprocal_psi);
    Ok(BudgetTable {
        eps,
        rows,
        tail_below_reciprocal_psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionSpec;
    use crate::trimming::ThresholdRule;

    #[test]
    fn max_tail_reference_value() {
        let b = bernstein_max_tail(&BernsteinInput {
            t: 10.0,
            variance: 25.0,
            m: 1.0,
            n: 100,
        })
        .unwrap();
        let expected = 2.0 * (-100.0f64 / (50.0 + 20.0 / 3.0)).exp();
        assert!((b.raw - expected).abs() < 1e-15);
        assert!((b.raw - 0.34247).abs() < 1e-5);
        let tiny = bernstein_max_tail(&BernsteinInput {
            t: 1e-9,
            variance: 1.0,
            m: 1.0,
            n: 1,
        })
        .unwrap();
        assert!((tiny.raw - 2.0).abs() < 1e-12);
        assert_eq!(tiny.clamped, 1.0);
    }

    #[test]
    fn relative_reference_values() {
        let b = bernstein_relative(1.0, 100.0, 1.0).unwrap();
        assert!((b.ln - (LN_2 - 37.5)).abs() < 1e-12);
        assert_eq!(relative_rate(1.5), 0.75);
        let huge = bernstein_relative(1.0, 1e5, 1.0).unwrap();
        assert_eq!(huge.raw, 0.0);
        assert!((huge.log10 - (LN_2 - 37_500.0) / LN_10).abs() < 1e-9);
        assert!(bernstein_relative(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn pareto_budget_is_tiny_and_dominated() {
        // with eps = 0.1 the rate is ~0.0048, so the summand only drops below
        // 1/n^2 from n ~ 10^7 on
        let grid = [
            10_000,
            100_000,
            1_000_000,
            10_000_000,
            100_000_000,
            1_000_000_000,
        ];
        let plan = crate::trimming::TrimmingPlan::theorem_1_1(
            DistributionSpec::pareto(0.5, 1.0).unwrap(),
            ThresholdRule::power(0.8),
            0.05,
            &grid,
        )
        .unwrap();
        let t = borel_cantelli_budget(&plan, 0.1, &grid).unwrap();
        // d/t ~ n^{0.6}
        let r = &t.rows[2];
        assert!((r.exponent_arg / (relative_rate(0.1) * 1e6f64.powf(0.6)) - 1.0).abs() < 0.01);
        assert!(t.tail_below_reciprocal_psi);
        let doubled = borel_cantelli_budget(&plan, 0.2, &grid).unwrap();
        for (a, b) in t.rows.iter().zip(&doubled.rows) {
            assert!(b.log10_summand < a.log10_summand);
        }
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,exponent_arg,log10_summand,partial_sum\n"));
        assert_eq!(text.lines().count(), 7);
    }
}
