use serde::{Deserialize, Serialize};

use super::psi::{c_eps_psi, PsiFunction};
use super::TrimError;
use crate::distributions::{DistributionSpec, Threshold};
use crate::grid::ensure_increasing;

/// How the truncation level t_n is produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// t_n = coefficient * n^exponent
    Power { exponent: f64, coefficient: f64 },
    /// t_n = k-th atom with k = floor(n^exponent); the squared-powers law
    /// uses exponent 1/4 - eps/2.
    AtomIndex { exponent: f64 },
    /// t_n = F^{<-}(F(n^exponent)); the default plan uses 1/2 - 2 eps.
    QuantileFixedPoint { exponent: f64 },
}

impl ThresholdRule {
    pub fn power(exponent: f64) -> Self {
        Self::Power {
            exponent,
            coefficient: 1.0,
        }
    }

    pub fn step_example(epsilon: f64) -> Self {
        Self::AtomIndex {
            exponent: 0.25 - epsilon / 2.0,
        }
    }

    pub fn default_rule(epsilon: f64) -> Self {
        Self::QuantileFixedPoint {
            exponent: 0.5 - 2.0 * epsilon,
        }
    }

    pub fn threshold(&self, d: &DistributionSpec, n: u64) -> Result<Threshold, TrimError> {
        let nf = n as f64;
        match *self {
            Self::Power {
                exponent,
                coefficient,
            } => Ok(Threshold::Value(coefficient * nf.powf(exponent))),
            Self::AtomIndex { exponent } => {
                let k = floor_pow(n, exponent).max(1);
                Ok(Threshold::Atom(k))
            }
            Self::QuantileFixedPoint { exponent } => {
                let y = d.cdf(nf.powf(exponent));
                Ok(d.quantile_threshold(y)?)
            }
        }
    }
}

/// floor(n^e), nudged up when powf lands a few ulps below an exact integer.
fn floor_pow(n: u64, e: f64) -> u64 {
    let x = (n as f64).powf(e);
    let k = x.floor();
    if k + 1.0 - x < 8.0 * f64::EPSILON * x {
        k as u64 + 1
    } else {
        k as u64
    }
}

/// How the trimming count b_n is produced from the plan quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum TrimRule {
    /// ceil(a + 9 max{a^{1/2+eps} (ln ln n)^{1/2-eps}, ln ln n})
    Theorem11,
    /// ceil(a + 9 max{a^{1/2+eps} (ln ln n)^{1/2-eps}, ln n}), the bound the
    /// proof actually manipulates.
    Theorem11Proof,
    /// ceil(a^- + factor * c(a^-, n)); factor >= 1 meets the pointwise
    /// hypothesis by construction.
    Correction { factor: f64 },
    /// A fixed count (light trimming).
    Constant { count: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanKind {
    Theorem11,
    Theorem11Proof,
    Default,
    General,
}

impl PlanKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Theorem11 => "theorem-1.1",
            Self::Theorem11Proof => "theorem-1.1-proof",
            Self::Default => "default",
            Self::General => "general",
        }
    }
}

/// Per-n sequences of a trimming plan.
#[derive(Debug, Clone, PartialEq)]
pub struct TrimmingPlan {
    pub kind: PlanKind,
    pub distribution: DistributionSpec,
    pub epsilon: f64,
    pub psi: PsiFunction,
    pub psi_tilde: PsiFunction,
    pub threshold_rule: ThresholdRule,
    pub trim_rule: TrimRule,
}

/// Every plan quantity at one n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanPoint {
    pub n: u64,
    pub threshold: Threshold,
    pub ln_t: f64,
    /// `None` when t_n exceeds the double range.
    pub t: Option<f64>,
    pub cdf_t: f64,
    pub cdf_left_t: f64,
    /// n (1 - F(t_n))
    pub a_minus: f64,
    /// n (1 - F(t_n-))
    pub a_plus: f64,
    /// ln d_n with d_n = n * int_[0, t_n] x dF
    pub ln_d: f64,
    /// Trimming count before clamping to [0, n].
    pub b_unclamped: f64,
    pub b: u64,
    pub b_clamped: bool,
    pub gamma: f64,
    pub gamma_tilde: f64,
}

impl PlanPoint {
    pub fn d(&self) -> f64 {
        self.ln_d.exp()
    }

    /// t_n / d_n, finite even when both overflow.
    pub fn t_over_d(&self) -> f64 {
        (self.ln_t - self.ln_d).exp()
    }
}

fn check_epsilon(epsilon: f64) -> Result<(), TrimError> {
    if epsilon > 0.0 && epsilon < 0.25 {
        Ok(())
    } else {
        Err(TrimError::Domain(format!(
            "epsilon = {epsilon} outside (0, 1/4)"
        )))
    }
}

impl TrimmingPlan {
    fn theorem_psis() -> (PsiFunction, PsiFunction) {
        (
            PsiFunction::Power { rho: 9.0 / 8.0 },
            PsiFunction::Power { rho: 2.0 },
        )
    }

    /// Plan with the b_n formula of the trimmed strong law for a given
    /// threshold rule; psi = n^{9/8}, psi~ = n^2.
    pub fn theorem_1_1(
        d: DistributionSpec,
        threshold_rule: ThresholdRule,
        epsilon: f64,
        grid: &[u64],
    ) -> Result<Self, TrimError> {
        Self::theorem_like(
            PlanKind::Theorem11,
            TrimRule::Theorem11,
            d,
            threshold_rule,
            epsilon,
            grid,
        )
    }

    /// As [`TrimmingPlan::theorem_1_1`] but with ln n in place of ln ln n in
    /// the second argument of the max.
    pub fn theorem_1_1_proof(
        d: DistributionSpec,
        threshold_rule: ThresholdRule,
        epsilon: f64,
        grid: &[u64],
    ) -> Result<Self, TrimError> {
        Self::theorem_like(
            PlanKind::Theorem11Proof,
            TrimRule::Theorem11Proof,
            d,
            threshold_rule,
            epsilon,
            grid,
        )
    }

    /// t_n = F^{<-}(F(n^{1/2-2 eps})) with the theorem b_n.
    pub fn default_rule(
        d: DistributionSpec,
        epsilon: f64,
        grid: &[u64],
    ) -> Result<Self, TrimError> {
        check_epsilon(epsilon)?;
        Self::theorem_like(
            PlanKind::Default,
            TrimRule::Theorem11,
            d,
            ThresholdRule::default_rule(epsilon),
            epsilon,
            grid,
        )
    }

    fn theorem_like(
        kind: PlanKind,
        trim_rule: TrimRule,
        d: DistributionSpec,
        threshold_rule: ThresholdRule,
        epsilon: f64,
        grid: &[u64],
    ) -> Result<Self, TrimError> {
        check_epsilon(epsilon)?;
        let (psi, psi_tilde) = Self::theorem_psis();
        let plan = Self {
            kind,
            distribution: d,
            epsilon,
            psi,
            psi_tilde,
            threshold_rule,
            trim_rule,
        };
        plan.validate_thresholds(grid)?;
        Ok(plan)
    }

    /// Plan with a user trimming rule; the pointwise hypothesis
    /// b_n >= a_n^- + c(a_n^-, n) must hold at every grid point.
    pub fn general(
        d: DistributionSpec,
        threshold_rule: ThresholdRule,
        trim_rule: TrimRule,
        epsilon: f64,
        psi: PsiFunction,
        psi_tilde: PsiFunction,
        grid: &[u64],
    ) -> Result<Self, TrimError> {
        check_epsilon(epsilon)?;
        let plan = Self {
            kind: PlanKind::General,
            distribution: d,
            epsilon,
            psi: psi.validated()?,
            psi_tilde: psi_tilde.validated()?,
            threshold_rule,
            trim_rule,
        };
        let points = plan.validate_thresholds(grid)?;
        for p in &points {
            let required = p.a_minus + plan.c(p.a_minus, p.n)?;
            if (p.b as f64) < required {
                return Err(TrimError::PointwiseViolation {
                    n: p.n,
                    b: p.b,
                    required,
                });
            }
        }
        Ok(plan)
    }

    /// Fixed-point and monotonicity checks of t_n along the grid.
    fn validate_thresholds(&self, grid: &[u64]) -> Result<Vec<PlanPoint>, TrimError> {
        ensure_increasing(grid)?;
        let mut points = Vec::with_capacity(grid.len());
        let mut prev_ln_t = f64::NEG_INFINITY;
        for &n in grid {
            let p = self.point(n)?;
            let facts_fixed = self.distribution.evaluate(p.threshold)?.fixed_point;
            if !facts_fixed {
                return Err(TrimError::NotFixedPoint { n, ln_t: p.ln_t });
            }
            if p.ln_t < prev_ln_t {
                return Err(TrimError::ThresholdDecreasing { n });
            }
            prev_ln_t = p.ln_t;
            points.push(p);
        }
        Ok(points)
    }

    pub fn c(&self, k: f64, n: u64) -> Result<f64, TrimError> {
        c_eps_psi(k, n, self.epsilon, &self.psi)
    }

    pub fn points(&self, grid: &[u64]) -> Result<Vec<PlanPoint>, TrimError> {
        grid.iter().map(|&n| self.point(n)).collect()
    }

    pub fn point(&self, n: u64) -> Result<PlanPoint, TrimError> {
        if n < 3 {
            return Err(TrimError::Domain(format!("plan evaluated at n = {n} < 3")));
        }
        let threshold = self.threshold_rule.threshold(&self.distribution, n)?;
        let f = self.distribution.evaluate(threshold)?;
        let nf = n as f64;
        let a_minus = nf * f.survival;
        let a_plus = nf * f.survival_left;
        let ln_d = nf.ln() + f.ln_moment;
        let eps = self.epsilon;
        let ln_ln = nf.ln().ln();
        let b_unclamped = match self.trim_rule {
            TrimRule::Theorem11 => {
                a_minus + 9.0 * (a_minus.powf(0.5 + eps) * ln_ln.powf(0.5 - eps)).max(ln_ln)
            }
            TrimRule::Theorem11Proof => {
                a_minus + 9.0 * (a_minus.powf(0.5 + eps) * ln_ln.powf(0.5 - eps)).max(nf.ln())
            }
            TrimRule::Correction { factor } => a_minus + factor * self.c(a_minus, n)?,
            TrimRule::Constant { count } => count as f64,
        };
        let ceil = b_unclamped.ceil();
        let b_clamped = !(0.0..=nf).contains(&ceil);
        let b = ceil.clamp(0.0, nf) as u64;
        let bf = b as f64;
        let gamma = (bf - a_minus).max(bf - a_plus + self.c(a_plus, n)?);
        Ok(PlanPoint {
            n,
            threshold,
            ln_t: f.ln_t,
            t: f.t,
            cdf_t: f.cdf,
            cdf_left_t: f.cdf_left,
            a_minus,
            a_plus,
            ln_d,
            b_unclamped,
            b,
            b_clamped,
            gamma,
            gamma_tilde: bf - a_minus,
        })
    }

    /// b_n / n at the last grid point is below `threshold` and b_n / n does
    /// not increase over the last half of the grid.
    pub fn trims_sublinearly(&self, grid: &[u64], threshold: f64) -> Result<bool, TrimError> {
        let pts = self.points(grid)?;
        let frac: Vec<f64> = pts.iter().map(|p| p.b as f64 / p.n as f64).collect();
        let half = &frac[frac.len() / 2..];
        let decreasing = half.first().zip(half.last()).is_some_and(|(a, b)| b <= a);
        Ok(decreasing && *frac.last().unwrap() < threshold)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pareto_plan(grid: &[u64]) -> TrimmingPlan {
        TrimmingPlan::theorem_1_1(
            DistributionSpec::pareto(0.5, 1.0).unwrap(),
            ThresholdRule::power(0.8),
            0.05,
            grid,
        )
        .unwrap()
    }

    #[test]
    fn pareto_sequences_match_closed_forms() {
        let plan = pareto_plan(&[1000, 100_000]);
        for n in [1000u64, 100_000] {
            let p = plan.point(n).unwrap();
            let nf = n as f64;
            assert!((p.a_minus / nf.powf(0.6) - 1.0).abs() < 1e-12);
            assert!((p.d() / (nf * (nf.powf(0.4) - 1.0)) - 1.0).abs() < 1e-12);
            assert_eq!(p.a_minus, p.a_plus);
        }
    }

    #[test]
    fn step_example_counts() {
        let eps = 0.05;
        let grid = [1000, 100_000, 10_000_000];
        let plan = TrimmingPlan::theorem_1_1(
            DistributionSpec::step_example(),
            ThresholdRule::step_example(eps),
            eps,
            &grid,
        )
        .unwrap();
        let p = plan.point(10_000_000).unwrap();
        assert_eq!(p.threshold, Threshold::Atom(37));
        assert_eq!(p.t, None);
        assert!((p.a_minus - 1e7 / (38.0 * 38.0)).abs() < 1e-6);
        assert!(p.ln_d.is_finite());
        // a^+ - a^- = n * mass at t
        let mass = 1.0 / (37.0 * 37.0) - 1.0 / (38.0 * 38.0);
        assert!(((p.a_plus - p.a_minus) - 1e7 * mass).abs() < 1e-6);
    }

    #[test]
    fn vanishing_tail_gives_log_log_trim() {
        // t_n far beyond the sampled mass: a_n ~ 0
        let plan = TrimmingPlan::theorem_1_1(
            DistributionSpec::pareto(0.5, 1.0).unwrap(),
            ThresholdRule::power(40.0),
            0.05,
            &[100],
        )
        .unwrap();
        let p = plan.point(100).unwrap();
        assert!(p.a_minus < 1e-30);
        assert_eq!(p.b, (9.0 * 100f64.ln().ln()).ceil() as u64);
    }

    #[test]
    fn default_rule_on_step_example() {
        let plan =
            TrimmingPlan::default_rule(DistributionSpec::step_example(), 0.1, &[100]).unwrap();
        let p = plan.point(100).unwrap();
        assert_eq!(p.threshold, Threshold::Atom(1));
        assert_eq!(p.t, Some(2.0));
    }

    #[test]
    fn fixed_point_violation_names_n() {
        let err = TrimmingPlan::theorem_1_1(
            DistributionSpec::step_example(),
            ThresholdRule::power(0.5),
            0.05,
            &[16, 100],
        )
        .unwrap_err();
        assert!(matches!(err, TrimError::NotFixedPoint { n: 16, .. }));
        assert!(TrimmingPlan::theorem_1_1(
            DistributionSpec::pareto(0.5, 1.0).unwrap(),
            ThresholdRule::power(0.8),
            0.3,
            &[100],
        )
        .is_err());
    }

    #[test]
    fn general_rejects_light_trimming() {
        let err = TrimmingPlan::general(
            DistributionSpec::pareto(0.5, 1.0).unwrap(),
            ThresholdRule::power(0.8),
            TrimRule::Constant { count: 3 },
            0.05,
            PsiFunction::power(2.0).unwrap(),
            PsiFunction::power(2.0).unwrap(),
            &[1000],
        )
        .unwrap_err();
        assert!(matches!(
            err,
            TrimError::PointwiseViolation { n: 1000, b: 3, .. }
        ));
        assert!(TrimmingPlan::general(
            DistributionSpec::pareto(0.5, 1.0).unwrap(),
            ThresholdRule::power(0.8),
            TrimRule::Correction { factor: 1.0 },
            0.05,
            PsiFunction::power(2.0).unwrap(),
            PsiFunction::power(2.0).unwrap(),
            &[1000, 10_000],
        )
        .is_ok());
    }

    #[test]
    fn b_is_clamped_to_n() {
        let plan = TrimmingPlan::theorem_1_1(
            DistributionSpec::pareto(0.5, 1.0).unwrap(),
            ThresholdRule::power(0.1),
            0.05,
            &[20],
        )
        .unwrap();
        let p = plan.point(20).unwrap();
        assert!(p.b_clamped);
        assert_eq!(p.b, 20);
    }
}
