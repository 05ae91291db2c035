//! Nonnegative distribution functions with infinite mean.
//!
//! Every law exposes the functionals the trimming theorems consume: the
//! right-continuous distribution function F, its left limit, the generalized
//! inverse `F^{<-}(y) = inf{x : F(x) >= y}`, the truncated first moment
//! `int_{[0,t]} x dF(x)` (atoms at `t` included) and inverse-transform
//! sampling.
//!
//! Thresholds that sit beyond the double range (the squared-powers example
//! reaches 2^{1369} on realistic grids) are addressed as [`Threshold::Atom`]
//! and evaluated in log space by [`DistributionSpec::evaluate`].

mod atomic;
mod special;
mod tabulated;

pub use atomic::{Atom, AtomicStep, STEP_EXAMPLE_MAX_F64_INDEX};
pub use tabulated::{Breakpoint, Tabulated};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("{what} exceeds the double range")]
    OutOfRange { what: String },
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("atom thresholds only apply to atomic distributions")]
    NotAtomic,
    #[error("infinite-mean check failed: {0}")]
    FiniteMean(String),
}

/// Value of the generalized inverse; `Infinite` only for `y = 1` with
/// unbounded support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantile {
    Finite(f64),
    Infinite,
}

impl Quantile {
    pub fn finite(self) -> Option<f64> {
        match self {
            Quantile::Finite(x) => Some(x),
            Quantile::Infinite => None,
        }
    }
}

/// A truncation level t_n: either a plain value or the k-th atom (1-based)
/// of an atomic law, which may lie beyond the double range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Value(f64),
    Atom(u64),
}

/// Everything the trimming layer needs to know about F at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdFacts {
    pub ln_t: f64,
    /// `None` when t exceeds the double range.
    pub t: Option<f64>,
    pub cdf: f64,
    pub cdf_left: f64,
    /// 1 - F(t)
    pub survival: f64,
    /// 1 - F(t-)
    pub survival_left: f64,
    /// ln of the truncated moment over [0, t]; -inf if it vanishes.
    pub ln_moment: f64,
    /// F^{<-}(F(t)) = t
    pub fixed_point: bool,
}

/// 1 - F(x) = (x/scale)^{-alpha} for x >= scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoTail {
    alpha: f64,
    scale: f64,
}

impl ParetoTail {
    pub fn new(alpha: f64, scale: f64) -> Result<Self, DistError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(DistError::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "must lie in (0, 1) for an infinite mean",
            });
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(DistError::InvalidParameter {
                name: "scale",
                value: scale,
                reason: "must be positive and finite",
            });
        }
        Ok(Self { alpha, scale })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn survival(&self, x: f64) -> f64 {
        if x < self.scale {
            1.0
        } else {
            (x / self.scale).powf(-self.alpha)
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x < self.scale {
            0.0
        } else {
            1.0 - (x / self.scale).powf(-self.alpha)
        }
    }

    fn quantile(&self, y: f64) -> Result<Quantile, DistError> {
        if y <= 0.0 {
            return Ok(Quantile::Finite(self.scale));
        }
        if y >= 1.0 {
            return Ok(Quantile::Infinite);
        }
        let x = self.scale * (1.0 - y).powf(-1.0 / self.alpha);
        if x.is_finite() {
            Ok(Quantile::Finite(x))
        } else {
            Err(DistError::OutOfRange {
                what: format!("Pareto quantile({y})"),
            })
        }
    }

    fn moment_factor(&self) -> f64 {
        self.alpha * self.scale / (1.0 - self.alpha)
    }

    // alpha s/(1-alpha) * ((t/s)^{1-alpha} - 1)
    fn truncated_moment(&self, t: f64) -> f64 {
        if t < self.scale {
            return 0.0;
        }
        self.moment_factor() * ((1.0 - self.alpha) * (t / self.scale).ln()).exp_m1()
    }

    fn ln_truncated_moment(&self, ln_t: f64) -> f64 {
        let x = (1.0 - self.alpha) * (ln_t - self.scale.ln());
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        // ln(e^x - 1) without overflow
        let ln_expm1 = if x > 1.0 {
            x + (-(-x).exp()).ln_1p()
        } else {
            x.exp_m1().ln()
        };
        self.moment_factor().ln() + ln_expm1
    }

    #[inline]
    fn sample(&self, u: f64) -> f64 {
        self.scale * (1.0 - u).powf(-1.0 / self.alpha)
    }
}

/// F(x) = 1 - 1/ln x for x >= threshold, 0 below; an atom of mass
/// 1 - 1/ln(threshold) sits at the threshold unless it equals e.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogTail {
    threshold: f64,
}

impl LogTail {
    pub fn new(threshold: f64) -> Result<Self, DistError> {
        if !(threshold >= std::f64::consts::E && threshold.is_finite()) {
            return Err(DistError::InvalidParameter {
                name: "threshold",
                value: threshold,
                reason: "must be finite and at least e so that 1 - 1/ln x is a probability",
            });
        }
        Ok(Self { threshold })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    fn base_mass(&self) -> f64 {
        1.0 - 1.0 / self.threshold.ln()
    }

    fn cdf(&self, x: f64) -> f64 {
        if x < self.threshold {
            0.0
        } else {
            1.0 - 1.0 / x.ln()
        }
    }

    fn survival(&self, x: f64) -> f64 {
        if x < self.threshold {
            1.0
        } else {
            1.0 / x.ln()
        }
    }

    fn quantile(&self, y: f64) -> Result<Quantile, DistError> {
        if y <= self.base_mass() {
            return Ok(Quantile::Finite(self.threshold));
        }
        if y >= 1.0 {
            return Ok(Quantile::Infinite);
        }
        let x = (1.0 / (1.0 - y)).exp();
        if x.is_finite() {
            Ok(Quantile::Finite(x))
        } else {
            Err(DistError::OutOfRange {
                what: format!("log-tail quantile({y})"),
            })
        }
    }

    fn truncated_moment(&self, t: f64) -> f64 {
        if t < self.threshold {
            return 0.0;
        }
        let (a, l) = (self.threshold.ln(), t.ln());
        self.threshold * self.base_mass() + special::ei_minus_exp_over(l)
            - special::ei_minus_exp_over(a)
    }

    fn ln_truncated_moment(&self, ln_t: f64) -> f64 {
        let a = self.threshold.ln();
        if ln_t < a {
            return f64::NEG_INFINITY;
        }
        if ln_t < 700.0 {
            return self.truncated_moment(ln_t.exp()).ln();
        }
        // The upper antiderivative dominates everything else by e^{-600}.
        special::ln_ei_minus_exp_over(ln_t)
    }

    #[inline]
    fn sample(&self, u: f64) -> f64 {
        if u <= self.base_mass() {
            self.threshold
        } else {
            (1.0 / (1.0 - u)).exp()
        }
    }
}

/// A nonnegative law with (in intended use) infinite mean.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    AtomicStep(AtomicStep),
    ParetoTail(ParetoTail),
    LogTail(LogTail),
    Tabulated(Tabulated),
}

impl DistributionSpec {
    /// The builtin squared-powers step law ("step-example-1.2").
    pub fn step_example() -> Self {
        Self::AtomicStep(AtomicStep::squared_powers())
    }

    pub fn pareto(alpha: f64, scale: f64) -> Result<Self, DistError> {
        ParetoTail::new(alpha, scale).map(Self::ParetoTail)
    }

    pub fn log_tail(threshold: f64) -> Result<Self, DistError> {
        LogTail::new(threshold).map(Self::LogTail)
    }

    pub fn atomic(atoms: &[Atom]) -> Result<Self, DistError> {
        AtomicStep::from_atoms(atoms).map(Self::AtomicStep)
    }

    /// Degenerate law at `x`; finite mean, meant for tests only.
    pub fn point_mass(x: f64) -> Result<Self, DistError> {
        Self::atomic(&[Atom {
            location: x,
            mass: 1.0,
        }])
    }

    pub fn tabulated(points: Vec<Breakpoint>, tail_alpha: f64) -> Result<Self, DistError> {
        Tabulated::new(points, tail_alpha).map(Self::Tabulated)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::AtomicStep(a) if a.is_squared_powers() => "step-example-1.2",
            Self::AtomicStep(_) => "atomic",
            Self::ParetoTail(_) => "pareto",
            Self::LogTail(_) => "log-tail",
            Self::Tabulated(_) => "tabulated",
        }
    }

    pub fn support_inf(&self) -> f64 {
        match self {
            Self::AtomicStep(a) => a.first_location(),
            Self::ParetoTail(p) => p.scale,
            Self::LogTail(l) => l.threshold,
            Self::Tabulated(t) => t.support_start(),
        }
    }

    /// F(x) = P(X <= x).
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::AtomicStep(a) => a.cumulative(a.count_at_or_below(x)),
            Self::ParetoTail(p) => p.cdf(x),
            Self::LogTail(l) => l.cdf(x),
            Self::Tabulated(t) => t.cdf(x),
        }
    }

    /// Left limit of F at x, i.e. P(X < x).
    pub fn cdf_left(&self, x: f64) -> f64 {
        match self {
            Self::AtomicStep(a) => a.cumulative(a.count_below(x)),
            Self::ParetoTail(p) => p.cdf(x),
            Self::LogTail(l) => {
                if x <= l.threshold {
                    0.0
                } else {
                    l.cdf(x)
                }
            }
            Self::Tabulated(t) => t.cdf_left(x),
        }
    }

    /// Mass of the atom at x (zero where F is continuous).
    pub fn atom_mass(&self, x: f64) -> f64 {
        match self {
            Self::AtomicStep(a) => {
                let k = a.count_at_or_below(x);
                if k > 0 && a.location(k) == Some(x) {
                    a.mass(k)
                } else {
                    0.0
                }
            }
            _ => self.cdf(x) - self.cdf_left(x),
        }
    }

    /// 1 - F(x).
    pub fn survival(&self, x: f64) -> f64 {
        match self {
            Self::AtomicStep(a) => a.tail(a.count_at_or_below(x)),
            Self::ParetoTail(p) => p.survival(x),
            Self::LogTail(l) => l.survival(x),
            Self::Tabulated(t) => t.survival(x),
        }
    }

    /// Generalized inverse `inf{x : F(x) >= y}`; `y = 0` gives the support
    /// infimum.
    pub fn quantile(&self, y: f64) -> Result<Quantile, DistError> {
        if !(0.0..=1.0).contains(&y) {
            return Err(DistError::ProbabilityOutOfRange(y));
        }
        match self {
            Self::AtomicStep(a) => match a.first_reaching(y) {
                None => Ok(Quantile::Infinite),
                Some(k) => {
                    a.location(k)
                        .map(Quantile::Finite)
                        .ok_or_else(|| DistError::OutOfRange {
                            what: format!("atom {k} (quantile of {y})"),
                        })
                }
            },
            Self::ParetoTail(p) => p.quantile(y).map(|q| self.snap(q, y)),
            Self::LogTail(l) => l.quantile(y).map(|q| self.snap(q, y)),
            Self::Tabulated(t) => t.quantile(y).map(|q| self.snap(q, y)),
        }
    }

    /// Move a closed-form quantile to the smallest double `z` with
    /// `cdf(z) >= y`, so the Galois relation holds exactly for the
    /// implemented `cdf` despite rounding in the inversion.
    fn snap(&self, q: Quantile, y: f64) -> Quantile {
        let x = match q {
            Quantile::Finite(x) if x > 0.0 && y > 0.0 => x,
            _ => return q,
        };
        let max = f64::MAX.to_bits();
        let ok = |b: u64| self.cdf(f64::from_bits(b)) >= y;
        let start = x.to_bits();
        let (mut lo, mut hi) = if ok(start) {
            let mut hi = start;
            let mut step = 1u64;
            loop {
                let cand = hi.saturating_sub(step);
                if !ok(cand) {
                    break (cand, hi);
                }
                if cand == 0 {
                    return Quantile::Finite(0.0);
                }
                hi = cand;
                step *= 2;
            }
        } else {
            let mut lo = start;
            let mut step = 1u64;
            loop {
                let cand = lo.saturating_add(step).min(max);
                if ok(cand) {
                    break (lo, cand);
                }
                if cand == max {
                    return q;
                }
                lo = cand;
                step *= 2;
            }
        };
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Quantile::Finite(f64::from_bits(hi))
    }

    /// Generalized inverse as a threshold; atomic laws answer with the atom
    /// index, so the result is available beyond the double range.
    pub fn quantile_threshold(&self, y: f64) -> Result<Threshold, DistError> {
        if !(0.0..=1.0).contains(&y) {
            return Err(DistError::ProbabilityOutOfRange(y));
        }
        match self {
            Self::AtomicStep(a) => {
                a.first_reaching(y)
                    .map(Threshold::Atom)
                    .ok_or_else(|| DistError::OutOfRange {
                        what: format!("quantile({y}) of an unbounded atomic law"),
                    })
            }
            _ => match self.quantile(y)? {
                Quantile::Finite(x) => Ok(Threshold::Value(x)),
                Quantile::Infinite => Err(DistError::OutOfRange {
                    what: format!("quantile({y})"),
                }),
            },
        }
    }

    /// `int_{[0,t]} x dF(x)`, atoms at t included.
    pub fn truncated_moment(&self, t: f64) -> f64 {
        match self {
            Self::AtomicStep(a) => a.prefix_moment(a.count_at_or_below(t)),
            Self::ParetoTail(p) => p.truncated_moment(t),
            Self::LogTail(l) => l.truncated_moment(t),
            Self::Tabulated(tab) => tab.truncated_moment(t),
        }
    }

    /// Inverse-transform draw for `u` in (0, 1). Values beyond the double
    /// range saturate to `+inf`.
    #[inline]
    pub fn sample(&self, u: f64) -> f64 {
        match self {
            Self::ParetoTail(p) => p.sample(u),
            Self::LogTail(l) => l.sample(u),
            Self::AtomicStep(a) => a
                .first_reaching(u)
                .and_then(|k| a.location(k))
                .unwrap_or(f64::INFINITY),
            Self::Tabulated(t) => match t.quantile(u) {
                Ok(Quantile::Finite(x)) => x,
                _ => f64::INFINITY,
            },
        }
    }

    /// Whether F(x) < F(t) for all x < t, equivalently F^{<-}(F(t)) = t.
    pub fn is_fixed_point(&self, t: f64) -> bool {
        match self {
            Self::AtomicStep(a) => {
                let k = a.count_at_or_below(t);
                k > 0 && a.location(k) == Some(t)
            }
            Self::ParetoTail(p) => t >= p.scale,
            Self::LogTail(l) => t >= l.threshold,
            Self::Tabulated(tab) => tab.is_fixed_point(t),
        }
    }

    /// F is continuous on (kappa, inf); `None` if atoms never stop.
    pub fn continuous_beyond(&self) -> Option<f64> {
        match self {
            Self::AtomicStep(a) => a.atom_count().and_then(|k| a.location(k)),
            Self::ParetoTail(p) => Some(p.scale),
            Self::LogTail(l) => Some(l.threshold),
            Self::Tabulated(t) => Some(t.last_atom().unwrap_or(t.support_start())),
        }
    }

    /// Evaluate F, its left limit, the tail masses and the log truncated
    /// moment at a threshold.
    pub fn evaluate(&self, threshold: Threshold) -> Result<ThresholdFacts, DistError> {
        match threshold {
            Threshold::Atom(k) => {
                let Self::AtomicStep(a) = self else {
                    return Err(DistError::NotAtomic);
                };
                if k == 0 || a.atom_count().is_some_and(|n| k > n) {
                    return Err(DistError::OutOfRange {
                        what: format!("atom index {k}"),
                    });
                }
                Ok(ThresholdFacts {
                    ln_t: a.ln_location(k),
                    t: a.location(k),
                    cdf: a.cumulative(k),
                    cdf_left: a.cumulative(k - 1),
                    survival: a.tail(k),
                    survival_left: if k == 1 { 1.0 } else { a.tail(k - 1) },
                    ln_moment: a.ln_prefix_moment(k),
                    fixed_point: true,
                })
            }
            Threshold::Value(t) => {
                if !(t.is_finite() && t > 0.0) {
                    return Err(DistError::InvalidParameter {
                        name: "threshold",
                        value: t,
                        reason: "must be positive and finite",
                    });
                }
                let ln_moment = match self {
                    Self::ParetoTail(p) => p.ln_truncated_moment(t.ln()),
                    Self::LogTail(l) => l.ln_truncated_moment(t.ln()),
                    _ => self.truncated_moment(t).ln(),
                };
                let survival_left = match self {
                    Self::Tabulated(tab) => tab.survival_left(t),
                    Self::AtomicStep(a) => {
                        let k = a.count_below(t);
                        if k == 0 {
                            1.0
                        } else {
                            a.tail(k)
                        }
                    }
                    _ => 1.0 - self.cdf_left(t),
                };
                let survival_left = match self {
                    Self::ParetoTail(p) => p.survival(t),
                    Self::LogTail(l) if t > l.threshold => l.survival(t),
                    _ => survival_left,
                };
                Ok(ThresholdFacts {
                    ln_t: t.ln(),
                    t: Some(t),
                    cdf: self.cdf(t),
                    cdf_left: self.cdf_left(t),
                    survival: self.survival(t),
                    survival_left,
                    ln_moment,
                    fixed_point: self.is_fixed_point(t),
                })
            }
        }
    }

    /// Double value of a threshold, or an error when it exceeds the range.
    pub fn threshold_value(&self, threshold: Threshold) -> Result<f64, DistError> {
        match threshold {
            Threshold::Value(t) => Ok(t),
            Threshold::Atom(k) => {
                let Self::AtomicStep(a) = self else {
                    return Err(DistError::NotAtomic);
                };
                a.location(k).ok_or_else(|| DistError::OutOfRange {
                    what: format!("atom {k}"),
                })
            }
        }
    }

    /// Heuristic infinite-mean check: the truncated moment keeps growing,
    /// with no plateau at machine precision, along atom locations (atomic
    /// laws) or a doubling grid in the tail (everything else) up to
    /// `horizon`. Passing is evidence, not proof.
    pub fn validate_infinite_mean(&self, horizon: f64) -> Result<(), DistError> {
        let grid: Vec<f64> = match self {
            Self::AtomicStep(a) => {
                let last = match a.atom_count() {
                    Some(n) => n,
                    None => a.count_at_or_below(horizon),
                };
                if let Some(n) = a.atom_count() {
                    let tail = a.tail(n);
                    if tail <= 0.0 {
                        return Err(DistError::FiniteMean(format!(
                            "all mass sits on {n} atoms; the mean is finite"
                        )));
                    }
                }
                (1..=last).filter_map(|k| a.location(k)).collect()
            }
            _ => {
                let start = match self {
                    Self::Tabulated(t) => t.tail_start(),
                    _ => self.support_inf(),
                };
                let mut g = Vec::new();
                let mut t = start * 2.0;
                while t <= horizon {
                    g.push(t);
                    t *= 2.0;
                }
                g
            }
        };
        if grid.len() < 2 {
            return Err(DistError::FiniteMean(format!(
                "horizon {horizon} too small to observe growth"
            )));
        }
        let mut prev = self.truncated_moment(grid[0]);
        for &t in &grid[1..] {
            let m = self.truncated_moment(t);
            if !(m > prev * (1.0 + 4.0 * f64::EPSILON)) {
                return Err(DistError::FiniteMean(format!(
                    "truncated moment plateaus at t = {t} (value {m})"
                )));
            }
            prev = m;
        }
        Ok(())
    }
}
