use serde::{Deserialize, Serialize};

use super::TrimError;

/// A member of the class of positive functions with summable reciprocals.
/// Membership follows from the parameter domain, which constructors enforce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PsiFunction {
    /// n^rho
    Power { rho: f64 },
    /// n (log(n+1))^rho
    PolyLog { rho: f64 },
    /// base^n
    Exponential { base: f64 },
}

impl PsiFunction {
    pub fn power(rho: f64) -> Result<Self, TrimError> {
        Self::Power { rho }.validated()
    }

    pub fn poly_log(rho: f64) -> Result<Self, TrimError> {
        Self::PolyLog { rho }.validated()
    }

    pub fn exponential(base: f64) -> Result<Self, TrimError> {
        Self::Exponential { base }.validated()
    }

    pub fn validated(self) -> Result<Self, TrimError> {
        let (name, v) = match self {
            Self::Power { rho } => ("rho", rho),
            Self::PolyLog { rho } => ("rho", rho),
            Self::Exponential { base } => ("base", base),
        };
        if v > 1.0 && v.is_finite() {
            Ok(self)
        } else {
            Err(TrimError::Domain(format!(
                "psi parameter {name} = {v} must be finite and > 1"
            )))
        }
    }

    /// ln psi(n).
    pub fn ln_eval(&self, n: f64) -> f64 {
        match *self {
            Self::Power { rho } => rho * n.ln(),
            Self::PolyLog { rho } => n.ln() + rho * n.ln_1p().ln(),
            Self::Exponential { base } => n * base.ln(),
        }
    }

    pub fn eval(&self, n: f64) -> f64 {
        self.ln_eval(n).exp()
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

/// ln psi(floor(ln n)), the fluctuation scale inside the correction function.
pub fn log_psi_floor_log(n: u64, psi: &PsiFunction) -> f64 {
    psi.ln_eval((n as f64).ln().floor())
}

/// c(k, n) = 8 max{k, L}^{1/2+eps} L^{1/2-eps} with L = ln psi(floor(ln n)).
///
/// Accepts any k >= 0 (expected exceedance counts may drop below one); the
/// max makes the value independent of k for k <= L.
pub fn c_eps_psi(k: f64, n: u64, epsilon: f64, psi: &PsiFunction) -> Result<f64, TrimError> {
    check_epsilon(epsilon)?;
    if n < 3 {
        return Err(TrimError::Domain(format!("c(k, n) needs n >= 3, got {n}")));
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(TrimError::Domain(format!(
            "c(k, n) needs finite k >= 0, got {k}"
        )));
    }
    let l = log_psi_floor_log(n, psi);
    if !(l > 0.0) {
        return Err(TrimError::Domain(format!(
            "ln psi(floor(ln {n})) = {l} is not positive"
        )));
    }
    Ok(8.0 * k.max(l).powf(0.5 + epsilon) * l.powf(0.5 - epsilon))
}

/// omega(n) = min{ psi(floor(n log_a b) + j) : j = 0..=ceil(log_a b) }.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Omega {
    psi: PsiFunction,
    ratio: f64,
    span: u64,
}

pub fn omega_from_psi(psi: PsiFunction, a: f64, b: f64) -> Result<Omega, TrimError> {
    if !(a > 1.0 && a.is_finite() && b > 1.0 && b.is_finite()) {
        return Err(TrimError::Domain(format!(
            "omega needs bases a, b > 1, got a = {a}, b = {b}"
        )));
    }
    let ratio = b.ln() / a.ln();
    Ok(Omega {
        psi,
        ratio,
        span: ratio.ceil() as u64,
    })
}

impl Omega {
    pub fn ln_eval(&self, n: u64) -> f64 {
        let base = (n as f64 * self.ratio).floor();
        (0..=self.span)
            .map(|j| self.psi.ln_eval(base + j as f64))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn eval(&self, n: u64) -> f64 {
        let base = (n as f64 * self.ratio).floor();
        (0..=self.span)
            .map(|j| self.psi.eval(base + j as f64))
            .fold(f64::INFINITY, f64::min)
    }
}
