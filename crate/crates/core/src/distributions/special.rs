//! Antiderivative of 1/(ln x)^2, needed for the first moment of the
//! `1 - 1/ln x` tail.
//!
//! With u = ln x, d/dx [Ei(u) - x/u] = 1/u^2, so the truncated moment of the
//! log tail is a difference of `g(u) = Ei(u) - e^u/u`.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Beyond this argument the asymptotic series is more accurate than the
/// power series (smallest term ~ sqrt(2 pi u) e^{-u}).
const ASYMPTOTIC_FROM: f64 = 45.0;

/// `Ei(u) - e^u / u` for `u >= 1`.
pub(crate) fn ei_minus_exp_over(u: f64) -> f64 {
    debug_assert!(u >= 1.0);
    if u >= ASYMPTOTIC_FROM {
        u.exp() / (u * u) * asymptotic_tail(u)
    } else {
        exponential_integral(u) - u.exp() / u
    }
}

/// ln(Ei(u) - e^u/u), evaluated without overflow for large u.
pub(crate) fn ln_ei_minus_exp_over(u: f64) -> f64 {
    if u >= ASYMPTOTIC_FROM {
        u - 2.0 * u.ln() + asymptotic_tail(u).ln()
    } else {
        ei_minus_exp_over(u).ln()
    }
}

/// sum_{k>=0} (k+1)!/u^k, truncated at the smallest term.
fn asymptotic_tail(u: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        let next = term * (k + 1.0) / u;
        if next >= term || next < 1e-18 * sum {
            break;
        }
        sum += next;
        term = next;
        k += 1.0;
    }
    sum
}

/// Ei(u) for 0 < u < ~50 by the convergent series gamma + ln u + sum u^k/(k k!).
fn exponential_integral(u: f64) -> f64 {
    let mut term = 1.0; // u^k / k!
    let mut series = 0.0;
    let mut k = 1.0;
    loop {
        term *= u / k;
        let add = term / k;
        series += add;
        if add < 1e-18 * series {
            break;
        }
        k += 1.0;
    }
    EULER_GAMMA + u.ln() + series
}
