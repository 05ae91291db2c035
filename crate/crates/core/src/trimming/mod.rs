//! Trimming plans: the psi class, the correction function c(k, n), the
//! per-n sequences t_n, a_n^-, a_n^+, d_n, b_n, gamma_n and numeric checks
//! of the hypotheses they must meet.

mod condition;
mod plan;
mod psi;

pub use condition::{
    check_condition, log_log_slope, ConditionId, ConditionReport, Verdict, DEFAULT_TOLERANCE,
};
pub use plan::{PlanKind, PlanPoint, ThresholdRule, TrimRule, TrimmingPlan};
pub use psi::{c_eps_psi, log_psi_floor_log, omega_from_psi, Omega, PsiFunction};

use thiserror::Error;

use crate::distributions::DistError;
use crate::grid::GridError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrimError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("t_n is not a fixed point of F^<-(F(.)) at n = {n} (ln t_n = {ln_t})")]
    NotFixedPoint { n: u64, ln_t: f64 },
    #[error("t_n decreases at n = {n}")]
    ThresholdDecreasing { n: u64 },
    #[error("b_n = {b} < a_n^- + c(a_n^-, n) = {required} at n = {n}")]
    PointwiseViolation { n: u64, b: u64, required: f64 },
    #[error("unknown condition id `{0}`")]
    UnknownCondition(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Distribution(#[from] DistError),
}
