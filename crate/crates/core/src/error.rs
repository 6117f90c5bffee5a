use thiserror::Error;

use crate::geometry::ModeIndex;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("weak-field limit violated: M/R = {0} (needs < 0.1 unless overridden)")]
    WeakField(f64),
    #[error("cavity too large for its placement: a0/R = {0} (needs < 1e-3 unless overridden)")]
    Placement(f64),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("mirror excursion eps*sup|f| = {0} must stay below 1")]
    Amplitude(f64),
    #[error("metric degenerate at z = {0}")]
    MetricDegenerate(f64),
    #[error("time {t} outside tabulated range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("point outside the instantaneous cavity")]
    OutsideCavity,
    #[error("Airy modes need gamma > 0")]
    FlatAiry,
    #[error("mode {mode}: Airy coordinate {v} below asymptotic threshold {min}")]
    AsymptoticBranch { mode: ModeIndex, v: f64, min: f64 },
    #[error("mode {0}: no propagating solution in the cavity")]
    Evanescent(ModeIndex),
    #[error("mode sets or contexts do not match")]
    Mismatch,
    #[error("mode {0} is not part of the mode set")]
    UnknownMode(ModeIndex),
    #[error("root finding failed: {0}")]
    Root(&'static str),
    #[error("quadrature did not converge: estimate {estimate:e} above tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("step budget exhausted at t = {0}")]
    StepBudget(f64),
    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),
    #[error("Richardson extrapolation disagreement {0:e}")]
    Extrapolation(f64),
    #[error("not supported: {0}")]
    Unsupported(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    /// True for failures of an iterative numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Root(_)
                | Error::Quadrature { .. }
                | Error::StepUnderflow(_)
                | Error::StepBudget(_)
                | Error::NonFinite(_)
                | Error::Extrapolation(_)
        )
    }
}
