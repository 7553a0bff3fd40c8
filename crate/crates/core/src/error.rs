use alloc::string::String;

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violates its documented domain.
    #[error("invalid {param}: {reason}")]
    Domain { param: &'static str, reason: String },

    /// A rational function was evaluated on (or within 1e-12 of) a root of
    /// its denominator.
    #[error("evaluation at pole: s = {s} is within tolerance of denominator root {root}")]
    EvaluationAtPole { s: Complex64, root: Complex64 },

    /// `1 + L(jω)` vanished on the frequency grid.
    #[error("closed loop has an imaginary-axis pole near omega = {omega} rad/s")]
    ClosedLoopImaginaryPole { omega: f64 },

    /// The right-half-plane zero coincides with the right-half-plane pole, so
    /// the fragility bound is unbounded.
    #[error("fragility singularity: q = {q} coincides with p = {p} (l0 = l*m/(M+m))")]
    FragilitySingularity { p: f64, q: f64 },

    /// `|T(jω)|` underflowed so `ln|T|` is not finite.
    #[error("integrand singular: |T(j*{omega})| below 1e-300")]
    IntegrandSingular { omega: f64 },

    /// A frequency-domain evaluation produced a non-finite value.
    #[error("non-finite value at omega = {omega} rad/s")]
    NonFinite { omega: f64 },

    /// Interpolation constraints only hold for internally stable loops.
    #[error("interpolation not applicable: closed loop is not stable")]
    InterpolationNotApplicable,

    /// The winding-number computation could not meet its phase-step bound.
    #[error("stability inconclusive: {reason}")]
    Inconclusive { reason: String },

    /// Controller cannot be realized in state-space form.
    #[error("realization error: {0}")]
    Realization(String),

    /// Simulation configuration violates its constraints.
    #[error("invalid simulation config {param}: {reason}")]
    Config { param: &'static str, reason: String },

    /// Every requested sweep point was singular.
    #[error("empty series: every sweep point hit the q = p singularity")]
    EmptySeries,
}

impl Error {
    pub(crate) fn domain(param: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            param,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(param: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            param,
            reason: reason.into(),
        }
    }
}
