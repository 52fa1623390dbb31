//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented range.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNotConverged { achieved: f64, requested: f64 },

    #[error("Fourier argument {phi} exceeds the configured maximum {max}")]
    PhiOutOfRange { phi: f64, max: f64 },

    /// The Riccati state stopped being finite, typically near a moving singularity.
    #[error("Riccati solution blew up at t = {time} (phi = {phi})")]
    RiccatiBlowUp { time: f64, phi: f64 },

    #[error("Riccati step-doubling did not reach tolerance at phi = {phi}: estimated error {achieved:.3e} with {steps} steps")]
    RiccatiNotConverged { phi: f64, achieved: f64, steps: usize },

    /// The Fourier integrand envelope never fell below the truncation threshold.
    #[error("Fourier integral not truncated before phi_max = {phi_max}: partial value {partial}, tail bound {bound:.3e}")]
    TruncationNotReached { partial: f64, bound: f64, phi_max: f64 },

    #[error("non-finite state on path {path} at step {step} (t = {time})")]
    NonFiniteState { path: usize, step: usize, time: f64 },

    #[error("negative variance {value:.3e} on path {path} at step {step} (t = {time})")]
    NegativeVariance { path: usize, step: usize, time: f64, value: f64 },

    #[error("implicit variance step has non-positive denominator {value} at t = {time}")]
    ImplicitDenominator { time: f64, value: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Domain(_)
                | Error::PhiOutOfRange { .. }
                | Error::Config(_)
                | Error::Json(_)
                | Error::Io(_)
        )
    }

    /// Short machine-readable tag used in JSON error bodies and FFI status mapping.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Domain(_) => "domain",
            Error::QuadratureNotConverged { .. } => "quadrature_not_converged",
            Error::PhiOutOfRange { .. } => "phi_out_of_range",
            Error::RiccatiBlowUp { .. } => "riccati_blow_up",
            Error::RiccatiNotConverged { .. } => "riccati_not_converged",
            Error::TruncationNotReached { .. } => "truncation_not_reached",
            Error::NonFiniteState { .. } => "non_finite_state",
            Error::NegativeVariance { .. } => "negative_variance",
            Error::ImplicitDenominator { .. } => "implicit_denominator",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
