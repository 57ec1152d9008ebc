use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the numerical core.
///
/// Validation problems (bad inputs, inconsistent dimensions) are kept apart
/// from numerical failures so front ends can map them to different exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The dataset has no arms.
    EmptyDataset,
    /// An arm has no samples.
    EmptyArm { arm: String },
    /// Two arms share the same identifier.
    DuplicateArm { arm: String },
    /// A reward or input value is NaN or infinite.
    NonFinite { what: &'static str, index: usize },
    /// Empirical standard deviations need at least one arm with two samples.
    UnestimableSigma,
    /// Vector lengths disagree.
    DimensionMismatch { expected: usize, found: usize },
    /// A scalar parameter is outside its admissible range.
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },
    /// The Monte-Carlo threshold is zero; more samples are needed.
    InsufficientSamples { m: usize, delta_prime: f64, minimum: usize },
    /// Bisection did not reach the requested residual.
    NoConvergence { eps: f64, residual: f64, iterations: usize },
    /// A supremum solve failed inside the Monte-Carlo loop.
    SampleSolve { eps: f64, sample: usize, source: alloc::boxed::Box<Error> },
    /// Two reports were produced from different statistics or confidence levels.
    MismatchedReports,
}

impl Error {
    /// True for failures of the numerical routines, false for input validation.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::SampleSolve { .. })
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyDataset => write!(f, "dataset contains no arms"),
            Error::EmptyArm { arm } => write!(f, "arm `{arm}` has no samples (drop it or supply data)"),
            Error::DuplicateArm { arm } => write!(f, "arm `{arm}` appears more than once"),
            Error::NonFinite { what, index } => write!(f, "non-finite {what} at index {index}"),
            Error::UnestimableSigma => write!(
                f,
                "empirical standard deviation needs an arm with at least two samples; pass a fixed sigma instead"
            ),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidParameter { name, value, reason } => write!(f, "invalid {name} = {value}: {reason}"),
            Error::InsufficientSamples { m, delta_prime, minimum } => write!(
                f,
                "M = {m} gives M0 = 0 at level {delta_prime:e}; increase M to at least {minimum}"
            ),
            Error::NoConvergence { eps, residual, iterations } => write!(
                f,
                "trust-region solve at eps = {eps:e} did not converge after {iterations} iterations (residual {residual:e})"
            ),
            Error::SampleSolve { eps, sample, source } => {
                write!(f, "supremum solve failed at eps = {eps:e}, sample {sample}: {source}")
            }
            Error::MismatchedReports => {
                write!(f, "reports were computed on different statistics or confidence levels")
            }
        }
    }
}

impl core::error::Error for Error {}
