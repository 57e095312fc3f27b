//! Error type shared by every module.

use thiserror::Error;

/// Failure modes of the library.
///
/// The three families map onto the command-line exit codes: validation and
/// domain errors are caller mistakes (exit 2), numerical errors are failures
/// of an algorithm on admissible input (exit 3).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the mathematical domain of a function (pole, log
    /// singularity, wrong sign).
    #[error("domain error: {0}")]
    Domain(String),
    /// Ill-formed parameters or potentials.
    #[error("validation error: {0}")]
    Validation(String),
    /// An adaptive scheme exhausted its budget; the best estimate so far is
    /// attached.
    #[error("no convergence: {what} (estimate {value:e}, error {error:e})")]
    NonConvergence {
        /// What was being computed.
        what: String,
        /// Best available value (modulus for complex quantities).
        value: f64,
        /// Error estimate attached to `value`.
        error: f64,
    },
    /// Any other numerical failure (root not bracketed, cross-check
    /// disagreement, decay violation, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors caused by invalid input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Validation(_))
    }
}

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
