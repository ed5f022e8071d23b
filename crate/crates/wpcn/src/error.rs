//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by solvers, oracles and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument below the principal-branch domain of the Lambert W function.
    #[error("lambert_w0: argument {value} below the principal-branch domain [-1/e, inf)")]
    LambertDomain { value: f64 },

    /// An exponential would overflow; callers must switch to a log-domain form.
    #[error("exponential overflow: exp({value}) exceeds the supported range (limit {limit})")]
    Overflow { value: f64, limit: f64 },

    /// Instance violates a model invariant (nonpositive gain, bad efficiency, ...).
    #[error("invalid instance: {reason}")]
    InvalidInstance { reason: String },

    /// A time allocation does not have the K+1 entries the instance requires.
    #[error("allocation has {got} slots, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    /// The completion-time line does not meet the V-curve (two-root regime only).
    #[error("no intersection: completion {completion} is below the tangent minimum {minimum}")]
    NoIntersection { completion: f64, minimum: f64 },

    /// A demand cannot be met with any finite slot length.
    #[error("infeasible: prior completion {completion} does not exceed the asymptote {asymptote}")]
    Infeasible { completion: f64, asymptote: f64 },

    /// Iterative scheme hit its iteration cap before reaching tolerance.
    #[error("failed to converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    /// A defensive numerical postcondition failed.
    #[error("numerical check failed: {reason}")]
    Numerical { reason: String },

    /// Brute-force oracles only scale to small user counts.
    #[error("oracle supports at most {limit} users, got {got}")]
    OracleSize { limit: usize, got: usize },

    /// A Monte-Carlo cell failed; the whole run aborts so draws stay paired.
    #[error("simulation failed at realization {realization}, scheme {scheme}: {source}")]
    Simulation {
        realization: usize,
        scheme: String,
        #[source]
        source: Box<Error>,
    },

    /// Bad sweep or CLI configuration.
    #[error("invalid configuration: {reason}")]
    Config { reason: String },

    /// Referenced config file does not exist (CLI exit code 3).
    #[error("file not found: {path}")]
    FileNotFound { path: String },

    /// Output or filesystem failure (CLI exit code 4).
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid_instance(reason: impl Into<String>) -> Self {
        Error::InvalidInstance {
            reason: reason.into(),
        }
    }

    pub(crate) fn config(reason: impl Into<String>) -> Self {
        Error::Config {
            reason: reason.into(),
        }
    }
}
