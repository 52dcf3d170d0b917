//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite {what}")]
    NonFinite { what: &'static str },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty {what}")]
    Empty { what: &'static str },

    #[error("tied utilities violate the distinct-values assumption of the exact choice rule")]
    TiedUtilities,

    #[error("truncation bounds out of order (lower > upper)")]
    InvalidBounds,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Cholesky factorization failed for {size}x{size} matrix even with jitter {max_jitter:e}")]
    CholeskyFailed { size: usize, max_jitter: f64 },

    #[error("Newton mode finding did not converge after {iters} iterations (gradient inf-norm {grad_norm:e})")]
    NewtonDidNotConverge { iters: usize, grad_norm: f64 },

    #[error("EP did not converge after {sweeps} sweeps (max site change {max_delta:e})")]
    EpDidNotConverge { sweeps: usize, max_delta: f64 },

    #[error("sampler could not be initialised: {0}")]
    InfeasibleStart(String),

    #[error("ill-posed input: {0}")]
    IllPosed(String),

    #[error("wrong payoff kind: expected {expected}")]
    WrongPayoffKind { expected: &'static str },

    #[error("message space of size {size} exceeds the exhaustive cap {cap}")]
    MessageSpaceTooLarge { size: u64, cap: u64 },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Input/configuration errors vs numerical failures; drives CLI exit codes.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::CholeskyFailed { .. }
                | Error::NewtonDidNotConverge { .. }
                | Error::EpDidNotConverge { .. }
                | Error::InfeasibleStart(_)
                | Error::IllPosed(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
