//! Crate-wide error type.

use crate::mcmc::ChainDiagnostics;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Cholesky factorization failed even at the top of the jitter ladder.
    #[error("numerical failure: {what} (last attempted jitter {attempted_jitter:e})")]
    Numerical { what: String, attempted_jitter: f64 },

    /// Every chain exceeded the divergence budget.
    #[error("sampler failure: all {} chains exceeded 50% divergent transitions", diagnostics.len())]
    SamplerFailure { diagnostics: Vec<ChainDiagnostics> },

    /// RD-AUC denominator mean is not positive: the baseline is
    /// indistinguishable from the lower bound.
    #[error("degenerate RD-AUC denominator (mean {mu_d})")]
    DegenerateDenominator { mu_d: f64 },

    #[error("unknown simulator '{0}'")]
    UnknownSimulator(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
