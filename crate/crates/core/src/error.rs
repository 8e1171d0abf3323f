use crate::cache::CacheError;

/// Errors produced by the solver pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// The minimum of the tracked eigenvalue sits on an edge of the alpha bracket.
    /// `alpha` is the best point found, so the caller can widen around it.
    #[error("minimum of state {state} lies at the edge of the bracket [{lo}, {hi}] (alpha = {alpha})")]
    BracketExhausted {
        state: usize,
        lo: f64,
        hi: f64,
        alpha: f64,
    },

    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error(transparent)]
    Cache(#[from] CacheError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
