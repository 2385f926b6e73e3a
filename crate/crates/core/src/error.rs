use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "quadrature did not converge: value {value:e}, error estimate {error:e} after {subdivisions} subdivisions"
    )]
    Quadrature {
        value: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("grid has {points} points, capacity is {capacity}")]
    Capacity { points: usize, capacity: usize },

    #[error("factorization failed after {retries} retries (final jitter {jitter:e})")]
    Factorization { jitter: f64, retries: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("insufficient path coverage: {0}")]
    Coverage(String),

    #[error("index {index} out of range (length {len})")]
    Index { index: usize, len: usize },

    #[error("function `{0}` has no registered derivative")]
    MissingDerivative(String),

    #[error("function `{id}` violates the growth bound (beta {beta} >= {limit})")]
    Growth { id: String, beta: f64, limit: f64 },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
