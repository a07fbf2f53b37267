use thiserror::Error;

/// Errors raised by matrix construction, solvers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerically singular pivot {pivot:e} at row {row}")]
    Singular { row: usize, pivot: f64 },

    #[error("z = {re} + {im}i is within machine precision of a spectral edge")]
    EdgeSingularity { re: f64, im: f64 },

    #[error("inverse iteration did not converge for eigenvalue {lambda} after {restarts} restarts")]
    NoConvergence { lambda: f64, restarts: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
