use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("incompatible right-hand side: |1.rhs| = {sum:.3e} exceeds {tol:.1e} * |rhs| = {limit:.3e} (are the fields normalized?)")]
    Compatibility { sum: f64, tol: f64, limit: f64 },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("learning failed: {0}")]
    Learning(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
