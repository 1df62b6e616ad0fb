use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no convergence after {iterations} iterations (gradient sup-norm {grad_norm:e})")]
    NonConvergence {
        iterations: usize,
        grad_norm: f64,
        /// Last accepted iterate, in the layout of the problem that failed.
        last: Vec<f64>,
    },

    #[error("cannot pin translation: {0}")]
    Pinning(String),

    #[error("decay fit degenerate: {0}")]
    FitDegenerate(String),

    #[error("partition failure: {0}")]
    Partition(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("hypothesis not satisfied: {0}")]
    Inapplicable(String),

    #[error("internal consistency: {0}")]
    Consistency(String),

    #[error("malformed input at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
