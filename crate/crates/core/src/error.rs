use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("evaluation error at node {node} (x = {x}): {message}")]
    Evaluation {
        node: usize,
        x: f64,
        message: String,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Iteration cap reached. The bracket is the best Collatz-Wielandt
    /// enclosure obtained before giving up.
    #[error("no convergence after {iterations} iterations: {message} (bracket [{low}, {high}])")]
    Convergence {
        message: String,
        iterations: usize,
        low: f64,
        high: f64,
    },

    #[error("domain error at nodes {nodes:?}: {message}")]
    Domain { message: String, nodes: Vec<usize> },

    #[error("no root: {0}")]
    NoRoot(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
