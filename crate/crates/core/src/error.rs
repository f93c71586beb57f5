use thiserror::Error;

/// Errors produced by the detection library.
#[derive(Debug, Error)]
pub enum Error {
    /// A line of an input text format could not be parsed.
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An input violated a documented invariant or precondition.
    #[error("invalid input: {0}")]
    Validation(String),

    /// The iterative eigensolver ran out of iterations.
    #[error("eigensolver failed to converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    /// Matrix too large for the dense path.
    #[error("matrix dimension {dim} exceeds dense limit {limit}")]
    DenseLimit { dim: usize, limit: usize },

    /// An operation needs non-zero input (zero matrix, empty graph).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A real power mean was asked to raise zero to a negative power.
    #[error("power mean with p = {p} is undefined for zero entries; shift the inputs first")]
    Domain { p: f64 },

    /// Spearman correlation of a constant ranking.
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
