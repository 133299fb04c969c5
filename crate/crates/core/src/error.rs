use thiserror::Error;

/// Errors raised by the evaluators, solvers and loaders in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural invariant (length, sign, ordering) was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical approximation could not meet its accuracy contract.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    /// A root or threshold is not bracketed by the search interval.
    #[error("search range error: {0}")]
    SearchRange(String),

    /// The operation needs data that was not supplied (e.g. codeword supports).
    #[error("missing capability: {0}")]
    Capability(String),

    /// Parse failure in a data file, with 1-based line number.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
