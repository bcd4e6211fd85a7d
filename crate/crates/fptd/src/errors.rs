//! Error type shared across the crate.

use num_complex::Complex64;

/// Errors produced by the density evaluators, oracles and file formats.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A file could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A numerical procedure failed to converge or produced garbage.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A Laplace-transform evaluator failed at a contour point.
    #[error("transform evaluation failed at beta = {beta}: {source}")]
    LtEval {
        beta: Complex64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit status for the CLI: 1 for validation problems,
    /// 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Parse { .. } | Error::Io(_) => 1,
            Error::Numerical(_) | Error::LtEval { .. } => 2,
        }
    }
}
