use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular (pivot magnitude {pivot:e})")]
    Singular { pivot: f64 },

    #[error("chain is not absorbing: {0}")]
    NotAbsorbing(String),

    /// States are reported 0-based.
    #[error("absorbing state {to} is unreachable from state {from}")]
    UnreachableAbsorption { from: usize, to: usize },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 1 for bad input, 2 for numeric or infeasibility failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Singular { .. }
            | Error::UnreachableAbsorption { .. }
            | Error::Infeasible
            | Error::Unbounded
            | Error::Numeric(_)
            | Error::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
