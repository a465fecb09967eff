use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input that violates a documented constraint. `path` names the
    /// offending key or argument.
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },

    #[error("breakpoint search for {od:?}: minimum not bracketed by search cap {cap}")]
    NotBracketed { od: (usize, usize), cap: i64 },

    #[error("min-cost flow is infeasible")]
    Infeasible,

    /// An internal consistency check failed (optimality certificate,
    /// contiguity, ...). Always a bug, never bad input.
    #[error("internal fault: {0}")]
    Fault(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the caller's input rather than by the
    /// environment or a solver fault.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. } | Error::NotBracketed { .. } | Error::Json(_) | Error::Csv(_)
        )
    }
}
