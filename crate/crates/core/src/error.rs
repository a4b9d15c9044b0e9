use thiserror::Error;

/// Errors surfaced by the library. The variants map one-to-one onto the
/// CLI exit codes (see `Error::exit_code`).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("degenerate configuration ({what}) involving points {points:?}")]
    Degeneracy { what: String, points: Vec<usize> },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("resource budget exceeded: {0}")]
    Resource(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn degeneracy(what: impl Into<String>, mut points: Vec<usize>) -> Self {
        points.sort_unstable();
        points.dedup();
        Error::Degeneracy {
            what: what.into(),
            points,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Parse { .. } | Error::Domain(_) => 2,
            Error::Degeneracy { .. } => 3,
            Error::Contract(_) | Error::Unsupported(_) | Error::Resource(_) => 1,
            Error::Internal(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
