use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension `{name}` must be at least 1 (got {value})")]
    NonPositiveDimension { name: &'static str, value: usize },

    #[error("parameter `{name}` out of range: {reason}")]
    OutOfRange { name: &'static str, reason: String },

    #[error("{0}: vector has zero norm")]
    ZeroVector(&'static str),

    #[error("active entries ({r_act}) must lie in 1..={len}")]
    BadArity { r_act: usize, len: usize },

    #[error("column {column}: no candidate met coherence threshold {mu_thr} after {attempts} attempts")]
    CoherenceBudgetExhausted {
        column: usize,
        mu_thr: f64,
        attempts: usize,
    },

    #[error("alphabet of {requested} mixtures exceeds the {available} distinct {n_mix}-sparse supports")]
    AlphabetTooLarge {
        requested: usize,
        available: u128,
        n_mix: usize,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invariant violated in column {column}: {message}")]
    InvariantViolation { column: usize, message: String },

    #[error("empty vector")]
    EmptyVector,

    #[error("no feasible point found on the search grid")]
    NoFeasiblePoint,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solver setup failed: {0}")]
    Solver(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
