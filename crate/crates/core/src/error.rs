use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("{array}: expected shape {expected:?}, found {found:?}")]
    Shape {
        array: String,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{array}: non-finite value at {location}")]
    NonFinite { array: String, location: String },

    #[error("{array}: {count} negative entries")]
    NegativeEntries { array: String, count: usize },

    #[error("dataset rejected: {0}")]
    InvalidDataset(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("infeasible economy: spectral radius estimate {rho} is not below {threshold}")]
    Infeasible { rho: f64, threshold: f64 },

    #[error("singular system: zero pivot in column {column}")]
    Singular { column: usize },

    #[error("Leontief residual {residual:e} exceeds tolerance {tol:e}")]
    Residual { residual: f64, tol: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("rank correlation undefined for zero-variance input")]
    UndefinedCorrelation,

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Name of the pipeline stage that failed, if known.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
