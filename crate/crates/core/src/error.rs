use std::path::PathBuf;

/// Errors raised anywhere in the pipeline.
///
/// Variants are grouped by how a caller should react: data problems
/// (`Io`, `Schema`, `Parse`, `Validation`, `InvalidInput`) versus numeric
/// failures (`Numeric`) that usually call for different settings.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error in {path}: missing column `{column}`")]
    Schema { path: PathBuf, column: String },

    #[error("parse error in {path}, row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical routines rather than of the data.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
