use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported discriminant {disc}: class number {class_number} != 1")]
    UnsupportedDiscriminant { disc: i64, class_number: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("eta quotient is not a normalized cusp form: q-offset numerator {offset} (need 24)")]
    NotCuspForm { offset: i64 },

    #[error("index {index} out of range (available up to {limit})")]
    Range { index: u64, limit: u64 },

    #[error("incomplete input: {0}")]
    IncompleteInput(String),

    #[error("Deligne bound violated: |lambda(p)| = {0} > 2")]
    DeligneViolation(f64),

    #[error("s = {re} + {im}i lies outside the half plane Re(s) > 1/2")]
    OutsideConvergence { re: f64, im: f64 },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("insufficient data: {usable} usable points, need at least {needed}")]
    InsufficientData { usable: usize, needed: usize },

    #[error("coefficient cache {path}: {reason}")]
    Cache { path: PathBuf, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
