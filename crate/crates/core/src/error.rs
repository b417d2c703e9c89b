use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    /// A positivity invariant failed (density or sound-speed floor).
    #[error("invalid state at t = {t:e}, r = {r:e}: {what}")]
    StateInvalid { t: f64, r: f64, what: String },

    #[error("unsupported derivative order {requested} (table depth {available})")]
    UnsupportedOrder { requested: usize, available: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("sweep run {label} failed: {msg}")]
    Sweep { label: String, msg: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
