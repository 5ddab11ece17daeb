use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} has no decibel representation (value must be > 0)")]
    NonPositive(f64),

    #[error("invalid configuration: `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("could not place building {index} after {attempts} attempts")]
    Placement { index: usize, attempts: usize },

    #[error("neighbor list is empty or E/R lengths differ")]
    NeighborList,

    #[error("{0} baseline throughput is zero; ratio is undefined")]
    ZeroBaseline(&'static str),

    #[error("unknown preset `{0}` (available: fig2, fig3, fig4, fig5)")]
    UnknownPreset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
