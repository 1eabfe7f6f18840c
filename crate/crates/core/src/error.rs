use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: series too short (need at least {needed} observations, got {got})")]
    Length {
        op: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid time series `{label}`: {reason}")]
    InvalidSeries { label: String, reason: String },

    #[error("panel is empty: no month is shared by the dependent series and every feature")]
    EmptyPanel,

    #[error("design matrix is rank deficient; linearly dependent columns: {}", .columns.join(", "))]
    Singular { columns: Vec<String> },

    #[error("insufficient data: {n} observations for {k} parameters")]
    InsufficientData { n: usize, k: usize },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}:{line}: {msg}", .path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("duplicate BIP number {0} in registry")]
    DuplicateBip(u32),

    #[error("registry integrity error: {0}")]
    Integrity(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
