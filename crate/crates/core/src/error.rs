use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix of {rows}x{cols} exceeds the configured maximum of {max} entries")]
    Overflow { rows: usize, cols: usize, max: usize },

    #[error("composite dimension {dim} exceeds the cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("matrix is not Hermitian (violation {violation:.3e})")]
    NotHermitian { violation: f64 },

    #[error("matrix has a negative eigenvalue {value:.3e}")]
    NegativeEigenvalue { value: f64 },

    #[error("vectors are not orthonormal (violation {violation:.3e})")]
    NotOrthonormal { violation: f64 },

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("invalid representation (violation {violation:.3e}): {reason}")]
    InvalidRep { reason: String, violation: f64 },

    #[error("invalid state set: {0}")]
    InvalidStates(String),

    #[error("invalid measurement: {0}")]
    InvalidPovm(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error on {path}: {source}")]
    Serde {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionCap { .. } | Error::Overflow { .. } => 4,
            Error::Io { .. } | Error::Serde { .. } | Error::Csv { .. } => 5,
            _ => 3,
        }
    }
}
