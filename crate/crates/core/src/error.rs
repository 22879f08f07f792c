use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed npy array `{key}`: {reason}")]
    Npy { key: String, reason: String },

    #[error("zip container: {0}")]
    Zip(#[from] zip::result::ZipError),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing key `{0}`")]
    MissingKey(String),

    #[error("shape mismatch for `{key}`: expected {expected}, found {found}")]
    ShapeMismatch {
        key: String,
        expected: String,
        found: String,
    },

    #[error("non-finite value in `{key}` at flat index {index}")]
    NonFinite { key: String, index: usize },

    #[error("invalid chunk ranges: {0}")]
    ChunkRanges(String),

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("invalid operator: {0}")]
    Operator(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("weight column {column} vanishes under the mask")]
    DegenerateColumn { column: usize },

    #[error("refinement undefined: {0}")]
    RefinementUndefined(String),

    #[error("walk has no endpoint: max |M_ii| = {0} >= 1")]
    NoEndpoint(f64),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
}

impl Error {
    /// Process exit code used by the `steer` binary: 2 for data problems,
    /// 3 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateColumn { .. }
            | Error::RefinementUndefined(_)
            | Error::NoEndpoint(_)
            | Error::DegenerateGeometry(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
