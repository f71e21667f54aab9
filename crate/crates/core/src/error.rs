use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector norm {norm:e} is too small to normalize")]
    ZeroVector { norm: f64 },

    #[error("mean direction is degenerate (resultant length {resultant:e})")]
    DegenerateMean { resultant: f64 },

    #[error("histogram lengths differ: fixed {fixed}, moving {moving}")]
    LengthMismatch { fixed: usize, moving: usize },

    #[error("point configuration does not determine a unique rotation: {0}")]
    DegenerateConfiguration(String),

    #[error("empty point set: {0}")]
    EmptySet(&'static str),

    #[error("matrix is not a rotation: {0}")]
    InvalidRotation(String),

    #[error("{count} point(s) coincide with the centroid (first indices: {indices:?})")]
    PointAtCentroid { count: usize, indices: Vec<usize> },

    #[error("too sparse for normal estimation: dropped {dropped} of {total} points")]
    TooSparse { dropped: usize, total: usize },

    #[error("empty point cloud: {0}")]
    EmptyCloud(&'static str),

    #[error("no pixel reaches intensity threshold {threshold}")]
    EmptyResult { threshold: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// True for errors caused by input data rather than by a caller mistake.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::InvalidArgument(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
