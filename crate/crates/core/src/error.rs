use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        found: (u32, u32),
    },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("malformed run-length mask: {0}")]
    MalformedRle(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("class {0} is not in the class table")]
    UnknownClass(u16),

    #[error("instance {instance} placed on stuff class {class}")]
    InstanceOnStuff { class: u16, instance: u32 },

    #[error("instance {instance} appears under classes {first} and {second}")]
    InstanceClassConflict {
        instance: u32,
        first: u16,
        second: u16,
    },

    #[error("class tables differ between ground truth and prediction")]
    ClassTableMismatch,

    #[error("invalid class table: {0}")]
    InvalidClassTable(String),

    #[error("cosine similarity undefined for a zero vector")]
    ZeroVector,

    #[error("empty track {0}")]
    EmptyTrack(u32),

    #[error("invalid track: {0}")]
    InvalidTrack(String),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("frame index {found} does not follow {previous}")]
    FrameOrder { previous: usize, found: usize },

    #[error("id overflow: {0}")]
    IdOverflow(String),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: schema violation at `{field}`: {message}")]
    Schema {
        path: PathBuf,
        field: String,
        message: String,
    },

    #[error("{path}: {source}")]
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

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
