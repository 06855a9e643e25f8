use std::path::PathBuf;

use thiserror::Error;

use crate::map::KeyframeId;
use crate::zone::ZoneId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid zone {id}: {reason}")]
    InvalidZone { id: u32, reason: String },

    #[error("duplicate zone id {0}")]
    DuplicateZone(ZoneId),

    #[error("zone set is empty")]
    EmptyZoneSet,

    #[error("keyframe list is empty")]
    EmptyKeyframes,

    #[error("duplicate keyframe id {0}")]
    DuplicateKeyframe(KeyframeId),

    #[error("unknown zone {0}")]
    UnknownZone(ZoneId),

    #[error("unknown keyframe {0}")]
    UnknownKeyframe(KeyframeId),

    #[error("zone {0} is not resident")]
    ZoneNotResident(ZoneId),

    #[error("zone {0} is already resident")]
    ZoneAlreadyResident(ZoneId),

    #[error("keyframe {0} is not resident")]
    KeyframeNotResident(KeyframeId),

    #[error("keyframe {0} is already resident")]
    KeyframeAlreadyResident(KeyframeId),

    #[error("no evictable zone: only the pinned zone is active")]
    NoEvictableZone,

    #[error("{}: {detail}", file.display())]
    Format { file: PathBuf, detail: String },

    #[error("{}: {err}", path.display())]
    Io { path: PathBuf, err: std::io::Error },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inconsistent run data: {0}")]
    Inconsistent(String),

    #[error("map hash mismatch: {a} vs {b}")]
    MapHashMismatch { a: String, b: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            err,
        }
    }

    pub(crate) fn format(file: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Format {
            file: file.into(),
            detail: detail.into(),
        }
    }
}
