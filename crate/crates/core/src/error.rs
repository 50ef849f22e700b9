use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dtype `{0}`")]
    UnsupportedDtype(String),

    #[error("shape mismatch: expected {expected} elements, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("volume shapes differ: {0:?} vs {1:?}")]
    ShapesDiffer([usize; 3], [usize; 3]),

    #[error("non-finite value at linear index {index}")]
    NonFinite { index: usize },

    #[error("malformed {format} file: {reason}")]
    Malformed {
        format: &'static str,
        reason: String,
    },

    #[error("i/o failure on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("connectivity pair ({fg}, {bg}) is not one of (26, 6) or (6, 26)")]
    MixedConnectivity { fg: u8, bg: u8 },

    #[error("operation requires foreground 26 / background 6 connectivity")]
    UnsupportedConnectivity,

    #[error("requested {requested} slices but only {available} planes exist")]
    NotEnoughPlanes { requested: usize, available: usize },

    #[error("image has no background pixel")]
    NoBackground,

    #[error("every sampled slice is empty at the binarization threshold")]
    AllSlicesEmpty,

    #[error("phantom does not fit its volume: {0}")]
    DoesNotFit(String),

    #[error("perturbation not applicable: {0}")]
    NotApplicable(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Malformed {
            format,
            reason: reason.into(),
        }
    }
}
