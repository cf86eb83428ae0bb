use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the diarization toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("need at least {required} voiced frames, found {found}")]
    TooFewVoiced { required: usize, found: usize },

    #[error("anchor embeddings coincide; every interpolation weight is optimal")]
    DegenerateAnchors,

    #[error("interpolated embedding has vanishing norm ({norm:e}); anchors are antipodal")]
    DegenerateMidpoint { norm: f64 },

    #[error("input vector is not unit length (norm {norm})")]
    NotUnitNorm { norm: f64 },

    #[error("cannot pick {k} clusters from {n} points")]
    TooFewPoints { k: usize, n: usize },

    #[error("infeasible meeting configuration: {0}")]
    InfeasibleConfig(String),

    #[error("reference annotation has no scored speech; DER is undefined")]
    EmptyReference,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("malformed file {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line front end:
    /// 1 usage, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::InfeasibleConfig(_) => 1,
            Error::Numerical(_) | Error::DegenerateMidpoint { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
