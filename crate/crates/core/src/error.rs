use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty range: {0}")]
    EmptyRange(String),

    #[error("invalid filter band: {0}")]
    InvalidBand(String),

    #[error("score out of range: {0}")]
    OutOfRange(String),

    #[error("unstable integration: dt = {dt} s exceeds the stability bound {bound} s")]
    Instability { dt: f64, bound: f64 },

    #[error("calibration did not converge: {0}")]
    NoConvergence(String),

    #[error("trace never settles within ±{band_pct}% of {target_kpa} kPa")]
    NotReached { target_kpa: f64, band_pct: f64 },

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}, row {row}: {message}")]
    Malformed {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 1 is reserved for validation failures and never produced here.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Instability { .. } | Error::NoConvergence(_) | Error::NotReached { .. } => 3,
            _ => 2,
        }
    }
}
