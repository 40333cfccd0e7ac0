use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("structural error: {0}")]
    Structure(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("diffuse irradiance exceeds global irradiance at {} timestamp(s): {}", .timestamps.len(), .timestamps.join(", "))]
    DiffuseExceedsGlobal { timestamps: Vec<String> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("diode parameter fit did not converge (final residual {:.3e} after {} iterations)", .residuals.last().copied().unwrap_or(f64::NAN), .residuals.len())]
    FitDidNotConverge { residuals: Vec<f64> },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error on {path}: {source}")]
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

    /// Process exit code used by the command-line harness.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Parse { .. }
            | Error::Structure(_)
            | Error::Validation(_)
            | Error::DiffuseExceedsGlobal { .. }
            | Error::Inconsistent(_)
            | Error::Io { .. } => 3,
            Error::FitDidNotConverge { .. } | Error::Numerical(_) => 4,
        }
    }
}
