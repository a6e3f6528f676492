use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("weight matrix is all zeros; conductance scale is undefined")]
    DegenerateScale,

    #[error("normal matrix is singular at lambda = 0; use a positive ridge lambda")]
    SingularNormalMatrix,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("target has zero variance; NRMSE is undefined")]
    ZeroVariance,

    #[error("SRR is undefined: channel output is identical to the transmitted symbols (undistorted channel)")]
    SrrUndefined,

    #[error("spectral radius of the recurrent matrix is zero after {attempts} draws")]
    ZeroSpectralRadius { attempts: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line driver: 2 config, 3 I/O, 4 numeric or task failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse(_) => 2,
            Error::Io { .. } => 3,
            _ => 4,
        }
    }
}

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { what, expected, got })
    }
}
