use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{stage} did not converge after {iterations} iterations (best residual {residual:e})")]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// The requested energy cannot be delivered (zero channel or zero efficiency).
    #[error("no harvesting path: channel or efficiency is zero but {demand:e} J is required")]
    NoHarvestPath { demand: f64 },

    /// A rate floor is positive but every subcarrier gain for it is zero.
    #[error("{0} floor is unreachable: all subcarrier gains are zero")]
    UnreachableFloor(&'static str),

    #[error("solution status is {0}, expected optimal")]
    NotOptimal(&'static str),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("grid oracle supports at most {max} subcarriers, got {found}")]
    OracleTooLarge { max: usize, found: usize },

    #[error("sample rate {sample_rate} Hz is below the occupied bandwidth {bandwidth} Hz")]
    SampleRateTooLow { sample_rate: f64, bandwidth: f64 },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
