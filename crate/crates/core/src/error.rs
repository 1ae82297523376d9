//! Crate-wide error type and its mapping onto process exit codes.

use thiserror::Error;

use crate::data::DataError;
use crate::stein::SteinError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Stein(#[from] SteinError),
    #[error("predictions cover {got} units but the data have {expected}")]
    Misaligned { expected: usize, got: usize },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("singular coefficient matrix (condition number {condition:.3e}); degenerate direction ({:.6}, {:.6})", direction[0], direction[1])]
    Singular { condition: f64, direction: [f64; 2] },
    #[error("fold {fold}: {message}")]
    Predictor { fold: usize, message: String },
    #[error("{skipped} of {total} bootstrap replicates failed (more than 5%); first failure: {first}")]
    TooManySkipped {
        skipped: usize,
        total: usize,
        first: String,
    },
    #[error("{0}")]
    Numerical(String),
    #[error("unit {unit}: {message}")]
    Thinning { unit: usize, message: String },
    #[error("estimates were not produced from this split's training data")]
    NotFromTrain,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code contract: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 1,
            Error::Data(_) | Error::Misaligned { .. } | Error::Thinning { .. } | Error::Io(_) => 2,
            Error::NotFromTrain => 2,
            Error::Stein(_)
            | Error::Singular { .. }
            | Error::Predictor { .. }
            | Error::TooManySkipped { .. }
            | Error::Numerical(_) => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
