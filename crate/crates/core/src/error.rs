use thiserror::Error;

use crate::types::FitResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite entry in {matrix} at row {row}, column {col}")]
    NonFinite {
        matrix: &'static str,
        row: usize,
        col: usize,
    },

    #[error("block {block} of the observations is identically zero")]
    ZeroBlock { block: usize },

    #[error("symmetric eigendecomposition did not converge")]
    EigenFailure,

    #[error("degenerate problem: {0}")]
    DegenerateProblem(String),

    /// The solver hit its epoch budget. The best iterate, with an honest
    /// certificate, is carried along and flagged as unconverged.
    #[error("maximum number of epochs reached (gap {gap:.3e})", gap = .0.gap)]
    MaxEpochsReached(Box<FitResult>),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),

    #[error("noise calibration failed: {0}")]
    CalibrationFailure(String),

    #[error("oracle residual of block {block} is zero")]
    OracleZeroResidual { block: usize },

    #[error("parse error in {source_name} at row {row}, column {col}: {msg}")]
    Parse {
        source_name: String,
        row: usize,
        col: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Recovers the best-so-far fit carried by [`Error::MaxEpochsReached`].
    pub fn into_unconverged(self) -> std::result::Result<FitResult, Error> {
        match self {
            Error::MaxEpochsReached(result) => Ok(*result),
            other => Err(other),
        }
    }
}
