//! Sparse multi-task regression with joint noise estimation.
//!
//! Two concomitant estimators are provided, both certified by a duality gap:
//!
//! * [`sgcl`]: the noise co-standard-deviation `Σ` is a full `n × n` matrix
//!   constrained by `Σ ⪰ σ̲ I`, updated in closed form from an
//!   eigendecomposition of the residual Gram matrix.
//! * [`sbhcl`]: `Σ` is diagonal and constant over known row blocks, with the
//!   single-level concomitant Lasso and the multi-task Lasso as baselines.
//!
//! [`simulate`] generates synthetic heteroscedastic benchmarks and their
//! evaluation metrics, and [`io`] holds the on-disk formats.

pub mod accel;
pub mod error;
pub mod io;
pub mod ops;
pub mod sbhcl;
pub mod sgcl;
pub mod simulate;
pub mod solver;
pub mod types;

pub use error::{Error, Result};
pub use solver::{fit, fit_path, lambda_max, ratio_grid};
pub use types::{
    default_sigma_floor, validate_dataset, Coefficients, DesignMatrix, DualPoint, FitResult,
    FullNoise, NoiseSqrtCov, SigmaFloor, SolverConfig, SolverKind, StoppingRule, TaskMatrix,
    WarmStart,
};
