//! Domain data model shared by the solvers, the simulators and the CLI.
//!
//! Matrices are `nalgebra::DMatrix<f64>`, which is column-major: a feature
//! column `X_j` or a task column `Y_{:,t}` is a contiguous slice.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row ranges of consecutive blocks, in order.
pub fn block_ranges(block_sizes: &[usize]) -> Vec<Range<usize>> {
    let mut start = 0;
    block_sizes
        .iter()
        .map(|&len| {
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

fn check_finite(m: &DMatrix<f64>, name: &'static str) -> Result<()> {
    for col in 0..m.ncols() {
        for (row, v) in m.column(col).iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    matrix: name,
                    row,
                    col,
                });
            }
        }
    }
    Ok(())
}

/// The `n × p` design with an ordered partition of its rows into `K` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    values: DMatrix<f64>,
    block_sizes: Vec<usize>,
}

impl DesignMatrix {
    pub fn new(values: DMatrix<f64>, block_sizes: Vec<usize>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "design matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if block_sizes.is_empty() || block_sizes.contains(&0) {
            return Err(Error::ShapeMismatch(
                "block sizes must be a non-empty list of positive integers".into(),
            ));
        }
        let total: usize = block_sizes.iter().sum();
        if total != values.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "block sizes sum to {total} but the design has {} rows",
                values.nrows()
            )));
        }
        check_finite(&values, "X")?;
        Ok(Self {
            values,
            block_sizes,
        })
    }

    /// A design whose rows form a single block.
    pub fn single_block(values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        Self::new(values, vec![n])
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        block_ranges(&self.block_sizes)
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn n_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.values.nrows();
        &self.values.as_slice()[j * n..(j + 1) * n]
    }

    /// Same values, different row partition.
    pub fn with_blocks(&self, block_sizes: Vec<usize>) -> Result<Self> {
        Self::new(self.values.clone(), block_sizes)
    }
}

/// The `n × q` observation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskMatrix {
    values: DMatrix<f64>,
}

impl TaskMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "observation matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        check_finite(&values, "Y")?;
        Ok(Self { values })
    }

    pub fn from_vector(y: &DVector<f64>) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(y.len(), 1, y.as_slice()))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_tasks(&self) -> usize {
        self.values.ncols()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: &self.values * factor,
        }
    }
}

/// Checks that `X` and `Y` describe the same samples.
pub fn validate_dataset(x: &DesignMatrix, y: &TaskMatrix) -> Result<()> {
    if x.n_samples() != y.n_samples() {
        return Err(Error::ShapeMismatch(format!(
            "X has {} rows but Y has {}",
            x.n_samples(),
            y.n_samples()
        )));
    }
    // Both constructors already reject non-finite entries; re-check in case a
    // caller built them through `Clone` of a mutated matrix.
    check_finite(x.values(), "X")?;
    check_finite(y.values(), "Y")
}

/// The `p × q` coefficient matrix together with its row support.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    values: DMatrix<f64>,
    active_rows: Vec<usize>,
}

impl Coefficients {
    pub fn new(values: DMatrix<f64>) -> Self {
        let active_rows = (0..values.nrows())
            .filter(|&j| values.row(j).iter().any(|&v| v != 0.0))
            .collect();
        Self {
            values,
            active_rows,
        }
    }

    pub fn zeros(p: usize, q: usize) -> Self {
        Self::new(DMatrix::zeros(p, q))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// Rows with non-zero Euclidean norm, in increasing order.
    pub fn active_rows(&self) -> &[usize] {
        &self.active_rows
    }

    pub fn support_size(&self) -> usize {
        self.active_rows.len()
    }

    pub fn is_zero(&self) -> bool {
        self.active_rows.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(&self.values * factor)
    }
}

/// Eigen-parametrized co-standard-deviation `Σ = U diag(μ) Uᵀ`.
///
/// `Σ` itself is never stored: solvers only ever need `Σ⁻¹` and `Tr Σ`,
/// which are cached. `U` and `μ` are kept so that `Σ` can be reconstructed.
#[derive(Debug, Clone, PartialEq)]
pub struct FullNoise {
    eigvecs: DMatrix<f64>,
    eigvals: DVector<f64>,
    inverse: DMatrix<f64>,
    trace: f64,
}

impl FullNoise {
    /// Builds the representation from an orthogonal `U` and eigenvalues `μ`.
    /// The cached inverse and trace are a deterministic function of `(U, μ)`.
    pub fn from_eigen(eigvecs: DMatrix<f64>, eigvals: DVector<f64>) -> Result<Self> {
        let n = eigvals.len();
        if eigvecs.nrows() != n || eigvecs.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "eigenvectors must be {n}x{n}, got {}x{}",
                eigvecs.nrows(),
                eigvecs.ncols()
            )));
        }
        if eigvals.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidConfig(
                "co-standard-deviation eigenvalues must be positive and finite".into(),
            ));
        }
        let mut scaled = eigvecs.clone();
        for (i, mut col) in scaled.column_iter_mut().enumerate() {
            col /= eigvals[i];
        }
        let mut inverse = &scaled * eigvecs.transpose();
        symmetrize(&mut inverse);
        let trace = eigvals.iter().sum();
        Ok(Self {
            eigvecs,
            eigvals,
            inverse,
            trace,
        })
    }

    /// `Σ = σ I_n`.
    pub fn scalar(n: usize, sigma: f64) -> Result<Self> {
        Self::from_eigen(DMatrix::identity(n, n), DVector::from_element(n, sigma))
    }

    pub fn eigvecs(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }

    pub fn eigvals(&self) -> &DVector<f64> {
        &self.eigvals
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn dim(&self) -> usize {
        self.eigvals.len()
    }

    /// Dense `U diag(μ) Uᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.eigvecs.clone();
        for (i, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.eigvals[i];
        }
        let mut sigma = &scaled * self.eigvecs.transpose();
        symmetrize(&mut sigma);
        sigma
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_eigen(self.eigvecs.clone(), &self.eigvals * factor)
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// The noise co-standard-deviation estimate.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSqrtCov {
    Full(FullNoise),
    BlockDiag {
        sigmas: Vec<f64>,
        block_sizes: Vec<usize>,
    },
    /// `Σ = I`, used by the plain multi-task Lasso.
    FixedIdentity,
}

impl NoiseSqrtCov {
    /// Per-block standard deviations, when the representation has them.
    pub fn block_sigmas(&self) -> Option<&[f64]> {
        match self {
            NoiseSqrtCov::BlockDiag { sigmas, .. } => Some(sigmas),
            _ => None,
        }
    }

    pub fn as_full(&self) -> Option<&FullNoise> {
        match self {
            NoiseSqrtCov::Full(full) => Some(full),
            _ => None,
        }
    }

    /// Dense `n × n` matrix `Σ`.
    pub fn reconstruct(&self, n: usize) -> DMatrix<f64> {
        match self {
            NoiseSqrtCov::Full(full) => full.reconstruct(),
            NoiseSqrtCov::BlockDiag {
                sigmas,
                block_sizes,
            } => {
                let mut diag = DVector::zeros(n);
                for (range, &s) in block_ranges(block_sizes).into_iter().zip(sigmas) {
                    diag.rows_mut(range.start, range.len()).fill(s);
                }
                DMatrix::from_diagonal(&diag)
            }
            NoiseSqrtCov::FixedIdentity => DMatrix::identity(n, n),
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Ok(match self {
            NoiseSqrtCov::Full(full) => NoiseSqrtCov::Full(full.scaled(factor)?),
            NoiseSqrtCov::BlockDiag {
                sigmas,
                block_sizes,
            } => NoiseSqrtCov::BlockDiag {
                sigmas: sigmas.iter().map(|s| s * factor).collect(),
                block_sizes: block_sizes.clone(),
            },
            NoiseSqrtCov::FixedIdentity => NoiseSqrtCov::FixedIdentity,
        })
    }
}

/// Lower bound on the noise level.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaFloor {
    Scalar { sigma_min: f64, alpha: Option<i32> },
    PerBlock { sigma_mins: Vec<f64>, alpha: Option<i32> },
}

pub const DEFAULT_FLOOR_ALPHA: i32 = 3;

impl SigmaFloor {
    pub fn scalar(sigma_min: f64) -> Self {
        SigmaFloor::Scalar {
            sigma_min,
            alpha: None,
        }
    }

    pub fn per_block(sigma_mins: Vec<f64>) -> Self {
        SigmaFloor::PerBlock {
            sigma_mins,
            alpha: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            SigmaFloor::Scalar { sigma_min, .. } => *sigma_min > 0.0 && sigma_min.is_finite(),
            SigmaFloor::PerBlock { sigma_mins, .. } => {
                !sigma_mins.is_empty() && sigma_mins.iter().all(|s| *s > 0.0 && s.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "noise floors must be strictly positive and finite".into(),
            ))
        }
    }

    /// One floor per block; a scalar floor is broadcast.
    pub fn per_block_values(&self, n_blocks: usize) -> Result<Vec<f64>> {
        match self {
            SigmaFloor::Scalar { sigma_min, .. } => Ok(vec![*sigma_min; n_blocks]),
            SigmaFloor::PerBlock { sigma_mins, .. } if sigma_mins.len() == n_blocks => {
                Ok(sigma_mins.clone())
            }
            SigmaFloor::PerBlock { sigma_mins, .. } => Err(Error::ShapeMismatch(format!(
                "{} noise floors for {n_blocks} blocks",
                sigma_mins.len()
            ))),
        }
    }

    /// The scalar floor; a per-block floor is accepted only when it has a
    /// single entry.
    pub fn scalar_value(&self) -> Result<f64> {
        match self {
            SigmaFloor::Scalar { sigma_min, .. } => Ok(*sigma_min),
            SigmaFloor::PerBlock { sigma_mins, .. } if sigma_mins.len() == 1 => Ok(sigma_mins[0]),
            SigmaFloor::PerBlock { .. } => Err(Error::InvalidConfig(
                "the full-covariance solver needs a scalar noise floor".into(),
            )),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            SigmaFloor::Scalar { sigma_min, alpha } => SigmaFloor::Scalar {
                sigma_min: sigma_min * factor,
                alpha: *alpha,
            },
            SigmaFloor::PerBlock { sigma_mins, alpha } => SigmaFloor::PerBlock {
                sigma_mins: sigma_mins.iter().map(|s| s * factor).collect(),
                alpha: *alpha,
            },
        }
    }
}

/// Floors proportional to the naive noise estimate of `Y`: `10^{-α}‖Y‖/√(nq)`
/// for a scalar floor, or `10^{-α}‖Y^k‖/√(n_k q)` per block.
pub fn default_sigma_floor(
    y: &TaskMatrix,
    blocks: Option<&[usize]>,
    alpha: i32,
) -> Result<SigmaFloor> {
    let q = y.n_tasks() as f64;
    let scale = 10f64.powi(-alpha);
    match blocks {
        None => {
            let norm = y.values().norm();
            if norm == 0.0 {
                return Err(Error::ZeroBlock { block: 0 });
            }
            Ok(SigmaFloor::Scalar {
                sigma_min: scale * norm / (y.n_samples() as f64 * q).sqrt(),
                alpha: Some(alpha),
            })
        }
        Some(sizes) => {
            let total: usize = sizes.iter().sum();
            if total != y.n_samples() {
                return Err(Error::ShapeMismatch(format!(
                    "block sizes sum to {total} but Y has {} rows",
                    y.n_samples()
                )));
            }
            let mut sigma_mins = Vec::with_capacity(sizes.len());
            for (k, range) in block_ranges(sizes).into_iter().enumerate() {
                let norm = y.values().rows(range.start, range.len()).norm();
                if norm == 0.0 {
                    return Err(Error::ZeroBlock { block: k });
                }
                sigma_mins.push(scale * norm / (range.len() as f64 * q).sqrt());
            }
            Ok(SigmaFloor::PerBlock {
                sigma_mins,
                alpha: Some(alpha),
            })
        }
    }
}

/// How the duality gap is compared against `tol`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StoppingRule {
    /// `gap ≤ tol · P(0, Σ_max)`: scale free and equivariant.
    #[default]
    Relative,
    /// `gap ≤ tol / ‖Y‖`.
    InverseNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub coefficients: Coefficients,
    pub noise: Option<NoiseSqrtCov>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    pub sigma_floor: SigmaFloor,
    /// Epochs between noise refreshes (full solver) and gap checks.
    pub f: usize,
    pub max_epochs: usize,
    pub tol: f64,
    pub stopping: StoppingRule,
    /// Number of past iterates combined by Anderson extrapolation; 0 turns
    /// it off.
    pub anderson: usize,
    /// Full solver only: reach the target floor through a decreasing
    /// sequence of larger floors, each solved to tolerance and used as a
    /// warm start for the next.
    pub continuation: bool,
    pub warm_start: Option<WarmStart>,
}

impl SolverConfig {
    pub const DEFAULT_F: usize = 10;
    pub const DEFAULT_MAX_EPOCHS: usize = 10_000;
    pub const DEFAULT_TOL: f64 = 1e-6;
    pub const DEFAULT_ANDERSON: usize = 5;

    pub fn new(lambda: f64, sigma_floor: SigmaFloor) -> Self {
        Self {
            lambda,
            sigma_floor,
            f: Self::DEFAULT_F,
            max_epochs: Self::DEFAULT_MAX_EPOCHS,
            tol: Self::DEFAULT_TOL,
            stopping: StoppingRule::Relative,
            anderson: Self::DEFAULT_ANDERSON,
            continuation: true,
            warm_start: None,
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.f == 0 {
            return Err(Error::InvalidConfig("f must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidConfig("max_epochs must be at least 1".into()));
        }
        self.sigma_floor.validate()
    }
}

/// A dual candidate `Θ ∈ R^{n×q}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint {
    pub values: DMatrix<f64>,
}

impl DualPoint {
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Full-matrix co-standard-deviation.
    Sgcl,
    /// Block homoscedastic noise.
    Sbhcl,
    /// A single noise level shared by all samples.
    Scl,
    /// Multi-task Lasso with `Σ = I`.
    Mtl,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::Sgcl,
        SolverKind::Sbhcl,
        SolverKind::Scl,
        SolverKind::Mtl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Sgcl => "sgcl",
            SolverKind::Sbhcl => "sbhcl",
            SolverKind::Scl => "scl",
            SolverKind::Mtl => "mtl",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown solver {s:?}")))
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub solver: SolverKind,
    pub coefficients: Coefficients,
    pub noise: NoiseSqrtCov,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub epochs_run: usize,
    pub lambda: f64,
    pub lambda_max: f64,
    pub converged: bool,
    pub gap_history: Vec<(usize, f64)>,
}
