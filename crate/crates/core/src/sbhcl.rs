//! Block homoscedastic concomitant Lasso and its two baselines.
//!
//! The noise is `Σ = diag(σ_1 I_{n_1}, …, σ_K I_{n_K})`. Coordinate updates
//! keep the squared block residual norms `‖R^k‖²` up to date in `O(Kq)` from
//! inner products already needed for the thresholding step, so every `σ_k`
//! can be refreshed after each coordinate at no extra asymptotic cost.
//!
//! With `K = 1` the estimator is the smoothed concomitant Lasso; with the
//! noise frozen at `Σ = I` it is the plain multi-task Lasso.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::accel::Anderson;
use crate::error::{Error, Result};
use crate::ops::{block_soft_threshold_in_place, l21_norm, row_norm_2inf, sigma_update_block};
use crate::sgcl::stop_threshold;
use crate::types::{
    block_ranges, validate_dataset, Coefficients, DesignMatrix, DualPoint, FitResult, NoiseSqrtCov,
    SolverConfig, SolverKind, TaskMatrix,
};

fn scale_rows_by_block(m: &DMatrix<f64>, ranges: &[Range<usize>], sigmas: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (range, &s) in ranges.iter().zip(sigmas) {
        out.rows_mut(range.start, range.len()).unscale_mut(s);
    }
    out
}

fn check_blocks(x: &DesignMatrix, blocks: &[usize]) -> Result<()> {
    if blocks.is_empty() || blocks.contains(&0) || blocks.iter().sum::<usize>() != x.n_samples() {
        return Err(Error::ShapeMismatch(format!(
            "block sizes {blocks:?} do not partition {} rows",
            x.n_samples()
        )));
    }
    Ok(())
}

fn critical_sigmas(y: &TaskMatrix, blocks: &[usize], floors: &[f64]) -> Vec<f64> {
    sigma_update_block(y.values(), blocks, floors)
}

fn lambda_max_with(x: &DesignMatrix, y: &TaskMatrix, blocks: &[usize], sigmas: &[f64]) -> f64 {
    let ranges = block_ranges(blocks);
    let n = y.n_samples() as f64;
    let q = y.n_tasks() as f64;
    let weighted = scale_rows_by_block(y.values(), &ranges, sigmas);
    row_norm_2inf(&(x.values().transpose() * weighted)) / (n * q)
}

/// `‖XᵀΣ_max⁻¹Y‖_{2,∞}/(nq)` with `σ_k^max = max(σ̲_k, ‖Y^k‖/√(n_k q))`.
pub fn lambda_max_sbhcl(x: &DesignMatrix, y: &TaskMatrix, floors: &[f64]) -> Result<f64> {
    validate_dataset(x, y)?;
    let blocks = x.block_sizes();
    if floors.len() != blocks.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} floors for {} blocks",
            floors.len(),
            blocks.len()
        )));
    }
    let sigmas = critical_sigmas(y, blocks, floors);
    let lmax = lambda_max_with(x, y, blocks, &sigmas);
    if lmax > 0.0 {
        Ok(lmax)
    } else {
        Err(Error::DegenerateProblem(
            "XᵀΣ_max⁻¹Y vanishes, every λ gives B̂ = 0".into(),
        ))
    }
}

/// `‖XᵀY‖_{2,∞}/(nq)`.
pub fn lambda_max_mtl(x: &DesignMatrix, y: &TaskMatrix) -> Result<f64> {
    validate_dataset(x, y)?;
    let n = y.n_samples() as f64;
    let q = y.n_tasks() as f64;
    let lmax = row_norm_2inf(&(x.values().transpose() * y.values())) / (n * q);
    if lmax > 0.0 {
        Ok(lmax)
    } else {
        Err(Error::DegenerateProblem("XᵀY vanishes".into()))
    }
}

fn block_sq_norms(r: &DMatrix<f64>, ranges: &[Range<usize>]) -> Vec<f64> {
    ranges
        .iter()
        .map(|range| r.rows(range.start, range.len()).norm_squared())
        .collect()
}

fn primal_from_norms(
    sq_norms: &[f64],
    sigmas: &[f64],
    blocks: &[usize],
    n: f64,
    q: f64,
    penalty: f64,
) -> f64 {
    sq_norms
        .iter()
        .zip(sigmas)
        .zip(blocks)
        .map(|((&r2, &s), &nk)| r2 / (2.0 * n * q * s) + nk as f64 * s / (2.0 * n))
        .sum::<f64>()
        + penalty
}

/// `Σ_k ‖Y^k − X^k B‖²/(2nqσ_k) + n_kσ_k/(2n) + λ‖B‖_{2,1}`.
pub fn primal_sbhcl(
    b: &DMatrix<f64>,
    sigmas: &[f64],
    x: &DesignMatrix,
    y: &TaskMatrix,
    lambda: f64,
) -> f64 {
    let r = y.values() - x.values() * b;
    let ranges = x.block_ranges();
    primal_from_norms(
        &block_sq_norms(&r, &ranges),
        sigmas,
        x.block_sizes(),
        y.n_samples() as f64,
        y.n_tasks() as f64,
        lambda * l21_norm(b),
    )
}

/// Value of the block objective after minimizing out every `σ_k` without
/// floors: `(1/(n√q)) Σ_k √n_k ‖Y^k − X^k B‖ + λ‖B‖_{2,1}`.
pub fn sqrt_lasso_objective(b: &DMatrix<f64>, x: &DesignMatrix, y: &TaskMatrix, lambda: f64) -> f64 {
    let r = y.values() - x.values() * b;
    let n = y.n_samples() as f64;
    let q = y.n_tasks() as f64;
    x.block_ranges()
        .iter()
        .map(|range| (range.len() as f64).sqrt() * r.rows(range.start, range.len()).norm())
        .sum::<f64>()
        / (n * q.sqrt())
        + lambda * l21_norm(b)
}

/// Rescales `Σ⁻¹R` into `{‖XᵀΘ‖_{2,∞} ≤ 1, ‖Θ^k‖ ≤ √n_k/(nλ√q) ∀k}`.
///
/// The scale is `max(nqλ, ‖XᵀΣ⁻¹R‖_{2,∞}, max_k nλ√q‖R^k‖/(σ_k√n_k))`.
pub fn dual_point_sbhcl(
    r: &DMatrix<f64>,
    sigmas: &[f64],
    x: &DesignMatrix,
    lambda: f64,
    blocks: &[usize],
) -> DualPoint {
    let ranges = block_ranges(blocks);
    let n = r.nrows() as f64;
    let q = r.ncols() as f64;
    if r.iter().all(|&v| v == 0.0) {
        return DualPoint {
            values: DMatrix::zeros(r.nrows(), r.ncols()),
        };
    }
    let sinv_r = scale_rows_by_block(r, &ranges, sigmas);
    let corr = row_norm_2inf(&(x.values().transpose() * &sinv_r));
    let block = ranges
        .iter()
        .zip(sigmas)
        .map(|(range, &s)| {
            n * lambda * q.sqrt() * r.rows(range.start, range.len()).norm()
                / (s * (range.len() as f64).sqrt())
        })
        .fold(0.0, f64::max);
    let alpha = (n * q * lambda).max(corr).max(block);
    DualPoint {
        values: sinv_r / alpha,
    }
}

/// `⟨Y, λΘ⟩ + Σ_k (σ̲_k/2)(n_k/n − nqλ²‖Θ^k‖²)`.
pub fn dual_sbhcl(
    theta: &DualPoint,
    y: &TaskMatrix,
    floors: &[f64],
    lambda: f64,
    blocks: &[usize],
) -> f64 {
    let n = y.n_samples() as f64;
    let q = y.n_tasks() as f64;
    let smooth: f64 = block_ranges(blocks)
        .iter()
        .zip(floors)
        .map(|(range, &floor)| {
            let t2 = theta.values.rows(range.start, range.len()).norm_squared();
            0.5 * floor * (range.len() as f64 / n - n * q * lambda * lambda * t2)
        })
        .sum();
    lambda * y.values().dot(&theta.values) + smooth
}

/// `‖Y − XB‖²/(2nq) + λ‖B‖_{2,1}`.
pub fn primal_mtl(b: &DMatrix<f64>, x: &DesignMatrix, y: &TaskMatrix, lambda: f64) -> f64 {
    let r = y.values() - x.values() * b;
    let nq = (y.n_samples() * y.n_tasks()) as f64;
    r.norm_squared() / (2.0 * nq) + lambda * l21_norm(b)
}

/// `R / max(nqλ, ‖XᵀR‖_{2,∞})`, feasible for `‖XᵀΘ‖_{2,∞} ≤ 1`.
pub fn dual_point_mtl(r: &DMatrix<f64>, x: &DesignMatrix, lambda: f64) -> DualPoint {
    let nq = (r.nrows() * r.ncols()) as f64;
    let corr = row_norm_2inf(&(x.values().transpose() * r));
    let alpha = (nq * lambda).max(corr);
    if alpha == 0.0 {
        return DualPoint {
            values: DMatrix::zeros(r.nrows(), r.ncols()),
        };
    }
    DualPoint { values: r / alpha }
}

/// `⟨Y, λΘ⟩ − nqλ²‖Θ‖²/2`.
pub fn dual_mtl(theta: &DualPoint, y: &TaskMatrix, lambda: f64) -> f64 {
    let nq = (y.n_samples() * y.n_tasks()) as f64;
    lambda * y.values().dot(&theta.values) - 0.5 * nq * lambda * lambda * theta.values.norm_squared()
}

/// Iterate of the block solver with its incremental caches.
#[derive(Debug, Clone)]
pub struct SbhclState {
    /// `Bᵀ`, so that each row `B_j` is a contiguous column.
    bt: DMatrix<f64>,
    sigmas: Vec<f64>,
    floors: Vec<f64>,
    sq_res_norms: Vec<f64>,
    residual: DMatrix<f64>,
    /// `‖X_j^k‖²`, stored at `j * K + k`.
    curvatures: Vec<f64>,
    ranges: Vec<Range<usize>>,
    block_sizes: Vec<usize>,
    update_sigma: bool,
    epoch: usize,
    inner: Vec<f64>,
    row: Vec<f64>,
}

impl SbhclState {
    /// Starts from `B` (zero when `None`). With `update_sigma = false` the
    /// noise levels stay at `sigmas0` (unit noise when `None`).
    pub fn new(
        x: &DesignMatrix,
        y: &TaskMatrix,
        blocks: &[usize],
        floors: &[f64],
        b0: Option<&DMatrix<f64>>,
        sigmas0: Option<&[f64]>,
        update_sigma: bool,
    ) -> Result<Self> {
        validate_dataset(x, y)?;
        check_blocks(x, blocks)?;
        let (p, q, k) = (x.n_features(), y.n_tasks(), blocks.len());
        if floors.len() != k {
            return Err(Error::ShapeMismatch(format!("{} floors for {k} blocks", floors.len())));
        }
        let b = match b0 {
            Some(b) if b.shape() == (p, q) => b.clone(),
            Some(b) => {
                return Err(Error::ShapeMismatch(format!(
                    "warm start is {}x{}, expected {p}x{q}",
                    b.nrows(),
                    b.ncols()
                )))
            }
            None => DMatrix::zeros(p, q),
        };
        let sigmas = match sigmas0 {
            Some(s) if s.len() == k => s.to_vec(),
            _ if update_sigma => floors.to_vec(),
            _ => vec![1.0; k],
        };
        let ranges = block_ranges(blocks);
        let mut curvatures = vec![0.0; p * k];
        for j in 0..p {
            let col = x.column(j);
            for (kk, range) in ranges.iter().enumerate() {
                curvatures[j * k + kk] = col[range.clone()].iter().map(|v| v * v).sum();
            }
        }
        let residual = y.values() - x.values() * &b;
        let sq_res_norms = block_sq_norms(&residual, &ranges);
        Ok(Self {
            bt: b.transpose(),
            sigmas,
            floors: floors.to_vec(),
            sq_res_norms,
            residual,
            curvatures,
            ranges,
            block_sizes: blocks.to_vec(),
            update_sigma,
            epoch: 0,
            inner: vec![0.0; k * q],
            row: vec![0.0; q],
        })
    }

    pub fn coefficients(&self) -> DMatrix<f64> {
        self.bt.transpose()
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn cached_sq_norms(&self) -> &[f64] {
        &self.sq_res_norms
    }

    pub fn residual(&self) -> &DMatrix<f64> {
        &self.residual
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// `‖Y^k − X^k B‖²` computed from scratch.
    pub fn exact_sq_norms(&self, x: &DesignMatrix, y: &TaskMatrix) -> Vec<f64> {
        let r = y.values() - x.values() * self.bt.transpose();
        block_sq_norms(&r, &self.ranges)
    }

    /// Primal value from the cached norms (the concomitant objective, or the
    /// multi-task Lasso objective when the noise is frozen).
    pub fn primal(&self, lambda: f64) -> f64 {
        let n = self.residual.nrows() as f64;
        let q = self.residual.ncols() as f64;
        let penalty = lambda * l21_norm(&self.bt.transpose());
        if self.update_sigma {
            primal_from_norms(&self.sq_res_norms, &self.sigmas, &self.block_sizes, n, q, penalty)
        } else {
            self.sq_res_norms.iter().sum::<f64>() / (2.0 * n * q) + penalty
        }
    }

    /// Recomputes `R` and the block norms exactly, then sets each `σ_k` to its
    /// exact minimizer.
    pub fn resync(&mut self, x: &DesignMatrix, y: &TaskMatrix) {
        self.residual = y.values() - x.values() * self.bt.transpose();
        self.sq_res_norms = block_sq_norms(&self.residual, &self.ranges);
        self.refresh_sigmas();
    }

    /// Moves the iterate to `b` (given as `Bᵀ` in column-major order) and
    /// resynchronizes every cache.
    pub fn set_coefficients_transposed(&mut self, bt: &[f64], x: &DesignMatrix, y: &TaskMatrix) {
        self.bt.as_mut_slice().copy_from_slice(bt);
        self.resync(x, y);
    }

    /// Primal value at `Bᵀ = bt` with every `σ_k` at its exact minimizer.
    fn primal_at(&self, bt: &[f64], x: &DesignMatrix, y: &TaskMatrix, lambda: f64) -> f64 {
        let (q, p) = self.bt.shape();
        let b = DMatrix::from_column_slice(q, p, bt).transpose();
        let r = y.values() - x.values() * &b;
        let norms = block_sq_norms(&r, &self.ranges);
        let n = r.nrows() as f64;
        let penalty = lambda * l21_norm(&b);
        if self.update_sigma {
            let sigmas: Vec<f64> = self
                .ranges
                .iter()
                .zip(&norms)
                .zip(&self.floors)
                .map(|((range, &nk), &fl)| (nk / (range.len() as f64 * q as f64)).sqrt().max(fl))
                .collect();
            primal_from_norms(&norms, &sigmas, &self.block_sizes, n, q as f64, penalty)
        } else {
            norms.iter().sum::<f64>() / (2.0 * n * q as f64) + penalty
        }
    }

    fn refresh_sigmas(&mut self) {
        if !self.update_sigma {
            return;
        }
        let q = self.residual.ncols() as f64;
        for (k, range) in self.ranges.iter().enumerate() {
            let level = (self.sq_res_norms[k].max(0.0) / (range.len() as f64 * q)).sqrt();
            self.sigmas[k] = level.max(self.floors[k]);
        }
    }

    fn certificate(&self, x: &DesignMatrix, y: &TaskMatrix, lambda: f64) -> (f64, f64) {
        let b = self.coefficients();
        let r = y.values() - x.values() * &b;
        if self.update_sigma {
            let primal = primal_from_norms(
                &block_sq_norms(&r, &self.ranges),
                &self.sigmas,
                &self.block_sizes,
                y.n_samples() as f64,
                y.n_tasks() as f64,
                lambda * l21_norm(&b),
            );
            let theta = dual_point_sbhcl(&r, &self.sigmas, x, lambda, &self.block_sizes);
            let dual = dual_sbhcl(&theta, y, &self.floors, lambda, &self.block_sizes);
            (primal, dual)
        } else {
            let nq = (y.n_samples() * y.n_tasks()) as f64;
            let primal = r.norm_squared() / (2.0 * nq) + lambda * l21_norm(&b);
            let theta = dual_point_mtl(&r, x, lambda);
            (primal, dual_mtl(&theta, y, lambda))
        }
    }
}

/// Exact minimization in row `B_j`, followed by the `O(Kq)` update of the
/// cached block norms and, in concomitant mode, a refresh of every `σ_k`.
pub fn bcd_step_sbhcl(state: &mut SbhclState, x: &DesignMatrix, lambda: f64, j: usize) {
    let n = state.residual.nrows();
    let q = state.residual.ncols();
    let k_blocks = state.ranges.len();
    let col = x.column(j);
    let curv = &state.curvatures[j * k_blocks..(j + 1) * k_blocks];

    let eff: f64 = curv.iter().zip(&state.sigmas).map(|(l, s)| l / s).sum();
    if !(eff > 0.0) {
        // A zero column cannot move the residual.
        state.bt.column_mut(j).fill(0.0);
        return;
    }

    let resid = state.residual.as_slice();
    for t in 0..q {
        let rcol = &resid[t * n..(t + 1) * n];
        for (k, range) in state.ranges.iter().enumerate() {
            state.inner[k * q + t] = col[range.clone()]
                .iter()
                .zip(&rcol[range.clone()])
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    let old = state.bt.column(j);
    for t in 0..q {
        let mut g = 0.0;
        for k in 0..k_blocks {
            g += (state.inner[k * q + t] + curv[k] * old[t]) / state.sigmas[k];
        }
        state.row[t] = g;
    }
    block_soft_threshold_in_place(&mut state.row, lambda * (n * q) as f64);
    let mut changed = false;
    for t in 0..q {
        let new = state.row[t] / eff;
        // `row` now holds B̃_j − B_j.
        state.row[t] = old[t] - new;
        changed |= state.row[t] != 0.0;
    }
    if !changed {
        return;
    }
    let mut bcol = state.bt.column_mut(j);
    for t in 0..q {
        bcol[t] -= state.row[t];
    }

    let delta = &state.row;
    let resid = state.residual.as_mut_slice();
    for (t, &d) in delta.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let rcol = &mut resid[t * n..(t + 1) * n];
        rcol.iter_mut().zip(col).for_each(|(r, x)| *r += d * x);
    }
    let dd: f64 = delta.iter().map(|d| d * d).sum();
    for k in 0..k_blocks {
        let cross: f64 = delta
            .iter()
            .zip(&state.inner[k * q..(k + 1) * q])
            .map(|(d, c)| d * c)
            .sum();
        state.sq_res_norms[k] = (state.sq_res_norms[k] + 2.0 * cross + dd * curv[k]).max(0.0);
    }
    state.refresh_sigmas();
}

/// One cyclic pass over all rows.
pub fn bcd_epoch_sbhcl(state: &mut SbhclState, x: &DesignMatrix, lambda: f64) {
    for j in 0..x.n_features() {
        bcd_step_sbhcl(state, x, lambda, j);
    }
    state.epoch += 1;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NoiseMode {
    Concomitant,
    FixedUnit,
}

fn fit_blocks(
    x: &DesignMatrix,
    y: &TaskMatrix,
    blocks: &[usize],
    config: &SolverConfig,
    mode: NoiseMode,
    solver: SolverKind,
) -> Result<FitResult> {
    validate_dataset(x, y)?;
    config.validate()?;
    check_blocks(x, blocks)?;
    let lambda = config.lambda;
    let (n, q) = (y.n_samples() as f64, y.n_tasks() as f64);
    let k = blocks.len();

    let (floors, lambda_max, gap_scale) = match mode {
        NoiseMode::Concomitant => {
            let floors = config.sigma_floor.per_block_values(k)?;
            let sigma_max = critical_sigmas(y, blocks, &floors);
            let lmax = lambda_max_with(x, y, blocks, &sigma_max);
            let y_norms = block_sq_norms(y.values(), &block_ranges(blocks));
            let scale = primal_from_norms(&y_norms, &sigma_max, blocks, n, q, 0.0);
            (floors, lmax, scale)
        }
        NoiseMode::FixedUnit => {
            let nq = n * q;
            let lmax = row_norm_2inf(&(x.values().transpose() * y.values())) / nq;
            (vec![1.0; k], lmax, y.values().norm_squared() / (2.0 * nq))
        }
    };
    let threshold = stop_threshold(config.stopping, config.tol, gap_scale, y);

    let (b0, s0) = match &config.warm_start {
        Some(w) => (
            Some(w.coefficients.values()),
            w.noise.as_ref().and_then(|nz| nz.block_sigmas()),
        ),
        None => (None, None),
    };
    let update = mode == NoiseMode::Concomitant;
    let mut state = SbhclState::new(x, y, blocks, &floors, b0, s0.filter(|_| update), update)?;

    let mut accel = Anderson::new(config.anderson);
    let mut history = Vec::new();
    loop {
        let epoch = state.epoch;
        if epoch % config.f == 0 || epoch >= config.max_epochs {
            state.resync(x, y);
            let (primal, dual) = state.certificate(x, y, lambda);
            let gap = primal - dual;
            history.push((epoch, gap));
            let converged = gap <= threshold;
            if converged || epoch >= config.max_epochs {
                let noise = match mode {
                    NoiseMode::Concomitant => NoiseSqrtCov::BlockDiag {
                        sigmas: state.sigmas.clone(),
                        block_sizes: blocks.to_vec(),
                    },
                    NoiseMode::FixedUnit => NoiseSqrtCov::FixedIdentity,
                };
                let result = FitResult {
                    solver,
                    coefficients: Coefficients::new(state.coefficients()),
                    noise,
                    primal,
                    dual,
                    gap,
                    epochs_run: epoch,
                    lambda,
                    lambda_max,
                    converged,
                    gap_history: history,
                };
                return if converged {
                    Ok(result)
                } else {
                    Err(Error::MaxEpochsReached(Box::new(result)))
                };
            }
        }
        bcd_epoch_sbhcl(&mut state, x, lambda);
        if let Some(cand) = accel.push(state.bt.as_slice()) {
            if state.primal_at(&cand, x, y, lambda) < state.primal_at(state.bt.as_slice(), x, y, lambda) {
                state.set_coefficients_transposed(&cand, x, y);
            }
        }
    }
}

/// Block homoscedastic fit on the row partition carried by `x`.
pub fn fit_sbhcl(x: &DesignMatrix, y: &TaskMatrix, config: &SolverConfig) -> Result<FitResult> {
    fit_blocks(x, y, x.block_sizes(), config, NoiseMode::Concomitant, SolverKind::Sbhcl)
}

/// Single shared noise level: the block solver on one block spanning all rows.
pub fn fit_scl(x: &DesignMatrix, y: &TaskMatrix, config: &SolverConfig) -> Result<FitResult> {
    let blocks = [x.n_samples()];
    fit_blocks(x, y, &blocks, config, NoiseMode::Concomitant, SolverKind::Scl)
}

/// Multi-task Lasso, `min ‖Y − XB‖²/(2nq) + λ‖B‖_{2,1}`.
pub fn fit_mtl(x: &DesignMatrix, y: &TaskMatrix, config: &SolverConfig) -> Result<FitResult> {
    let blocks = [x.n_samples()];
    fit_blocks(x, y, &blocks, config, NoiseMode::FixedUnit, SolverKind::Mtl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::SigmaFloor;

    fn design(rows: usize, cols: usize, data: &[f64], blocks: Vec<usize>) -> DesignMatrix {
        DesignMatrix::new(DMatrix::from_row_slice(rows, cols, data), blocks).unwrap()
    }

    fn tasks(rows: usize, cols: usize, data: &[f64]) -> TaskMatrix {
        TaskMatrix::new(DMatrix::from_row_slice(rows, cols, data)).unwrap()
    }

    #[test]
    fn lambda_max_single_block_hand_value() {
        let x = design(2, 1, &[1.0, 1.0], vec![2]);
        let y = tasks(2, 1, &[2.0, 2.0]);
        let lmax = lambda_max_sbhcl(&x, &y, &[1e-6]).unwrap();
        assert!((lmax - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lambda_max_zero_observations_is_degenerate() {
        let x = design(2, 1, &[1.0, 1.0], vec![1, 1]);
        let y = TaskMatrix::new(DMatrix::zeros(2, 3)).unwrap();
        assert!(matches!(
            lambda_max_sbhcl(&x, &y, &[0.1, 0.1]),
            Err(Error::DegenerateProblem(_))
        ));
    }

    #[test]
    fn primal_at_zero_data() {
        let x = design(3, 1, &[1.0, 2.0, 3.0], vec![1, 2]);
        let y = TaskMatrix::new(DMatrix::zeros(3, 2)).unwrap();
        let b = DMatrix::zeros(1, 2);
        let floors = [0.3, 0.6];
        let expected = (0.3 + 2.0 * 0.6) / 6.0;
        assert!((primal_sbhcl(&b, &floors, &x, &y, 1.0) - expected).abs() < 1e-15);
        let theta = DualPoint {
            values: DMatrix::zeros(3, 2),
        };
        assert!((dual_sbhcl(&theta, &y, &floors, 1.0, &[1, 2]) - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_residual_gives_zero_dual_point() {
        let x = design(2, 1, &[1.0, 1.0], vec![1, 1]);
        let theta = dual_point_sbhcl(&DMatrix::zeros(2, 2), &[0.1, 0.2], &x, 0.4, &[1, 1]);
        assert!(theta.is_zero());
    }

    #[test]
    fn frozen_unit_step_closed_form() {
        let x = design(2, 1, &[1.0, 1.0], vec![2]);
        let y = tasks(2, 1, &[2.0, 2.0]);
        let mut state = SbhclState::new(&x, &y, &[2], &[1.0], None, None, false).unwrap();
        bcd_step_sbhcl(&mut state, &x, 0.5, 0);
        assert!((state.coefficients()[(0, 0)] - 1.5).abs() < 1e-14);
        assert_eq!(state.sigmas(), &[1.0]);
    }

    #[test]
    fn thresholded_step_keeps_norms_exact() {
        let x = design(4, 2, &[1.0, 0.5, -1.0, 2.0, 0.3, 0.1, 2.0, -1.0], vec![2, 2]);
        let y = tasks(4, 2, &[1.0, 0.0, 0.5, 1.0, -0.2, 0.3, 2.0, 1.0]);
        let mut state = SbhclState::new(&x, &y, &[2, 2], &[0.1, 0.1], None, None, true).unwrap();
        state.resync(&x, &y);
        bcd_epoch_sbhcl(&mut state, &x, 1e-3);
        let before = state.exact_sq_norms(&x, &y);
        // A huge λ forces every row back to zero.
        bcd_epoch_sbhcl(&mut state, &x, 1e3);
        assert!(state.coefficients().iter().all(|&v| v == 0.0));
        let exact = state.exact_sq_norms(&x, &y);
        for (c, e) in state.cached_sq_norms().iter().zip(&exact) {
            assert!((c - e).abs() <= 1e-10 * e.max(1.0));
        }
        assert!(before.iter().zip(&exact).any(|(b, e)| b != e));
    }

    #[test]
    fn mtl_zero_observations() {
        let x = design(3, 2, &[1.0, 0.0, 0.5, 1.0, -1.0, 2.0], vec![3]);
        let y = TaskMatrix::new(DMatrix::zeros(3, 2)).unwrap();
        let fit = fit_mtl(&x, &y, &SolverConfig::new(0.1, SigmaFloor::scalar(1.0))).unwrap();
        assert!(fit.coefficients.is_zero());
        assert_eq!(fit.noise, NoiseSqrtCov::FixedIdentity);
    }

    #[test]
    fn scl_zero_observations() {
        let x = design(3, 2, &[1.0, 0.0, 0.5, 1.0, -1.0, 2.0], vec![1, 2]);
        let y = TaskMatrix::new(DMatrix::zeros(3, 1)).unwrap();
        let fit = fit_scl(&x, &y, &SolverConfig::new(0.1, SigmaFloor::scalar(0.25))).unwrap();
        assert!(fit.coefficients.is_zero());
        assert_eq!(fit.noise.block_sigmas().unwrap(), &[0.25]);
    }
}
