//! Multi-task concomitant Lasso with a full co-standard-deviation matrix.
//!
//! Alternates cyclic block coordinate descent over the rows of `B` with the
//! closed-form update of `Σ`, refreshing `Σ` and certifying the duality gap
//! every `f` epochs. `Σ⁻¹X` and `Σ⁻¹R` are cached so the inner loop never
//! multiplies by `Σ⁻¹`.

use nalgebra::{DMatrix, DVector};

use crate::accel::Anderson;
use crate::error::{Error, Result};
use crate::ops::{
    block_soft_threshold_in_place, l21_norm, row_norm_2inf, sigma_update_full,
    sigma_update_rank_one, soft_threshold, spectral_norm, RankOneSigma,
};
use crate::types::{
    validate_dataset, Coefficients, DesignMatrix, DualPoint, FitResult, FullNoise, NoiseSqrtCov,
    SolverConfig, SolverKind, StoppingRule, TaskMatrix,
};

/// `(‖XᵀΣ_max⁻¹Y‖_{2,∞}/(nq), Σ_max)` with `Σ_max = Ψ(Y/√q, σ̲)`.
fn critical_point(x: &DesignMatrix, y: &TaskMatrix, floor: f64) -> Result<(f64, FullNoise)> {
    let sigma_max = sigma_update_full(y.values(), floor)?;
    let n = y.n_samples() as f64;
    let q = y.n_tasks() as f64;
    let corr = x.values().transpose() * (sigma_max.inverse() * y.values());
    Ok((row_norm_2inf(&corr) / (n * q), sigma_max))
}

/// Smallest `λ` for which `B̂ = 0`.
pub fn lambda_max_sgcl(x: &DesignMatrix, y: &TaskMatrix, floor: f64) -> Result<f64> {
    validate_dataset(x, y)?;
    let (lmax, _) = critical_point(x, y, floor)?;
    if lmax > 0.0 {
        Ok(lmax)
    } else {
        Err(Error::DegenerateProblem(
            "XᵀΣ_max⁻¹Y vanishes, every λ gives B̂ = 0".into(),
        ))
    }
}

/// `‖Y − XB‖²_{Σ⁻¹}/(2nq) + Tr Σ/(2n) + λ‖B‖_{2,1}`.
pub fn primal_sgcl(
    b: &DMatrix<f64>,
    noise: &FullNoise,
    x: &DesignMatrix,
    y: &TaskMatrix,
    lambda: f64,
) -> f64 {
    let r = y.values() - x.values() * b;
    let sinv_r = noise.inverse() * &r;
    primal_from_parts(&r, &sinv_r, noise.trace(), b, lambda)
}

fn primal_from_parts(
    r: &DMatrix<f64>,
    sinv_r: &DMatrix<f64>,
    trace: f64,
    b: &DMatrix<f64>,
    lambda: f64,
) -> f64 {
    let n = r.nrows() as f64;
    let q = r.ncols() as f64;
    r.dot(sinv_r).max(0.0) / (2.0 * n * q) + trace / (2.0 * n) + lambda * l21_norm(b)
}

/// Rescales `Σ⁻¹R` into the dual feasible set
/// `{‖XᵀΘ‖_{2,∞} ≤ 1, ‖Θ‖_2 ≤ 1/(λn√q)}`.
///
/// The scale is `max(nqλ, ‖XᵀΣ⁻¹R‖_{2,∞}, λn√q‖Σ⁻¹R‖_2)`: the first entry
/// is the value dictated by the link equation at optimality and is used
/// whenever it is already feasible. A zero residual gives `Θ = 0`.
pub fn dual_point_sgcl(sinv_r: &DMatrix<f64>, x: &DesignMatrix, lambda: f64) -> DualPoint {
    let n = sinv_r.nrows() as f64;
    let q = sinv_r.ncols() as f64;
    let corr = row_norm_2inf(&(x.values().transpose() * sinv_r));
    let spec = lambda * n * q.sqrt() * spectral_norm(sinv_r);
    let alpha = (n * q * lambda).max(corr).max(spec);
    if sinv_r.iter().all(|&v| v == 0.0) {
        return DualPoint {
            values: DMatrix::zeros(sinv_r.nrows(), sinv_r.ncols()),
        };
    }
    DualPoint {
        values: sinv_r / alpha,
    }
}

/// `⟨Y, λΘ⟩ + σ̲(1/2 − nqλ²‖Θ‖²_F/2)`.
pub fn dual_sgcl(theta: &DualPoint, y: &TaskMatrix, floor: f64, lambda: f64) -> f64 {
    let n = y.n_samples() as f64;
    let q = y.n_tasks() as f64;
    lambda * y.values().dot(&theta.values)
        + floor * (0.5 - 0.5 * n * q * lambda * lambda * theta.values.norm_squared())
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Certificate {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Primal, dual and gap from a freshly computed `R` and `Σ⁻¹R`.
fn certify(
    x: &DesignMatrix,
    y: &TaskMatrix,
    b: &DMatrix<f64>,
    r: &DMatrix<f64>,
    sinv_r: &DMatrix<f64>,
    trace: f64,
    floor: f64,
    lambda: f64,
) -> Certificate {
    let primal = primal_from_parts(r, sinv_r, trace, b, lambda);
    let theta = dual_point_sgcl(sinv_r, x, lambda);
    let dual = dual_sgcl(&theta, y, floor, lambda);
    Certificate {
        primal,
        dual,
        gap: primal - dual,
    }
}

pub(crate) fn stop_threshold(
    rule: StoppingRule,
    tol: f64,
    gap_scale: f64,
    y: &TaskMatrix,
) -> f64 {
    match rule {
        StoppingRule::Relative => tol * gap_scale,
        StoppingRule::InverseNorm => {
            let norm = y.values().norm();
            if norm > 0.0 {
                tol / norm
            } else {
                tol
            }
        }
    }
}

/// Iterate of the alternating minimization.
#[derive(Debug, Clone)]
pub struct SgclState {
    /// `Bᵀ`, so that each row `B_j` is a contiguous column.
    bt: DMatrix<f64>,
    noise: FullNoise,
    sinv_x: DMatrix<f64>,
    sinv_r: DMatrix<f64>,
    curvatures: Vec<f64>,
    epoch: usize,
}

impl SgclState {
    /// Starts from `B` (zero when `None`) and `Σ = σ̲ I` (or the given noise).
    pub fn new(
        x: &DesignMatrix,
        y: &TaskMatrix,
        floor: f64,
        b0: Option<&DMatrix<f64>>,
        noise0: Option<&FullNoise>,
    ) -> Result<Self> {
        let (p, q) = (x.n_features(), y.n_tasks());
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
        let noise = match noise0 {
            Some(nz) if nz.dim() == x.n_samples() => nz.clone(),
            _ => FullNoise::scalar(x.n_samples(), floor)?,
        };
        let mut state = Self {
            bt: b.transpose(),
            noise,
            sinv_x: DMatrix::zeros(0, 0),
            sinv_r: DMatrix::zeros(0, 0),
            curvatures: Vec::new(),
            epoch: 0,
        };
        state.rebuild_caches(x, y);
        Ok(state)
    }

    fn rebuild_caches(&mut self, x: &DesignMatrix, y: &TaskMatrix) {
        let r = self.residual(x, y);
        self.sinv_x = self.noise.inverse() * x.values();
        self.sinv_r = self.noise.inverse() * r;
        self.curvatures = (0..x.n_features())
            .map(|j| {
                let sx = self.sinv_x.column(j);
                x.column(j).iter().zip(sx.iter()).map(|(a, b)| a * b).sum()
            })
            .collect();
    }

    pub fn coefficients(&self) -> DMatrix<f64> {
        self.bt.transpose()
    }

    pub fn noise(&self) -> &FullNoise {
        &self.noise
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// `Y − XB`, computed from scratch.
    pub fn residual(&self, x: &DesignMatrix, y: &TaskMatrix) -> DMatrix<f64> {
        y.values() - x.values() * self.bt.transpose()
    }

    /// Replaces `Σ` by its exact minimizer for the current `B`, then rebuilds
    /// `Σ⁻¹X`, `Σ⁻¹R` and the curvatures `X_jᵀΣ⁻¹X_j`.
    pub fn refresh_noise(&mut self, x: &DesignMatrix, y: &TaskMatrix, floor: f64) -> Result<()> {
        let r = self.residual(x, y);
        self.noise = sigma_update_full(&r, floor)?;
        self.rebuild_caches(x, y);
        Ok(())
    }

    /// `‖Σ⁻¹R_cached − Σ⁻¹(Y − XB)‖` relative to `1 + ‖Σ⁻¹(Y − XB)‖`.
    pub fn cache_drift(&self, x: &DesignMatrix, y: &TaskMatrix) -> f64 {
        let exact = self.noise.inverse() * self.residual(x, y);
        (&self.sinv_r - &exact).norm() / (1.0 + exact.norm())
    }

    pub fn primal(&self, x: &DesignMatrix, y: &TaskMatrix, lambda: f64) -> f64 {
        primal_sgcl(&self.coefficients(), &self.noise, x, y, lambda)
    }

    fn certificate(&self, x: &DesignMatrix, y: &TaskMatrix, floor: f64, lambda: f64) -> Certificate {
        let b = self.coefficients();
        let r = y.values() - x.values() * &b;
        let sinv_r = self.noise.inverse() * &r;
        certify(x, y, &b, &r, &sinv_r, self.noise.trace(), floor, lambda)
    }
}

/// One cyclic pass over the rows of `B` at fixed `Σ`.
pub fn bcd_epoch_sgcl(state: &mut SgclState, x: &DesignMatrix, lambda: f64) {
    let n = x.n_samples();
    let q = state.bt.nrows();
    let threshold_scale = lambda * n as f64 * q as f64;
    let mut grad = vec![0.0; q];
    let mut delta = vec![0.0; q];
    for j in 0..x.n_features() {
        let lj = state.curvatures[j];
        let xj = x.column(j);
        if !(lj > 0.0) {
            state.bt.column_mut(j).fill(0.0);
            continue;
        }
        let sinv_r = state.sinv_r.as_slice();
        for (t, g) in grad.iter_mut().enumerate() {
            let col = &sinv_r[t * n..(t + 1) * n];
            *g = xj.iter().zip(col).map(|(a, b)| a * b).sum();
        }
        let old = state.bt.column(j);
        for t in 0..q {
            delta[t] = old[t];
            grad[t] = old[t] + grad[t] / lj;
        }
        block_soft_threshold_in_place(&mut grad, threshold_scale / lj);
        let mut changed = false;
        for t in 0..q {
            delta[t] = grad[t] - delta[t];
            changed |= delta[t] != 0.0;
        }
        if !changed {
            continue;
        }
        state.bt.column_mut(j).copy_from_slice(&grad);
        let sx = &state.sinv_x.as_slice()[j * n..(j + 1) * n];
        let sinv_r = state.sinv_r.as_mut_slice();
        for (t, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let col = &mut sinv_r[t * n..(t + 1) * n];
            col.iter_mut().zip(sx).for_each(|(c, s)| *c -= d * s);
        }
    }
    state.epoch += 1;
}

fn check_warm_shape(b: &DMatrix<f64>, p: usize, q: usize) -> Result<()> {
    if b.shape() != (p, q) {
        return Err(Error::ShapeMismatch(format!(
            "warm start is {}x{}, expected {p}x{q}",
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

/// Floors visited on the way to `floor`: decades down from a tenth of the
/// root mean square of `Y`, always ending at `floor` itself.
///
/// With fewer tasks than samples the residual Gram matrix is rank deficient
/// and the smallest eigenvalues of `Σ` sit at the floor, where the curvature
/// seen by coordinate descent is `1/σ̲`. A small floor then makes the
/// alternating scheme crawl; solving at larger floors first removes most of
/// the distance at a fraction of the cost.
fn floor_schedule(y: &DMatrix<f64>, floor: f64, enabled: bool) -> Vec<f64> {
    let mut levels = Vec::new();
    if enabled {
        let rms = y.norm() / ((y.nrows() * y.ncols()) as f64).sqrt();
        let mut level = 0.1 * rms;
        while level > 1.5 * floor {
            levels.push(level);
            level *= 0.1;
        }
    }
    levels.push(floor);
    levels
}

fn finish(result: FitResult) -> Result<FitResult> {
    if result.converged {
        Ok(result)
    } else {
        Err(Error::MaxEpochsReached(Box::new(result)))
    }
}

/// Jointly estimates `(B̂, Σ̂)`.
///
/// Every `f` epochs `Σ` is refreshed and the duality gap is certified from
/// scratch; the fit stops once the gap falls under the configured threshold.
/// With continuation on, the gap history also holds the gaps of the
/// intermediate floors.
pub fn fit_sgcl(x: &DesignMatrix, y: &TaskMatrix, config: &SolverConfig) -> Result<FitResult> {
    validate_dataset(x, y)?;
    config.validate()?;
    let floor = config.sigma_floor.scalar_value()?;
    let (n, q) = (y.n_samples() as f64, y.n_tasks() as f64);
    let lambda = config.lambda;

    let (lambda_max, sigma_max) = critical_point(x, y, floor)?;
    let gap_scale =
        mahalanobis_inv(y.values(), &sigma_max) / (2.0 * n * q) + sigma_max.trace() / (2.0 * n);
    let threshold = stop_threshold(config.stopping, config.tol, gap_scale, y);

    let (b0, noise0) = match &config.warm_start {
        Some(w) => {
            check_warm_shape(w.coefficients.values(), x.n_features(), y.n_tasks())?;
            (
                Some(w.coefficients.values()),
                w.noise.as_ref().and_then(|nz| nz.as_full()),
            )
        }
        None => (None, None),
    };
    let mut state = SgclState::new(x, y, floor, b0, noise0)?;
    let result = |state: &SgclState, cert: Certificate, converged, history| FitResult {
        solver: SolverKind::Sgcl,
        coefficients: Coefficients::new(state.coefficients()),
        noise: NoiseSqrtCov::Full(state.noise.clone()),
        primal: cert.primal,
        dual: cert.dual,
        gap: cert.gap,
        epochs_run: state.epoch,
        lambda,
        lambda_max,
        converged,
        gap_history: history,
    };

    let levels = floor_schedule(y.values(), floor, config.continuation);
    if levels.len() > 1 {
        // The starting point may already be optimal, e.g. B = 0 above λ_max.
        let mut start = state.clone();
        start.refresh_noise(x, y, floor)?;
        let cert = start.certificate(x, y, floor, lambda);
        if cert.gap <= threshold {
            return finish(result(&start, cert, true, vec![(0, cert.gap)]));
        }
    }

    let mut history = Vec::new();
    for (stage, &level) in levels.iter().enumerate() {
        let last = stage + 1 == levels.len();
        let mut accel = Anderson::new(config.anderson);
        loop {
            let epoch = state.epoch;
            if epoch % config.f == 0 || epoch >= config.max_epochs {
                state.refresh_noise(x, y, level)?;
                let cert = state.certificate(x, y, level, lambda);
                history.push((epoch, cert.gap));
                if cert.gap <= threshold {
                    if last {
                        return finish(result(&state, cert, true, history));
                    }
                    break;
                }
                if epoch >= config.max_epochs {
                    let cert = if last {
                        cert
                    } else {
                        state.refresh_noise(x, y, floor)?;
                        let cert = state.certificate(x, y, floor, lambda);
                        *history.last_mut().expect("just pushed") = (epoch, cert.gap);
                        cert
                    };
                    return finish(result(&state, cert, cert.gap <= threshold, history));
                }
                // Extrapolate across the outer alternating iterations, whose
                // contraction is what limits the convergence speed.
                if let Some(cand) = accel.push(state.bt.as_slice()) {
                    let (q, p) = state.bt.shape();
                    let b = DMatrix::from_column_slice(q, p, &cand).transpose();
                    let r = y.values() - x.values() * &b;
                    let noise = sigma_update_full(&r, level)?;
                    if primal_sgcl(&b, &noise, x, y, lambda) < cert.primal {
                        state.bt = b.transpose();
                        state.noise = noise;
                        state.rebuild_caches(x, y);
                    }
                }
            }
            bcd_epoch_sgcl(&mut state, x, lambda);
        }
    }
    unreachable!("the last stage always returns")
}

fn mahalanobis_inv(m: &DMatrix<f64>, noise: &FullNoise) -> f64 {
    m.dot(&(noise.inverse() * m)).max(0.0)
}

/// Rank-one noise with the caches coordinate descent needs.
struct SingleTaskCache {
    noise: RankOneSigma,
    sinv_x: DMatrix<f64>,
    sinv_r: DVector<f64>,
    curvatures: Vec<f64>,
    cert: Certificate,
}

fn single_task_refresh(
    x: &DesignMatrix,
    y: &TaskMatrix,
    beta: &DVector<f64>,
    level: f64,
    lambda: f64,
) -> SingleTaskCache {
    let n = x.n_samples();
    let r = y.values().column(0) - x.values() * beta;
    let noise = sigma_update_rank_one(&r, level);
    let sinv_x = noise.apply_inverse(x.values());
    let r_mat = DMatrix::from_column_slice(n, 1, r.as_slice());
    let sinv_r_mat = noise.apply_inverse(&r_mat);
    let curvatures = (0..x.n_features())
        .map(|j| x.column(j).iter().zip(sinv_x.column(j).iter()).map(|(a, b)| a * b).sum())
        .collect();
    let b_mat = DMatrix::from_column_slice(beta.len(), 1, beta.as_slice());
    let cert = certify(x, y, &b_mat, &r_mat, &sinv_r_mat, noise.trace, level, lambda);
    SingleTaskCache {
        noise,
        sinv_x,
        sinv_r: sinv_r_mat.column(0).into_owned(),
        curvatures,
        cert,
    }
}

/// Single-task variant: `Σ` is refreshed through the rank-one closed form and
/// Sherman–Morrison, and coordinates are updated by scalar soft-thresholding.
pub fn fit_sgcl_single_task(
    x: &DesignMatrix,
    y: &DVector<f64>,
    config: &SolverConfig,
) -> Result<FitResult> {
    let y_task = TaskMatrix::from_vector(y)?;
    validate_dataset(x, &y_task)?;
    config.validate()?;
    let floor = config.sigma_floor.scalar_value()?;
    let lambda = config.lambda;
    let p = x.n_features();
    let nf = x.n_samples() as f64;

    let sigma_max = sigma_update_rank_one(y, floor);
    let sinv_y = sigma_max.apply_inverse(y_task.values());
    let lambda_max = row_norm_2inf(&(x.values().transpose() * &sinv_y)) / nf;
    let gap_scale = y.dot(&sinv_y.column(0)).max(0.0) / (2.0 * nf) + sigma_max.trace / (2.0 * nf);
    let threshold = stop_threshold(config.stopping, config.tol, gap_scale, &y_task);

    let mut beta = match &config.warm_start {
        Some(w) => {
            check_warm_shape(w.coefficients.values(), p, 1)?;
            w.coefficients.values().column(0).into_owned()
        }
        None => DVector::zeros(p),
    };
    let result = |beta: &DVector<f64>, cache: &SingleTaskCache, epoch, history| -> Result<FitResult> {
        let cert = cache.cert;
        finish(FitResult {
            solver: SolverKind::Sgcl,
            coefficients: Coefficients::new(DMatrix::from_column_slice(p, 1, beta.as_slice())),
            noise: NoiseSqrtCov::Full(cache.noise.to_full()?),
            primal: cert.primal,
            dual: cert.dual,
            gap: cert.gap,
            epochs_run: epoch,
            lambda,
            lambda_max,
            converged: cert.gap <= threshold,
            gap_history: history,
        })
    };

    let levels = floor_schedule(y_task.values(), floor, config.continuation);
    if levels.len() > 1 {
        let start = single_task_refresh(x, &y_task, &beta, floor, lambda);
        if start.cert.gap <= threshold {
            return result(&beta, &start, 0, vec![(0, start.cert.gap)]);
        }
    }

    let mut history = Vec::new();
    let mut epoch = 0;
    for (stage, &level) in levels.iter().enumerate() {
        let last = stage + 1 == levels.len();
        let mut accel = Anderson::new(config.anderson);
        // Replaced at the first check of the stage, which happens right away.
        let mut cache = single_task_refresh(x, &y_task, &beta, level, lambda);
        loop {
            if epoch % config.f == 0 || epoch >= config.max_epochs {
                cache = single_task_refresh(x, &y_task, &beta, level, lambda);
                history.push((epoch, cache.cert.gap));
                if cache.cert.gap <= threshold {
                    if last {
                        return result(&beta, &cache, epoch, history);
                    }
                    break;
                }
                if epoch >= config.max_epochs {
                    if !last {
                        cache = single_task_refresh(x, &y_task, &beta, floor, lambda);
                        *history.last_mut().expect("just pushed") = (epoch, cache.cert.gap);
                    }
                    return result(&beta, &cache, epoch, history);
                }
                if let Some(cand) = accel.push(beta.as_slice()) {
                    let cand = DVector::from_vec(cand);
                    let trial = single_task_refresh(x, &y_task, &cand, level, lambda);
                    if trial.cert.primal < cache.cert.primal {
                        beta = cand;
                        cache = trial;
                    }
                }
            }

            for j in 0..p {
                let lj = cache.curvatures[j];
                if !(lj > 0.0) {
                    beta[j] = 0.0;
                    continue;
                }
                let xj = x.column(j);
                let g: f64 = xj.iter().zip(cache.sinv_r.iter()).map(|(a, b)| a * b).sum();
                let old = beta[j];
                let new = soft_threshold(old + g / lj, lambda * nf / lj);
                let d = new - old;
                if d != 0.0 {
                    beta[j] = new;
                    cache.sinv_r.axpy(-d, &cache.sinv_x.column(j), 1.0);
                }
            }
            epoch += 1;
        }
    }
    unreachable!("the last stage always returns")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::SigmaFloor;

    fn design(rows: usize, cols: usize, data: &[f64]) -> DesignMatrix {
        DesignMatrix::single_block(DMatrix::from_row_slice(rows, cols, data)).unwrap()
    }

    fn tasks(rows: usize, cols: usize, data: &[f64]) -> TaskMatrix {
        TaskMatrix::new(DMatrix::from_row_slice(rows, cols, data)).unwrap()
    }

    #[test]
    fn lambda_max_hand_value() {
        let x = design(2, 1, &[1.0, 0.0]);
        let y = tasks(2, 1, &[2.0, 0.0]);
        let lmax = lambda_max_sgcl(&x, &y, 1.0).unwrap();
        assert!((lmax - 0.5).abs() < 1e-14);
    }

    #[test]
    fn lambda_max_uncorrelated_is_degenerate() {
        let x = design(2, 1, &[0.0, 1.0]);
        let y = tasks(2, 1, &[2.0, 0.0]);
        assert!(matches!(
            lambda_max_sgcl(&x, &y, 1.0),
            Err(Error::DegenerateProblem(_))
        ));
    }

    #[test]
    fn primal_examples() {
        let x = design(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let zero_y = TaskMatrix::new(DMatrix::zeros(3, 2)).unwrap();
        let floor = 0.4;
        let noise = FullNoise::scalar(3, floor).unwrap();
        let b = DMatrix::zeros(2, 2);
        assert!((primal_sgcl(&b, &noise, &x, &zero_y, 1.0) - floor / 2.0).abs() < 1e-15);

        let y = tasks(3, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 0.0]);
        let identity = FullNoise::scalar(3, 1.0).unwrap();
        let expected = y.values().norm_squared() / 12.0 + 0.5;
        assert!((primal_sgcl(&b, &identity, &x, &y, 3.0) - expected).abs() < 1e-14);
    }

    #[test]
    fn zero_residual_dual_point() {
        let x = design(2, 1, &[1.0, 1.0]);
        let theta = dual_point_sgcl(&DMatrix::zeros(2, 3), &x, 0.1);
        assert!(theta.is_zero());
        let y = tasks(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert!((dual_sgcl(&theta, &y, 0.3, 0.1) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn one_feature_epoch_closed_form() {
        let x = design(2, 1, &[1.0, 1.0]);
        let y = tasks(2, 1, &[2.0, 2.0]);
        let mut state = SgclState::new(&x, &y, 1.0, None, None).unwrap();
        bcd_epoch_sgcl(&mut state, &x, 0.5);
        assert!((state.coefficients()[(0, 0)] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn zero_column_is_skipped() {
        let x = design(3, 2, &[0.0, 1.0, 0.0, 2.0, 0.0, -1.0]);
        let y = tasks(3, 1, &[1.0, 2.0, -1.0]);
        let config = SolverConfig::new(0.05, SigmaFloor::scalar(1e-2));
        let fit = fit_sgcl(&x, &y, &config).unwrap();
        assert_eq!(fit.coefficients.values()[(0, 0)], 0.0);
        assert!(fit.coefficients.values()[(1, 0)] != 0.0);
    }

    #[test]
    fn single_task_zero_observations() {
        let x = design(3, 2, &[1.0, 0.0, 0.5, 1.0, -1.0, 2.0]);
        let y = DVector::zeros(3);
        let config = SolverConfig::new(0.1, SigmaFloor::scalar(0.2));
        let fit = fit_sgcl_single_task(&x, &y, &config).unwrap();
        assert!(fit.coefficients.is_zero());
        let sigma = fit.noise.reconstruct(3);
        assert!((sigma - DMatrix::identity(3, 3) * 0.2).amax() < 1e-14);
    }

    #[test]
    fn single_task_one_feature_converges() {
        let x = design(2, 1, &[1.0, 1.0]);
        let y = DVector::from_vec(vec![2.0, 2.0]);
        let config = SolverConfig::new(0.5, SigmaFloor::scalar(1e-3));
        let fit = fit_sgcl_single_task(&x, &y, &config).unwrap();
        assert!(fit.converged);
        assert!(fit.gap.abs() <= 1e-6 * fit.primal.abs().max(1.0));
    }
}
