//! Synthetic heteroscedastic benchmarks and their evaluation metrics.
//!
//! Designs have Toeplitz-correlated Gaussian features, coefficients are
//! row-sparse Gaussian, and the noise is block homoscedastic with known
//! per-block multipliers. Every function is a pure function of its inputs:
//! the seed fully determines the draw.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{default_floor, fit_path, lambda_max};
use crate::types::{
    block_ranges, Coefficients, DesignMatrix, FitResult, SigmaFloor, SolverConfig, SolverKind,
    StoppingRule, TaskMatrix,
};

const STREAM_DESIGN: u64 = 0;
const STREAM_COEFS: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_SPLIT: u64 = 3;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// How the base noise level `σ*` is calibrated on the realized draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrDefinition {
    /// `‖XB*‖ / ‖Σ*E‖ = snr`: larger values mean less noise.
    #[default]
    SignalOverNoise,
    /// `‖Y‖ / ‖XB*‖ = snr`.
    TotalOverSignal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub rho: f64,
    pub support_size: usize,
    pub block_sizes: Vec<usize>,
    pub noise_multipliers: Vec<f64>,
    pub snr: f64,
    #[serde(default)]
    pub snr_definition: SnrDefinition,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.n == 0 || self.p == 0 || self.q == 0 {
            return bad(format!(
                "dimensions must be positive, got n={} p={} q={}",
                self.n, self.p, self.q
            ));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if self.support_size > self.p {
            return bad(format!(
                "support size {} exceeds p = {}",
                self.support_size, self.p
            ));
        }
        if self.block_sizes.is_empty()
            || self.block_sizes.contains(&0)
            || self.block_sizes.iter().sum::<usize>() != self.n
        {
            return bad(format!(
                "block sizes {:?} do not partition n = {}",
                self.block_sizes, self.n
            ));
        }
        if self.noise_multipliers.len() != self.block_sizes.len() {
            return bad(format!(
                "{} noise multipliers for {} blocks",
                self.noise_multipliers.len(),
                self.block_sizes.len()
            ));
        }
        if self.noise_multipliers.iter().any(|m| !(*m > 0.0)) {
            return bad("noise multipliers must be positive".into());
        }
        if !(self.snr > 0.0) || !self.snr.is_finite() {
            return bad(format!("snr must be positive, got {}", self.snr));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

fn design_values(n: usize, p: usize, rho: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let innov = (1.0 - rho * rho).sqrt();
    let mut m = DMatrix::zeros(n, p);
    for i in 0..n {
        let mut prev: f64 = rng.sample(StandardNormal);
        m[(i, 0)] = prev;
        for j in 1..p {
            let eps: f64 = rng.sample(StandardNormal);
            prev = rho * prev + innov * eps;
            m[(i, j)] = prev;
        }
    }
    m
}

/// Rows are i.i.d. stationary AR(1) sequences, which realizes the Toeplitz
/// correlation `ρ^{|i−j|}` between features exactly.
pub fn gen_design(n: usize, p: usize, rho: f64, seed: u64) -> Result<DesignMatrix> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidSpec(format!("rho must lie in [0, 1), got {rho}")));
    }
    let mut rng = stream_rng(seed, STREAM_DESIGN);
    DesignMatrix::single_block(design_values(n, p, rho, &mut rng))
}

fn coef_values(p: usize, q: usize, support_size: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut rows: Vec<usize> = sample(rng, p, support_size).into_vec();
    rows.sort_unstable();
    let mut m = DMatrix::zeros(p, q);
    for &j in &rows {
        for t in 0..q {
            m[(j, t)] = rng.sample(StandardNormal);
        }
    }
    m
}

/// A uniformly random set of `support_size` rows with standard normal entries.
pub fn gen_coeffs(p: usize, q: usize, support_size: usize, seed: u64) -> Result<Coefficients> {
    if support_size > p {
        return Err(Error::InvalidSpec(format!(
            "support size {support_size} exceeds p = {p}"
        )));
    }
    let mut rng = stream_rng(seed, STREAM_COEFS);
    Ok(Coefficients::new(coef_values(p, q, support_size, &mut rng)))
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    m.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
    m
}

fn scale_blocks(m: &mut DMatrix<f64>, block_sizes: &[usize], factors: &[f64]) {
    for (range, &f) in block_ranges(block_sizes).into_iter().zip(factors) {
        m.rows_mut(range.start, range.len()).scale_mut(f);
    }
}

/// Solves for `σ*` so that the chosen SNR functional equals `snr` on the
/// realized signal `S = XB*` and unit-level noise `N = M E`.
fn calibrate_sigma(
    signal: &DMatrix<f64>,
    noise: &DMatrix<f64>,
    snr: f64,
    definition: SnrDefinition,
) -> Result<f64> {
    let s2 = signal.norm_squared();
    let e2 = noise.norm_squared();
    if s2 == 0.0 {
        return Err(Error::CalibrationFailure(
            "the signal XB* is zero, the SNR is undefined".into(),
        ));
    }
    if e2 == 0.0 {
        return Err(Error::CalibrationFailure("the noise draw is zero".into()));
    }
    match definition {
        SnrDefinition::SignalOverNoise => Ok(s2.sqrt() / (snr * e2.sqrt())),
        SnrDefinition::TotalOverSignal => {
            // ‖S + σN‖² = snr²‖S‖² is a quadratic in σ; take its largest root.
            let b = 2.0 * signal.dot(noise);
            let c = s2 * (1.0 - snr * snr);
            let disc = b * b - 4.0 * e2 * c;
            if disc < 0.0 {
                return Err(Error::CalibrationFailure(format!(
                    "no noise level gives ‖Y‖/‖XB*‖ = {snr} on this draw"
                )));
            }
            let root = (-b + disc.sqrt()) / (2.0 * e2);
            if root > 0.0 {
                Ok(root)
            } else {
                Err(Error::CalibrationFailure(format!(
                    "‖Y‖/‖XB*‖ = {snr} needs a non-positive noise level on this draw"
                )))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
    All,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub spec: SimulationSpec,
    pub x: DesignMatrix,
    pub y: TaskMatrix,
    pub b_star: Coefficients,
    /// Base noise level `σ*` after calibration.
    pub base_sigma: f64,
    /// Per-block true noise levels `multiplier_k · σ*`.
    pub sigma_star: Vec<f64>,
    pub true_support: Vec<usize>,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Draws `X`, `B*` and block noise, calibrates `σ*`, and splits every block
/// evenly (seeded) into train and test rows.
pub fn gen_dataset(spec: &SimulationSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng_x = stream_rng(spec.seed, STREAM_DESIGN);
    let xv = design_values(spec.n, spec.p, spec.rho, &mut rng_x);
    let mut rng_b = stream_rng(spec.seed, STREAM_COEFS);
    let b = coef_values(spec.p, spec.q, spec.support_size, &mut rng_b);
    let mut rng_e = stream_rng(spec.seed, STREAM_NOISE);
    let mut noise = gaussian_matrix(spec.n, spec.q, &mut rng_e);
    scale_blocks(&mut noise, &spec.block_sizes, &spec.noise_multipliers);

    let signal = &xv * &b;
    let base_sigma = calibrate_sigma(&signal, &noise, spec.snr, spec.snr_definition)?;
    let y = signal + noise * base_sigma;

    let mut rng_s = stream_rng(spec.seed, STREAM_SPLIT);
    let mut train_rows = Vec::with_capacity(spec.n / 2 + spec.block_sizes.len());
    let mut test_rows = Vec::with_capacity(spec.n / 2 + spec.block_sizes.len());
    for range in block_ranges(&spec.block_sizes) {
        let len = range.len();
        let picked = sample(&mut rng_s, len, len / 2).into_vec();
        let mut in_train = vec![false; len];
        picked.iter().for_each(|&i| in_train[i] = true);
        for (i, &tr) in in_train.iter().enumerate() {
            if tr {
                train_rows.push(range.start + i);
            } else {
                test_rows.push(range.start + i);
            }
        }
    }

    let b_star = Coefficients::new(b);
    Ok(Dataset {
        spec: spec.clone(),
        x: DesignMatrix::new(xv, spec.block_sizes.clone())?,
        y: TaskMatrix::new(y)?,
        true_support: b_star.active_rows().to_vec(),
        b_star,
        base_sigma,
        sigma_star: spec
            .noise_multipliers
            .iter()
            .map(|m| m * base_sigma)
            .collect(),
        train_rows,
        test_rows,
    })
}

impl Dataset {
    /// Rows of a split, in increasing order.
    pub fn rows(&self, split: Split) -> Vec<usize> {
        match split {
            Split::Train => self.train_rows.clone(),
            Split::Test => self.test_rows.clone(),
            Split::All => (0..self.spec.n).collect(),
        }
    }

    /// Block sizes of a split: the count of its rows falling in each block.
    pub fn split_blocks(&self, split: Split) -> Vec<usize> {
        let rows = self.rows(split);
        block_ranges(&self.spec.block_sizes)
            .iter()
            .map(|r| rows.iter().filter(|i| r.contains(i)).count())
            .collect()
    }

    /// `(X, Y)` restricted to a split, keeping the block partition.
    pub fn subset(&self, split: Split) -> Result<(DesignMatrix, TaskMatrix)> {
        let rows = self.rows(split);
        let x = self.x.values().select_rows(rows.iter());
        let y = self.y.values().select_rows(rows.iter());
        let blocks: Vec<usize> = self
            .split_blocks(split)
            .into_iter()
            .filter(|&c| c > 0)
            .collect();
        Ok((DesignMatrix::new(x, blocks)?, TaskMatrix::new(y)?))
    }
}

/// Per block, `log(‖Y^k − X^k B̂‖ / ‖Y^k − X^k B*‖)` over the rows of a split.
/// Zero means oracle-level prediction, positive values under-fitting.
pub fn metric_normalized_rmse(b_hat: &DMatrix<f64>, data: &Dataset, split: Split) -> Result<Vec<f64>> {
    let rows = data.rows(split);
    let fitted = data.y.values() - data.x.values() * b_hat;
    let oracle = data.y.values() - data.x.values() * data.b_star.values();
    let mut out = Vec::with_capacity(data.spec.block_sizes.len());
    for (k, range) in block_ranges(&data.spec.block_sizes).into_iter().enumerate() {
        let (mut num, mut den) = (0.0, 0.0);
        for &i in rows.iter().filter(|i| range.contains(i)) {
            num += fitted.row(i).norm_squared();
            den += oracle.row(i).norm_squared();
        }
        if den == 0.0 {
            return Err(Error::OracleZeroResidual { block: k });
        }
        out.push(0.5 * (num / den).ln());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    pub seed: u64,
    pub train: Vec<f64>,
    pub test: Vec<f64>,
}

impl RmseReport {
    pub fn new(fit: &FitResult, data: &Dataset) -> Result<Self> {
        let b = fit.coefficients.values();
        Ok(Self {
            seed: data.spec.seed,
            train: metric_normalized_rmse(b, data, Split::Train)?,
            test: metric_normalized_rmse(b, data, Split::Test)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub lambda_ratio: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Support recovery rates of a row-sparse estimate. A row is selected iff
/// its stored entries are not all exactly zero.
pub fn roc_point(coefs: &Coefficients, true_support: &[usize], lambda_ratio: f64) -> RocPoint {
    let p = coefs.values().nrows();
    let predicted = coefs.active_rows();
    let hits = predicted
        .iter()
        .filter(|j| true_support.binary_search(j).is_ok())
        .count();
    let false_pos = predicted.len() - hits;
    let negatives = p - true_support.len();
    RocPoint {
        lambda_ratio,
        tpr: if true_support.is_empty() {
            0.0
        } else {
            hits as f64 / true_support.len() as f64
        },
        fpr: if negatives == 0 {
            0.0
        } else {
            false_pos as f64 / negatives as f64
        },
    }
}

/// Trapezoidal area under the `(fpr, tpr)` staircase, closed by `(0, 0)`
/// and `(1, 1)`.
pub fn roc_auc(points: &[RocPoint]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points.iter().map(|p| (p.fpr, p.tpr)).collect();
    pts.push((0.0, 0.0));
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite rates"));
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub all_converged: bool,
}

/// Solver accuracy and noise-floor settings shared by the experiment drivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tol: f64,
    pub f: usize,
    pub max_epochs: usize,
    pub floor_alpha: i32,
    pub stopping: StoppingRule,
    pub anderson: usize,
    pub continuation: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: SolverConfig::DEFAULT_TOL,
            f: SolverConfig::DEFAULT_F,
            max_epochs: SolverConfig::DEFAULT_MAX_EPOCHS,
            floor_alpha: crate::types::DEFAULT_FLOOR_ALPHA,
            stopping: StoppingRule::Relative,
            anderson: SolverConfig::DEFAULT_ANDERSON,
            continuation: true,
        }
    }
}

impl SolverSettings {
    pub fn config(&self, lambda: f64, floor: SigmaFloor) -> SolverConfig {
        let mut config = SolverConfig::new(lambda, floor);
        config.tol = self.tol;
        config.f = self.f;
        config.max_epochs = self.max_epochs;
        config.stopping = self.stopping;
        config.anderson = self.anderson;
        config.continuation = self.continuation;
        config
    }
}

/// A fitted path with each point's ratio `λ/λ_max`. Points that hit the
/// epoch budget are kept (their certificate says how far off they are).
#[derive(Debug, Clone)]
pub struct PathFit {
    pub lambda_max: f64,
    pub ratios: Vec<f64>,
    pub fits: Vec<FitResult>,
}

impl PathFit {
    pub fn all_converged(&self) -> bool {
        self.fits.iter().all(|f| f.converged)
    }
}

pub fn fit_ratio_path(
    x: &DesignMatrix,
    y: &TaskMatrix,
    kind: SolverKind,
    ratios: &[f64],
    settings: &SolverSettings,
) -> Result<PathFit> {
    let floor = default_floor(kind, x, y, settings.floor_alpha)?;
    let lmax = lambda_max(kind, x, y, &floor)?;
    let config = settings.config(lmax, floor);
    let grid: Vec<f64> = ratios.iter().map(|r| r * lmax).collect();
    let fits = fit_path(x, y, kind, &grid, &config)
        .into_iter()
        .map(|r| r.or_else(Error::into_unconverged))
        .collect::<Result<Vec<_>>>()?;
    Ok(PathFit {
        lambda_max: lmax,
        ratios: ratios.to_vec(),
        fits,
    })
}

/// ROC curve traced by a decreasing grid of ratios `λ/λ_max`.
pub fn roc_sweep(
    x: &DesignMatrix,
    y: &TaskMatrix,
    true_support: &[usize],
    kind: SolverKind,
    ratios: &[f64],
    settings: &SolverSettings,
) -> Result<RocCurve> {
    let path = fit_ratio_path(x, y, kind, ratios, settings)?;
    let points: Vec<RocPoint> = path
        .fits
        .iter()
        .zip(&path.ratios)
        .map(|(f, &r)| roc_point(&f.coefficients, true_support, r))
        .collect();
    Ok(RocCurve {
        auc: roc_auc(&points),
        all_converged: path.all_converged(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRecord {
    pub seed: u64,
    pub solver: SolverKind,
    pub lambda_ratio: f64,
    pub lambda: f64,
    pub converged: bool,
    pub train: Vec<f64>,
    pub test: Vec<f64>,
}

/// Trains every solver on the train split along the ratio grid and reports
/// per-block normalized RMSE on both splits, one record per (seed, solver, λ).
pub fn rmse_experiment(
    spec: &SimulationSpec,
    seeds: &[u64],
    solvers: &[SolverKind],
    ratios: &[f64],
    settings: &SolverSettings,
) -> Result<Vec<RmseRecord>> {
    let per_seed: Vec<Result<Vec<RmseRecord>>> = seeds
        .par_iter()
        .map(|&seed| {
            let data = gen_dataset(&spec.with_seed(seed))?;
            let (x, y) = data.subset(Split::Train)?;
            let mut out = Vec::new();
            for &kind in solvers {
                let path = fit_ratio_path(&x, &y, kind, ratios, settings)?;
                for (fit, &ratio) in path.fits.iter().zip(&path.ratios) {
                    let report = RmseReport::new(fit, &data)?;
                    out.push(RmseRecord {
                        seed,
                        solver: kind,
                        lambda_ratio: ratio,
                        lambda: fit.lambda,
                        converged: fit.converged,
                        train: report.train,
                        test: report.test,
                    });
                }
            }
            Ok(out)
        })
        .collect();
    let mut records = Vec::new();
    for r in per_seed {
        records.extend(r?);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocRecord {
    pub seed: u64,
    pub solver: SolverKind,
    pub curve: RocCurve,
}

/// ROC curves for every (seed, solver) pair, fitted on all samples.
pub fn roc_experiment(
    spec: &SimulationSpec,
    seeds: &[u64],
    solvers: &[SolverKind],
    ratios: &[f64],
    settings: &SolverSettings,
) -> Result<Vec<RocRecord>> {
    let per_seed: Vec<Result<Vec<RocRecord>>> = seeds
        .par_iter()
        .map(|&seed| {
            let data = gen_dataset(&spec.with_seed(seed))?;
            solvers
                .iter()
                .map(|&kind| {
                    let curve =
                        roc_sweep(&data.x, &data.y, &data.true_support, kind, ratios, settings)?;
                    Ok(RocRecord {
                        seed,
                        solver: kind,
                        curve,
                    })
                })
                .collect()
        })
        .collect();
    let mut records = Vec::new();
    for r in per_seed {
        records.extend(r?);
    }
    Ok(records)
}

/// Mean AUC per solver, in the order of `solvers`.
pub fn mean_auc(records: &[RocRecord], solvers: &[SolverKind]) -> Vec<(SolverKind, f64)> {
    solvers
        .iter()
        .map(|&kind| {
            let aucs: Vec<f64> = records
                .iter()
                .filter(|r| r.solver == kind)
                .map(|r| r.curve.auc)
                .collect();
            (kind, aucs.iter().sum::<f64>() / aucs.len().max(1) as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialsReport {
    pub spec: SimulationSpec,
    pub lambda_ratio: f64,
    pub t_values: Vec<usize>,
    /// `sigma_hat[i][k]`: estimated level of block `k` after `t_values[i]` trials.
    pub sigma_hat: Vec<Vec<f64>>,
    /// Realized RMS of the averaged noise, per block, before fitting.
    pub noise_rms: Vec<Vec<f64>>,
    /// True single-trial levels per block.
    pub sigma_star: Vec<f64>,
    /// Least-squares slope of `log σ̂_k` against `log t`, per block.
    pub slopes: Vec<f64>,
    pub all_converged: bool,
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Repeated-measurement emulation: `Y_t = XB* + mean of the first t noise
/// draws`, each fitted with the block solver at `λ = ratio · λ_max(Y_t)`.
/// `σ*` is calibrated on the first trial.
pub fn trials_experiment(
    spec: &SimulationSpec,
    t_values: &[usize],
    lambda_ratio: f64,
    settings: &SolverSettings,
) -> Result<TrialsReport> {
    spec.validate()?;
    if t_values.is_empty() || t_values[0] == 0 || t_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSpec(
            "t values must be positive and strictly increasing".into(),
        ));
    }
    let t_max = *t_values.last().expect("non-empty");
    let mut rng_x = stream_rng(spec.seed, STREAM_DESIGN);
    let xv = design_values(spec.n, spec.p, spec.rho, &mut rng_x);
    let mut rng_b = stream_rng(spec.seed, STREAM_COEFS);
    let b = coef_values(spec.p, spec.q, spec.support_size, &mut rng_b);
    let signal = &xv * &b;
    let x = DesignMatrix::new(xv, spec.block_sizes.clone())?;

    let mut rng_e = stream_rng(spec.seed, STREAM_NOISE);
    let trials: Vec<DMatrix<f64>> = (0..t_max)
        .map(|_| {
            let mut e = gaussian_matrix(spec.n, spec.q, &mut rng_e);
            scale_blocks(&mut e, &spec.block_sizes, &spec.noise_multipliers);
            e
        })
        .collect();
    let base_sigma = calibrate_sigma(&signal, &trials[0], spec.snr, spec.snr_definition)?;

    let ranges = block_ranges(&spec.block_sizes);
    let results: Vec<Result<(Vec<f64>, Vec<f64>, bool)>> = t_values
        .par_iter()
        .map(|&t| {
            let mut avg = DMatrix::zeros(spec.n, spec.q);
            for e in &trials[..t] {
                avg += e;
            }
            avg *= base_sigma / t as f64;
            let rms: Vec<f64> = ranges
                .iter()
                .map(|r| {
                    avg.rows(r.start, r.len()).norm() / ((r.len() * spec.q) as f64).sqrt()
                })
                .collect();
            let y = TaskMatrix::new(&signal + &avg)?;
            let path = fit_ratio_path(&x, &y, SolverKind::Sbhcl, &[lambda_ratio], settings)?;
            let fit = &path.fits[0];
            let sig = fit
                .noise
                .block_sigmas()
                .map(<[f64]>::to_vec)
                .unwrap_or_default();
            Ok((sig, rms, fit.converged))
        })
        .collect();

    let mut sigma_hat = Vec::with_capacity(t_values.len());
    let mut noise_rms = Vec::with_capacity(t_values.len());
    let mut all_converged = true;
    for r in results {
        let (s, rms, conv) = r?;
        sigma_hat.push(s);
        noise_rms.push(rms);
        all_converged &= conv;
    }
    let log_t: Vec<f64> = t_values.iter().map(|&t| (t as f64).ln()).collect();
    let slopes = (0..ranges.len())
        .map(|k| {
            let ys: Vec<f64> = sigma_hat.iter().map(|s| s[k].ln()).collect();
            ols_slope(&log_t, &ys)
        })
        .collect();
    Ok(TrialsReport {
        spec: spec.clone(),
        lambda_ratio,
        t_values: t_values.to_vec(),
        sigma_hat,
        noise_rms,
        sigma_star: spec
            .noise_multipliers
            .iter()
            .map(|m| m * base_sigma)
            .collect(),
        slopes,
        all_converged,
    })
}
