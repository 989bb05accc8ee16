#![allow(dead_code)]

use concomitant::simulate::{gen_dataset, SimulationSpec, SnrDefinition};
use concomitant::solver::default_floor;
use concomitant::{
    fit, lambda_max, DesignMatrix, FitResult, NoiseSqrtCov, SolverConfig, SolverKind, TaskMatrix,
};
use nalgebra::DMatrix;

pub fn spec(n: usize, p: usize, q: usize, blocks: Vec<usize>, seed: u64) -> SimulationSpec {
    let k = blocks.len();
    SimulationSpec {
        n,
        p,
        q,
        rho: 0.5,
        support_size: (p / 10).max(1),
        block_sizes: blocks,
        noise_multipliers: (0..k).map(|i| [1.0, 2.0, 5.0][i % 3]).collect(),
        snr: 2.0,
        snr_definition: SnrDefinition::SignalOverNoise,
        seed,
    }
}

pub fn instance(n: usize, p: usize, q: usize, blocks: Vec<usize>, seed: u64) -> (DesignMatrix, TaskMatrix) {
    let data = gen_dataset(&spec(n, p, q, blocks, seed)).expect("valid spec");
    (data.x, data.y)
}

pub fn config_at(
    kind: SolverKind,
    x: &DesignMatrix,
    y: &TaskMatrix,
    ratio: f64,
    tol: f64,
) -> SolverConfig {
    let floor = default_floor(kind, x, y, 3).unwrap();
    let lmax = lambda_max(kind, x, y, &floor).unwrap();
    let mut cfg = SolverConfig::new(ratio * lmax, floor);
    cfg.tol = tol;
    cfg
}

pub fn fit_at(kind: SolverKind, x: &DesignMatrix, y: &TaskMatrix, ratio: f64, tol: f64) -> FitResult {
    fit(kind, x, y, &config_at(kind, x, y, ratio, tol)).expect("converged fit")
}

/// Dense `Σ⁻¹` of a fit.
pub fn noise_inverse(noise: &NoiseSqrtCov, n: usize) -> DMatrix<f64> {
    match noise {
        NoiseSqrtCov::Full(full) => full.inverse().clone(),
        other => other.reconstruct(n).try_inverse().expect("invertible"),
    }
}

/// Worst KKT violations of a fit:
/// `max_{active} ‖G_j − nqλ B_j/‖B_j‖‖ / (nqλ)` and `max_{inactive} ‖G_j‖ / (nqλ)`
/// where `G = XᵀΣ⁻¹(Y − XB)`.
pub fn kkt_violations(fit: &FitResult, x: &DesignMatrix, y: &TaskMatrix) -> (f64, f64) {
    let (n, q) = (y.n_samples(), y.n_tasks());
    let b = fit.coefficients.values();
    let r = y.values() - x.values() * b;
    let g = x.values().transpose() * noise_inverse(&fit.noise, n) * r;
    let scale = (n * q) as f64 * fit.lambda;
    let (mut active, mut inactive) = (0.0f64, 0.0f64);
    for j in 0..b.nrows() {
        let bj = b.row(j);
        let norm = bj.norm();
        if norm > 0.0 {
            let dev = (g.row(j) - bj * (scale / norm)).norm() / scale;
            active = active.max(dev);
        } else {
            inactive = inactive.max(g.row(j).norm() / scale);
        }
    }
    (active, inactive)
}
