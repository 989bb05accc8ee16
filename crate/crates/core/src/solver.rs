//! Solver dispatch and regularization paths.

use crate::error::Result;
use crate::sbhcl::{fit_mtl, fit_sbhcl, fit_scl, lambda_max_mtl, lambda_max_sbhcl};
use crate::sgcl::{fit_sgcl, lambda_max_sgcl};
use crate::types::{
    default_sigma_floor, DesignMatrix, FitResult, SigmaFloor, SolverConfig, SolverKind, TaskMatrix,
    WarmStart,
};

/// Number of grid points and smallest ratio of the default path.
pub const DEFAULT_GRID_LEN: usize = 15;
pub const DEFAULT_RATIO_MIN: f64 = 0.1;

pub fn fit(
    kind: SolverKind,
    x: &DesignMatrix,
    y: &TaskMatrix,
    config: &SolverConfig,
) -> Result<FitResult> {
    match kind {
        SolverKind::Sgcl => fit_sgcl(x, y, config),
        SolverKind::Sbhcl => fit_sbhcl(x, y, config),
        SolverKind::Scl => fit_scl(x, y, config),
        SolverKind::Mtl => fit_mtl(x, y, config),
    }
}

/// The solver-specific critical regularization level.
pub fn lambda_max(
    kind: SolverKind,
    x: &DesignMatrix,
    y: &TaskMatrix,
    floor: &SigmaFloor,
) -> Result<f64> {
    match kind {
        SolverKind::Sgcl => lambda_max_sgcl(x, y, floor.scalar_value()?),
        SolverKind::Sbhcl => lambda_max_sbhcl(x, y, &floor.per_block_values(x.n_blocks())?),
        SolverKind::Scl => lambda_max_sbhcl(
            &x.with_blocks(vec![x.n_samples()])?,
            y,
            &floor.per_block_values(1)?,
        ),
        SolverKind::Mtl => lambda_max_mtl(x, y),
    }
}

/// The default noise floor for a solver: per block for the block model,
/// a single scalar otherwise.
pub fn default_floor(
    kind: SolverKind,
    x: &DesignMatrix,
    y: &TaskMatrix,
    alpha: i32,
) -> Result<SigmaFloor> {
    match kind {
        SolverKind::Sbhcl => default_sigma_floor(y, Some(x.block_sizes()), alpha),
        _ => default_sigma_floor(y, None, alpha),
    }
}

/// `num` ratios log-spaced from 1 down to `ratio_min`, in decreasing order.
pub fn ratio_grid(num: usize, ratio_min: f64) -> Vec<f64> {
    match num {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => {
            let step = ratio_min.ln() / (num - 1) as f64;
            (0..num).map(|i| (step * i as f64).exp()).collect()
        }
    }
}

/// Fits along a decreasing grid of `λ`, warm-starting each point from the
/// previous one. Failures are reported per point and do not stop the path;
/// an unconverged point still seeds the next one.
pub fn fit_path(
    x: &DesignMatrix,
    y: &TaskMatrix,
    kind: SolverKind,
    grid: &[f64],
    config: &SolverConfig,
) -> Vec<Result<FitResult>> {
    let mut warm = config.warm_start.clone();
    let mut out = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let mut cfg = config.with_lambda(lambda);
        cfg.warm_start = warm.clone();
        let res = fit(kind, x, y, &cfg);
        let seed = match &res {
            Ok(fit) => Some(fit),
            Err(crate::Error::MaxEpochsReached(fit)) => Some(fit.as_ref()),
            Err(_) => None,
        };
        if let Some(fit) = seed {
            warm = Some(WarmStart {
                coefficients: fit.coefficients.clone(),
                noise: Some(fit.noise.clone()),
            });
        }
        out.push(res);
    }
    out
}
