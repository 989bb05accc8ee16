//! Fixtures shared by the benchmarks.

use concomitant::simulate::{gen_dataset, SimulationSpec, SnrDefinition};
use concomitant::solver::default_floor;
use concomitant::{lambda_max, DesignMatrix, SolverConfig, SolverKind, TaskMatrix};

/// A seeded heteroscedastic problem with three equal blocks.
pub fn problem(n: usize, p: usize, q: usize, seed: u64) -> (DesignMatrix, TaskMatrix) {
    let spec = SimulationSpec {
        n,
        p,
        q,
        rho: 0.7,
        support_size: (p / 10).max(1),
        block_sizes: vec![n / 3, n / 3, n - 2 * (n / 3)],
        noise_multipliers: vec![1.0, 2.0, 5.0],
        snr: 1.0,
        snr_definition: SnrDefinition::SignalOverNoise,
        seed,
    };
    let data = gen_dataset(&spec).expect("valid benchmark spec");
    (data.x, data.y)
}

/// Default configuration at `ratio · λ_max`.
pub fn config_at(kind: SolverKind, x: &DesignMatrix, y: &TaskMatrix, ratio: f64) -> SolverConfig {
    let floor = default_floor(kind, x, y, 3).expect("nonzero observations");
    let lmax = lambda_max(kind, x, y, &floor).expect("critical level");
    SolverConfig::new(ratio * lmax, floor)
}
