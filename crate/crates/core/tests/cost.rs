//! Per-coordinate cost grows linearly in `nq`. Kept in its own binary so the
//! timings do not compete with other tests.

mod common;

use std::time::Instant;

use common::{config_at, instance};
use concomitant::sbhcl::{bcd_epoch_sbhcl, SbhclState};
use concomitant::sgcl::{bcd_epoch_sgcl, SgclState};
use concomitant::SolverKind;

const EPOCHS: usize = 20;
const REPEATS: usize = 7;

fn best_of<F: FnMut() -> f64>(mut run: F) -> f64 {
    (0..REPEATS).map(|_| run()).fold(f64::INFINITY, f64::min)
}

fn sbhcl_epoch_time(n: usize) -> f64 {
    let (x, y) = instance(n, 100, 10, vec![n / 2, n / 2], 1);
    let cfg = config_at(SolverKind::Sbhcl, &x, &y, 0.05, 1e-6);
    let floors = cfg.sigma_floor.per_block_values(2).unwrap();
    best_of(|| {
        let mut s = SbhclState::new(&x, &y, x.block_sizes(), &floors, None, None, true).unwrap();
        let t = Instant::now();
        for _ in 0..EPOCHS {
            bcd_epoch_sbhcl(&mut s, &x, cfg.lambda);
        }
        t.elapsed().as_secs_f64()
    })
}

fn sgcl_epoch_time(n: usize) -> f64 {
    let (x, y) = instance(n, 100, 10, vec![n], 1);
    let cfg = config_at(SolverKind::Sgcl, &x, &y, 0.05, 1e-6);
    let floor = cfg.sigma_floor.scalar_value().unwrap();
    best_of(|| {
        let mut s = SgclState::new(&x, &y, floor, None, None).unwrap();
        s.refresh_noise(&x, &y, floor).unwrap();
        let t = Instant::now();
        for _ in 0..EPOCHS {
            bcd_epoch_sgcl(&mut s, &x, cfg.lambda);
        }
        t.elapsed().as_secs_f64()
    })
}

#[test]
fn epoch_cost_is_linear_in_samples() {
    for (name, time) in [
        ("sbhcl", sbhcl_epoch_time as fn(usize) -> f64),
        ("sgcl", sgcl_epoch_time),
    ] {
        let ratio = time(800) / time(400);
        eprintln!("{name}: doubling n multiplies the epoch time by {ratio:.2}");
        assert!((2.0 / 1.5..=2.0 * 1.5).contains(&ratio), "{name}: {ratio}");
    }
}
