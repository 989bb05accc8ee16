//! Independent reference computations the solvers are checked against.

mod common;

use common::{config_at, instance};
use concomitant::ops::{l21_norm, sigma_update_full, sigma_update_rank_one};
use concomitant::sbhcl::{fit_mtl, primal_sbhcl, sqrt_lasso_objective};
use concomitant::sgcl::primal_sgcl;
use concomitant::{DesignMatrix, FullNoise, SolverKind, TaskMatrix};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Accelerated proximal gradient with adaptive restart on
/// `‖Y − XB‖²/(2nq) + λ‖B‖_{2,1}`, run until the iterates stop moving.
fn reference_mtl(x: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let nq = (y.nrows() * y.ncols()) as f64;
    let lip = x.singular_values().max().powi(2) / nq;
    let step = 1.0 / lip;
    let objective = |b: &DMatrix<f64>| (y - x * b).norm_squared() / (2.0 * nq) + lambda * l21_norm(b);
    let prox = |m: DMatrix<f64>| {
        let mut out = m;
        for j in 0..out.nrows() {
            let norm = out.row(j).norm();
            let shrink = if norm > lambda * step { 1.0 - lambda * step / norm } else { 0.0 };
            out.row_mut(j).scale_mut(shrink);
        }
        out
    };
    let mut b = DMatrix::zeros(x.ncols(), y.ncols());
    let mut z = b.clone();
    let mut t = 1.0f64;
    let mut last = objective(&b);
    for _ in 0..500_000 {
        let grad = -(x.transpose() * (y - x * &z)) / nq;
        let next = prox(&z - grad * step);
        let value = objective(&next);
        let moved = (&next - &b).norm();
        if value > last {
            if t == 1.0 {
                // A plain gradient step no longer descends: rounding level.
                break;
            }
            // Restart the momentum.
            t = 1.0;
            z = b.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &next + (&next - &b) * ((t - 1.0) / t_next);
        b = next;
        t = t_next;
        last = value;
        if moved <= 1e-15 * (1.0 + b.norm()) {
            break;
        }
    }
    b
}

#[test]
fn mtl_matches_proximal_gradient_reference() {
    for seed in 0..5 {
        let (x, y) = instance(20, 40, 5, vec![20], seed);
        for ratio in [0.5, 0.2] {
            let mut cfg = config_at(SolverKind::Mtl, &x, &y, ratio, 1e-14);
            cfg.max_epochs = 100_000;
            let fit = fit_mtl(&x, &y, &cfg).expect("converged");
            let oracle = reference_mtl(x.values(), y.values(), cfg.lambda);
            let diff = (fit.coefficients.values() - &oracle).abs().max();
            assert!(diff <= 1e-6, "seed {seed} ratio {ratio}: max deviation {diff:e}");
        }
    }
}

#[test]
fn mtl_reference_value_is_frozen() {
    // Guards the data generator and the oracle against silent drift.
    let (x, y) = instance(20, 40, 5, vec![20], 0);
    let lambda = 0.05;
    let b = reference_mtl(x.values(), y.values(), lambda);
    let nq = 100.0;
    let value = (y.values() - x.values() * &b).norm_squared() / (2.0 * nq) + lambda * l21_norm(&b);
    let frozen = FROZEN_MTL_VALUE;
    assert!((value - frozen).abs() <= 1e-9 * frozen, "{value:.17e}");
}

const FROZEN_MTL_VALUE: f64 = 8.253_574_510_729_823e-1;

/// `Tr(ZᵀS⁻¹Z)/(2n) + Tr(S)/(2n)` through a dense inverse.
fn noise_objective(z: &DMatrix<f64>, s: &DMatrix<f64>) -> f64 {
    let n = z.nrows() as f64;
    let inv = s.clone().try_inverse().expect("positive definite");
    ((z.transpose() * inv * z).trace() + s.trace()) / (2.0 * n)
}

/// Symmetrizes `m` and lifts its spectrum to at least `floor`.
fn project_feasible(m: DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mu = eig.eigenvalues.map(|v| v.max(floor));
    &eig.eigenvectors * DMatrix::from_diagonal(&mu) * eig.eigenvectors.transpose()
}

#[test]
fn noise_update_is_optimal_and_certified() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let n = rng.random_range(1..=5);
        let q = rng.random_range(1..=3);
        let r = gaussian(&mut rng, n, q);
        let floor = rng.random_range(0.05..1.5);
        let sigma = sigma_update_full(&r, floor).unwrap().reconstruct();
        let z = &r / (q as f64).sqrt();
        let best = noise_objective(&z, &sigma);
        for _ in 0..100 {
            let scale = 10f64.powf(rng.random_range(-4.0..0.0));
            let pert = gaussian(&mut rng, n, n) * scale;
            let other = project_feasible(&sigma + pert, floor);
            let value = noise_objective(&z, &other);
            assert!(best <= value + 1e-10, "case {case}: {best} > {value}");
        }
        let inv = sigma.clone().try_inverse().unwrap();
        let lagrange = DMatrix::identity(n, n) - &inv * &z * z.transpose() * &inv;
        let low = SymmetricEigen::new(lagrange.clone()).eigenvalues.min();
        assert!(low >= -1e-9, "case {case}: multiplier eigenvalue {low}");
        let slack = (lagrange * (&sigma - DMatrix::identity(n, n) * floor)).trace();
        assert!(slack.abs() <= 1e-9, "case {case}: slackness {slack}");
    }
}

#[test]
fn rank_one_update_matches_full_update() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..100 {
        let n = rng.random_range(1..=50);
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        // Floors on both sides of ‖z‖ so the floored branch is exercised.
        let floor = z.norm() * rng.random_range(0.05..1.3);
        let rank_one = sigma_update_rank_one(&z, floor);
        let dense = rank_one.reconstruct();
        let full = sigma_update_full(&DMatrix::from_column_slice(n, 1, z.as_slice()), floor)
            .unwrap()
            .reconstruct();
        let diff = (&dense - &full).abs().max();
        assert!(diff <= 1e-9, "case {case}: {diff:e}");
        let id = (&dense * &rank_one.inverse - DMatrix::identity(n, n)).abs().max();
        assert!(id <= 1e-10, "case {case}: {id:e}");
    }
}

fn random_noise(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let a = gaussian(rng, n, n);
    &a * a.transpose() * 0.3 + DMatrix::identity(n, n) * floor
}

fn full_noise(s: &DMatrix<f64>) -> FullNoise {
    let eig = SymmetricEigen::new(s.clone());
    FullNoise::from_eigen(eig.eigenvectors, eig.eigenvalues).unwrap()
}

#[test]
fn primal_is_jointly_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let (n, p, q) = (6, 8, 3);
        let x = DesignMatrix::single_block(gaussian(&mut rng, n, p)).unwrap();
        let y = TaskMatrix::new(gaussian(&mut rng, n, q)).unwrap();
        let floor = 0.2;
        let lambda = 0.1;
        let (b1, b2) = (gaussian(&mut rng, p, q), gaussian(&mut rng, p, q));
        let (s1, s2) = (random_noise(&mut rng, n, floor), random_noise(&mut rng, n, floor));
        let p1 = primal_sgcl(&b1, &full_noise(&s1), &x, &y, lambda);
        let p2 = primal_sgcl(&b2, &full_noise(&s2), &x, &y, lambda);
        for t in [0.25, 0.5, 0.75] {
            let b = &b1 * t + &b2 * (1.0 - t);
            let s = &s1 * t + &s2 * (1.0 - t);
            let mixed = primal_sgcl(&b, &full_noise(&s), &x, &y, lambda);
            assert!(mixed <= t * p1 + (1.0 - t) * p2 + 1e-9);
        }
    }
}

#[test]
fn minimizing_out_block_noise_gives_square_root_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let blocks = vec![4, 7, 5];
    for _ in 0..20 {
        let (n, p, q) = (16, 10, 3);
        let x = DesignMatrix::new(gaussian(&mut rng, n, p), blocks.clone()).unwrap();
        let y = TaskMatrix::new(gaussian(&mut rng, n, q)).unwrap();
        let b = gaussian(&mut rng, p, q) * 0.3;
        let r = y.values() - x.values() * &b;
        let mut start = 0;
        let sigmas: Vec<f64> = blocks
            .iter()
            .map(|&nk| {
                let s = r.rows(start, nk).norm() / ((nk * q) as f64).sqrt();
                start += nk;
                s
            })
            .collect();
        let concentrated = primal_sbhcl(&b, &sigmas, &x, &y, 0.2);
        let direct = sqrt_lasso_objective(&b, &x, &y, 0.2);
        assert!((concentrated - direct).abs() <= 1e-12 * direct);
        // Any other noise level is worse.
        let bumped: Vec<f64> = sigmas.iter().map(|s| s * 1.1).collect();
        assert!(primal_sbhcl(&b, &bumped, &x, &y, 0.2) > concentrated);
    }
}
