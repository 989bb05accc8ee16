//! Closed-form kernels: proximal operators, mixed norms, and the three
//! noise-update formulas (full eigen-based, per-block scalar, rank one).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::types::{block_ranges, symmetrize, FullNoise};

/// Eigenvalues of `ZZᵀ` below this fraction of `max(λ_1, 1)` are treated as
/// exact zeros before taking square roots.
pub const EIGEN_CLAMP_RATIO: f64 = 1e-12;

/// `(1 − τ/‖x‖)_+ · x`. The zero vector maps to itself.
pub fn block_soft_threshold(x: &[f64], tau: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    block_soft_threshold_in_place(&mut out, tau);
    out
}

pub fn block_soft_threshold_in_place(x: &mut [f64], tau: f64) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= tau || norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let factor = 1.0 - tau / norm;
    x.iter_mut().for_each(|v| *v *= factor);
}

/// `sign(x)(|x| − τ)_+`.
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// `Tr(Zᵀ S Z)` for a symmetric positive-definite `S`.
pub fn mahalanobis_sq(z: &DMatrix<f64>, s: &DMatrix<f64>) -> f64 {
    let sz = s * z;
    z.dot(&sz).max(0.0)
}

pub fn row_norms(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.nrows(), m.row_iter().map(|r| r.norm()))
}

/// `max_j ‖M_{j,:}‖`.
pub fn row_norm_2inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}

/// `Σ_j ‖M_{j,:}‖`.
pub fn l21_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.norm()).sum()
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() || m.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    m.singular_values().max()
}

/// The minimizer of `‖R‖²_{Σ⁻¹}/(2nq) + Tr(Σ)/(2n)` over `Σ ⪰ σ̲ I`.
///
/// With `Z = R/√q` and `ZZᵀ = U diag(λ) Uᵀ`, the solution is
/// `U diag(max(√λ_i, σ̲)) Uᵀ`.
pub fn sigma_update_full(r: &DMatrix<f64>, floor: f64) -> Result<FullNoise> {
    let n = r.nrows();
    let q = r.ncols() as f64;
    let mut gram = (r * r.transpose()) / q;
    symmetrize(&mut gram);
    let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 1000 * n.max(1))
        .ok_or(Error::EigenFailure)?;
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cutoff = EIGEN_CLAMP_RATIO * top.max(1.0);
    let mu = eig.eigenvalues.map(|l| {
        let l = if l < cutoff { 0.0 } else { l };
        l.sqrt().max(floor)
    });
    FullNoise::from_eigen(eig.eigenvectors, mu)
}

/// `σ_k = max(σ̲_k, ‖R^k‖/√(n_k q))` for each block.
pub fn sigma_update_block(r: &DMatrix<f64>, block_sizes: &[usize], floors: &[f64]) -> Vec<f64> {
    let q = r.ncols() as f64;
    block_ranges(block_sizes)
        .into_iter()
        .zip(floors)
        .map(|(range, &floor)| {
            let norm = r.rows(range.start, range.len()).norm();
            (norm / (range.len() as f64 * q).sqrt()).max(floor)
        })
        .collect()
}

/// Single-task co-standard-deviation `Σ = σ̲ I + γ zzᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneSigma {
    pub gamma: f64,
    pub z: DVector<f64>,
    pub sigma_min: f64,
    /// `Σ⁻¹` from the Sherman–Morrison formula.
    pub inverse: DMatrix<f64>,
    pub trace: f64,
}

/// Closed-form noise update for `q = 1`: `γ = (‖z‖ − σ̲)_+ / ‖z‖²`.
pub fn sigma_update_rank_one(z: &DVector<f64>, floor: f64) -> RankOneSigma {
    let n = z.len();
    let sq = z.norm_squared();
    let norm = sq.sqrt();
    let gamma = if sq == 0.0 {
        0.0
    } else {
        (norm - floor).max(0.0) / sq
    };
    let coef = gamma / (floor * floor * (1.0 + gamma * sq / floor));
    let mut inverse = -coef * (z * z.transpose());
    for i in 0..n {
        inverse[(i, i)] += 1.0 / floor;
    }
    RankOneSigma {
        gamma,
        z: z.clone(),
        sigma_min: floor,
        inverse,
        trace: n as f64 * floor + gamma * sq,
    }
}

impl RankOneSigma {
    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// Dense `σ̲ I + γ zzᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut s = self.gamma * (&self.z * self.z.transpose());
        for i in 0..self.dim() {
            s[(i, i)] += self.sigma_min;
        }
        s
    }

    /// `Σ⁻¹ M` in `O(n · cols)` using the rank-one structure.
    pub fn apply_inverse(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let sq = self.z.norm_squared();
        let coef = self.gamma / (self.sigma_min * self.sigma_min * (1.0 + self.gamma * sq / self.sigma_min));
        let proj = m.transpose() * &self.z;
        let mut out = m / self.sigma_min;
        for (c, mut col) in out.column_iter_mut().enumerate() {
            col.axpy(-coef * proj[c], &self.z, 1.0);
        }
        out
    }

    /// The same matrix in eigen form. The leading eigenvector is `z/‖z‖`,
    /// completed to an orthonormal basis by a Householder reflector.
    pub fn to_full(&self) -> Result<FullNoise> {
        let n = self.dim();
        let norm = self.z.norm();
        let mut eigvals = DVector::from_element(n, self.sigma_min);
        if norm == 0.0 || self.gamma == 0.0 {
            return FullNoise::from_eigen(DMatrix::identity(n, n), eigvals);
        }
        eigvals[0] = self.sigma_min + self.gamma * norm * norm;
        let u1 = &self.z / norm;
        // Reflect e1 onto ±u1, picking the sign that avoids cancellation.
        let mut v = if u1[0] > 0.0 { u1.clone() } else { -&u1 };
        v[0] += 1.0;
        let vv = v.norm_squared();
        let mut h = DMatrix::identity(n, n);
        h -= (2.0 / vv) * (&v * v.transpose());
        FullNoise::from_eigen(h, eigvals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn bst_examples() {
        assert_eq!(block_soft_threshold(&[3.0, 4.0], 2.5), vec![1.5, 2.0]);
        assert_eq!(block_soft_threshold(&[3.0, 4.0], 6.0), vec![0.0, 0.0]);
        assert_eq!(block_soft_threshold(&[3.0, 4.0], 0.0), vec![3.0, 4.0]);
        assert_eq!(block_soft_threshold(&[0.0, 0.0], 0.0), vec![0.0, 0.0]);
    }

    #[test]
    fn st_examples() {
        assert_eq!(soft_threshold(4.0, 1.0), 3.0);
        assert_eq!(soft_threshold(-0.3, 0.5), 0.0);
        assert_eq!(soft_threshold(-1.7, 0.0), -1.7);
        assert_eq!(soft_threshold(-4.0, 1.0), -3.0);
    }

    #[test]
    fn mahalanobis_examples() {
        let z = DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 3.0]);
        assert_close(
            mahalanobis_sq(&z, &DMatrix::identity(2, 2)),
            z.norm_squared(),
            1e-14,
        );
        assert_eq!(mahalanobis_sq(&DMatrix::zeros(2, 2), &DMatrix::identity(2, 2)), 0.0);
        let z = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 3.0]));
        assert_close(mahalanobis_sq(&z, &s), 5.0, 1e-15);
    }

    #[test]
    fn norm_examples() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.0, 0.0]);
        assert_close(l21_norm(&m), 5.0, 1e-15);
        assert_close(row_norm_2inf(&m), 5.0, 1e-15);
        let z = DMatrix::<f64>::zeros(3, 2);
        assert_eq!(l21_norm(&z), 0.0);
        assert_eq!(row_norm_2inf(&z), 0.0);
        assert_eq!(spectral_norm(&z), 0.0);
        assert_close(spectral_norm(&DMatrix::identity(2, 2)), 1.0, 1e-14);
        assert_eq!(row_norms(&m).as_slice(), &[5.0, 0.0]);
    }

    #[test]
    fn full_update_zero_residual_is_floor() {
        let noise = sigma_update_full(&DMatrix::zeros(3, 2), 0.7).unwrap();
        assert_close(noise.trace(), 2.1, 1e-14);
        let expected = DMatrix::identity(3, 3) / 0.7;
        assert!((noise.inverse() - expected).amax() < 1e-14);
    }

    #[test]
    fn full_update_diagonal_examples() {
        let r = DMatrix::from_column_slice(2, 1, &[2.0, 0.0]);
        let noise = sigma_update_full(&r, 1.0).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        assert!((noise.reconstruct() - expected).amax() < 1e-14);

        let r = DMatrix::from_column_slice(2, 1, &[0.5, 0.0]);
        let noise = sigma_update_full(&r, 1.0).unwrap();
        assert!((noise.reconstruct() - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn block_update_examples() {
        let r = DMatrix::from_column_slice(6, 1, &[0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        let s = sigma_update_block(&r, &[2, 4], &[0.3, 0.1]);
        assert_close(s[0], 0.3, 0.0);
        assert_close(s[1], 1.0, 1e-15);

        // ‖R^k‖/√(n_k q) = 0.05 < 0.1
        let r = DMatrix::from_column_slice(4, 1, &[0.05, 0.05, 0.05, 0.05]);
        let s = sigma_update_block(&r, &[4], &[0.1]);
        assert_close(s[0], 0.1, 0.0);
    }

    #[test]
    fn rank_one_examples() {
        let s = sigma_update_rank_one(&DVector::zeros(3), 0.5);
        assert_eq!(s.gamma, 0.0);
        assert!((&s.inverse - DMatrix::identity(3, 3) * 2.0).amax() < 1e-15);

        let s = sigma_update_rank_one(&DVector::from_vec(vec![0.3, 0.4]), 0.5);
        assert_eq!(s.gamma, 0.0);

        let z = DVector::from_vec(vec![3.0, 4.0]);
        let s = sigma_update_rank_one(&z, 1.0);
        assert_close(s.gamma, 0.16, 1e-15);
        // Dense-inverse oracle.
        let dense = s.reconstruct().try_inverse().unwrap();
        assert!((&dense - &s.inverse).amax() < 1e-12);
        assert!((s.reconstruct() * &s.inverse - DMatrix::identity(2, 2)).amax() < 1e-12);
        assert_close(s.trace, 2.0 + 4.0, 1e-14);
    }

    #[test]
    fn one_dimensional_updates_agree() {
        for (z, floor) in [(0.3f64, 1.0), (-2.5, 1.0), (0.0, 0.2), (1e-3, 1e-4)] {
            let expected = f64::max(z.abs(), floor);
            let r = DMatrix::from_element(1, 1, z);
            let full = sigma_update_full(&r, floor).unwrap();
            assert_close(full.reconstruct()[(0, 0)], expected, 1e-12);
            let block = sigma_update_block(&r, &[1], &[floor]);
            assert_close(block[0], expected, 1e-12);
            let r1 = sigma_update_rank_one(&DVector::from_element(1, z), floor);
            assert_close(r1.reconstruct()[(0, 0)], expected, 1e-12);
        }
    }

    #[test]
    fn rank_one_apply_matches_dense() {
        let z = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let s = sigma_update_rank_one(&z, 0.3);
        let m = DMatrix::from_fn(4, 3, |i, j| (i as f64 + 1.0) * (j as f64 - 1.2));
        let a = s.apply_inverse(&m);
        let b = &s.inverse * &m;
        assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn rank_one_to_full_reconstructs() {
        for z in [
            vec![1.0, -2.0, 0.5, 3.0],
            vec![-5.0, 0.1, 0.0, 0.0],
            vec![0.0, 0.0, 2.0, 0.0],
        ] {
            let s = sigma_update_rank_one(&DVector::from_vec(z), 0.3);
            let full = s.to_full().unwrap();
            let u = full.eigvecs();
            assert!((u * u.transpose() - DMatrix::identity(4, 4)).amax() < 1e-12);
            assert!((full.reconstruct() - s.reconstruct()).amax() < 1e-12);
            assert!((full.inverse() - &s.inverse).amax() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn bst_shrinks_norm_along_direction(
            x in proptest::collection::vec(-10.0f64..10.0, 1..8),
            tau in 0.0f64..10.0,
        ) {
            let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let out = block_soft_threshold(&x, tau);
            let out_norm: f64 = out.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((out_norm - (norm - tau).max(0.0)).abs() < 1e-12);
            if out_norm > 0.0 {
                let cos = x.iter().zip(&out).map(|(a, b)| a * b).sum::<f64>() / (norm * out_norm);
                prop_assert!((cos - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn st_equals_bst_in_one_dimension(x in -10.0f64..10.0, tau in 0.0f64..5.0) {
            let (a, b) = (soft_threshold(x, tau), block_soft_threshold(&[x], tau)[0]);
            prop_assert!((a - b).abs() <= 1e-14 * x.abs().max(1.0));
            prop_assert_eq!(a == 0.0, b == 0.0);
        }
    }
}
