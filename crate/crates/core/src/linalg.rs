//! Small dense linear-algebra helpers on top of `nalgebra`.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Relative singular-value cut used for every numerical rank in the crate.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Numerical rank together with the singular values on both sides of the cut,
/// so borderline decisions stay auditable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankInfo {
    pub rank: usize,
    pub sigma_max: f64,
    /// Smallest singular value counted as nonzero (0 when the rank is 0).
    pub smallest_kept: f64,
    /// Largest singular value counted as zero (0 when the matrix has full rank).
    pub largest_dropped: f64,
}

impl RankInfo {
    /// Ratio `smallest_kept / largest_dropped`; infinite when nothing was dropped.
    pub fn gap(&self) -> f64 {
        if self.largest_dropped > 0.0 {
            self.smallest_kept / self.largest_dropped
        } else {
            f64::INFINITY
        }
    }
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> RankInfo {
    rank_from_singular_values(&singular_values(m), rel_tol)
}

pub fn rank_from_singular_values(s: &[f64], rel_tol: f64) -> RankInfo {
    let sigma_max = s.first().copied().unwrap_or(0.0);
    if sigma_max <= 0.0 {
        return RankInfo { rank: 0, sigma_max: 0.0, smallest_kept: 0.0, largest_dropped: 0.0 };
    }
    let cut = rel_tol * sigma_max;
    let rank = s.iter().filter(|&&x| x > cut).count();
    RankInfo {
        rank,
        sigma_max,
        smallest_kept: if rank > 0 { s[rank - 1] } else { 0.0 },
        largest_dropped: s.get(rank).copied().unwrap_or(0.0),
    }
}

/// Orthonormal basis of the column space (left singular vectors above the cut).
pub fn column_space_basis(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| sigma_max > 0.0 && svd.singular_values[i] > rel_tol * sigma_max)
        .collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// Solves `g x = b` in place for a small symmetric positive semidefinite `g`
/// (row-major `n x n`). Uses Cholesky, falling back to the eigenvalue
/// pseudo-inverse when `g` is numerically singular.
pub fn solve_psd(g: &[f64], n: usize, b: &mut [f64]) {
    debug_assert_eq!(g.len(), n * n);
    debug_assert_eq!(b.len(), n);
    if !cholesky_solve(g, n, b) {
        let m = DMatrix::from_row_slice(n, n, g);
        let eig = m.symmetric_eigen();
        let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        let cut = 1e-13 * lmax;
        let rhs = DVector::from_column_slice(b);
        let coeffs = eig.eigenvectors.transpose() * rhs;
        let mut x = DVector::zeros(n);
        for k in 0..n {
            let lam = eig.eigenvalues[k];
            if lam > cut {
                x += eig.eigenvectors.column(k) * (coeffs[k] / lam);
            }
        }
        b.copy_from_slice(x.as_slice());
    }
}

/// Cholesky solve without allocation beyond a scratch copy; returns `false` if
/// a pivot is not safely positive (`b` is then left untouched).
fn cholesky_solve(g: &[f64], n: usize, b: &mut [f64]) -> bool {
    let mut l = g.to_vec();
    let scale = (0..n).fold(0.0f64, |a, i| a.max(g[i * n + i].abs()));
    if scale == 0.0 {
        return false;
    }
    for j in 0..n {
        let mut d = l[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d.is_nan() || d <= 1e-13 * scale {
            return false;
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = l[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    b.copy_from_slice(&y);
    true
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rank_of_outer_product_is_one() {
        let m = DMatrix::from_fn(4, 3, |i, j| (i as f64 + 1.0) * (j as f64 - 0.5));
        let info = numerical_rank(&m, DEFAULT_RANK_TOL);
        assert_eq!(info.rank, 1);
        assert!(info.gap() > 1e9);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        assert_eq!(numerical_rank(&DMatrix::zeros(3, 3), DEFAULT_RANK_TOL).rank, 0);
    }

    #[test]
    fn infinite_singular_values_do_not_panic() {
        let info = rank_from_singular_values(&[f64::INFINITY, 1.0], DEFAULT_RANK_TOL);
        assert_eq!((info.rank, info.smallest_kept), (0, 0.0));
    }

    #[test]
    fn psd_solve_matches_direct_and_handles_singular() {
        let g = [4.0, 1.0, 1.0, 3.0];
        let mut b = [1.0, 2.0];
        solve_psd(&g, 2, &mut b);
        assert_relative_eq!(4.0 * b[0] + b[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(b[0] + 3.0 * b[1], 2.0, epsilon = 1e-12);

        // singular: minimum-norm solution of [[1,1],[1,1]] x = (2,2)
        let g = [1.0, 1.0, 1.0, 1.0];
        let mut b = [2.0, 2.0];
        solve_psd(&g, 2, &mut b);
        assert_relative_eq!(b[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(b[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn column_basis_is_orthonormal() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0]);
        let q = column_space_basis(&m, DEFAULT_RANK_TOL);
        assert_eq!(q.ncols(), 2);
        let qtq = q.transpose() * &q;
        assert_relative_eq!(qtq, DMatrix::identity(2, 2), epsilon = 1e-12);
    }
}
