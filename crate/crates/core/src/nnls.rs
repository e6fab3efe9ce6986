//! Nonnegative least squares, Lawson–Hanson active set method.
//!
//! The solver works on the normal equations `G = MᵀM`, `c = Mᵀb`, which is the
//! form the alternating tensor solvers produce directly (every row of a factor
//! update shares the same Gram matrix).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::linalg::solve_psd;
use crate::{Error, Result};

/// `argmin_{x >= 0} ||M x - b||`.
///
/// `tol` is the stationarity tolerance relative to `max(1, ||Mᵀb||_inf)`: on
/// return every free coordinate has `|∂f/∂x_j| <= tol` and every active one
/// has `∂f/∂x_j >= -tol` (see [`nnls_kkt_violation`]).
pub fn nnls(m: &DMatrix<f64>, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    if m.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!("matrix has {} rows, rhs has {}", m.nrows(), b.len())));
    }
    if m.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = m.ncols();
    let gram = m.transpose() * m;
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = gram[(i, j)];
        }
    }
    let c: Vec<f64> = (0..n).map(|j| m.column(j).iter().zip(b).map(|(a, y)| a * y).sum()).collect();
    Ok(nnls_gram(&g, n, &c, tol))
}

/// Lawson–Hanson on the normal equations: minimizes `½xᵀGx − cᵀx` over `x >= 0`
/// for a symmetric positive semidefinite row-major `n x n` matrix `g`.
pub fn nnls_gram(g: &[f64], n: usize, c: &[f64], tol: f64) -> Vec<f64> {
    let scale = c.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
    let tol = tol * scale;
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let mut w = c.to_vec();
    let max_iter = 5 * n + 50;
    let mut iter = 0;
    let mut sub_g = Vec::with_capacity(n * n);
    let mut z = Vec::with_capacity(n);
    let mut idx = Vec::with_capacity(n);
    loop {
        let entering = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&a, &b| w[a].total_cmp(&w[b]));
        let Some(t) = entering else { break };
        passive[t] = true;
        loop {
            iter += 1;
            idx.clear();
            idx.extend((0..n).filter(|&j| passive[j]));
            let p = idx.len();
            sub_g.clear();
            for &i in &idx {
                for &j in &idx {
                    sub_g.push(g[i * n + j]);
                }
            }
            z.clear();
            z.extend(idx.iter().map(|&i| c[i]));
            solve_psd(&sub_g, p, &mut z);
            if z.iter().all(|&v| v > 0.0) {
                for (&i, &v) in idx.iter().zip(&z) {
                    x[i] = v;
                }
                break;
            }
            // step toward z until the first passive coordinate hits zero
            let mut alpha = f64::INFINITY;
            for (&i, &v) in idx.iter().zip(&z) {
                if v <= 0.0 {
                    alpha = alpha.min(x[i] / (x[i] - v));
                }
            }
            for (&i, &v) in idx.iter().zip(&z) {
                x[i] += alpha * (v - x[i]);
                if x[i] <= 1e-300 || (v <= 0.0 && x[i] / (1.0 + v.abs()) < 1e-15) {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            if iter >= max_iter || idx.iter().all(|&i| !passive[i]) {
                break;
            }
        }
        for j in 0..n {
            w[j] = c[j] - (0..n).map(|k| g[j * n + k] * x[k]).sum::<f64>();
        }
        if iter >= max_iter {
            break;
        }
    }
    x
}

/// Largest violation of the NNLS optimality conditions at `x`, with
/// `w = c − Gx` the negative gradient: `|w_j|` on the free set and `max(w_j, 0)`
/// on the active set, plus `max(-x_j, 0)` for infeasibility.
pub fn nnls_kkt_violation(g: &[f64], n: usize, c: &[f64], x: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..n {
        let w = c[j] - (0..n).map(|k| g[j * n + k] * x[k]).sum::<f64>();
        let v = if x[j] > 0.0 { w.abs() } else { w.max(0.0) - x[j].min(0.0) };
        worst = worst.max(v);
    }
    worst
}
