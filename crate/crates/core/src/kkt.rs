//! First-order optimality conditions of a best nonnegative approximation.
//!
//! With `p` the data and `q` the candidate, every nonnegative direction `x` in
//! the factor slot of a term must satisfy `<q - p, x ⊗ (other factors)> >= 0`,
//! with equality for `x` supported inside the support of that factor. These are
//! evaluated on coordinate directions `e_α`, with the other factors of the term
//! normalized to unit length so the numbers are independent of the scaling
//! gauge. Tangent orthogonality is measured against an orthonormal basis of the
//! span of all support-restricted directions.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::decomposition::{Decomposition, Mode};
use crate::linalg::{column_space_basis, norm, DEFAULT_RANK_TOL};
use crate::tensor::{for_each_index, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktEntry {
    /// 1-based term index.
    pub term: usize,
    /// 1-based mode index.
    pub mode: usize,
    /// `max(0, -min_α <q - p, e_α ⊗ ...>)`.
    pub inequality_violation: f64,
    /// `max |<q - p, e_α ⊗ ...>|` over `α` in the numerical support.
    pub support_equality_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktReport {
    pub entries: Vec<KktEntry>,
    pub max_inequality_violation: f64,
    pub max_support_equality_residual: f64,
    /// `max |<p - q, b>|` over an orthonormal basis `b` of the tangent span.
    pub tangent_orthogonality: f64,
    pub tangent_dim: usize,
    pub eps_supp: f64,
}

impl KktReport {
    pub fn max_violation(&self) -> f64 {
        self.max_inequality_violation.max(self.max_support_equality_residual).max(self.tangent_orthogonality)
    }
}

pub fn kkt_residuals(a: &Tensor, candidate: &Decomposition, eps_supp: f64) -> Result<KktReport> {
    if candidate.mode() != Mode::Nonnegative {
        return Err(Error::NotNonnegativeMode);
    }
    if a.shape() != candidate.shape() {
        return Err(Error::ShapeMismatch { left: a.shape().dims().to_vec(), right: candidate.shape().dims().to_vec() });
    }
    let dims = a.shape().dims();
    let n_total = a.shape().ambient_dim();
    let q = candidate.evaluate();
    let diff: Vec<f64> = q.data().iter().zip(a.data()).map(|(q, p)| q - p).collect();

    let mut entries = Vec::new();
    let mut tangent_cols: Vec<Vec<f64>> = Vec::new();
    for (t, term) in candidate.terms().iter().enumerate() {
        let unit: Vec<Vec<f64>> = term
            .factors
            .iter()
            .map(|f| {
                let s = norm(f);
                if s > 0.0 {
                    f.iter().map(|x| x / s).collect()
                } else {
                    vec![0.0; f.len()]
                }
            })
            .collect();
        for (k, factor) in term.factors.iter().enumerate() {
            let mut grad = vec![0.0; dims[k]];
            let mut columns = vec![vec![0.0; n_total]; dims[k]];
            for_each_index(dims, |flat, idx| {
                let mut w = 1.0;
                for (m, &i) in idx.iter().enumerate() {
                    if m != k {
                        w *= unit[m][i];
                    }
                }
                grad[idx[k]] += diff[flat] * w;
                columns[idx[k]][flat] = w;
            });
            let fmax = factor.iter().copied().fold(0.0, f64::max);
            let in_support = |alpha: usize| fmax > 0.0 && factor[alpha] > eps_supp * fmax;
            let inequality_violation = grad.iter().fold(0.0f64, |acc, &g| acc.max(-g));
            let support_equality_residual =
                (0..dims[k]).filter(|&al| in_support(al)).fold(0.0f64, |acc, al| acc.max(grad[al].abs()));
            entries.push(KktEntry { term: t + 1, mode: k + 1, inequality_violation, support_equality_residual });
            for (alpha, col) in columns.into_iter().enumerate() {
                if in_support(alpha) {
                    tangent_cols.push(col);
                }
            }
        }
    }
    let max_inequality_violation = entries.iter().fold(0.0f64, |a, e| a.max(e.inequality_violation));
    let max_support_equality_residual = entries.iter().fold(0.0f64, |a, e| a.max(e.support_equality_residual));

    let (tangent_orthogonality, tangent_dim) = if tangent_cols.is_empty() {
        (0.0, 0)
    } else {
        let span = DMatrix::from_fn(n_total, tangent_cols.len(), |i, j| tangent_cols[j][i]);
        let basis = column_space_basis(&span, DEFAULT_RANK_TOL);
        let resid = DVector::from_iterator(n_total, diff.iter().map(|x| -x));
        let proj = basis.transpose() * resid;
        (proj.iter().fold(0.0f64, |a, x| a.max(x.abs())), basis.ncols())
    };
    Ok(KktReport {
        entries,
        max_inequality_violation,
        max_support_equality_residual,
        tangent_orthogonality,
        tangent_dim,
        eps_supp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::RankOneTerm;
    use crate::solvers::{nncp_solve, SolverConfig};
    use crate::tensor::Shape;

    fn plant() -> Decomposition {
        Decomposition::new(
            Shape::new(vec![2, 3, 2]).unwrap(),
            vec![
                RankOneTerm::new(vec![vec![1.0, 0.5], vec![0.2, 0.0, 1.0], vec![0.3, 0.7]]),
                RankOneTerm::new(vec![vec![0.0, 2.0], vec![1.0, 1.0, 0.1], vec![0.9, 0.4]]),
            ],
            Mode::Nonnegative,
        )
        .unwrap()
    }

    #[test]
    fn exact_fit_has_all_zero_residuals() {
        let d = plant();
        let a = d.evaluate();
        let rep = kkt_residuals(&a, &d, 1e-7).unwrap();
        assert_eq!(rep.max_violation(), 0.0);
        assert!(rep.entries.iter().all(|e| e.inequality_violation == 0.0 && e.support_equality_residual == 0.0));
    }

    #[test]
    fn perturbed_optimum_is_detected() {
        let a = Tensor::from_fn(Shape::new(vec![3, 3, 3]).unwrap(), true, |ix| {
            0.2 + 0.1 * (ix[0] * 7 + ix[1] * 3 + ix[2]) as f64 % 0.9
        })
        .unwrap();
        let res = nncp_solve(&a, 2, &SolverConfig::default()).unwrap();
        let kkt = res.kkt.clone().unwrap();
        assert!(kkt.max_violation() <= 1e-6, "{kkt:?}");
        let mut terms = res.best.terms().to_vec();
        terms[0].factors[0][0] += 0.1;
        let bumped = Decomposition::new(a.shape().clone(), terms, Mode::Nonnegative).unwrap();
        assert!(kkt_residuals(&a, &bumped, 1e-7).unwrap().max_violation() > 1e-3);
    }

    #[test]
    fn real_mode_candidates_are_rejected() {
        let d = plant().with_mode(Mode::Real).unwrap();
        assert_eq!(kkt_residuals(&d.evaluate(), &d, 1e-7).unwrap_err(), Error::NotNonnegativeMode);
    }
}
