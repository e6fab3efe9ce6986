//! Nonnegative rank: known constructions, certificates and bounds.
//!
//! Lower bounds come from flattening ranks and from the disjoint-slice
//! certificate; upper bounds from fiber counts and from a feasibility search
//! with the nonnegative solver. A value is certified when both ends agree.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::decomposition::Mode;
use crate::linalg::{numerical_rank, DEFAULT_RANK_TOL};
use crate::solvers::{fits_at_rank, SolverConfig};
use crate::tensor::{Shape, Tensor};
use crate::{Error, Result};

/// Largest `min(rows, cols)` accepted by [`nonneg_matrix_rank_small`].
pub const SMALL_MATRIX_CAP: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankEstimate {
    pub lower: usize,
    pub upper: usize,
    pub certified: bool,
    pub evidence: Vec<String>,
}

impl RankEstimate {
    fn exact(value: usize, evidence: Vec<String>) -> Self {
        RankEstimate { lower: value, upper: value, certified: true, evidence }
    }

    fn contains(&self, r: usize) -> bool {
        self.lower <= r && r <= self.upper
    }
}

/// The 2×2×2 tensor `e1⊗e1⊗e1 + e2⊗e2⊗e1 + e1⊗e2⊗e2 + e2⊗e1⊗e2`: its last-mode
/// slices are the identity and the antidiagonal. Real rank 2, nonnegative rank 4.
pub fn paper_222_tensor() -> Tensor {
    Tensor::nonneg(Shape::new(vec![2, 2, 2]).expect("valid"), vec![1., 0., 0., 1., 0., 1., 1., 0.]).expect("valid")
}

/// `Σ_k P_k ⊗ e_k` with `P_k` the cyclic shift with `(i, j)` entry one iff
/// `j - i ≡ k (mod n)` (0-based). Nonnegative rank `n²`.
pub fn latin_square_tensor(n: usize) -> Result<Tensor> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("latin square order {n} < 2")));
    }
    Tensor::from_fn(Shape::new(vec![n, n, n])?, true, |ix| if (ix[1] + n - ix[0]) % n == ix[2] { 1.0 } else { 0.0 })
}

fn has_negative(a: &Tensor) -> bool {
    a.data().iter().any(|&x| x < 0.0)
}

/// Largest numerical rank among all flattenings.
pub fn flattening_lower_bound(a: &Tensor) -> usize {
    (0..a.shape().order())
        .map(|k| numerical_rank(&a.flatten(k).expect("mode in range"), DEFAULT_RANK_TOL).rank)
        .max()
        .unwrap_or(0)
}

/// Smallest number of nonzero fibers along any mode; each nonzero fiber is a
/// nonnegative rank-one term, so this bounds the nonnegative rank from above.
pub fn fiber_upper_bound(a: &Tensor) -> usize {
    let dims = a.shape().dims();
    (0..dims.len())
        .map(|k| {
            let m = a.flatten(k).expect("mode in range");
            (0..m.ncols()).filter(|&c| m.column(c).iter().any(|&x| x != 0.0)).count()
        })
        .min()
        .unwrap_or(0)
}

/// If the slices along some mode have pairwise disjoint supports, the
/// nonnegative rank is the sum of the nonnegative ranks of the slices: a
/// nonnegative term whose factor in that mode had two nonzero entries would
/// put a common nonzero in two slices. Returns that sum when every slice
/// certifies recursively.
pub fn disjoint_slice_certificate(a: &Tensor) -> Option<usize> {
    if has_negative(a) {
        return None;
    }
    (0..a.shape().order()).find_map(|k| disjoint_sum_along(a, k))
}

fn disjoint_sum_along(a: &Tensor, mode: usize) -> Option<usize> {
    if a.shape().order() == 2 {
        let m = a.flatten(mode).ok()?;
        let disjoint = (0..m.ncols()).all(|c| m.column(c).iter().filter(|&&x| x != 0.0).count() <= 1);
        return disjoint.then(|| (0..m.nrows()).filter(|&r| m.row(r).iter().any(|&x| x != 0.0)).count());
    }
    let m = a.flatten(mode).ok()?;
    if !(0..m.ncols()).all(|c| m.column(c).iter().filter(|&&x| x != 0.0).count() <= 1) {
        return None;
    }
    let slices = a.mode_slices(mode).ok()?;
    slices.iter().map(certified_rank).sum()
}

/// Exact nonnegative rank when one of the structural rules applies: zero
/// tensor, rank-one flattenings, a matrix of real rank at most 2 or of full
/// real rank, or the disjoint-slice rule applied recursively.
pub fn certified_rank(a: &Tensor) -> Option<usize> {
    if has_negative(a) {
        return None;
    }
    if a.is_zero() {
        return Some(0);
    }
    if a.shape().order() == 2 {
        let m = a.as_matrix().ok()?;
        let rk = numerical_rank(&m, DEFAULT_RANK_TOL).rank;
        if rk <= 2 || rk == m.nrows().min(m.ncols()) {
            return Some(rk);
        }
        return disjoint_slice_certificate(a);
    }
    if flattening_lower_bound(a) == 1 {
        return Some(1);
    }
    disjoint_slice_certificate(a)
}

/// Bounds on the nonnegative rank of a small nonnegative matrix.
pub fn nonneg_matrix_rank_small(m: &DMatrix<f64>, cfg: &SolverConfig) -> Result<RankEstimate> {
    if m.nrows().min(m.ncols()) > SMALL_MATRIX_CAP {
        return Err(Error::InvalidArgument(format!(
            "matrix {}x{} exceeds the small-scale cap {SMALL_MATRIX_CAP}",
            m.nrows(),
            m.ncols()
        )));
    }
    let t = Tensor::from_matrix(m, true)?;
    if !t.frobenius_norm().is_finite() {
        return Err(Error::NonFinite);
    }
    let rk = numerical_rank(m, DEFAULT_RANK_TOL).rank;
    if let Some(v) = certified_rank(&t) {
        let why = if rk <= 2 {
            format!("real rank {rk} <= 2, where nonnegative and real rank agree")
        } else if v == m.nrows().min(m.ncols()) {
            format!("real rank {rk} equals min(rows, cols)")
        } else {
            format!("disjoint row or column supports give {v}")
        };
        return Ok(RankEstimate::exact(v, vec![why]));
    }
    let cap = fiber_upper_bound(&t);
    bounds_by_search(&t, rk, cap, cap, cfg, vec![format!("lower {rk}: real rank")])
}

/// Nonnegative rank bounds of a nonnegative tensor, searching fits up to `r_max`.
pub fn nonneg_rank_bounds(a: &Tensor, r_max: usize, cfg: &SolverConfig) -> Result<RankEstimate> {
    if !a.is_nonneg() {
        return Err(Error::NotNonnegative);
    }
    if !a.frobenius_norm().is_finite() {
        return Err(Error::NonFinite);
    }
    if a.is_zero() {
        return Ok(RankEstimate::exact(0, vec!["zero tensor".into()]));
    }
    let flat = flattening_lower_bound(a);
    if let Some(v) = certified_rank(a) {
        let why = if a.shape().order() == 2 {
            format!("matrix rule gives {v}")
        } else if v == 1 {
            "all flattenings have rank 1".into()
        } else {
            format!("disjoint slice supports give {v} (flattening bound {flat})")
        };
        return Ok(RankEstimate::exact(v, vec![why]));
    }
    let fibers = fiber_upper_bound(a);
    let mut est =
        bounds_by_search(a, flat, fibers, r_max, cfg, vec![format!("lower {flat}: largest flattening rank")])?;
    if !est.certified && est.upper > r_max {
        est.evidence.push(format!("no fit found up to r_max = {r_max}: upper > {r_max}"));
    }
    Ok(est)
}

/// Scans `r = lower, ..., min(r_max, constructive - 1)` for a fit within
/// `feas_tol`; `constructive` is an upper bound known without search.
fn bounds_by_search(
    a: &Tensor,
    lower: usize,
    constructive: usize,
    r_max: usize,
    cfg: &SolverConfig,
    mut evidence: Vec<String>,
) -> Result<RankEstimate> {
    let mut upper = constructive;
    let mut how = format!("upper {constructive}: one term per nonzero fiber");
    for r in lower..constructive.min(r_max + 1) {
        if let Some(o) = fits_at_rank(a, r, Mode::Nonnegative, cfg)? {
            upper = r;
            how = format!("upper {r}: nonnegative fit with residual {:.3e} (restart {})", o.residual, o.index);
            break;
        }
    }
    evidence.push(how);
    let certified = lower == upper;
    if certified {
        evidence.push("flattening bound meets the fit".into());
    }
    Ok(RankEstimate { lower, upper, certified, evidence })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DirectSumReport {
    pub a: RankEstimate,
    pub b: RankEstimate,
    pub sum: RankEstimate,
    /// The interval for `A ⊕ B` meets `[lower(A) + lower(B), upper(A) + upper(B)]`.
    pub consistent: bool,
    /// All three are certified and the ranks add up exactly.
    pub additivity_confirmed: bool,
}

/// Compares the bounds of `A`, `B` and their direct sum.
pub fn direct_sum_rank_check(a: &Tensor, b: &Tensor, r_max: usize, cfg: &SolverConfig) -> Result<DirectSumReport> {
    let sum_tensor = a.direct_sum(b)?;
    let ea = nonneg_rank_bounds(a, r_max, cfg)?;
    let eb = nonneg_rank_bounds(b, r_max, cfg)?;
    let es = nonneg_rank_bounds(&sum_tensor, 2 * r_max, cfg)?;
    let (lo, hi) = (ea.lower + eb.lower, ea.upper + eb.upper);
    let consistent = es.lower <= hi && lo <= es.upper;
    let additivity_confirmed = ea.certified && eb.certified && es.certified && es.contains(lo) && lo == hi;
    Ok(DirectSumReport { a: ea, b: eb, sum: es, consistent, additivity_confirmed })
}

/// Maximal nonnegative typical rank of an order-3 space: with `m ≥ n ≥ p`
/// after sorting it is `n·p` (which is `n²` when `n = p`).
pub fn maxrank_formula(dims: &[usize]) -> Result<usize> {
    if dims.len() != 3 {
        return Err(Error::InvalidShape(format!("expected order 3, got {}", dims.len())));
    }
    let mut s = dims.to_vec();
    s.sort_unstable_by(|x, y| y.cmp(x));
    Ok(s[1] * s[2])
}
