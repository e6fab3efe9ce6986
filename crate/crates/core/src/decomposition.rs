//! Rank-one terms and decompositions as first-class values.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::assignment::min_cost_assignment;
use crate::linalg::norm;
use crate::tensor::{Shape, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Real,
    Nonnegative,
}

/// `u^(1) ⊗ ... ⊗ u^(d)`, one vector per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneTerm {
    pub factors: Vec<Vec<f64>>,
}

impl RankOneTerm {
    pub fn new(factors: Vec<Vec<f64>>) -> Self {
        RankOneTerm { factors }
    }

    /// A term is zero iff one of its factors is the zero vector.
    pub fn is_zero(&self) -> bool {
        self.factors.iter().any(|f| f.iter().all(|&x| x == 0.0))
    }

    /// Row-major data of the outer product.
    pub fn outer(&self) -> Vec<f64> {
        let mut acc = vec![1.0];
        for f in &self.factors {
            let mut next = Vec::with_capacity(acc.len() * f.len());
            for &a in &acc {
                next.extend(f.iter().map(|&b| a * b));
            }
            acc = next;
        }
        acc
    }

    fn concat_cmp(&self, other: &RankOneTerm) -> Ordering {
        let a = self.factors.iter().flatten();
        let b = other.factors.iter().flatten();
        for (x, y) in a.zip(b) {
            match x.total_cmp(y) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }
}

/// Ordered list of rank-one terms of a fixed shape, in real or nonnegative mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DecompositionRepr")]
pub struct Decomposition {
    shape: Shape,
    mode: Mode,
    terms: Vec<RankOneTerm>,
}

#[derive(Deserialize)]
struct DecompositionRepr {
    shape: Shape,
    mode: Mode,
    terms: Vec<RankOneTerm>,
}

impl TryFrom<DecompositionRepr> for Decomposition {
    type Error = Error;
    fn try_from(r: DecompositionRepr) -> Result<Self> {
        Decomposition::new(r.shape, r.terms, r.mode)
    }
}

impl Decomposition {
    pub fn new(shape: Shape, terms: Vec<RankOneTerm>, mode: Mode) -> Result<Self> {
        for term in &terms {
            if term.factors.len() != shape.order() {
                return Err(Error::DimensionMismatch(alloc::format!(
                    "term has {} factors, shape has order {}",
                    term.factors.len(),
                    shape.order()
                )));
            }
            for (f, &n) in term.factors.iter().zip(shape.dims()) {
                if f.len() != n {
                    return Err(Error::DimensionMismatch(alloc::format!(
                        "factor of length {} in a mode of dimension {n}",
                        f.len()
                    )));
                }
                if f.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite);
                }
                if mode == Mode::Nonnegative {
                    if let Some(&value) = f.iter().find(|&&x| x < 0.0) {
                        return Err(Error::NegativeEntry { value });
                    }
                }
            }
        }
        Ok(Decomposition { shape, mode, terms })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn terms(&self) -> &[RankOneTerm] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<RankOneTerm> {
        self.terms
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    /// Sum of the rank-one terms. The result is flagged nonnegative iff the
    /// decomposition is in nonnegative mode.
    pub fn evaluate(&self) -> Tensor {
        let mut data = vec![0.0; self.shape.ambient_dim()];
        for term in &self.terms {
            for (d, t) in data.iter_mut().zip(term.outer()) {
                *d += t;
            }
        }
        Tensor::new(self.shape.clone(), data, self.mode == Mode::Nonnegative)
            .expect("sum of validated terms is well formed")
    }

    /// The `i`-th rank-one term as a tensor.
    pub fn term_tensor(&self, i: usize) -> Tensor {
        Tensor::new(self.shape.clone(), self.terms[i].outer(), self.mode == Mode::Nonnegative).expect("validated term")
    }

    /// Terms reordered so that the new term `k` is the old term `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Decomposition> {
        let mut seen = vec![false; self.rank()];
        for &i in order {
            if i >= self.rank() || core::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument("not a permutation of the terms".into()));
            }
        }
        if order.len() != self.rank() {
            return Err(Error::InvalidArgument("not a permutation of the terms".into()));
        }
        let terms = order.iter().map(|&i| self.terms[i].clone()).collect();
        Decomposition::new(self.shape.clone(), terms, self.mode)
    }

    /// Same terms in a different mode (checks nonnegativity when required).
    pub fn with_mode(&self, mode: Mode) -> Result<Decomposition> {
        Decomposition::new(self.shape.clone(), self.terms.clone(), mode)
    }

    /// Normal form modulo term order and per-term scaling.
    ///
    /// Every factor but the last is scaled to unit norm (sign fixed by a
    /// nonnegative leading nonzero entry in real mode), the accumulated scale
    /// goes into the last factor, and terms are sorted lexicographically by
    /// their concatenated entries. Idempotent bit-for-bit.
    pub fn canonicalize(&self) -> Result<Decomposition> {
        let mut terms = Vec::with_capacity(self.rank());
        for (i, term) in self.terms.iter().enumerate() {
            if term.is_zero() {
                return Err(Error::ZeroTerm(i));
            }
            let d = term.factors.len();
            let mut factors = term.factors.clone();
            let mut scale = 1.0;
            for f in factors.iter_mut().take(d - 1) {
                let mut s = norm(f);
                if (s - 1.0).abs() <= 4.0 * f64::EPSILON {
                    s = 1.0;
                }
                if self.mode == Mode::Real {
                    let lead = f.iter().copied().find(|&x| x != 0.0).unwrap_or(0.0);
                    if lead < 0.0 {
                        s = -s;
                    }
                }
                if s != 1.0 {
                    for x in f.iter_mut() {
                        *x /= s;
                    }
                    scale *= s;
                }
            }
            if scale != 1.0 {
                for x in factors[d - 1].iter_mut() {
                    *x *= scale;
                }
            }
            terms.push(RankOneTerm { factors });
        }
        terms.sort_by(|a, b| a.concat_cmp(b));
        Decomposition::new(self.shape.clone(), terms, self.mode)
    }

    /// Lexicographic order on concatenated term entries (term by term).
    pub fn lex_cmp(&self, other: &Decomposition) -> Ordering {
        for (a, b) in self.terms.iter().zip(&other.terms) {
            match a.concat_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

/// Outcome of matching two decompositions term by term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub matched: bool,
    /// `assignment[i] = j` pairs term `i` of the first decomposition with term
    /// `j` of the second (0-based).
    pub assignment: Vec<usize>,
    pub max_term_distance: f64,
}

/// Optimal one-to-one pairing of terms under the Euclidean distance between
/// the evaluated rank-one tensors; matched iff every paired distance is at
/// most `tol`.
pub fn match_decompositions(a: &Decomposition, b: &Decomposition, tol: f64) -> Result<MatchResult> {
    if a.shape != b.shape {
        return Err(Error::ShapeMismatch { left: a.shape.dims().to_vec(), right: b.shape.dims().to_vec() });
    }
    if a.rank() != b.rank() {
        return Err(Error::TermCountMismatch { left: a.rank(), right: b.rank() });
    }
    let r = a.rank();
    let ta: Vec<Vec<f64>> = a.terms.iter().map(RankOneTerm::outer).collect();
    let tb: Vec<Vec<f64>> = b.terms.iter().map(RankOneTerm::outer).collect();
    let mut cost = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..r {
            cost[i * r + j] = ta[i].iter().zip(&tb[j]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        }
    }
    let assignment = min_cost_assignment(&cost, r);
    let max_term_distance = (0..r).map(|i| cost[i * r + assignment[i]]).fold(0.0, f64::max);
    Ok(MatchResult { matched: max_term_distance <= tol, assignment, max_term_distance })
}
