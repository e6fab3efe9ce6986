//! Support patterns of nonnegative decompositions.
//!
//! A nonnegative decomposition lies in the cell given by the zero-index sets of
//! all its factors. The trivial cell has every factor strictly positive; any
//! other cell belongs to the boundary. A cell is admissible when, in every
//! mode, the zero sets of all terms have empty common intersection, which is
//! the same as the factor supports covering every index of that mode.
//!
//! Indices are 0-based in memory and 1-based when serialized.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use serde::{Serialize, Serializer};

use crate::decomposition::{Decomposition, Mode};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CellPattern {
    dims: Vec<usize>,
    eps_supp: f64,
    /// `zero_sets[term][mode]`, sorted.
    zero_sets: Vec<Vec<Vec<usize>>>,
    /// Terms with at least one identically zero factor.
    degenerate_terms: Vec<usize>,
    trivial: bool,
    admissible: bool,
    on_boundary: bool,
}

impl CellPattern {
    /// Builds a pattern from explicit 0-based zero sets `[term][mode]`.
    pub fn from_zero_sets(dims: Vec<usize>, zero_sets: Vec<Vec<Vec<usize>>>, eps_supp: f64) -> Result<Self> {
        for term in &zero_sets {
            if term.len() != dims.len() {
                return Err(Error::OrderMismatch { left: dims.len(), right: term.len() });
            }
            for (set, &n) in term.iter().zip(&dims) {
                if set.iter().any(|&i| i >= n) {
                    return Err(Error::InvalidArgument("zero index outside the mode".into()));
                }
            }
        }
        let zero_sets: Vec<Vec<Vec<usize>>> = zero_sets
            .into_iter()
            .map(|t| t.into_iter().map(|s| s.into_iter().collect::<BTreeSet<_>>().into_iter().collect()).collect())
            .collect();
        let degenerate_terms = zero_sets
            .iter()
            .enumerate()
            .filter(|(_, t)| t.iter().zip(&dims).any(|(s, &n)| s.len() == n))
            .map(|(i, _)| i)
            .collect();
        let trivial = zero_sets.iter().all(|t| t.iter().all(|s| s.is_empty()));
        let mut pattern = CellPattern {
            dims,
            eps_supp,
            zero_sets,
            degenerate_terms,
            trivial,
            admissible: false,
            on_boundary: !trivial,
        };
        pattern.admissible = support_cover_check(&pattern).iter().all(|&b| b);
        Ok(pattern)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn eps_supp(&self) -> f64 {
        self.eps_supp
    }

    pub fn rank(&self) -> usize {
        self.zero_sets.len()
    }

    /// 0-based zero set of factor `mode` of term `term`.
    pub fn zero_set(&self, term: usize, mode: usize) -> &[usize] {
        &self.zero_sets[term][mode]
    }

    pub fn zero_sets(&self) -> &[Vec<Vec<usize>>] {
        &self.zero_sets
    }

    pub fn degenerate_terms(&self) -> &[usize] {
        &self.degenerate_terms
    }

    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    pub fn is_admissible(&self) -> bool {
        self.admissible
    }

    pub fn on_boundary(&self) -> bool {
        self.on_boundary
    }

    /// Per-term patterns as a sorted list, i.e. the pattern up to term order.
    pub fn term_multiset(&self) -> Vec<Vec<Vec<usize>>> {
        let mut v = self.zero_sets.clone();
        v.sort();
        v
    }
}

impl Serialize for CellPattern {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out<'a> {
            dims: &'a [usize],
            eps_supp: f64,
            zero_sets: Vec<Vec<Vec<usize>>>,
            degenerate_terms: Vec<usize>,
            trivial: bool,
            admissible: bool,
            on_boundary: bool,
            support_cover: Vec<bool>,
        }
        let one_based = |v: &[usize]| v.iter().map(|i| i + 1).collect::<Vec<_>>();
        Out {
            dims: &self.dims,
            eps_supp: self.eps_supp,
            zero_sets: self.zero_sets.iter().map(|t| t.iter().map(|z| one_based(z)).collect()).collect(),
            degenerate_terms: one_based(&self.degenerate_terms),
            trivial: self.trivial,
            admissible: self.admissible,
            on_boundary: self.on_boundary,
            support_cover: support_cover_check(self),
        }
        .serialize(s)
    }
}

/// Entry `α` of a factor is in the support iff it exceeds `eps_supp` times the
/// largest entry of that factor. A zero factor has empty support and marks its
/// term as degenerate.
pub fn support_pattern(decomp: &Decomposition, eps_supp: f64) -> Result<CellPattern> {
    if decomp.mode() != Mode::Nonnegative {
        return Err(Error::NotNonnegativeMode);
    }
    let zero_sets = decomp
        .terms()
        .iter()
        .map(|t| {
            t.factors
                .iter()
                .map(|f| {
                    let m = f.iter().copied().fold(0.0, f64::max);
                    (0..f.len()).filter(|&a| !(m > 0.0 && f[a] > eps_supp * m)).collect()
                })
                .collect()
        })
        .collect();
    CellPattern::from_zero_sets(decomp.shape().dims().to_vec(), zero_sets, eps_supp)
}

/// Per mode: whether the supports of all terms cover every index.
pub fn support_cover_check(pattern: &CellPattern) -> Vec<bool> {
    (0..pattern.dims.len())
        .map(|k| {
            if pattern.zero_sets.is_empty() {
                return pattern.dims[k] == 0;
            }
            (0..pattern.dims[k]).all(|i| pattern.zero_sets.iter().any(|t| !t[k].contains(&i)))
        })
        .collect()
}

/// Whether two decompositions sit in different cells, compared up to term order.
pub fn distinct_cells_witness(d1: &Decomposition, d2: &Decomposition, eps_supp: f64) -> Result<bool> {
    if d1.shape() != d2.shape() {
        return Err(Error::ShapeMismatch { left: d1.shape().dims().to_vec(), right: d2.shape().dims().to_vec() });
    }
    if d1.rank() != d2.rank() {
        return Err(Error::TermCountMismatch { left: d1.rank(), right: d2.rank() });
    }
    let p1 = support_pattern(d1, eps_supp)?;
    let p2 = support_pattern(d2, eps_supp)?;
    Ok(p1.term_multiset() != p2.term_multiset())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Uni23Screen {
    UniqueByTheory,
    ExcludedCell,
    Unknown,
}

/// Screens a cell of an order-3 space with all dimensions at least 3 and
/// `r ∈ {2, 3}` against the cells that can contain a best nonnegative
/// approximation with a non-unique decomposition.
///
/// For `r = 3` the excluded cells are those where, after relabeling terms and
/// indices, each mode has two terms whose factors are supported on one index
/// `s` only, the remaining factor vanishes at most at `s`, and the remaining
/// term differs between the three modes.
pub fn uni23_cell_screen(dims: &[usize], r: usize, pattern: &CellPattern) -> Result<Uni23Screen> {
    if dims.len() != 3 || dims.iter().any(|&n| n < 3) {
        return Err(Error::InvalidShape("needs an order-3 shape with all dimensions at least 3".into()));
    }
    if r != 2 && r != 3 {
        return Err(Error::InvalidArgument("r must be 2 or 3".into()));
    }
    if pattern.dims != dims || pattern.rank() != r {
        return Err(Error::DimensionMismatch("pattern does not match shape and rank".into()));
    }
    if !pattern.admissible {
        return Ok(Uni23Screen::Unknown);
    }
    if r == 3 && matches_excluded_configuration(pattern) {
        return Ok(Uni23Screen::ExcludedCell);
    }
    Ok(Uni23Screen::UniqueByTheory)
}

fn matches_excluded_configuration(p: &CellPattern) -> bool {
    // Candidate omitted term per mode, or None if the mode does not fit.
    let omitted: Vec<Vec<usize>> = (0..3)
        .map(|k| {
            let n = p.dims[k];
            (0..3)
                .filter(|&o| {
                    let pair: Vec<usize> = (0..3).filter(|&t| t != o).collect();
                    let z0 = &p.zero_sets[pair[0]][k];
                    let z1 = &p.zero_sets[pair[1]][k];
                    if z0 != z1 || z0.len() != n - 1 {
                        return false;
                    }
                    let s = (0..n).find(|i| !z0.contains(i)).expect("one index kept");
                    p.zero_sets[o][k].iter().all(|&i| i == s)
                })
                .collect()
        })
        .collect();
    omitted[0].iter().any(|&a| omitted[1].iter().any(|&b| b != a && omitted[2].iter().any(|&c| c != a && c != b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::RankOneTerm;
    use crate::tensor::Shape;
    use alloc::vec;

    fn decomp(dims: &[usize], terms: Vec<Vec<Vec<f64>>>) -> Decomposition {
        Decomposition::new(
            Shape::new(dims.to_vec()).unwrap(),
            terms.into_iter().map(RankOneTerm::new).collect(),
            Mode::Nonnegative,
        )
        .unwrap()
    }

    #[test]
    fn positive_factors_give_trivial_cell() {
        let d = decomp(&[2, 2], vec![vec![vec![1.0, 2.0], vec![0.5, 0.1]]]);
        let p = support_pattern(&d, 1e-7).unwrap();
        assert!(p.is_trivial() && p.is_admissible() && !p.on_boundary());
        assert_eq!(support_cover_check(&p), vec![true, true]);
    }

    #[test]
    fn shared_zeros_are_not_admissible() {
        let e1 = vec![1.0, 0.0, 0.0];
        let d = decomp(
            &[3, 2, 2],
            vec![vec![e1.clone(), vec![1.0, 1.0], vec![1.0, 1.0]], vec![e1, vec![1.0, 0.0], vec![0.0, 1.0]]],
        );
        let p = support_pattern(&d, 1e-7).unwrap();
        assert!(!p.is_admissible() && p.on_boundary());
        assert_eq!(p.zero_set(0, 0), &[1, 2]);
        assert_eq!(support_cover_check(&p), vec![false, true, true]);
    }

    #[test]
    fn relative_threshold_and_degenerate_terms() {
        let d = decomp(&[3, 2], vec![vec![vec![1.0, 1e-9, 0.5], vec![0.0, 0.0]]]);
        let p = support_pattern(&d, 1e-7).unwrap();
        assert_eq!(p.zero_set(0, 0), &[1]);
        assert_eq!(p.degenerate_terms(), &[0]);
    }

    #[test]
    fn serialization_is_one_based() {
        let p = CellPattern::from_zero_sets(vec![3, 3], vec![vec![vec![0], vec![]]], 1e-7).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"zero_sets\":[[[1],[]]]"), "{json}");
    }

    #[test]
    fn permuted_terms_share_the_cell() {
        let d = decomp(
            &[2, 2, 2],
            vec![
                vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![2.0, 1.0]],
                vec![vec![1.0, 1.0], vec![0.0, 3.0], vec![1.0, 1.0]],
            ],
        );
        let swapped = d.permuted(&[1, 0]).unwrap();
        assert!(!distinct_cells_witness(&d, &swapped, 1e-7).unwrap());
        assert!(!distinct_cells_witness(&d, &d, 1e-7).unwrap());
    }

    fn excluded_pattern() -> CellPattern {
        // mode 1: terms 1,2 on {1}, term 3 may vanish only at 1; mode 2: terms 1,3; mode 3: terms 2,3
        let s = vec![1, 2];
        CellPattern::from_zero_sets(
            vec![3, 3, 3],
            vec![
                vec![s.clone(), s.clone(), vec![0]],
                vec![s.clone(), vec![], s.clone()],
                vec![vec![0], s.clone(), s.clone()],
            ],
            1e-7,
        )
        .unwrap()
    }

    #[test]
    fn screen_outcomes() {
        let dims = [3, 3, 3];
        let trivial2 = CellPattern::from_zero_sets(dims.to_vec(), vec![vec![vec![]; 3]; 2], 1e-7).unwrap();
        assert_eq!(uni23_cell_screen(&dims, 2, &trivial2).unwrap(), Uni23Screen::UniqueByTheory);
        let ex = excluded_pattern();
        assert!(ex.is_admissible());
        assert_eq!(uni23_cell_screen(&dims, 3, &ex).unwrap(), Uni23Screen::ExcludedCell);
        let nonadm = CellPattern::from_zero_sets(dims.to_vec(), vec![vec![vec![0], vec![], vec![]]; 3], 1e-7).unwrap();
        assert_eq!(uni23_cell_screen(&dims, 3, &nonadm).unwrap(), Uni23Screen::Unknown);
        assert!(uni23_cell_screen(&[2, 3, 3], 2, &trivial2).is_err());
        assert!(uni23_cell_screen(&dims, 4, &trivial2).is_err());
    }

    #[test]
    fn excluded_configuration_is_found_under_relabeling() {
        let base = excluded_pattern();
        // swap index labels 0 <-> 2 in mode 2 and reorder the terms
        let relabel = |s: &Vec<usize>| s.iter().map(|&i| 2 - i).collect::<Vec<_>>();
        let mut sets = base.zero_sets().to_vec();
        for t in &mut sets {
            t[1] = relabel(&t[1]);
        }
        sets.rotate_left(1);
        let p = CellPattern::from_zero_sets(vec![3, 3, 3], sets, 1e-7).unwrap();
        assert_eq!(uni23_cell_screen(&[3, 3, 3], 3, &p).unwrap(), Uni23Screen::ExcludedCell);
        // the same omitted term in two modes does not match
        let s = vec![1, 2];
        let q = CellPattern::from_zero_sets(
            vec![3, 3, 3],
            vec![vec![s.clone(), s.clone(), vec![]], vec![s.clone(), s.clone(), vec![]], vec![vec![], vec![], vec![]]],
            1e-7,
        )
        .unwrap();
        assert_eq!(uni23_cell_screen(&[3, 3, 3], 3, &q).unwrap(), Uni23Screen::UniqueByTheory);
    }
}
