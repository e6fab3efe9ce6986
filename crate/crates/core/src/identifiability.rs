//! Identifiability and defectivity of tensor spaces.
//!
//! Closed-form sufficient conditions, the table of known exceptions, a
//! randomized Jacobian (Terracini) test for the dimension of the set of rank-`r`
//! tensors, and an empirical uniqueness test that clusters solver restarts.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::cells::distinct_cells_witness;
use crate::decomposition::{match_decompositions, Decomposition, Mode};
use crate::linalg::{numerical_rank, RankInfo, DEFAULT_RANK_TOL};
use crate::rng::{derive_seed, task_rng};
use crate::solvers::{run_restarts, SolverConfig};
use crate::tensor::{for_each_index, Shape, Tensor};
use crate::{Error, Result};

/// Independent random points tried by the Jacobian test.
pub const JACOBIAN_TRIALS: u64 = 3;
/// Ambient dimension cap for [`generic_rank_estimate`].
pub const GENERIC_RANK_MAX_AMBIENT: usize = 100_000;
/// Successful restarts required before a single cluster counts as evidence.
pub const MIN_UNIQUE_SUCCESSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Identifiable,
    NotIdentifiable,
    Defective,
    Inconclusive,
}

fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// `⌈Π n_i / (1 + Σ (n_i - 1))⌉`.
pub fn expected_generic_rank(dims: &[usize]) -> usize {
    let denom = 1 + dims.iter().map(|n| n - 1).sum::<usize>();
    product(dims).div_ceil(denom)
}

/// `min(r (Σ n_i - d + 1), Π n_i)`.
pub fn expected_dimension(dims: &[usize], r: usize) -> usize {
    let seg = dims.iter().sum::<usize>() + 1 - dims.len();
    (r * seg).min(product(dims))
}

/// Numerical rank of the Jacobian of the rank-`r` evaluation map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobianRank {
    pub rank: usize,
    pub expected_dim: usize,
    /// Singular values on both sides of the cut, from the trial giving `rank`.
    pub smallest_kept: f64,
    pub largest_dropped: f64,
    pub gap: f64,
    pub trial_ranks: Vec<usize>,
}

fn jacobian(dims: &[usize], r: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let factors: Vec<Vec<Vec<f64>>> =
        (0..r).map(|_| dims.iter().map(|&n| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect()).collect();
    let rows = product(dims);
    let cols = r * dims.iter().sum::<usize>();
    let mut jac = DMatrix::zeros(rows, cols);
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, &n| {
            let o = *acc;
            *acc += n;
            Some(o)
        })
        .collect();
    let per_term = dims.iter().sum::<usize>();
    for_each_index(dims, |flat, idx| {
        for (t, f) in factors.iter().enumerate() {
            for k in 0..dims.len() {
                let mut w = 1.0;
                for (m, &i) in idx.iter().enumerate() {
                    if m != k {
                        w *= f[m][i];
                    }
                }
                jac[(flat, t * per_term + offsets[k] + idx[k])] = w;
            }
        }
    });
    jac
}

/// Jacobian rank at Gaussian factor points, the maximum over
/// [`JACOBIAN_TRIALS`] seeds derived from `seed`.
pub fn terracini_details(dims: &[usize], r: usize, seed: u64) -> Result<JacobianRank> {
    if r < 1 {
        return Err(Error::InvalidRank);
    }
    Shape::new(dims.to_vec())?;
    let mut best: Option<RankInfo> = None;
    let mut trial_ranks = Vec::new();
    for t in 0..JACOBIAN_TRIALS {
        let jac = jacobian(dims, r, &mut task_rng(derive_seed(seed, 0x7e77), t));
        let info = numerical_rank(&jac, DEFAULT_RANK_TOL);
        trial_ranks.push(info.rank);
        if best.as_ref().is_none_or(|b| info.rank > b.rank) {
            best = Some(info);
        }
    }
    let info = best.expect("at least one trial");
    Ok(JacobianRank {
        rank: info.rank,
        expected_dim: expected_dimension(dims, r),
        smallest_kept: info.smallest_kept,
        largest_dropped: info.largest_dropped,
        gap: info.gap(),
        trial_ranks,
    })
}

pub fn terracini_rank(dims: &[usize], r: usize, seed: u64) -> Result<usize> {
    terracini_details(dims, r, seed).map(|j| j.rank)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectivityReport {
    pub shape: Vec<usize>,
    pub r: usize,
    pub defective: bool,
    pub jacobian: JacobianRank,
}

/// Whether the Jacobian rank falls short of the expected dimension.
pub fn is_defective(dims: &[usize], r: usize, seed: u64) -> Result<DefectivityReport> {
    let jacobian = terracini_details(dims, r, seed)?;
    Ok(DefectivityReport { shape: dims.to_vec(), r, defective: jacobian.rank < jacobian.expected_dim, jacobian })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenericRankReport {
    pub shape: Vec<usize>,
    pub r_g_estimate: usize,
    pub expected_r_g: usize,
    /// Jacobian rank for `r = 1, ..., r_g_estimate`.
    pub per_r_jacobian_ranks: Vec<usize>,
    pub ambient_dim: usize,
}

/// Smallest `r` whose Jacobian rank fills the ambient space.
pub fn generic_rank_estimate(dims: &[usize], seed: u64) -> Result<GenericRankReport> {
    let shape = Shape::new(dims.to_vec())?;
    let ambient = shape.ambient_dim();
    if ambient > GENERIC_RANK_MAX_AMBIENT {
        return Err(Error::InvalidShape(format!("ambient dimension {ambient} exceeds {GENERIC_RANK_MAX_AMBIENT}")));
    }
    let mut per_r = Vec::new();
    for r in 1..=ambient {
        let rank = terracini_rank(dims, r, seed)?;
        per_r.push(rank);
        if rank == ambient {
            break;
        }
    }
    Ok(GenericRankReport {
        shape: dims.to_vec(),
        r_g_estimate: per_r.len(),
        expected_r_g: expected_generic_rank(dims),
        per_r_jacobian_ranks: per_r,
        ambient_dim: ambient,
    })
}

fn require_order3(dims: &[usize]) -> Result<[usize; 3]> {
    match dims {
        &[a, b, c] => {
            let mut s = [a, b, c];
            s.sort_unstable();
            Ok(s)
        }
        _ => Err(Error::InvalidShape(format!("expected order 3, got {}", dims.len()))),
    }
}

/// Sufficient condition for `r`-identifiability of an order-3 space: with
/// `α, β` the exponents of the largest powers of two not exceeding the two
/// smallest dimensions, `r ≤ 2^(α+β-2)`.
pub fn chiantini_ottaviani(dims: &[usize], r: usize) -> Result<bool> {
    let [a, b, _] = require_order3(dims)?;
    let e = a.ilog2() + b.ilog2();
    Ok(e >= 2 && r <= 1usize << (e - 2))
}

/// Identifiability bound for cubes `n×n×n`, `n ≥ 4`: `⌊n²/16⌋`.
pub fn cube_identifiability_bound(n: usize) -> usize {
    n * n / 16
}

/// Sufficient condition for `r`-identifiability of an order-3 space with
/// sorted dimensions `m ≤ n ≤ p ≤ r`:
/// `2r ≤ m + n + 2p - 2 - sqrt((m - n)² + 4p)`, evaluated exactly in integers.
pub fn domanov_delathauwer(dims: &[usize], r: usize) -> Result<bool> {
    let [m, n, p] = require_order3(dims)?;
    if m < 2 || p > r {
        return Ok(false);
    }
    let (m, n, p, r) = (m as i128, n as i128, p as i128, r as i128);
    let lhs = m + n + 2 * p - 2 - 2 * r;
    Ok(lhs >= 0 && lhs * lhs >= (m - n) * (m - n) + 4 * p)
}

/// Known exceptions to generic identifiability below the expected generic
/// rank, for spaces of order at least 3 (dimensions sorted descending).
pub fn exception_tables(dims: &[usize], r: usize) -> Verdict {
    if dims.len() < 3 || r < 1 {
        return Verdict::Inconclusive;
    }
    let mut s = dims.to_vec();
    s.sort_unstable_by(|x, y| y.cmp(x));
    match (s.as_slice(), r) {
        ([4, 4, 3], 5) => return Verdict::Defective,
        ([4, 4, 4], 6) | ([6, 6, 3], 8) | ([2, 2, 2, 2, 2], 5) => return Verdict::NotIdentifiable,
        (&[a, b, 2, 2], r) if a == b && r == 2 * a - 1 => return Verdict::Defective,
        _ => {}
    }
    let tail_prod: usize = s[1..].iter().product();
    let tail_sum: usize = s[1..].iter().map(|n| n - 1).sum();
    if tail_prod > tail_sum {
        let t = tail_prod - tail_sum;
        if s[0] > t && r >= t {
            return if r > t && r < s[0].min(tail_prod) { Verdict::Defective } else { Verdict::Inconclusive };
        }
    }
    if r < expected_generic_rank(&s) && product(&s) <= 15000 {
        Verdict::Identifiable
    } else {
        Verdict::Inconclusive
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Generic identifiability of real symmetric `d`-tensors on `R^(n+1)`.
pub fn symmetric_identifiable(d: usize, n: usize, r: usize) -> Result<Verdict> {
    if d < 2 || n < 1 {
        return Err(Error::InvalidArgument("need d >= 2 and n >= 1".into()));
    }
    if matches!((d, n, r), (6, 2, 9) | (4, 3, 8) | (3, 5, 9)) {
        return Ok(Verdict::NotIdentifiable);
    }
    let bound = binomial((n + d) as u128, d as u128).div_ceil(n as u128 + 1);
    Ok(if (r as u128) < bound { Verdict::Identifiable } else { Verdict::Inconclusive })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentifiabilityReport {
    pub shape: Vec<usize>,
    pub r: usize,
    pub verdicts: BTreeMap<String, Verdict>,
    pub jacobian_rank: Option<usize>,
    pub expected_dim: usize,
    pub singular_value_gap: Option<f64>,
}

/// All applicable rules for `(dims, r)`; the Jacobian test runs when
/// `with_jacobian` is set.
pub fn identifiability_report(
    dims: &[usize],
    r: usize,
    seed: u64,
    with_jacobian: bool,
) -> Result<IdentifiabilityReport> {
    if r < 1 {
        return Err(Error::InvalidRank);
    }
    Shape::new(dims.to_vec())?;
    let mut verdicts = BTreeMap::new();
    let as_verdict = |b: bool| if b { Verdict::Identifiable } else { Verdict::Inconclusive };
    if dims.len() == 3 {
        verdicts.insert("chiantini_ottaviani".into(), as_verdict(chiantini_ottaviani(dims, r)?));
        verdicts.insert("domanov_delathauwer".into(), as_verdict(domanov_delathauwer(dims, r)?));
    }
    verdicts.insert("exception_table".into(), exception_tables(dims, r));
    let (mut jacobian_rank, mut singular_value_gap) = (None, None);
    if with_jacobian {
        let rep = is_defective(dims, r, seed)?;
        verdicts.insert("terracini".into(), if rep.defective { Verdict::Defective } else { Verdict::Inconclusive });
        jacobian_rank = Some(rep.jacobian.rank);
        singular_value_gap = Some(rep.jacobian.gap);
    }
    Ok(IdentifiabilityReport {
        shape: dims.to_vec(),
        r,
        verdicts,
        jacobian_rank,
        expected_dim: expected_dimension(dims, r),
        singular_value_gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UniquenessKind {
    UniqueEvidence,
    NonUniqueWitness,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessVerdict {
    pub verdict: UniquenessKind,
    pub clusters: usize,
    pub restarts: usize,
    pub successes: usize,
    pub residual_threshold: f64,
    pub match_tol: f64,
    /// Share of successful restarts in the largest cluster.
    pub matched_fraction: f64,
    /// Lexicographically smallest canonical decomposition of the largest cluster.
    pub representative: Option<Decomposition>,
    /// Two successful decompositions that do not match.
    pub witnesses: Option<[Decomposition; 2]>,
    pub witnesses_in_distinct_cells: Option<bool>,
}

/// Clusters the zero-residual restarts of the nonnegative solver up to term
/// order and scaling.
pub fn uniqueness_by_restarts(a: &Tensor, r: usize, cfg: &SolverConfig, match_tol: f64) -> Result<UniquenessVerdict> {
    if !a.is_nonneg() {
        return Err(Error::NotNonnegative);
    }
    let outcomes = run_restarts(a, r, Mode::Nonnegative, cfg)?;
    let threshold = cfg.feas_tol * a.frobenius_norm();
    let successes: Vec<Decomposition> = outcomes
        .into_iter()
        .filter(|o| o.residual <= threshold)
        .map(|o| o.decomposition.canonicalize())
        .collect::<Result<_>>()?;
    let mut clusters: Vec<Vec<Decomposition>> = Vec::new();
    for d in successes.iter() {
        let mut placed = false;
        for c in clusters.iter_mut() {
            if match_decompositions(&c[0], d, match_tol)?.matched {
                c.push(d.clone());
                placed = true;
                break;
            }
        }
        if !placed {
            clusters.push(alloc::vec![d.clone()]);
        }
    }
    let largest = clusters.iter().enumerate().max_by(|(i, x), (j, y)| x.len().cmp(&y.len()).then(j.cmp(i)));
    let representative = largest.and_then(|(_, c)| c.iter().min_by(|x, y| x.lex_cmp(y)).cloned());
    let matched_fraction = largest.map_or(0.0, |(_, c)| c.len() as f64 / successes.len() as f64);
    let (verdict, witnesses, witnesses_in_distinct_cells) = if clusters.len() >= 2 {
        let w = [clusters[0][0].clone(), clusters[1][0].clone()];
        let distinct = distinct_cells_witness(&w[0], &w[1], cfg.supp_eps)?;
        (UniquenessKind::NonUniqueWitness, Some(w), Some(distinct))
    } else if successes.len() >= MIN_UNIQUE_SUCCESSES {
        (UniquenessKind::UniqueEvidence, None, None)
    } else {
        (UniquenessKind::Inconclusive, None, None)
    };
    Ok(UniquenessVerdict {
        verdict,
        clusters: clusters.len(),
        restarts: cfg.restarts,
        successes: successes.len(),
        residual_threshold: threshold,
        match_tol,
        matched_fraction,
        representative,
        witnesses,
        witnesses_in_distinct_cells,
    })
}
