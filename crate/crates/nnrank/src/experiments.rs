//! Seeded Monte Carlo experiments.
//!
//! Sample `i` of an experiment with seed `s` draws its tensor from the stream
//! `(s, i)` and runs its solvers with seed `derive_seed(s, i)`, so reports
//! depend only on their inputs and are byte-identical across runs.

use nnrank_core::cells::{support_pattern, uni23_cell_screen, Uni23Screen};
use nnrank_core::identifiability::{generic_rank_estimate, uniqueness_by_restarts, UniquenessKind};
use nnrank_core::poly::count_distinct_real_roots_binary_form;
use nnrank_core::rank::{fiber_upper_bound, flattening_lower_bound, nonneg_rank_bounds, RankEstimate};
use nnrank_core::rng::{derive_seed, task_rng};
use nnrank_core::solvers::{fits_at_rank, nncp_solve};
use nnrank_core::{Decomposition, Error, Mode, RankOneTerm, Result, Shape, SolverConfig, Tensor};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

/// Sampling law for "general" nonnegative tensors and factors.
pub const NONNEG_SAMPLING: &str = "entries i.i.d. uniform(0,1)";

const RANK_HEURISTIC: &str = "rank = smallest r from the flattening lower bound up to r_max at which some \
     restart fits within feas_tol * ||A||, or the fiber count when that is reached first; \
     an upper-bound assignment that can overestimate at a fixed restart budget";

pub fn uniform_tensor(dims: &[usize], seed: u64, index: u64) -> Result<Tensor> {
    let mut rng = task_rng(seed, index);
    let shape = Shape::new(dims.to_vec())?;
    let data = (0..shape.ambient_dim()).map(|_| rng.random::<f64>()).collect();
    Tensor::nonneg(shape, data)
}

/// Nonnegative decomposition with `r` terms of uniform(0,1) factors.
pub fn uniform_decomposition(dims: &[usize], r: usize, seed: u64, index: u64) -> Result<Decomposition> {
    let mut rng = task_rng(seed, index);
    let terms = (0..r)
        .map(|_| RankOneTerm::new(dims.iter().map(|&n| (0..n).map(|_| rng.random::<f64>()).collect()).collect()))
        .collect();
    Decomposition::new(Shape::new(dims.to_vec())?, terms, Mode::Nonnegative)
}

fn sample_cfg(cfg: &SolverConfig, seed: u64, index: u64) -> SolverConfig {
    cfg.clone().with_seed(derive_seed(seed, index))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankBin {
    pub rank: usize,
    pub count: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankHistogram {
    pub shape: Vec<usize>,
    pub mode: Mode,
    pub samples: usize,
    pub seed: u64,
    pub r_max: usize,
    /// Ranks `1..=r_max`.
    pub bins: Vec<RankBin>,
    /// Samples with no fit up to `r_max`.
    pub above_r_max: usize,
    pub above_r_max_fraction: f64,
    pub sampling: String,
    pub heuristic: String,
    pub solver: SolverConfig,
}

impl RankHistogram {
    pub fn fraction(&self, rank: usize) -> f64 {
        self.bins.iter().find(|b| b.rank == rank).map_or(0.0, |b| b.fraction)
    }

    pub fn csv_rows(&self) -> Vec<(usize, usize, f64)> {
        let mut rows: Vec<_> = self.bins.iter().map(|b| (b.rank, b.count, b.fraction)).collect();
        if self.above_r_max > 0 {
            rows.push((self.r_max + 1, self.above_r_max, self.above_r_max_fraction));
        }
        rows
    }
}

/// Estimated rank of `a` in `mode` (see the report's `heuristic` field), or
/// `None` above `r_max`.
pub fn estimate_rank(a: &Tensor, r_max: usize, mode: Mode, cfg: &SolverConfig) -> Result<Option<usize>> {
    if a.is_zero() {
        return Ok(Some(0));
    }
    let lower = flattening_lower_bound(a).max(1);
    let constructive = fiber_upper_bound(a);
    for r in lower..=r_max {
        if r >= constructive || fits_at_rank(a, r, mode, cfg)?.is_some() {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

/// Histogram of estimated ranks of `samples` tensors with uniform(0,1) entries.
pub fn typical_rank_histogram(
    dims: &[usize],
    samples: usize,
    r_max: usize,
    mode: Mode,
    cfg: &SolverConfig,
) -> Result<RankHistogram> {
    if samples == 0 || r_max == 0 {
        return Err(Error::InvalidArgument("samples and r_max must be positive".into()));
    }
    cfg.validate()?;
    let mut counts = vec![0usize; r_max + 1];
    let mut above = 0;
    for i in 0..samples as u64 {
        let a = uniform_tensor(dims, cfg.seed, i)?;
        match estimate_rank(&a, r_max, mode, &sample_cfg(cfg, cfg.seed, i))? {
            Some(r) => counts[r] += 1,
            None => above += 1,
        }
    }
    let n = samples as f64;
    Ok(RankHistogram {
        shape: dims.to_vec(),
        mode,
        samples,
        seed: cfg.seed,
        r_max,
        bins: (1..=r_max).map(|r| RankBin { rank: r, count: counts[r], fraction: counts[r] as f64 / n }).collect(),
        above_r_max: above,
        above_r_max_fraction: above as f64 / n,
        sampling: NONNEG_SAMPLING.into(),
        heuristic: RANK_HEURISTIC.into(),
        solver: cfg.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FormWeights {
    /// Coefficient of `x^i y^(d-i)` is `sqrt(C(d,i))` times a standard normal:
    /// the rotation-invariant Gaussian on binary forms.
    #[default]
    SqrtBinomial,
    /// Coefficient of `x^i y^(d-i)` is `C(d,i)` times a standard normal.
    Binomial,
}

impl FormWeights {
    fn describe(self) -> &'static str {
        match self {
            FormWeights::SqrtBinomial => "coefficient of x^i y^(d-i) = sqrt(C(d,i)) * N(0,1), i.i.d.",
            FormWeights::Binomial => "coefficient of x^i y^(d-i) = C(d,i) * N(0,1), i.i.d.",
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients of `x^i y^(d-i)`, `i = 0..=d`.
pub fn sample_binary_form(d: usize, weights: FormWeights, rng: &mut impl Rng) -> Vec<f64> {
    (0..=d)
        .map(|i| {
            let c = binomial(d, i);
            let w = match weights {
                FormWeights::SqrtBinomial => c.sqrt(),
                FormWeights::Binomial => c,
            };
            w * rng.sample::<f64, _>(StandardNormal)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinaryFormReport {
    pub degree: usize,
    pub samples: usize,
    pub seed: u64,
    pub weights: FormWeights,
    pub sampling: String,
    /// Forms with `degree` distinct real roots on the projective line.
    pub all_real: usize,
    pub fraction: f64,
    pub standard_error: f64,
    /// `root_counts[k]` = forms with exactly `k` distinct real roots.
    pub root_counts: Vec<usize>,
}

/// Fraction of random binary forms of degree `d` with `d` distinct real roots.
pub fn binary_form_experiment(d: usize, samples: usize, seed: u64, weights: FormWeights) -> Result<BinaryFormReport> {
    if d < 2 || samples == 0 {
        return Err(Error::InvalidArgument("need degree >= 2 and samples >= 1".into()));
    }
    let mut root_counts = vec![0usize; d + 1];
    for i in 0..samples as u64 {
        let f = sample_binary_form(d, weights, &mut task_rng(seed, i));
        let k = count_distinct_real_roots_binary_form(&f)?;
        root_counts[k.min(d)] += 1;
    }
    let all_real = root_counts[d];
    let p = all_real as f64 / samples as f64;
    Ok(BinaryFormReport {
        degree: d,
        samples,
        seed,
        weights,
        sampling: weights.describe().into(),
        all_real,
        fraction: p,
        standard_error: (p * (1.0 - p) / samples as f64).sqrt(),
        root_counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveyConfig {
    /// Largest KKT residual for a solver output to count as converged.
    pub kkt_tol: f64,
    pub match_tol: f64,
    /// Restarts of the uniqueness test on each approximation.
    pub uniqueness_restarts: usize,
}

impl Default for SurveyConfig {
    fn default() -> Self {
        SurveyConfig { kkt_tol: 1e-6, match_tol: 1e-5, uniqueness_restarts: 20 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ScreenCounts {
    pub unique_by_theory: usize,
    pub excluded_cell: usize,
    pub unknown: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurveyReport {
    pub shape: Vec<usize>,
    pub r: usize,
    pub samples: usize,
    pub seed: u64,
    pub sampling: String,
    pub fraction_on_boundary: f64,
    pub fraction_unique_evidence: f64,
    pub fraction_non_unique_witness: f64,
    pub fraction_inconclusive: f64,
    /// Samples whose best approximation passes the KKT check.
    pub converged: usize,
    /// Converged samples whose best approximation is in the trivial cell.
    pub converged_interior: usize,
    pub unique_among_converged: Option<f64>,
    pub unique_among_converged_interior: Option<f64>,
    pub screen: Option<ScreenCounts>,
    pub warning: Option<String>,
    pub survey: SurveyConfig,
    pub solver: SolverConfig,
}

/// Best approximations of random positive tensors: boundary membership,
/// optimality and uniqueness of their decompositions.
pub fn approximation_survey(
    dims: &[usize],
    r: usize,
    samples: usize,
    cfg: &SolverConfig,
    survey: &SurveyConfig,
) -> Result<SurveyReport> {
    if samples == 0 || r == 0 {
        return Err(Error::InvalidArgument("samples and r must be positive".into()));
    }
    cfg.validate()?;
    let screenable = dims.len() == 3 && dims.iter().all(|&n| n >= 3) && (r == 2 || r == 3);
    let mut screen = screenable.then(ScreenCounts::default);
    let (mut boundary, mut unique, mut witness, mut inconclusive) = (0usize, 0usize, 0usize, 0usize);
    let (mut converged, mut converged_unique, mut interior, mut interior_unique) = (0usize, 0usize, 0usize, 0usize);
    for i in 0..samples as u64 {
        let a = uniform_tensor(dims, cfg.seed, i)?;
        let scfg = sample_cfg(cfg, cfg.seed, i);
        let res = nncp_solve(&a, r, &scfg)?;
        let pattern = support_pattern(&res.best, cfg.supp_eps)?;
        let ok = res.kkt.as_ref().is_some_and(|k| k.max_violation() <= survey.kkt_tol * a.frobenius_norm().max(1.0));
        if pattern.on_boundary() {
            boundary += 1;
        }
        if let Some(s) = screen.as_mut() {
            match uni23_cell_screen(dims, r, &pattern)? {
                Uni23Screen::UniqueByTheory => s.unique_by_theory += 1,
                Uni23Screen::ExcludedCell => s.excluded_cell += 1,
                Uni23Screen::Unknown => s.unknown += 1,
            }
        }
        let ucfg = SolverConfig { restarts: survey.uniqueness_restarts, ..scfg.clone() };
        let verdict = uniqueness_by_restarts(&res.best.evaluate(), r, &ucfg, survey.match_tol)?;
        match verdict.verdict {
            UniquenessKind::UniqueEvidence => unique += 1,
            UniquenessKind::NonUniqueWitness => witness += 1,
            UniquenessKind::Inconclusive => inconclusive += 1,
        }
        if ok {
            converged += 1;
            converged_unique += usize::from(verdict.verdict == UniquenessKind::UniqueEvidence);
            if !pattern.on_boundary() {
                interior += 1;
                interior_unique += usize::from(verdict.verdict == UniquenessKind::UniqueEvidence);
            }
        }
    }
    let n = samples as f64;
    let warning = match generic_rank_estimate(dims, cfg.seed) {
        Ok(g) if r >= g.r_g_estimate => {
            Some(format!("r = {r} is not below the estimated generic rank {}", g.r_g_estimate))
        }
        _ => None,
    };
    Ok(SurveyReport {
        shape: dims.to_vec(),
        r,
        samples,
        seed: cfg.seed,
        sampling: NONNEG_SAMPLING.into(),
        fraction_on_boundary: boundary as f64 / n,
        fraction_unique_evidence: unique as f64 / n,
        fraction_non_unique_witness: witness as f64 / n,
        fraction_inconclusive: inconclusive as f64 / n,
        converged,
        converged_interior: interior,
        unique_among_converged: (converged > 0).then(|| converged_unique as f64 / converged as f64),
        unique_among_converged_interior: (interior > 0).then(|| interior_unique as f64 / interior as f64),
        screen,
        warning,
        survey: survey.clone(),
        solver: cfg.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplicitCoincidence {
    pub label: String,
    pub r: usize,
    /// Some real restart fits within `feas_tol` at rank `r`.
    pub real_fits: bool,
    pub flattening_lower: usize,
    pub nonneg: RankEstimate,
    /// Real rank and nonnegative rank both equal `r`.
    pub coincides: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceReport {
    pub shape: Vec<usize>,
    pub r: usize,
    pub samples: usize,
    pub seed: u64,
    pub sampling: String,
    pub real_fit_fraction: f64,
    pub flattening_tight_fraction: f64,
    pub coincidence_fraction: f64,
    pub explicit: Vec<ExplicitCoincidence>,
    pub warning: Option<String>,
    pub solver: SolverConfig,
}

/// Compares real and nonnegative rank of one given tensor at rank `r`.
pub fn coincidence_for_tensor(
    label: &str,
    a: &Tensor,
    r: usize,
    r_max: usize,
    cfg: &SolverConfig,
) -> Result<ExplicitCoincidence> {
    let real_fits = fits_at_rank(a, r, Mode::Real, cfg)?.is_some();
    let flattening_lower = flattening_lower_bound(a);
    let nonneg = nonneg_rank_bounds(a, r_max, cfg)?;
    let coincides = real_fits && flattening_lower == r && nonneg.certified && nonneg.upper == r;
    Ok(ExplicitCoincidence { label: label.into(), r, real_fits, flattening_lower, nonneg, coincides })
}

/// Planted nonnegative rank-`r` tensors: whether their real rank is `r` as
/// well (a real fit at `r` and a flattening of rank `r`).
pub fn rank_coincidence_experiment(
    dims: &[usize],
    r: usize,
    samples: usize,
    cfg: &SolverConfig,
    explicit: &[(String, Tensor)],
) -> Result<CoincidenceReport> {
    if samples == 0 || r == 0 {
        return Err(Error::InvalidArgument("samples and r must be positive".into()));
    }
    cfg.validate()?;
    let (mut fit, mut tight, mut both) = (0usize, 0usize, 0usize);
    for i in 0..samples as u64 {
        let a = uniform_decomposition(dims, r, cfg.seed, i)?.evaluate();
        let f = fits_at_rank(&a, r, Mode::Real, &sample_cfg(cfg, cfg.seed, i))?.is_some();
        let t = flattening_lower_bound(&a) == r;
        fit += usize::from(f);
        tight += usize::from(t);
        both += usize::from(f && t);
    }
    let explicit = explicit
        .iter()
        .map(|(label, t)| coincidence_for_tensor(label, t, r, t.shape().ambient_dim(), cfg))
        .collect::<Result<Vec<_>>>()?;
    let warning = match generic_rank_estimate(dims, cfg.seed) {
        Ok(g) if r >= g.r_g_estimate => {
            Some(format!("r = {r} is not below the estimated generic rank {}", g.r_g_estimate))
        }
        _ => None,
    };
    let n = samples as f64;
    Ok(CoincidenceReport {
        shape: dims.to_vec(),
        r,
        samples,
        seed: cfg.seed,
        sampling: format!("{r} terms with factor {NONNEG_SAMPLING}"),
        real_fit_fraction: fit as f64 / n,
        flattening_tight_fraction: tight as f64 / n,
        coincidence_fraction: both as f64 / n,
        explicit,
        warning,
        solver: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nnrank_core::rank::paper_222_tensor;

    #[test]
    fn histogram_fractions_partition_the_sample() {
        let cfg = SolverConfig::default().with_restarts(5);
        let h = typical_rank_histogram(&[2, 2, 2], 20, 4, Mode::Nonnegative, &cfg).unwrap();
        let total: usize = h.bins.iter().map(|b| b.count).sum::<usize>() + h.above_r_max;
        assert_eq!(total, 20);
        let f: f64 = h.bins.iter().map(|b| b.fraction).sum::<f64>() + h.above_r_max_fraction;
        assert!((f - 1.0).abs() <= 1e-12);
        assert_eq!(h.fraction(1), 0.0);
    }

    #[test]
    fn quadratic_forms_match_the_discriminant() {
        let rep = binary_form_experiment(2, 2000, 3, FormWeights::SqrtBinomial).unwrap();
        let by_disc = (0..2000u64)
            .filter(|&i| {
                let f = sample_binary_form(2, FormWeights::SqrtBinomial, &mut task_rng(3, i));
                f[1] * f[1] - 4.0 * f[0] * f[2] > 0.0
            })
            .count();
        assert_eq!(rep.all_real, by_disc);
        assert!(binary_form_experiment(1, 10, 0, FormWeights::Binomial).is_err());
    }

    #[test]
    fn double_roots_are_not_counted() {
        // (x - y)^2 (x + y)^2 = x^4 - 2 x^2 y^2 + y^4
        assert_eq!(count_distinct_real_roots_binary_form(&[1.0, 0.0, -2.0, 0.0, 1.0]).unwrap(), 2);
    }

    #[test]
    fn gap_tensor_is_reported_separately() {
        let cfg = SolverConfig::default();
        let e = coincidence_for_tensor("paper222", &paper_222_tensor(), 2, 8, &cfg).unwrap();
        assert!(e.real_fits && e.flattening_lower == 2);
        assert_eq!(e.nonneg.upper, 4);
        assert!(!e.coincides);
    }

    #[test]
    fn planted_rank_two_coincides() {
        let rep = rank_coincidence_experiment(&[3, 3, 3], 2, 10, &SolverConfig::default(), &[]).unwrap();
        assert_eq!(rep.coincidence_fraction, 1.0);
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = SolverConfig::default().with_seed(9).with_restarts(4);
        let a = typical_rank_histogram(&[2, 2, 2], 8, 4, Mode::Real, &cfg).unwrap();
        let b = typical_rank_histogram(&[2, 2, 2], 8, 4, Mode::Real, &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
