//! Multi-start alternating solvers for best rank-`r` approximation.
//!
//! Nonnegative mode alternates exact nonnegative least-squares updates of one
//! factor matrix at a time ([`nncp_solve`]); real mode alternates unconstrained
//! least squares ([`als_solve_real`]). Each restart starts from a seeded random
//! point scaled to the input norm, runs block sweeps with a nonincreasing
//! residual, and stops on stall or at the sweep cap. Each sweep may be followed
//! by an extrapolation along the sweep direction and, on small problems, a
//! damped Gauss-Newton step on all factors; either is kept only if it lowers
//! the residual. The best restart wins,
//! ties going to the lowest restart index. Nothing here certifies global
//! optimality; the spread of restart residuals is reported as evidence.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cells::{support_pattern, CellPattern};
use crate::decomposition::{Decomposition, Mode, RankOneTerm};
use crate::kkt::{kkt_residuals, KktReport};
use crate::linalg::solve_psd;
use crate::nnls::nnls_gram;
use crate::rng::task_rng;
use crate::tensor::{for_each_index, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub restarts: usize,
    pub max_outer_iters: usize,
    /// Stationarity tolerance of the inner least-squares solves.
    pub inner_tol: f64,
    /// A restart stops once a sweep lowers the residual by less than
    /// `stall_tol` relative to the previous residual.
    pub stall_tol: f64,
    pub seed: u64,
    /// Zero-residual threshold, relative to the input norm.
    pub feas_tol: f64,
    /// Relative threshold defining the numerical support of a factor.
    pub supp_eps: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            restarts: 10,
            max_outer_iters: 2000,
            inner_tol: 1e-12,
            stall_tol: 1e-10,
            seed: 0,
            feas_tol: 1e-8,
            supp_eps: 1e-7,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_outer_iters == 0 {
            return Err(Error::InvalidArgument("restarts and max_outer_iters must be positive".into()));
        }
        for (name, v) in [
            ("inner_tol", self.inner_tol),
            ("stall_tol", self.stall_tol),
            ("feas_tol", self.feas_tol),
            ("supp_eps", self.supp_eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(alloc::format!("{name} must be positive and finite")));
            }
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }
}

/// One descent from one random start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartOutcome {
    pub index: usize,
    pub decomposition: Decomposition,
    pub residual: f64,
    /// Residual after initialization and after every accepted sweep.
    pub trace: Vec<f64>,
    /// `true` when the restart stopped on stall rather than the sweep cap.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproximationResult {
    pub input_norm: f64,
    pub best: Decomposition,
    pub best_restart: usize,
    /// `||A - evaluate(best)||`.
    pub residual: f64,
    pub restart_residuals: Vec<f64>,
    pub converged: bool,
    pub kkt: Option<KktReport>,
    pub boundary: Option<CellPattern>,
}

/// Best nonnegative rank-`r` approximation by multi-start alternating NNLS.
pub fn nncp_solve(a: &Tensor, r: usize, cfg: &SolverConfig) -> Result<ApproximationResult> {
    if !a.is_nonneg() {
        return Err(Error::NotNonnegative);
    }
    solve(a, r, Mode::Nonnegative, cfg)
}

/// Best real rank-`r` approximation by multi-start alternating least squares.
pub fn als_solve_real(a: &Tensor, r: usize, cfg: &SolverConfig) -> Result<ApproximationResult> {
    solve(a, r, Mode::Real, cfg)
}

fn solve(a: &Tensor, r: usize, mode: Mode, cfg: &SolverConfig) -> Result<ApproximationResult> {
    cfg.validate()?;
    let outcomes = run_restarts(a, r, mode, cfg)?;
    let restart_residuals: Vec<f64> = outcomes.iter().map(|o| o.residual).collect();
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.residual < outcomes[best].residual {
            best = i;
        }
    }
    let winner = outcomes.into_iter().nth(best).expect("at least one restart");
    let (kkt, boundary) = if mode == Mode::Nonnegative {
        (
            Some(kkt_residuals(a, &winner.decomposition, cfg.supp_eps)?),
            Some(support_pattern(&winner.decomposition, cfg.supp_eps)?),
        )
    } else {
        (None, None)
    };
    Ok(ApproximationResult {
        input_norm: a.frobenius_norm(),
        best: winner.decomposition,
        best_restart: best,
        residual: winner.residual,
        restart_residuals,
        converged: winner.converged,
        kkt,
        boundary,
    })
}

/// All `cfg.restarts` descents, in restart order.
pub fn run_restarts(a: &Tensor, r: usize, mode: Mode, cfg: &SolverConfig) -> Result<Vec<RestartOutcome>> {
    (0..cfg.restarts).map(|i| solve_restart(a, r, mode, cfg, i)).collect()
}

/// Runs restarts in order until one reaches `residual <= feas_tol * ||A||`.
pub fn fits_at_rank(a: &Tensor, r: usize, mode: Mode, cfg: &SolverConfig) -> Result<Option<RestartOutcome>> {
    let threshold = cfg.feas_tol * a.frobenius_norm();
    for i in 0..cfg.restarts {
        let o = solve_restart(a, r, mode, cfg, i)?;
        if o.residual <= threshold {
            return Ok(Some(o));
        }
    }
    Ok(None)
}

/// Consecutive stalled sweeps before a restart stops.
const STALL_PATIENCE: usize = 3;

/// A single seeded descent; randomness depends only on `(cfg.seed, index)`.
pub fn solve_restart(a: &Tensor, r: usize, mode: Mode, cfg: &SolverConfig, index: usize) -> Result<RestartOutcome> {
    if r < 1 {
        return Err(Error::InvalidRank);
    }
    cfg.validate()?;
    if mode == Mode::Nonnegative && !a.is_nonneg() {
        return Err(Error::NotNonnegative);
    }
    let dims = a.shape().dims().to_vec();
    let input_norm = a.frobenius_norm();
    let mut factors = Factors::random(&dims, r, mode, &mut task_rng(cfg.seed, index as u64));
    if input_norm == 0.0 {
        factors.scale_all(0.0);
        let decomposition = factors.to_decomposition(a, mode)?;
        return Ok(RestartOutcome { index, decomposition, residual: 0.0, trace: vec![0.0], converged: true });
    }
    let init_norm = crate::linalg::norm(&factors.reconstruct());
    if init_norm > 0.0 {
        factors.scale_all((input_norm / init_norm).powf(1.0 / dims.len() as f64));
    }

    let mut residual = factors.residual(a.data());
    let mut trace = vec![residual];
    let mut converged = false;
    let mut ws = Workspace::default();
    let mut step = Extrapolation::default();
    let mut lm = Damping::new(&dims, r);
    let mut stalled = 0;
    for _ in 0..cfg.max_outer_iters {
        let saved = factors.mats.clone();
        for k in 0..dims.len() {
            factors.update_mode(a.data(), k, mode, cfg.inner_tol, &mut ws);
        }
        factors.balance();
        let mut next = factors.residual(a.data());
        if !next.is_finite() {
            return Err(Error::NonFinite);
        }
        if next > residual {
            // rounding-level increase: keep the previous iterate
            factors.mats = saved;
            converged = true;
            break;
        }
        let trial = factors.extrapolated(&saved, step.beta, mode);
        let trial_residual = trial.residual(a.data());
        if trial_residual < next {
            factors = trial;
            factors.balance();
            next = factors.residual(a.data()).min(residual);
            step.accept();
        } else {
            step.reject();
        }
        if lm.enabled {
            if let Some(trial) = factors.newton_step(a.data(), lm.lambda, mode) {
                let trial_residual = trial.residual(a.data());
                if trial_residual < next {
                    factors = trial;
                    factors.balance();
                    next = factors.residual(a.data()).min(next);
                    lm.lambda = (lm.lambda / 3.0).max(1e-12);
                } else {
                    lm.lambda = (lm.lambda * 4.0).min(1e8);
                }
            }
        }
        let decrease = residual - next;
        residual = next;
        trace.push(residual);
        if residual <= 1e-15 * input_norm {
            converged = true;
            break;
        }
        if decrease <= cfg.stall_tol * (residual + decrease) {
            stalled += 1;
            if stalled >= STALL_PATIENCE {
                converged = true;
                break;
            }
        } else {
            stalled = 0;
        }
    }
    let decomposition = factors.to_decomposition(a, mode)?;
    Ok(RestartOutcome { index, decomposition, residual, trace, converged })
}

/// Adaptive momentum along the last sweep direction; grows while the
/// extrapolated point improves the residual and is halved otherwise.
struct Extrapolation {
    beta: f64,
    beta_max: f64,
}

impl Default for Extrapolation {
    fn default() -> Self {
        Extrapolation { beta: 0.5, beta_max: 1.0 }
    }
}

impl Extrapolation {
    fn accept(&mut self) {
        self.beta = (self.beta * 1.5).min(self.beta_max);
        self.beta_max = (self.beta_max * 1.05).min(1.0);
    }

    fn reject(&mut self) {
        self.beta_max = self.beta;
        self.beta /= 2.0;
    }
}

/// Gauss-Newton steps on all factors at once, used when the joint Jacobian
/// is small enough to form densely.
struct Damping {
    enabled: bool,
    lambda: f64,
}

const MAX_JOINT_PARAMS: usize = 400;
const MAX_JACOBIAN_ENTRIES: usize = 4_000_000;

impl Damping {
    fn new(dims: &[usize], r: usize) -> Self {
        let params = r * dims.iter().sum::<usize>();
        let rows: usize = dims.iter().product();
        Damping { enabled: params <= MAX_JOINT_PARAMS && rows * params <= MAX_JACOBIAN_ENTRIES, lambda: 1e-3 }
    }
}

#[derive(Default)]
struct Workspace {
    gram: Vec<f64>,
    mttkrp: Vec<f64>,
    row: Vec<f64>,
}

/// Factor matrices, `mats[k][i * rank + j]` = entry `i` of factor `k` of term `j`.
struct Factors {
    dims: Vec<usize>,
    rank: usize,
    mats: Vec<Vec<f64>>,
}

impl Factors {
    fn random(dims: &[usize], rank: usize, mode: Mode, rng: &mut impl Rng) -> Self {
        let mats = dims
            .iter()
            .map(|&n| {
                (0..n * rank)
                    .map(|_| match mode {
                        Mode::Nonnegative => rng.random::<f64>(),
                        Mode::Real => rng.sample::<f64, _>(StandardNormal),
                    })
                    .collect()
            })
            .collect();
        Factors { dims: dims.to_vec(), rank, mats }
    }

    /// `self + beta (self - prev)`, clipped at zero in nonnegative mode.
    fn extrapolated(&self, prev: &[Vec<f64>], beta: f64, mode: Mode) -> Factors {
        let mats = self
            .mats
            .iter()
            .zip(prev)
            .map(|(cur, old)| {
                cur.iter()
                    .zip(old)
                    .map(|(&c, &o)| {
                        let y = c + beta * (c - o);
                        if mode == Mode::Nonnegative {
                            y.max(0.0)
                        } else {
                            y
                        }
                    })
                    .collect()
            })
            .collect();
        Factors { dims: self.dims.clone(), rank: self.rank, mats }
    }

    /// Damped Newton step `(JᵀJ + C + λ μ I) δ = -Jᵀe` with `C` the residual
    /// curvature and `μ` the mean diagonal of `JᵀJ`; falls back to the
    /// Gauss-Newton matrix when the damped Hessian is not positive definite.
    /// In nonnegative mode, entries near zero whose gradient pushes them down
    /// are pinned at zero and the step is clipped at zero.
    fn newton_step(&self, target: &[f64], lambda: f64, mode: Mode) -> Option<Factors> {
        let r = self.rank;
        let d = self.dims.len();
        let offsets: Vec<usize> = self
            .dims
            .iter()
            .scan(0, |acc, &n| {
                let o = *acc;
                *acc += n * r;
                Some(o)
            })
            .collect();
        let p = offsets[d - 1] + self.dims[d - 1] * r;
        let q = self.reconstruct();
        let mut h = nalgebra::DMatrix::<f64>::zeros(p, p);
        let mut c = nalgebra::DMatrix::<f64>::zeros(p, p);
        let mut g = vec![0.0; p];
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(r * d);
        for_each_index(&self.dims, |flat, idx| {
            let e = q[flat] - target[flat];
            for j in 0..r {
                for k in 0..d {
                    for l in k + 1..d {
                        let mut w = e;
                        for (m, &i) in idx.iter().enumerate() {
                            if m != k && m != l {
                                w *= self.mats[m][i * r + j];
                            }
                        }
                        let (a, b) = (offsets[k] + idx[k] * r + j, offsets[l] + idx[l] * r + j);
                        c[(a, b)] += w;
                        c[(b, a)] += w;
                    }
                }
            }
            row.clear();
            for j in 0..r {
                for k in 0..d {
                    let mut w = 1.0;
                    for (m, &i) in idx.iter().enumerate() {
                        if m != k {
                            w *= self.mats[m][i * r + j];
                        }
                    }
                    row.push((offsets[k] + idx[k] * r + j, w));
                }
            }
            for &(a, wa) in &row {
                g[a] += wa * e;
                for &(b, wb) in &row {
                    h[(a, b)] += wa * wb;
                }
            }
        });
        let x: Vec<f64> = self.mats.iter().flatten().copied().collect();
        // entries this close to zero with the gradient pushing down are pinned at zero
        let pin = if mode == Mode::Nonnegative {
            let pg: f64 = x.iter().zip(&g).map(|(&xi, &gi)| (xi - (xi - gi).max(0.0)).powi(2)).sum::<f64>().sqrt();
            let xmax = x.iter().copied().fold(0.0, f64::max);
            pg.min(1e-3 * xmax)
        } else {
            0.0
        };
        let free: Vec<usize> = (0..p).filter(|&i| mode == Mode::Real || x[i] > pin || g[i] < 0.0).collect();
        if free.is_empty() {
            return None;
        }
        let nf = free.len();
        let mu = free.iter().map(|&i| h[(i, i)]).sum::<f64>() / nf as f64;
        if mu.is_nan() || mu <= 0.0 {
            return None;
        }
        let damped = |curv: f64| {
            nalgebra::DMatrix::from_fn(nf, nf, |a, b| {
                h[(free[a], free[b])] + curv * c[(free[a], free[b])] + if a == b { lambda * mu } else { 0.0 }
            })
        };
        let rhs = nalgebra::DVector::from_iterator(nf, free.iter().map(|&i| -g[i]));
        let delta = damped(1.0).cholesky().or_else(|| damped(0.0).cholesky())?.solve(&rhs);
        let mut y = x;
        if mode == Mode::Nonnegative {
            y.iter_mut().zip(&g).filter(|(v, &gi)| **v <= pin && gi >= 0.0).for_each(|(v, _)| *v = 0.0);
        }
        for (a, &i) in free.iter().enumerate() {
            y[i] += delta[a];
            if mode == Mode::Nonnegative && y[i] < 0.0 {
                y[i] = 0.0;
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mats = self.dims.iter().enumerate().map(|(k, &n)| y[offsets[k]..offsets[k] + n * r].to_vec()).collect();
        Some(Factors { dims: self.dims.clone(), rank: r, mats })
    }

    fn scale_all(&mut self, s: f64) {
        for m in &mut self.mats {
            for x in m.iter_mut() {
                *x *= s;
            }
        }
    }

    fn reconstruct(&self) -> Vec<f64> {
        let r = self.rank;
        let mut out = vec![0.0; self.dims.iter().product()];
        for_each_index(&self.dims, |flat, idx| {
            let mut s = 0.0;
            for j in 0..r {
                let mut p = 1.0;
                for (k, &i) in idx.iter().enumerate() {
                    p *= self.mats[k][i * r + j];
                }
                s += p;
            }
            out[flat] = s;
        });
        out
    }

    fn residual(&self, target: &[f64]) -> f64 {
        self.reconstruct().iter().zip(target).map(|(q, p)| (q - p) * (q - p)).sum::<f64>().sqrt()
    }

    /// Exact minimization over factor `k` with the others fixed.
    fn update_mode(&mut self, target: &[f64], k: usize, mode: Mode, inner_tol: f64, ws: &mut Workspace) {
        let r = self.rank;
        let n = self.dims[k];
        ws.gram.clear();
        ws.gram.resize(r * r, 1.0);
        for (m, mat) in self.mats.iter().enumerate() {
            if m == k {
                continue;
            }
            for a in 0..r {
                for b in a..r {
                    let s: f64 = (0..self.dims[m]).map(|i| mat[i * r + a] * mat[i * r + b]).sum();
                    ws.gram[a * r + b] *= s;
                    if a != b {
                        ws.gram[b * r + a] *= s;
                    }
                }
            }
        }
        ws.mttkrp.clear();
        ws.mttkrp.resize(n * r, 0.0);
        let mats = &self.mats;
        for_each_index(&self.dims, |flat, idx| {
            let v = target[flat];
            if v == 0.0 {
                return;
            }
            let row = idx[k] * r;
            for j in 0..r {
                let mut p = v;
                for (m, &i) in idx.iter().enumerate() {
                    if m != k {
                        p *= mats[m][i * r + j];
                    }
                }
                ws.mttkrp[row + j] += p;
            }
        });
        for i in 0..n {
            let c = &ws.mttkrp[i * r..(i + 1) * r];
            match mode {
                Mode::Nonnegative => {
                    let x = nnls_gram(&ws.gram, r, c, inner_tol);
                    self.mats[k][i * r..(i + 1) * r].copy_from_slice(&x);
                }
                Mode::Real => {
                    ws.row.clear();
                    ws.row.extend_from_slice(c);
                    solve_psd(&ws.gram, r, &mut ws.row);
                    self.mats[k][i * r..(i + 1) * r].copy_from_slice(&ws.row);
                }
            }
        }
    }

    /// Equalizes factor norms within each nonzero term (evaluation unchanged
    /// up to rounding).
    fn balance(&mut self) {
        let r = self.rank;
        let d = self.dims.len();
        for j in 0..r {
            let norms: Vec<f64> = (0..d)
                .map(|k| (0..self.dims[k]).map(|i| self.mats[k][i * r + j].powi(2)).sum::<f64>().sqrt())
                .collect();
            if norms.contains(&0.0) {
                continue;
            }
            let g = norms.iter().map(|x| x.ln()).sum::<f64>() / d as f64;
            let g = g.exp();
            for (k, norm) in norms.iter().enumerate() {
                let s = g / norm;
                for i in 0..self.dims[k] {
                    self.mats[k][i * r + j] *= s;
                }
            }
        }
    }

    fn to_decomposition(&self, a: &Tensor, mode: Mode) -> Result<Decomposition> {
        let r = self.rank;
        let terms = (0..r)
            .map(|j| {
                RankOneTerm::new(
                    self.dims
                        .iter()
                        .enumerate()
                        .map(|(k, &n)| (0..n).map(|i| self.mats[k][i * r + j]).collect())
                        .collect(),
                )
            })
            .collect();
        Decomposition::new(a.shape().clone(), terms, mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::match_decompositions;
    use crate::tensor::Shape;

    fn random_nonneg_decomposition(dims: &[usize], r: usize, seed: u64) -> Decomposition {
        let mut rng = task_rng(seed, 999);
        let terms = (0..r)
            .map(|_| RankOneTerm::new(dims.iter().map(|&n| (0..n).map(|_| rng.random::<f64>()).collect()).collect()))
            .collect();
        Decomposition::new(Shape::new(dims.to_vec()).unwrap(), terms, Mode::Nonnegative).unwrap()
    }

    #[test]
    fn rank_one_is_recovered() {
        let plant = random_nonneg_decomposition(&[3, 4, 2], 1, 5);
        let a = plant.evaluate();
        let res = nncp_solve(&a, 1, &SolverConfig::default()).unwrap();
        assert!(res.residual <= 1e-10, "residual {}", res.residual);
        assert!(match_decompositions(&res.best, &plant, 1e-8).unwrap().matched);
    }

    #[test]
    fn planted_rank_two_fits() {
        let a = random_nonneg_decomposition(&[3, 3, 3], 2, 11).evaluate();
        let cfg = SolverConfig::default().with_restarts(20);
        let res = nncp_solve(&a, 2, &cfg).unwrap();
        let hits = res.restart_residuals.iter().filter(|&&x| x <= 1e-8).count();
        assert!(hits >= 1);
        assert_eq!(res.residual, res.restart_residuals.iter().copied().fold(f64::INFINITY, f64::min));
    }

    #[test]
    fn residual_trace_is_monotone() {
        let a = random_nonneg_decomposition(&[3, 3, 3], 4, 3).evaluate();
        for mode in [Mode::Nonnegative, Mode::Real] {
            for i in 0..5 {
                let o = solve_restart(&a, 2, mode, &SolverConfig::default(), i).unwrap();
                assert!(o.trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
                assert_eq!(*o.trace.last().unwrap(), o.residual);
            }
        }
    }

    #[test]
    fn argument_errors() {
        let a = random_nonneg_decomposition(&[2, 2, 2], 1, 1).evaluate();
        let cfg = SolverConfig::default();
        assert_eq!(nncp_solve(&a, 0, &cfg).unwrap_err(), Error::InvalidRank);
        let real = Tensor::real(a.shape().clone(), a.data().to_vec()).unwrap();
        assert_eq!(nncp_solve(&real, 1, &cfg).unwrap_err(), Error::NotNonnegative);
        assert!(nncp_solve(&a, 1, &SolverConfig { restarts: 0, ..cfg.clone() }).is_err());
    }

    #[test]
    fn zero_tensor_gives_zero_residual() {
        let a = Tensor::zeros(Shape::new(vec![2, 3]).unwrap());
        let res = nncp_solve(&a, 2, &SolverConfig::default()).unwrap();
        assert_eq!(res.residual, 0.0);
        assert!(res.best.evaluate().is_zero());
    }

    #[test]
    fn identical_seeds_are_reproducible() {
        let a = random_nonneg_decomposition(&[3, 3, 3], 3, 2).evaluate();
        let cfg = SolverConfig::default().with_seed(42).with_restarts(3);
        assert_eq!(nncp_solve(&a, 2, &cfg).unwrap(), nncp_solve(&a, 2, &cfg).unwrap());
    }
}
