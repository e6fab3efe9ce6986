//! Real-root counting for univariate polynomials.
//!
//! Coefficients are in ascending order of degree. Counting uses a Sturm
//! sequence on the square-free part `p / gcd(p, p')`, all in floating point
//! with relative zero tests.

use alloc::vec::Vec;

use crate::{Error, Result};

const ZERO_TOL: f64 = 1e-10;

fn trim(mut p: Vec<f64>, tol: f64) -> Vec<f64> {
    while p.last().is_some_and(|c| c.abs() <= tol) {
        p.pop();
    }
    p
}

fn scale_of(p: &[f64]) -> f64 {
    p.iter().fold(0.0f64, |m, c| m.max(c.abs()))
}

/// Rescales to unit max-coefficient and drops negligible leading terms.
fn normalize(p: Vec<f64>) -> Vec<f64> {
    let s = scale_of(&p);
    if s == 0.0 {
        return Vec::new();
    }
    trim(p.into_iter().map(|c| c / s).collect(), ZERO_TOL)
}

fn derivative(p: &[f64]) -> Vec<f64> {
    p.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect()
}

/// Remainder of `a / b`; `b` must have a nonzero leading coefficient.
fn rem(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = b[db];
    while r.len() > db && !r.is_empty() {
        let q = r[r.len() - 1] / lead;
        let shift = r.len() - 1 - db;
        for (i, &bc) in b.iter().enumerate() {
            r[shift + i] -= q * bc;
        }
        r.pop();
    }
    r
}

/// Quotient of `a / b`, remainder discarded.
fn quot(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    if r.len() <= db {
        return alloc::vec![0.0];
    }
    let mut q = alloc::vec![0.0; r.len() - db];
    while r.len() > db {
        let c = r[r.len() - 1] / b[db];
        let shift = r.len() - 1 - db;
        q[shift] = c;
        for (i, &bc) in b.iter().enumerate() {
            r[shift + i] -= c * bc;
        }
        r.pop();
    }
    q
}

fn gcd(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut x = normalize(a.to_vec());
    let mut y = normalize(b.to_vec());
    while !y.is_empty() {
        let r = normalize_rel(rem(&x, &y), scale_of(&x));
        x = y;
        y = r;
    }
    x
}

/// Drops the remainder to zero when it is negligible relative to the dividend.
fn normalize_rel(r: Vec<f64>, ref_scale: f64) -> Vec<f64> {
    if scale_of(&r) <= ZERO_TOL * ref_scale.max(1.0) {
        Vec::new()
    } else {
        normalize(r)
    }
}

fn sign_changes(seq: &[Vec<f64>], x: Option<f64>, positive: bool) -> usize {
    let mut signs = Vec::new();
    for p in seq {
        let v = match x {
            Some(x) => p.iter().rev().fold(0.0, |acc, &c| acc * x + c),
            None => {
                let lead = *p.last().unwrap_or(&0.0);
                let deg = p.len().saturating_sub(1);
                if positive || deg % 2 == 0 {
                    lead
                } else {
                    -lead
                }
            }
        };
        if v != 0.0 {
            signs.push(v > 0.0);
        }
    }
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Number of distinct real roots of `coeffs[0] + coeffs[1] x + ...`.
pub fn count_distinct_real_roots(coeffs: &[f64]) -> Result<usize> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite);
    }
    let p = normalize(coeffs.to_vec());
    if p.is_empty() {
        return Err(Error::InvalidArgument("zero polynomial".into()));
    }
    if p.len() == 1 {
        return Ok(0);
    }
    let g = gcd(&p, &derivative(&p));
    let sf = if g.len() > 1 { normalize(quot(&p, &g)) } else { p };
    if sf.len() <= 1 {
        return Ok(0);
    }
    let mut seq = alloc::vec![sf.clone(), normalize(derivative(&sf))];
    loop {
        let n = seq.len();
        let r = rem(&seq[n - 2], &seq[n - 1]);
        let r = normalize_rel(r, scale_of(&seq[n - 2]));
        if r.is_empty() {
            break;
        }
        seq.push(r.into_iter().map(|c| -c).collect());
    }
    let neg = sign_changes(&seq, None, false);
    let pos = sign_changes(&seq, None, true);
    Ok(neg.saturating_sub(pos))
}

/// Distinct real roots of the binary form `Σ coeffs[i] x^i y^(d-i)` on the
/// projective line, `d = coeffs.len() - 1`. Each unit of degree drop in the
/// dehomogenization `y = 1` is a root at infinity, counted once.
pub fn count_distinct_real_roots_binary_form(coeffs: &[f64]) -> Result<usize> {
    let p = normalize(coeffs.to_vec());
    if p.is_empty() {
        return Err(Error::InvalidArgument("zero polynomial".into()));
    }
    let at_infinity = usize::from(p.len() < coeffs.len());
    let finite = if p.len() == 1 { 0 } else { count_distinct_real_roots(&p)? };
    Ok(finite + at_infinity)
}
