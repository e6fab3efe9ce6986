//! Dense real tensors in row-major layout (last index fastest).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest ambient dimension accepted by [`Shape::new`].
pub const MAX_AMBIENT_DIM: usize = 1_000_000;

/// Dimensions `(n_1, ..., n_d)` of a tensor space, `d >= 2`, every `n_k >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidShape(format!("order {} < 2", dims.len())));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidShape(format!("zero dimension in {dims:?}")));
        }
        let ambient = dims.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
        match ambient {
            Some(a) if a <= MAX_AMBIENT_DIM => Ok(Shape(dims)),
            _ => Err(Error::InvalidShape(format!("ambient dimension of {dims:?} exceeds {MAX_AMBIENT_DIM}"))),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.iter().product()
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.0.len()];
        for k in (0..self.0.len() - 1).rev() {
            s[k] = s[k + 1] * self.0[k + 1];
        }
        s
    }

    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.0.len());
        index.iter().zip(&self.0).fold(0, |acc, (&i, &n)| {
            debug_assert!(i < n);
            acc * n + i
        })
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.order() {
            Ok(())
        } else {
            Err(Error::ModeOutOfRange { mode, order: self.order() })
        }
    }
}

impl TryFrom<Vec<usize>> for Shape {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Shape::new(dims)
    }
}

impl From<Shape> for Vec<usize> {
    fn from(s: Shape) -> Self {
        s.0
    }
}

/// Calls `f(flat, multi_index)` for every entry in row-major order.
pub(crate) fn for_each_index(dims: &[usize], mut f: impl FnMut(usize, &[usize])) {
    let total: usize = dims.iter().product();
    let mut idx = vec![0usize; dims.len()];
    for flat in 0..total {
        f(flat, &idx);
        for k in (0..dims.len()).rev() {
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Dense tensor. When `nonneg` is set every entry is `>= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorRepr")]
pub struct Tensor {
    shape: Shape,
    data: Vec<f64>,
    nonneg: bool,
}

#[derive(Deserialize)]
struct TensorRepr {
    shape: Shape,
    data: Vec<f64>,
    #[serde(default)]
    nonneg: bool,
}

impl TryFrom<TensorRepr> for Tensor {
    type Error = Error;
    fn try_from(r: TensorRepr) -> Result<Self> {
        Tensor::new(r.shape, r.data, r.nonneg)
    }
}

impl Tensor {
    pub fn new(shape: Shape, data: Vec<f64>, nonneg: bool) -> Result<Self> {
        if data.len() != shape.ambient_dim() {
            return Err(Error::DataLength { expected: shape.ambient_dim(), got: data.len() });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if nonneg {
            if let Some(&value) = data.iter().find(|&&x| x < 0.0) {
                return Err(Error::NegativeEntry { value });
            }
        }
        Ok(Tensor { shape, data, nonneg })
    }

    /// Tensor flagged nonnegative; fails on a negative entry.
    pub fn nonneg(shape: Shape, data: Vec<f64>) -> Result<Self> {
        Tensor::new(shape, data, true)
    }

    pub fn real(shape: Shape, data: Vec<f64>) -> Result<Self> {
        Tensor::new(shape, data, false)
    }

    pub fn zeros(shape: Shape) -> Self {
        let n = shape.ambient_dim();
        Tensor { shape, data: vec![0.0; n], nonneg: true }
    }

    /// Builds a tensor entrywise from its (0-based) multi-index.
    pub fn from_fn(shape: Shape, nonneg: bool, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let mut data = vec![0.0; shape.ambient_dim()];
        for_each_index(shape.dims(), |flat, idx| data[flat] = f(idx));
        Tensor::new(shape, data, nonneg)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_nonneg(&self) -> bool {
        self.nonneg
    }

    /// Same data with the nonnegativity flag set; fails on a negative entry.
    pub fn to_nonneg(&self) -> Result<Self> {
        Tensor::new(self.shape.clone(), self.data.clone(), true)
    }

    /// Entry at a 0-based multi-index.
    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.shape.offset(index)]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|&&x| x != 0.0).count()
    }

    fn same_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape == other.shape {
            Ok(())
        } else {
            Err(Error::ShapeMismatch { left: self.shape.dims().to_vec(), right: other.shape.dims().to_vec() })
        }
    }

    /// Euclidean pairing of the flat data.
    pub fn inner_product(&self, other: &Tensor) -> Result<f64> {
        self.same_shape(other)?;
        Ok(crate::linalg::dot(&self.data, &other.data))
    }

    pub fn frobenius_norm(&self) -> f64 {
        crate::linalg::norm(&self.data)
    }

    /// `self - other`, always flagged real.
    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Tensor { shape: self.shape.clone(), data, nonneg: false })
    }

    /// Distance `||self - other||` in the Frobenius norm.
    pub fn distance(&self, other: &Tensor) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    }

    pub fn scaled(&self, alpha: f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| alpha * x).collect(),
            nonneg: self.nonneg && alpha >= 0.0,
        }
    }

    /// Block-diagonal direct sum: `self` occupies the leading block, `other`
    /// the trailing block, cross blocks are zero.
    pub fn direct_sum(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape.order() != other.shape.order() {
            return Err(Error::OrderMismatch { left: self.shape.order(), right: other.shape.order() });
        }
        let dims: Vec<usize> = self.shape.dims().iter().zip(other.shape.dims()).map(|(a, b)| a + b).collect();
        let shape = Shape::new(dims)?;
        let mut data = vec![0.0; shape.ambient_dim()];
        let mut shifted = vec![0usize; shape.order()];
        for_each_index(self.shape.dims(), |flat, idx| data[shape.offset(idx)] = self.data[flat]);
        let lead = self.shape.dims();
        for_each_index(other.shape.dims(), |flat, idx| {
            for k in 0..idx.len() {
                shifted[k] = idx[k] + lead[k];
            }
            data[shape.offset(&shifted)] = other.data[flat];
        });
        Ok(Tensor { shape, data, nonneg: self.nonneg && other.nonneg })
    }

    /// Zero-pads into a larger shape of the same order (leading block).
    pub fn embed(&self, shape: Shape) -> Result<Tensor> {
        if shape.order() != self.shape.order() {
            return Err(Error::OrderMismatch { left: self.shape.order(), right: shape.order() });
        }
        if shape.dims().iter().zip(self.shape.dims()).any(|(big, small)| big < small) {
            return Err(Error::ShapeMismatch { left: self.shape.dims().to_vec(), right: shape.dims().to_vec() });
        }
        let mut data = vec![0.0; shape.ambient_dim()];
        for_each_index(self.shape.dims(), |flat, idx| data[shape.offset(idx)] = self.data[flat]);
        Ok(Tensor { shape, data, nonneg: self.nonneg })
    }

    /// `self ⊗ u`, an order-`d+1` tensor.
    pub fn absorb_vector(&self, u: &[f64]) -> Result<Tensor> {
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if u.iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroVector);
        }
        let u_nonneg = u.iter().all(|&x| x >= 0.0);
        if self.nonneg && !u_nonneg {
            let value = u.iter().copied().find(|&x| x < 0.0).unwrap_or(0.0);
            return Err(Error::NegativeEntry { value });
        }
        let mut dims = self.shape.dims().to_vec();
        dims.push(u.len());
        let shape = Shape::new(dims)?;
        let data = self.data.iter().flat_map(|&a| u.iter().map(move |&b| a * b)).collect();
        Ok(Tensor { shape, data, nonneg: self.nonneg && u_nonneg })
    }

    /// Order-`(d-1)` sections obtained by fixing the index of `mode`.
    /// Requires order at least 3 (sections of a matrix are vectors).
    pub fn mode_slices(&self, mode: usize) -> Result<Vec<Tensor>> {
        self.shape.check_mode(mode)?;
        if self.shape.order() < 3 {
            return Err(Error::InvalidArgument(format!("mode slices need order >= 3, got {}", self.shape.order())));
        }
        let mut rest = self.shape.dims().to_vec();
        let n = rest.remove(mode);
        let slice_shape = Shape::new(rest)?;
        let mut slices = vec![vec![0.0; slice_shape.ambient_dim()]; n];
        let mut sub = vec![0usize; slice_shape.order()];
        for_each_index(self.shape.dims(), |flat, idx| {
            let mut j = 0;
            for (k, &i) in idx.iter().enumerate() {
                if k != mode {
                    sub[j] = i;
                    j += 1;
                }
            }
            slices[idx[mode]][slice_shape.offset(&sub)] = self.data[flat];
        });
        Ok(slices.into_iter().map(|data| Tensor { shape: slice_shape.clone(), data, nonneg: self.nonneg }).collect())
    }

    /// Mode-`mode` unfolding: the mode index labels rows, the remaining
    /// indices in row-major order label columns.
    pub fn flatten(&self, mode: usize) -> Result<DMatrix<f64>> {
        self.shape.check_mode(mode)?;
        let rows = self.shape.dims()[mode];
        let cols = self.shape.ambient_dim() / rows;
        let mut m = DMatrix::zeros(rows, cols);
        let dims = self.shape.dims();
        for_each_index(dims, |flat, idx| {
            let col = idx.iter().enumerate().filter(|&(k, _)| k != mode).fold(0, |acc, (k, &i)| acc * dims[k] + i);
            m[(idx[mode], col)] = self.data[flat];
        });
        Ok(m)
    }

    /// Order-2 view as a matrix (rows = first index).
    pub fn as_matrix(&self) -> Result<DMatrix<f64>> {
        if self.shape.order() != 2 {
            return Err(Error::InvalidArgument(format!("expected a matrix, got order {}", self.shape.order())));
        }
        let d = self.shape.dims();
        Ok(DMatrix::from_row_slice(d[0], d[1], &self.data))
    }

    pub fn from_matrix(m: &DMatrix<f64>, nonneg: bool) -> Result<Tensor> {
        let shape = Shape::new(vec![m.nrows(), m.ncols()])?;
        Tensor::from_fn(shape, nonneg, |idx| m[(idx[0], idx[1])])
    }
}
