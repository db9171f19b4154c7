//! Translation-invariant positive-definite kernels, point sets and empirical
//! distributions.
//!
//! Bandwidth convention: the Gaussian kernel is `exp(-|x - y|^2 / sigma^2)`,
//! with no factor 2 in the denominator. Many libraries use
//! `exp(-|x - y|^2 / (2 sigma^2))`; a bandwidth taken from such a library has
//! to be multiplied by `sqrt(2)` before use here. The Laplace kernel is
//! `exp(-|x - y| / sigma)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Gaussian,
    Laplace,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Laplace => "laplace",
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "rbf" => Ok(KernelFamily::Gaussian),
            "laplace" | "laplacian" => Ok(KernelFamily::Laplace),
            other => Err(Error::InvalidParameter(format!("unknown kernel family `{other}`"))),
        }
    }
}

/// A kernel family together with its bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    family: KernelFamily,
    bandwidth: f64,
}

impl Kernel {
    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kernel bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(Self { family, bandwidth })
    }

    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, bandwidth)
    }

    pub fn laplace(bandwidth: f64) -> Result<Self> {
        Self::new(KernelFamily::Laplace, bandwidth)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Evaluates `k(x, y)`, checking that both points have the same dimension.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// Evaluates `k(x, y)`. Extra trailing coordinates of the longer slice are ignored.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        self.profile(sq)
    }

    /// Kernel value as a function of the squared distance.
    #[inline]
    pub fn profile(&self, squared_distance: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => (-squared_distance / (self.bandwidth * self.bandwidth)).exp(),
            KernelFamily::Laplace => (-squared_distance.sqrt() / self.bandwidth).exp(),
        }
    }

    /// Gram matrix `K[i, j] = k(x_i, y_j)`.
    ///
    /// Rows are assembled in parallel; each entry is computed independently so
    /// the result does not depend on the thread schedule.
    pub fn gram(&self, xs: &PointSet, ys: &PointSet) -> Result<DMatrix<f64>> {
        if xs.dim() != ys.dim() {
            return Err(Error::DimensionMismatch { expected: xs.dim(), found: ys.dim() });
        }
        let cols = ys.len();
        let rows: Vec<Vec<f64>> = (0..xs.len())
            .into_par_iter()
            .map(|i| {
                let xi = xs.row(i);
                (0..cols).map(|j| self.eval_unchecked(xi, ys.row(j))).collect()
            })
            .collect();
        Ok(DMatrix::from_fn(xs.len(), cols, |i, j| rows[i][j]))
    }

    /// Symmetric Gram matrix of a point set with itself.
    pub fn self_gram(&self, xs: &PointSet) -> DMatrix<f64> {
        let n = xs.len();
        let mut k = DMatrix::identity(n, n);
        for i in 0..n {
            for j in 0..i {
                let v = self.eval_unchecked(xs.row(i), xs.row(j));
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    /// The vector `(k(x, s_1), ..., k(x, s_m))` of kernel sections at `x`.
    pub fn sections(&self, support: &PointSet, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != support.dim() {
            return Err(Error::DimensionMismatch { expected: support.dim(), found: x.len() });
        }
        Ok(DVector::from_iterator(
            support.len(),
            support.rows().map(|s| self.eval_unchecked(s, x)),
        ))
    }
}

/// An ordered set of points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    data: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("point dimension must be at least 1".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates cannot be split into points of dimension {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select(&self, indices: &[usize]) -> PointSet {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        PointSet { dim: self.dim, data }
    }

    pub fn translated(&self, offset: &[f64]) -> Result<PointSet> {
        if offset.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: offset.len() });
        }
        let data = self
            .rows()
            .flat_map(|r| r.iter().zip(offset).map(|(a, b)| a + b))
            .collect();
        PointSet::new(self.dim, data)
    }

    /// Coordinatewise minimum and maximum.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for r in self.rows() {
            for (k, &v) in r.iter().enumerate() {
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        (lo, hi)
    }
}

/// A finitely supported probability measure `sum_i a_i delta_{x_i}`.
#[derive(Debug, Clone)]
pub struct EmpiricalDistribution {
    points: PointSet,
    weights: DVector<f64>,
}

impl EmpiricalDistribution {
    pub fn uniform(points: PointSet) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidParameter("empirical distribution needs at least one point".into()));
        }
        Ok(Self { points, weights: DVector::from_element(n, 1.0 / n as f64) })
    }

    pub fn new(points: PointSet, weights: DVector<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("empirical distribution needs at least one point".into()));
        }
        if weights.len() != points.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), found: weights.len() });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("empirical weights"));
        }
        let total = weights.sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("empirical weights sum to {total}, expected 1")));
        }
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
