//! Kernel moment integrals against the reference measure.
//!
//! For support points `s_1..s_m` the model needs
//!
//! * `W[p, q] = ∫ k(x, s_p) k(x, s_q) dρ(x)` (second order), and
//! * `u[p, q, r] = ∫ k(x, s_p) k(x, s_q) k(x, s_r) dρ(x)` (third order).
//!
//! With the Gaussian kernel and Lebesgue measure on `R^d` both have closed
//! forms. Every other combination, and the cross-check of the closed forms,
//! goes through tensor-product Gauss–Legendre quadrature.
//!
//! The third-order tensor is stored densely (`m^3` doubles), so memory is the
//! limiting factor on the support size: 512 points already take 1 GiB.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelFamily, PointSet};
use crate::quadrature::{AxisRule, TensorRule};

pub const DEFAULT_MAX_SUPPORT: usize = 512;

/// Truncation margin, in bandwidths, added around the support hull when
/// integrating a Gaussian kernel over `R^d`. The neglected tail is below
/// `exp(-2 * 8^2)` relative to the integral.
pub const GAUSSIAN_TRUNCATION: f64 = 8.0;

/// Truncation margin for the Laplace kernel; its tails decay only like
/// `exp(-2 t)`, so the box must be wider (`exp(-40)` here).
pub const LAPLACE_TRUNCATION: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceMeasure {
    /// Lebesgue measure on all of `R^d`.
    LebesgueRd,
    /// Lebesgue measure restricted to an axis-aligned box.
    LebesgueBox { lower: Vec<f64>, upper: Vec<f64> },
}

impl ReferenceMeasure {
    pub fn lebesgue_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), found: upper.len() });
        }
        if lower.is_empty() {
            return Err(Error::InvalidParameter("box measure needs at least one axis".into()));
        }
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("box bounds"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidParameter("box bounds must satisfy lower < upper".into()));
        }
        Ok(ReferenceMeasure::LebesgueBox { lower, upper })
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        match self {
            ReferenceMeasure::LebesgueRd => Ok(()),
            ReferenceMeasure::LebesgueBox { lower, .. } if lower.len() == d => Ok(()),
            ReferenceMeasure::LebesgueBox { lower, .. } => {
                Err(Error::DimensionMismatch { expected: d, found: lower.len() })
            }
        }
    }

    fn descriptor(&self) -> String {
        match self {
            ReferenceMeasure::LebesgueRd => "rd".to_string(),
            ReferenceMeasure::LebesgueBox { lower, upper } => {
                let bits: Vec<String> = lower.iter().chain(upper).map(|v| format!("{:016x}", v.to_bits())).collect();
                format!("box:{}", bits.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentProvenance {
    ClosedFormGaussian,
    Quadrature,
}

/// Second- and third-order kernel moments of a support set.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentData {
    w: DMatrix<f64>,
    u: Vec<f64>,
    provenance: MomentProvenance,
}

impl MomentData {
    /// Assembles moment data from a dense `W` and a row-major `m^3` tensor.
    pub fn from_parts(w: DMatrix<f64>, u: Vec<f64>, provenance: MomentProvenance) -> Result<Self> {
        let m = w.nrows();
        if w.ncols() != m {
            return Err(Error::DimensionMismatch { expected: m, found: w.ncols() });
        }
        if u.len() != m * m * m {
            return Err(Error::DimensionMismatch { expected: m * m * m, found: u.len() });
        }
        if w.iter().chain(&u).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("moment data"));
        }
        Ok(Self { w, u, provenance })
    }

    /// Picks the closed form when available, quadrature otherwise.
    pub fn compute(kernel: &Kernel, support: &PointSet, measure: &ReferenceMeasure, opts: &MomentOptions) -> Result<Self> {
        check_support_size(support, opts.max_support)?;
        if kernel.family() == KernelFamily::Gaussian && *measure == ReferenceMeasure::LebesgueRd {
            closed_form(kernel, support, measure)
        } else {
            let resolution = opts.resolution.unwrap_or_else(|| default_resolution(support.dim()));
            moments_by_quadrature(kernel, support, measure, resolution)
        }
    }

    pub fn support_size(&self) -> usize {
        self.w.nrows()
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// The whole tensor, row-major: entry `(p, q, r)` sits at `(p * m + q) * m + r`.
    pub fn u_flat(&self) -> &[f64] {
        &self.u
    }

    /// The vector `u_pq` (entries `u[p, q, ·]`).
    pub fn u_pq(&self, p: usize, q: usize) -> &[f64] {
        let m = self.support_size();
        let start = (p * m + q) * m;
        &self.u[start..start + m]
    }

    pub fn u(&self, p: usize, q: usize, r: usize) -> f64 {
        let m = self.support_size();
        self.u[(p * m + q) * m + r]
    }

    pub fn provenance(&self) -> MomentProvenance {
        self.provenance
    }

    /// Contracts the tensor with a matrix: `U(B) = Σ_pq B[p, q] u_pq`.
    pub fn u_map(&self, b: &DMatrix<f64>) -> Result<DVector<f64>> {
        let m = self.support_size();
        if b.shape() != (m, m) {
            return Err(Error::DimensionMismatch { expected: m, found: b.nrows() });
        }
        let mut out = DVector::zeros(m);
        for p in 0..m {
            for q in 0..m {
                let bpq = b[(p, q)];
                if bpq == 0.0 {
                    continue;
                }
                for (o, &v) in out.iter_mut().zip(self.u_pq(p, q)) {
                    *o += bpq * v;
                }
            }
        }
        Ok(out)
    }

    /// The matrix `[⟨u_pq, z⟩]_pq`, adjoint of [`MomentData::u_map`].
    pub fn u_adjoint(&self, z: &DVector<f64>) -> Result<DMatrix<f64>> {
        let m = self.support_size();
        if z.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: z.len() });
        }
        let mut out = DMatrix::zeros(m, m);
        for p in 0..m {
            for q in 0..=p {
                let v: f64 = self.u_pq(p, q).iter().zip(z.iter()).map(|(a, b)| a * b).sum();
                out[(p, q)] = v;
                out[(q, p)] = v;
            }
        }
        Ok(out)
    }

    /// Copy with the third-order tensor multiplied by `factor`.
    pub fn with_scaled_tensor(&self, factor: f64) -> Self {
        Self { w: self.w.clone(), u: self.u.iter().map(|v| v * factor).collect(), provenance: self.provenance }
    }
}

#[derive(Debug, Clone)]
pub struct MomentOptions {
    /// Quadrature nodes per axis; `None` picks a dimension-dependent default.
    pub resolution: Option<usize>,
    pub max_support: usize,
}

impl Default for MomentOptions {
    fn default() -> Self {
        Self { resolution: None, max_support: DEFAULT_MAX_SUPPORT }
    }
}

pub fn default_resolution(dim: usize) -> usize {
    match dim {
        1 => 400,
        2 => 200,
        _ => 60,
    }
}

fn check_support_size(support: &PointSet, cap: usize) -> Result<()> {
    if support.is_empty() {
        return Err(Error::InvalidParameter("support set is empty".into()));
    }
    if support.len() > cap {
        return Err(Error::InvalidParameter(format!(
            "support size {} exceeds the cap of {cap} (the moment tensor needs {} MiB)",
            support.len(),
            support.len().pow(3) * 8 / (1 << 20)
        )));
    }
    Ok(())
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `W[p, q] = (π σ² / 2)^{d/2} exp(-|s_p - s_q|² / (2 σ²))` for the Gaussian
/// kernel and Lebesgue measure on `R^d`.
pub fn w_matrix_gaussian(support: &PointSet, sigma: f64) -> DMatrix<f64> {
    let m = support.len();
    let d = support.dim() as f64;
    let scale = (PI * sigma * sigma / 2.0).powf(d / 2.0);
    let mut w = DMatrix::zeros(m, m);
    for p in 0..m {
        for q in 0..=p {
            let v = scale * (-squared_distance(support.row(p), support.row(q)) / (2.0 * sigma * sigma)).exp();
            w[(p, q)] = v;
            w[(q, p)] = v;
        }
    }
    w
}

/// `u[p, q, r] = (π σ² / 3)^{d/2} exp(-(|s_p|² + |s_q|² + |s_r|² - |s_p + s_q + s_r|² / 3) / σ²)`
/// for the Gaussian kernel and Lebesgue measure on `R^d`, row-major.
///
/// The exponent equals `(|s_p - s_q|² + |s_q - s_r|² + |s_p - s_r|²) / 3`,
/// which is evaluated instead so that translating the support leaves the
/// tensor unchanged without cancellation.
pub fn u_tensor_gaussian(support: &PointSet, sigma: f64) -> Vec<f64> {
    let m = support.len();
    let d = support.dim() as f64;
    let scale = (PI * sigma * sigma / 3.0).powf(d / 2.0);
    let dist: Vec<f64> = (0..m * m)
        .map(|i| squared_distance(support.row(i / m), support.row(i % m)))
        .collect();
    let mut u = vec![0.0; m * m * m];
    for p in 0..m {
        for q in p..m {
            for r in q..m {
                let e = (dist[p * m + q] + dist[q * m + r] + dist[p * m + r]) / (3.0 * sigma * sigma);
                fill_symmetric(&mut u, m, p, q, r, scale * (-e).exp());
            }
        }
    }
    u
}

fn fill_symmetric(u: &mut [f64], m: usize, p: usize, q: usize, r: usize, v: f64) {
    for (a, b, c) in [(p, q, r), (p, r, q), (q, p, r), (q, r, p), (r, p, q), (r, q, p)] {
        u[(a * m + b) * m + c] = v;
    }
}

/// Closed-form moments; only defined for the Gaussian kernel on `R^d`.
pub fn closed_form(kernel: &Kernel, support: &PointSet, measure: &ReferenceMeasure) -> Result<MomentData> {
    if kernel.family() != KernelFamily::Gaussian {
        return Err(Error::Unsupported(format!(
            "no closed-form moments for the {} kernel; use quadrature",
            kernel.family().name()
        )));
    }
    if *measure != ReferenceMeasure::LebesgueRd {
        return Err(Error::Unsupported("closed-form moments require Lebesgue measure on R^d; use quadrature".into()));
    }
    check_support_size(support, usize::MAX)?;
    let sigma = kernel.bandwidth();
    MomentData::from_parts(
        w_matrix_gaussian(support, sigma),
        u_tensor_gaussian(support, sigma),
        MomentProvenance::ClosedFormGaussian,
    )
}

/// Integration box and per-axis kink locations for a kernel/measure pair.
fn integration_rule(kernel: &Kernel, support: &PointSet, measure: &ReferenceMeasure, resolution: usize) -> Result<TensorRule> {
    let d = support.dim();
    let (lo, hi) = match measure {
        ReferenceMeasure::LebesgueRd => {
            let margin = kernel.bandwidth()
                * match kernel.family() {
                    KernelFamily::Gaussian => GAUSSIAN_TRUNCATION,
                    KernelFamily::Laplace => LAPLACE_TRUNCATION,
                };
            let (lo, hi) = support.bounding_box();
            (lo.iter().map(|v| v - margin).collect(), hi.iter().map(|v| v + margin).collect())
        }
        ReferenceMeasure::LebesgueBox { lower, upper } => (lower.clone(), upper.clone()),
    };
    let mut axes = Vec::with_capacity(d);
    for k in 0..d {
        // the Laplace kernel is not differentiable at the support points
        let kinks: Vec<f64> = match kernel.family() {
            KernelFamily::Gaussian => Vec::new(),
            KernelFamily::Laplace => support.rows().map(|r| r[k]).collect(),
        };
        axes.push(AxisRule::composite(lo[k], hi[k], &kinks, resolution)?);
    }
    TensorRule::new(axes)
}

/// Moments by tensor-product Gauss–Legendre quadrature with `resolution`
/// nodes per axis (composite panels for the Laplace kernel).
///
/// On `R^d` the domain is truncated to the support hull widened by
/// [`GAUSSIAN_TRUNCATION`] or [`LAPLACE_TRUNCATION`] bandwidths. Limited to
/// `d <= 3` since the cost grows like `resolution^d`.
pub fn moments_by_quadrature(
    kernel: &Kernel,
    support: &PointSet,
    measure: &ReferenceMeasure,
    resolution: usize,
) -> Result<MomentData> {
    let d = support.dim();
    if d > 3 {
        return Err(Error::Unsupported(format!("quadrature moments need d <= 3, got d = {d}")));
    }
    if resolution < 2 {
        return Err(Error::InvalidParameter("quadrature resolution must be at least 2".into()));
    }
    check_support_size(support, DEFAULT_MAX_SUPPORT)?;
    measure.check_dim(d)?;
    let rule = integration_rule(kernel, support, measure, resolution)?;

    let m = support.len();
    // unique (p <= q <= r) triples, in lexicographic order
    let triples: Vec<(usize, usize, usize)> = (0..m)
        .flat_map(|p| (p..m).flat_map(move |q| (q..m).map(move |r| (p, q, r))))
        .collect();
    let mut w_acc = vec![0.0; m * m];
    let mut u_acc = vec![0.0; triples.len()];
    let mut k = vec![0.0; m];
    rule.for_each(|x, weight| {
        for (kv, s) in k.iter_mut().zip(support.rows()) {
            *kv = kernel.eval_unchecked(s, x);
        }
        for p in 0..m {
            let wp = weight * k[p];
            for q in p..m {
                w_acc[p * m + q] += wp * k[q];
            }
        }
        let mut t = 0;
        for p in 0..m {
            let wp = weight * k[p];
            for q in p..m {
                let wpq = wp * k[q];
                for &kr in &k[q..] {
                    u_acc[t] += wpq * kr;
                    t += 1;
                }
            }
        }
    });

    let mut w = DMatrix::zeros(m, m);
    for p in 0..m {
        for q in p..m {
            w[(p, q)] = w_acc[p * m + q];
            w[(q, p)] = w_acc[p * m + q];
        }
    }
    let mut u = vec![0.0; m * m * m];
    for (&(p, q, r), &v) in triples.iter().zip(&u_acc) {
        fill_symmetric(&mut u, m, p, q, r, v);
    }
    MomentData::from_parts(w, u, MomentProvenance::Quadrature)
}

/// Content hash identifying the moments of a support set.
pub fn cache_key(kernel: &Kernel, support: &PointSet, measure: &ReferenceMeasure, resolution: Option<usize>) -> String {
    let mut h = Sha256::new();
    h.update(b"sos-density-moments-v1\0");
    h.update(kernel.family().name().as_bytes());
    h.update(kernel.bandwidth().to_le_bytes());
    h.update((support.dim() as u64).to_le_bytes());
    h.update((support.len() as u64).to_le_bytes());
    for v in support.as_slice() {
        h.update(v.to_le_bytes());
    }
    h.update(measure.descriptor().as_bytes());
    h.update((resolution.unwrap_or(0) as u64).to_le_bytes());
    hex::encode(h.finalize())
}

#[derive(Serialize, Deserialize)]
struct MomentFile {
    key: String,
    support_size: usize,
    provenance: MomentProvenance,
    /// Row-major `m x m`.
    w: Vec<f64>,
    /// Row-major `m x m x m`.
    u: Vec<f64>,
}

/// Directory of JSON sidecar files holding previously computed moments.
#[derive(Debug, Clone)]
pub struct MomentCache {
    dir: PathBuf,
}

impl MomentCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("moments-{key}.json"))
    }

    pub fn load(&self, key: &str) -> Result<Option<MomentData>> {
        let path = self.path_for(key);
        if !path.exists() {
            return Ok(None);
        }
        let file: MomentFile = serde_json::from_slice(&fs::read(&path)?)?;
        if file.key != key {
            return Ok(None);
        }
        let m = file.support_size;
        if file.w.len() != m * m {
            return Err(Error::DimensionMismatch { expected: m * m, found: file.w.len() });
        }
        let w = DMatrix::from_row_slice(m, m, &file.w);
        MomentData::from_parts(w, file.u, file.provenance).map(Some)
    }

    pub fn store(&self, key: &str, data: &MomentData) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let m = data.support_size();
        let file = MomentFile {
            key: key.to_string(),
            support_size: m,
            provenance: data.provenance,
            w: data.w.transpose().as_slice().to_vec(),
            u: data.u.clone(),
        };
        let path = self.path_for(key);
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec(&file)?)?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    /// Returns cached moments or computes and stores them.
    pub fn load_or_compute(
        &self,
        kernel: &Kernel,
        support: &PointSet,
        measure: &ReferenceMeasure,
        opts: &MomentOptions,
    ) -> Result<MomentData> {
        let key = cache_key(kernel, support, measure, opts.resolution);
        if let Some(hit) = self.load(&key)? {
            log::debug!("moment cache hit {}", self.path_for(&key).display());
            return Ok(hit);
        }
        let data = MomentData::compute(kernel, support, measure, opts)?;
        self.store(&key, &data)?;
        Ok(data)
    }
}
