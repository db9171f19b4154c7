//! The kernel sum-of-squares density model
//! `p_B(x) = Σ_ij B[i, j] k(x, s_i) k(x, s_j)` with `B ⪰ 0`.
//!
//! Mean embeddings are compared after projection onto the span `H_m` of the
//! support sections `k(·, s_i)`; that projected squared MMD is the quantity
//! with a closed form and the one used as the primary fit metric.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{EmpiricalDistribution, Kernel, KernelFamily, PointSet};
use crate::moments::{MomentCache, MomentData, MomentOptions, ReferenceMeasure};
use crate::psdproj::{cholesky_with_jitter, default_jitter, TraceOneFactorization, DEFAULT_JITTER_RETRIES};

/// Projected MMD² values more negative than this (relative to the size of
/// the terms being cancelled) indicate a broken factorization, not round-off.
pub const NEGATIVE_MMD_TOLERANCE: f64 = 1e-9;

/// Support points, their Gram matrix and a factorization for solving with it.
#[derive(Debug, Clone)]
pub struct SupportSet {
    kernel: Kernel,
    points: PointSet,
    gram: DMatrix<f64>,
    factor: TraceOneFactorization,
}

impl SupportSet {
    pub fn new(kernel: Kernel, points: PointSet) -> Result<Self> {
        let gram = kernel.self_gram(&points);
        let jitter = default_jitter(&gram);
        Self::build(kernel, points, gram, jitter, DEFAULT_JITTER_RETRIES)
    }

    pub fn with_jitter(kernel: Kernel, points: PointSet, jitter: f64, max_retries: usize) -> Result<Self> {
        let gram = kernel.self_gram(&points);
        Self::build(kernel, points, gram, jitter, max_retries)
    }

    fn build(kernel: Kernel, points: PointSet, gram: DMatrix<f64>, jitter: f64, retries: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("support set is empty".into()));
        }
        let factor = cholesky_with_jitter(&gram, jitter, retries)?;
        Ok(Self { kernel, points, gram, factor })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn factor(&self) -> &TraceOneFactorization {
        &self.factor
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    /// Solves `K̃ x = b` (with the jitter used by the factorization).
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.factor.solve(b)
    }

    /// `K(X̃, X) a`: support sections of the weighted point set, summed.
    pub fn cross_embedding(&self, points: &PointSet, weights: &DVector<f64>) -> Result<DVector<f64>> {
        if points.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), found: weights.len() });
        }
        let cross = self.kernel.gram(&self.points, points)?;
        Ok(cross * weights)
    }
}

/// Uniform subsample of `m` distinct rows, deterministic in `seed`.
pub fn select_support(points: &PointSet, m: usize, seed: u64) -> Result<PointSet> {
    if m == 0 || m > points.len() {
        return Err(Error::InvalidParameter(format!(
            "support size must be in 1..={}, got {m}",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, points.len(), m).into_vec();
    idx.sort_unstable();
    Ok(points.select(&idx))
}

/// Coefficients `b = K̃⁻¹ K(X̃, X) a` of the projection of the embedding of
/// `emp` onto the span of the support sections.
pub fn project_onto_span(support: &SupportSet, emp: &EmpiricalDistribution) -> Result<DVector<f64>> {
    let kxa = support.cross_embedding(emp.points(), emp.weights())?;
    Ok(support.solve(&kxa))
}

/// Contracts the third-order moment tensor with `B`.
pub fn u_map(moments: &MomentData, b: &DMatrix<f64>) -> Result<DVector<f64>> {
    moments.u_map(b)
}

/// Everything about the target embedding `v = Σ a_i φ(x_i)` that the
/// projected MMD needs: `c = K̃⁻¹ K(X̃, X) a`, `V[p, q] = u_pqᵀ c` and the
/// constant `|P_m v|² = aᵀ K(X̃, X)ᵀ K̃⁻¹ K(X̃, X) a`.
#[derive(Debug, Clone)]
pub struct EmbeddingTarget {
    coefficients: DVector<f64>,
    v: DMatrix<f64>,
    norm_sq: f64,
}

impl EmbeddingTarget {
    /// Target for arbitrary (not necessarily normalized) weights.
    pub fn new(support: &SupportSet, moments: &MomentData, points: &PointSet, weights: &DVector<f64>) -> Result<Self> {
        if moments.support_size() != support.len() {
            return Err(Error::DimensionMismatch { expected: support.len(), found: moments.support_size() });
        }
        let kxa = support.cross_embedding(points, weights)?;
        let c = support.solve(&kxa);
        let v = moments.u_adjoint(&c)?;
        let norm_sq = kxa.dot(&c);
        Ok(Self { coefficients: c, v, norm_sq })
    }

    pub fn from_empirical(support: &SupportSet, moments: &MomentData, emp: &EmpiricalDistribution) -> Result<Self> {
        Self::new(support, moments, emp.points(), emp.weights())
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn v(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// `|P_m v|²`, the part of the objective that does not depend on `B`.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// The target matching moments whose tensor is scaled by `factor`.
    pub fn with_scaled_tensor(&self, factor: f64) -> Self {
        Self { coefficients: self.coefficients.clone(), v: &self.v * factor, norm_sq: self.norm_sq }
    }
}

/// A projected squared MMD together with the unclamped value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedMmd {
    pub value: f64,
    pub raw: f64,
    pub clamped: bool,
}

/// `U(B)ᵀ K̃⁻¹ U(B) - 2⟨B, V⟩ + |P_m v|²`, with small negative round-off clamped.
pub fn projected_mmd_sq_parts(
    support: &SupportSet,
    moments: &MomentData,
    b: &DMatrix<f64>,
    target: &EmbeddingTarget,
) -> Result<ProjectedMmd> {
    let ub = moments.u_map(b)?;
    let quad = ub.dot(&support.solve(&ub));
    let cross = 2.0 * b.component_mul(&target.v).sum();
    let raw = quad - cross + target.norm_sq;
    if !raw.is_finite() {
        return Err(Error::NonFinite("projected MMD"));
    }
    if raw >= 0.0 {
        return Ok(ProjectedMmd { value: raw, raw, clamped: false });
    }
    let scale = 1f64.max(quad.abs() + cross.abs() + target.norm_sq.abs());
    if raw >= -NEGATIVE_MMD_TOLERANCE * scale {
        log::debug!("clamping projected MMD² round-off {raw:e} to 0");
        Ok(ProjectedMmd { value: 0.0, raw, clamped: true })
    } else {
        Err(Error::Conditioning(format!(
            "projected MMD² evaluated to {raw:e}; the support Gram factorization is unreliable"
        )))
    }
}

/// A kernel SoS density tied to its support set and moments.
#[derive(Debug, Clone)]
pub struct SosDensityModel {
    support: Arc<SupportSet>,
    moments: Arc<MomentData>,
    measure: ReferenceMeasure,
    b: DMatrix<f64>,
    /// `F` with `B = F Fᵀ` (eigenvectors scaled by the square roots of the
    /// nonnegative eigenvalues), so that `p_B(x) = |Fᵀ k̃_x|²` is a sum of squares.
    factor: DMatrix<f64>,
    jitter: f64,
}

impl SosDensityModel {
    pub fn new(
        support: Arc<SupportSet>,
        moments: Arc<MomentData>,
        measure: ReferenceMeasure,
        b: DMatrix<f64>,
    ) -> Result<Self> {
        let m = support.len();
        if moments.support_size() != m {
            return Err(Error::DimensionMismatch { expected: m, found: moments.support_size() });
        }
        if b.shape() != (m, m) {
            return Err(Error::DimensionMismatch { expected: m, found: b.nrows() });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coefficient matrix"));
        }
        let b = crate::psdproj::symmetrize(&b);
        let eig = SymmetricEigen::new(b.clone());
        let scale = eig.eigenvalues.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        let min = eig.eigenvalues.min();
        if min < -1e-10 * scale {
            return Err(Error::InvalidParameter(format!(
                "coefficient matrix is not PSD (smallest eigenvalue {min:e})"
            )));
        }
        let keep: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
        let factor = DMatrix::from_fn(m, keep.len(), |i, j| {
            eig.eigenvectors[(i, keep[j])] * eig.eigenvalues[keep[j]].sqrt()
        });
        Ok(Self { support, moments, measure, b, factor, jitter: 0.0 })
    }

    /// Records the diagonal shift that was applied to `W` while fitting.
    pub fn with_jitter(mut self, jitter: f64) -> Self {
        self.jitter = jitter;
        self
    }

    pub fn kernel(&self) -> &Kernel {
        self.support.kernel()
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn moments(&self) -> &MomentData {
        &self.moments
    }

    pub fn measure(&self) -> &ReferenceMeasure {
        &self.measure
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    /// Same support and moments, new coefficients.
    pub fn with_b(&self, b: DMatrix<f64>) -> Result<Self> {
        Ok(Self::new(self.support.clone(), self.moments.clone(), self.measure.clone(), b)?.with_jitter(self.jitter))
    }

    /// `p_B(x) = k̃_xᵀ B k̃_x`, evaluated as `|Fᵀ k̃_x|²` so the result is
    /// never negative.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        let k = self.kernel().sections(self.support.points(), x)?;
        Ok(self.factor.tr_mul(&k).norm_squared())
    }

    /// Densities at every point of `xs`, evaluated in parallel, in input order.
    pub fn density_batch(&self, xs: &PointSet) -> Result<Vec<f64>> {
        if xs.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: xs.dim() });
        }
        (0..xs.len()).into_par_iter().map(|i| self.density(xs.row(i))).collect()
    }

    /// Total mass `tr(B W)`.
    pub fn mass(&self) -> f64 {
        self.b.component_mul(self.moments.w()).sum()
    }

    /// `B ← B / tr(BW)`.
    pub fn normalize(&self) -> Result<Self> {
        let mass = self.mass();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::DegenerateModel(format!("cannot normalize a model of mass {mass}")));
        }
        self.with_b(&self.b / mass)
    }

    /// `B ← B / (1 - λ tr B)`, for a `B` satisfying `tr(B (W + λ I)) = 1`.
    /// Afterwards `tr(B W) = 1`.
    pub fn normalize_with_jitter(&self, jitter: f64) -> Result<Self> {
        let denom = 1.0 - jitter * self.b.trace();
        if !(denom > 0.0) || self.mass() <= 0.0 {
            return Err(Error::DegenerateModel(format!(
                "jitter renormalization needs 1 - λ tr B > 0, got {denom}"
            )));
        }
        Ok(self.with_b(&self.b / denom)?.with_jitter(jitter))
    }

    pub fn projected_mmd_sq(&self, target: &EmbeddingTarget) -> Result<ProjectedMmd> {
        projected_mmd_sq_parts(&self.support, &self.moments, &self.b, target)
    }

    pub fn projected_mmd_sq_to(&self, emp: &EmpiricalDistribution) -> Result<ProjectedMmd> {
        let target = EmbeddingTarget::from_empirical(&self.support, &self.moments, emp)?;
        self.projected_mmd_sq(&target)
    }

    pub fn to_file(&self) -> ModelFile {
        let m = self.support.len();
        let mut lower = Vec::with_capacity(m * (m + 1) / 2);
        for i in 0..m {
            for j in 0..=i {
                lower.push(self.b[(i, j)]);
            }
        }
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: 1,
            kernel: KernelSpec { family: self.kernel().family(), bandwidth: self.kernel().bandwidth() },
            dimension: self.dim(),
            support_size: m,
            support_points: self.support.points().as_slice().to_vec(),
            b_lower: lower,
            measure: self.measure.clone(),
            jitter: self.jitter,
            mass: self.mass(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Rebuilds a model; moments are recomputed (or read from `cache`).
    pub fn from_file(file: &ModelFile, cache: Option<&MomentCache>) -> Result<Self> {
        if file.format != MODEL_FORMAT {
            return Err(Error::InvalidParameter(format!("not a model file (format `{}`)", file.format)));
        }
        let m = file.support_size;
        if file.b_lower.len() != m * (m + 1) / 2 {
            return Err(Error::DimensionMismatch { expected: m * (m + 1) / 2, found: file.b_lower.len() });
        }
        let points = PointSet::new(file.dimension, file.support_points.clone())?;
        if points.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: points.len() });
        }
        let kernel = Kernel::new(file.kernel.family, file.kernel.bandwidth)?;
        let support = SupportSet::new(kernel, points)?;
        let opts = MomentOptions::default();
        let moments = match cache {
            Some(c) => c.load_or_compute(&kernel, support.points(), &file.measure, &opts)?,
            None => MomentData::compute(&kernel, support.points(), &file.measure, &opts)?,
        };
        let mut b = DMatrix::zeros(m, m);
        let mut it = file.b_lower.iter();
        for i in 0..m {
            for j in 0..=i {
                let v = *it.next().expect("length checked");
                b[(i, j)] = v;
                b[(j, i)] = v;
            }
        }
        Ok(Self::new(Arc::new(support), Arc::new(moments), file.measure.clone(), b)?.with_jitter(file.jitter))
    }

    pub fn from_json(text: &str, cache: Option<&MomentCache>) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        Self::from_file(&file, cache)
    }

    pub fn load(path: impl AsRef<Path>, cache: Option<&MomentCache>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?, cache)
    }
}

pub const MODEL_FORMAT: &str = "sos-density-model";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth: f64,
}

/// On-disk JSON layout of a model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub kernel: KernelSpec,
    pub dimension: usize,
    pub support_size: usize,
    /// Row-major `support_size x dimension`.
    pub support_points: Vec<f64>,
    /// Lower triangle of `B`, row by row.
    pub b_lower: Vec<f64>,
    pub measure: ReferenceMeasure,
    pub jitter: f64,
    /// `tr(B W)` when the file was written.
    pub mass: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::closed_form;
    use approx::assert_relative_eq;
    use rand::Rng;
    use std::f64::consts::PI;

    fn rd() -> ReferenceMeasure {
        ReferenceMeasure::LebesgueRd
    }

    fn setup(rows: &[&[f64]], sigma: f64) -> (Arc<SupportSet>, Arc<MomentData>) {
        let kernel = Kernel::gaussian(sigma).unwrap();
        let pts = PointSet::from_rows(rows).unwrap();
        let moments = closed_form(&kernel, &pts, &rd()).unwrap();
        (Arc::new(SupportSet::new(kernel, pts).unwrap()), Arc::new(moments))
    }

    fn random_psd(rng: &mut impl Rng, m: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
        &a * a.transpose()
    }

    #[test]
    fn zero_model_is_zero() {
        let (s, mo) = setup(&[&[0.0], &[1.0]], 1.0);
        let model = SosDensityModel::new(s, mo, rd(), DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(model.density(&[0.3]).unwrap(), 0.0);
        assert_eq!(model.mass(), 0.0);
        assert!(matches!(model.normalize(), Err(Error::DegenerateModel(_))));
    }

    #[test]
    fn single_point_density_and_mass() {
        let (s, mo) = setup(&[&[0.0]], 1.0);
        let model = SosDensityModel::new(s.clone(), mo.clone(), rd(), DMatrix::from_element(1, 1, 2.5)).unwrap();
        assert_relative_eq!(model.density(&[0.0]).unwrap(), 2.5, max_relative = 1e-15);
        let b = 1.0 / (PI / 2.0).sqrt();
        let unit = SosDensityModel::new(s, mo, rd(), DMatrix::from_element(1, 1, b)).unwrap();
        assert_relative_eq!(unit.mass(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn density_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (s, mo) = setup(&[&[0.0], &[0.7]], 0.9);
        let b = random_psd(&mut rng, 2);
        let model = SosDensityModel::new(s, mo, rd(), b.clone()).unwrap();
        let k = Kernel::gaussian(0.9).unwrap();
        for _ in 0..20 {
            let x = rng.random_range(-3.0..3.0);
            let mut naive = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    naive += b[(i, j)] * k.eval(&[x], model.support().points().row(i)).unwrap()
                        * k.eval(&[x], model.support().points().row(j)).unwrap();
                }
            }
            assert_relative_eq!(model.density(&[x]).unwrap(), naive, max_relative = 1e-13);
        }
        assert!(model.density(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn rejects_indefinite_coefficients() {
        let (s, mo) = setup(&[&[0.0], &[1.0]], 1.0);
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -0.5]));
        assert!(SosDensityModel::new(s, mo, rd(), b).is_err());
    }

    #[test]
    fn normalize_plain() {
        let (s, mo) = setup(&[&[0.0], &[1.0]], 1.0);
        let model = SosDensityModel::new(s, mo, rd(), DMatrix::identity(2, 2)).unwrap();
        let doubled = model.with_b(model.b() * (2.0 / model.mass())).unwrap();
        assert_relative_eq!(doubled.mass(), 2.0, max_relative = 1e-14);
        let n = doubled.normalize().unwrap();
        assert_relative_eq!(n.b(), &(doubled.b() / 2.0), max_relative = 1e-14);
        assert!((n.mass() - 1.0).abs() <= 1e-10);
        let again = n.normalize().unwrap();
        assert!((again.b() - n.b()).norm() <= 1e-12);
    }

    #[test]
    fn normalize_jitter_path() {
        // choose λ so that tr(B(W + λI)) = 1 and λ tr B = 0.5
        let (s, mo) = setup(&[&[0.0], &[1.3]], 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let raw = random_psd(&mut rng, 2);
        let model = SosDensityModel::new(s, mo, rd(), raw).unwrap();
        let b0 = model.b() * (0.5 / model.mass());
        let lambda = 0.5 / b0.trace();
        let m0 = model.with_b(b0.clone()).unwrap();
        assert_relative_eq!(m0.mass() + lambda * b0.trace(), 1.0, max_relative = 1e-14);
        let n = m0.normalize_with_jitter(lambda).unwrap();
        assert_relative_eq!(n.b(), &(&b0 * 2.0), max_relative = 1e-14);
        assert!((n.mass() - 1.0).abs() <= 1e-10);
        assert_eq!(n.jitter(), lambda);

        // 1 - λ tr B <= 0
        assert!(m0.normalize_with_jitter(2.0 * lambda).is_err());
    }

    #[test]
    fn projection_of_support_points_is_identity() {
        let rows: &[&[f64]] = &[&[0.0], &[0.9], &[2.0]];
        let (s, _) = setup(rows, 1.0);
        let emp = EmpiricalDistribution::uniform(PointSet::from_rows(rows).unwrap()).unwrap();
        let b = project_onto_span(&s, &emp).unwrap();
        for v in b.iter() {
            assert_relative_eq!(*v, 1.0 / 3.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn projection_scalar_case() {
        let (s, _) = setup(&[&[0.0]], 1.0);
        let emp = EmpiricalDistribution::uniform(PointSet::from_rows(&[[0.8]]).unwrap()).unwrap();
        let b = project_onto_span(&s, &emp).unwrap();
        // K̃ = [1 + jitter]
        assert_relative_eq!(b[0], (-0.64f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn projection_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<[f64; 2]> = (0..6).map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
        let s = SupportSet::new(Kernel::gaussian(1.0).unwrap(), PointSet::from_rows(&rows).unwrap()).unwrap();
        let xs: Vec<[f64; 2]> = (0..9).map(|_| [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)]).collect();
        let emp = EmpiricalDistribution::uniform(PointSet::from_rows(&xs).unwrap()).unwrap();
        let b = project_onto_span(&s, &emp).unwrap();
        let rhs = s.cross_embedding(emp.points(), emp.weights()).unwrap();
        assert!((s.gram() * &b - rhs).norm() <= 1e-8);
    }

    #[test]
    fn zero_model_mmd_is_embedding_norm() {
        let (s, mo) = setup(&[&[0.0], &[1.0], &[-0.6]], 1.0);
        let emp = EmpiricalDistribution::uniform(PointSet::from_rows(&[[0.2], [0.5]]).unwrap()).unwrap();
        let target = EmbeddingTarget::from_empirical(&s, &mo, &emp).unwrap();
        let model = SosDensityModel::new(s, mo, rd(), DMatrix::zeros(3, 3)).unwrap();
        let mmd = model.projected_mmd_sq(&target).unwrap();
        assert_eq!(mmd.value, target.norm_sq());
        assert!(!mmd.clamped);
    }

    #[test]
    fn mmd_vanishes_at_matching_embedding() {
        let rows: &[&[f64]] = &[&[0.0], &[1.1], &[-0.9]];
        let (s, mo) = setup(rows, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = random_psd(&mut rng, 3);
        let beta = s.solve(&mo.u_map(&b).unwrap());
        let pts = PointSet::from_rows(rows).unwrap();
        let target = EmbeddingTarget::new(&s, &mo, &pts, &beta).unwrap();
        let model = SosDensityModel::new(s, mo, rd(), b).unwrap();
        let mmd = model.projected_mmd_sq(&target).unwrap();
        assert!(mmd.value <= 1e-10, "{mmd:?}");
    }

    #[test]
    fn mmd_matches_coefficient_space_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let rows: Vec<[f64; 1]> = (0..3).map(|_| [rng.random_range(-2.0..2.0)]).collect();
            let row_refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let (s, mo) = setup(&row_refs, 1.0);
            let xs: Vec<[f64; 1]> = (0..4).map(|_| [rng.random_range(-2.0..2.0)]).collect();
            let emp = EmpiricalDistribution::uniform(PointSet::from_rows(&xs).unwrap()).unwrap();
            let b = random_psd(&mut rng, 3);

            // explicit P_m coefficients of both embeddings
            let k = s.kernel();
            let cross = DMatrix::from_fn(3, 4, |i, j| k.eval(s.points().row(i), &xs[j]).unwrap());
            let c = s.solve(&(cross * emp.weights()));
            let mut ub = DVector::zeros(3);
            for p in 0..3 {
                for q in 0..3 {
                    for r in 0..3 {
                        ub[r] += b[(p, q)] * mo.u(p, q, r);
                    }
                }
            }
            let beta = s.solve(&ub);
            let diff = &c - &beta;
            let oracle = diff.dot(&(s.gram() * &diff));

            let model = SosDensityModel::new(s, mo, rd(), b).unwrap();
            let got = model.projected_mmd_sq_to(&emp).unwrap().value;
            assert_relative_eq!(got, oracle, max_relative = 1e-6, epsilon = 1e-12);
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (s, mo) = setup(&[&[0.0, 0.1], &[1.0, -0.3], &[0.4, 0.8]], 0.7);
        let model = SosDensityModel::new(s, mo, rd(), random_psd(&mut rng, 3)).unwrap().normalize().unwrap();
        let text = model.to_json().unwrap();
        let back = SosDensityModel::from_json(&text, None).unwrap();
        assert_eq!(back.b(), model.b());
        assert_eq!(back.support().points(), model.support().points());
        for x in [[0.0, 0.0], [0.3, -1.2], [2.0, 2.0]] {
            assert_eq!(back.density(&x).unwrap(), model.density(&x).unwrap());
        }
        let file: ModelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(file.b_lower.len(), 6);
        assert!((file.mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn select_support_is_seeded_subset() {
        let pts = PointSet::new(1, (0..20).map(f64::from).collect()).unwrap();
        let a = select_support(&pts, 5, 42).unwrap();
        let b = select_support(&pts, 5, 42).unwrap();
        assert_eq!(a, b);
        let mut seen: Vec<f64> = a.as_slice().to_vec();
        seen.dedup();
        assert_eq!(seen.len(), 5);
        assert!(select_support(&pts, 21, 0).is_err());
        assert!(select_support(&pts, 0, 0).is_err());
    }
}
