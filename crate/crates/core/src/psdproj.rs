//! Projections onto the probability simplex and onto the spectrahedron
//! `{M ⪰ 0 : tr M = 1}`, plus jittered Cholesky factorizations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Euclidean projection of `v` onto `{x >= 0, sum x = 1}`.
///
/// Sort-based: find the largest `k` with `u_k > (sum_{i<=k} u_i - 1) / k`
/// over the decreasingly sorted entries, then shift and clip.
pub fn simplex_project(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InvalidParameter("cannot project an empty vector onto the simplex".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("simplex projection input"));
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = (u[0] - 1.0) / 1.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if uk > t {
            theta = t;
        } else {
            break;
        }
    }
    Ok(v.iter().map(|x| (x - theta).max(0.0)).collect())
}

/// Frobenius projection of a symmetric matrix onto the unit-trace PSD cone.
///
/// The input is symmetrized as `(X + Xᵀ) / 2` first. Eigenvalues are
/// projected onto the simplex and the eigenvectors kept.
pub fn project_trace_one_psd(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), found: x.ncols() });
    }
    if x.is_empty() {
        return Err(Error::InvalidParameter("cannot project an empty matrix".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix to project"));
    }
    let sym = symmetrize(x);
    let eig = SymmetricEigen::new(sym);
    let lambda = simplex_project(eig.eigenvalues.as_slice())?;
    let v = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * lambda[j]);
    Ok(symmetrize(&(scaled * v.transpose())))
}

pub fn symmetrize(x: &DMatrix<f64>) -> DMatrix<f64> {
    (x + x.transpose()) * 0.5
}

/// Upper-triangular `R` with `Rᵀ R = W + jitter I`, and its inverse.
#[derive(Debug, Clone)]
pub struct TraceOneFactorization {
    r: DMatrix<f64>,
    r_inv: DMatrix<f64>,
    jitter: f64,
    attempts: Vec<f64>,
}

impl TraceOneFactorization {
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn r_inv(&self) -> &DMatrix<f64> {
        &self.r_inv
    }

    /// The diagonal shift that made the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Every jitter value tried, in order; the last one succeeded.
    pub fn attempts(&self) -> &[f64] {
        &self.attempts
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    /// Solves `(W + jitter I) x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        // Rᵀ R x = b
        let y = self.r.tr_solve_upper_triangular(b).expect("R has positive diagonal");
        self.r.solve_upper_triangular(&y).expect("R has positive diagonal")
    }

    /// Solves `(W + jitter I) X = B` column by column.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let y = self.r.tr_solve_upper_triangular(b).expect("R has positive diagonal");
        self.r.solve_upper_triangular(&y).expect("R has positive diagonal")
    }
}

/// Default diagonal shift `1e-10 * tr(W) / m`.
pub fn default_jitter(w: &DMatrix<f64>) -> f64 {
    let m = w.nrows().max(1) as f64;
    1e-10 * w.trace().abs() / m
}

pub const DEFAULT_JITTER_RETRIES: usize = 5;

/// Cholesky factorization of `W + λ I`, escalating `λ` tenfold after each
/// failure (at most `max_retries` escalations).
///
/// A zero starting jitter is tried as-is once; the escalation then continues
/// from [`default_jitter`].
pub fn cholesky_with_jitter(w: &DMatrix<f64>, jitter: f64, max_retries: usize) -> Result<TraceOneFactorization> {
    if !w.is_square() {
        return Err(Error::DimensionMismatch { expected: w.nrows(), found: w.ncols() });
    }
    if w.is_empty() {
        return Err(Error::InvalidParameter("cannot factor an empty matrix".into()));
    }
    if !(jitter.is_finite() && jitter >= 0.0) {
        return Err(Error::InvalidParameter(format!("jitter must be nonnegative, got {jitter}")));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix to factor"));
    }
    let sym = symmetrize(w);
    let m = sym.nrows();
    let mut attempts = Vec::with_capacity(max_retries + 1);
    let mut lambda = jitter;
    for _ in 0..=max_retries {
        attempts.push(lambda);
        let shifted = &sym + DMatrix::identity(m, m) * lambda;
        if let Some(chol) = shifted.cholesky() {
            let r = chol.l().transpose();
            if r.diagonal().iter().all(|&d| d > 0.0 && d.is_finite()) {
                let r_inv = r
                    .solve_upper_triangular(&DMatrix::identity(m, m))
                    .ok_or_else(|| Error::Conditioning("triangular inverse failed".into()))?;
                if r_inv.iter().all(|v| v.is_finite()) {
                    return Ok(TraceOneFactorization { r, r_inv, jitter: lambda, attempts });
                }
            }
        }
        lambda = if lambda == 0.0 {
            let base = default_jitter(&sym);
            if base > 0.0 { base } else { f64::EPSILON }
        } else {
            lambda * 10.0
        };
    }
    let last_jitter = *attempts.last().unwrap_or(&jitter);
    Err(Error::Factorization { last_jitter, attempts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent reference: bisection on the shift `t` of `sum max(v - t, 0) = 1`.
    fn simplex_by_bisection(v: &[f64]) -> Vec<f64> {
        let f = |t: f64| v.iter().map(|x| (x - t).max(0.0)).sum::<f64>() - 1.0;
        let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
        let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        v.iter().map(|x| (x - t).max(0.0)).collect()
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(simplex_project(&[0.5, 0.5]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(simplex_project(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        for x in simplex_project(&[1.0, 1.0, 1.0]).unwrap() {
            assert_relative_eq!(x, 1.0 / 3.0, max_relative = 1e-15);
        }
        assert!(simplex_project(&[]).is_err());
        assert!(simplex_project(&[f64::NAN]).is_err());
    }

    #[test]
    fn simplex_matches_reference_on_random_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = rng.random_range(1..=50);
            let scale = rng.random_range(0.1..10.0);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0) * scale).collect();
            let a = simplex_project(&v).unwrap();
            let b = simplex_by_bisection(&v);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn identity_projects_to_half_identity() {
        let p = project_trace_one_psd(&DMatrix::identity(2, 2)).unwrap();
        assert_relative_eq!(p, DMatrix::identity(2, 2) * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn diag_projection() {
        let x = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, -1.0]));
        let p = project_trace_one_psd(&x).unwrap();
        assert_relative_eq!(p, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0])), epsilon = 1e-15);
    }

    #[test]
    fn projection_rejects_bad_input() {
        assert!(project_trace_one_psd(&DMatrix::zeros(2, 3)).is_err());
        let mut x = DMatrix::identity(2, 2);
        x[(0, 1)] = f64::INFINITY;
        assert!(matches!(project_trace_one_psd(&x), Err(Error::NonFinite(_))));
    }

    #[test]
    fn projection_symmetrizes() {
        let x = DMatrix::from_row_slice(2, 2, &[0.5, 0.4, 0.0, 0.5]);
        let p = project_trace_one_psd(&x).unwrap();
        let q = project_trace_one_psd(&symmetrize(&x)).unwrap();
        assert_relative_eq!(p, q, epsilon = 1e-15);
    }

    #[test]
    fn cholesky_identity() {
        let f = cholesky_with_jitter(&DMatrix::identity(2, 2), 0.0, 5).unwrap();
        assert_eq!(f.r(), &DMatrix::identity(2, 2));
        assert_eq!(f.jitter(), 0.0);
        assert_eq!(f.attempts(), &[0.0]);
    }

    #[test]
    fn cholesky_rank_one_with_jitter() {
        let w = DMatrix::from_element(2, 2, 1.0);
        let f = cholesky_with_jitter(&w, 1e-8, 5).unwrap();
        let rec = f.r().transpose() * f.r();
        let target = &w + DMatrix::identity(2, 2) * f.jitter();
        assert!((rec - &target).norm() <= 1e-12);
        assert!(f.r().diagonal().iter().all(|&d| d > 0.0));
        assert_relative_eq!(f.r_inv() * f.r(), DMatrix::identity(2, 2), epsilon = 1e-6);
    }

    #[test]
    fn cholesky_escalates_on_negative_eigenvalue() {
        // eigenvalues 1 and -1e-6
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]) / 2f64.sqrt();
        let w = &q * DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1e-6])) * q.transpose();
        let f = cholesky_with_jitter(&w, 1e-8, 5).unwrap();
        assert!(f.attempts().len() > 1);
        assert!(f.jitter() >= 1e-6);
        assert_eq!(f.attempts()[0], 1e-8);
        for pair in f.attempts().windows(2) {
            assert_relative_eq!(pair[1], 10.0 * pair[0], max_relative = 1e-12);
        }
    }

    #[test]
    fn cholesky_gives_up() {
        let w = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        match cholesky_with_jitter(&w, 1e-8, 3) {
            Err(Error::Factorization { last_jitter, attempts }) => {
                assert_eq!(attempts.len(), 4);
                assert_relative_eq!(last_jitter, 1e-5, max_relative = 1e-12);
            }
            other => panic!("expected factorization error, got {other:?}"),
        }
    }

    #[test]
    fn factorization_solves() {
        let w = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let f = cholesky_with_jitter(&w, 0.0, 0).unwrap();
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        assert_relative_eq!(&w * f.solve(&b), b, epsilon = 1e-12);
        let rec = f.r().transpose() * f.r();
        assert!((rec - &w).norm() <= 1e-8 * w.norm());
    }

    fn sym_matrix(m: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-2.0..2.0f64, m * m)
            .prop_map(move |v| symmetrize(&DMatrix::from_vec(m, m, v)))
    }

    fn spectrahedron_point(m: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-1.0..1.0f64, m * m).prop_map(move |v| {
            let a = DMatrix::from_vec(m, m, v);
            let g = &a * a.transpose() + DMatrix::identity(m, m) * 1e-3;
            let t = g.trace();
            g / t
        })
    }

    proptest! {
        #[test]
        fn projection_is_feasible_and_idempotent(x in sym_matrix(5)) {
            let p = project_trace_one_psd(&x).unwrap();
            prop_assert!((p.trace() - 1.0).abs() <= 1e-10);
            prop_assert!(p.symmetric_eigenvalues().min() >= -1e-12);
            let pp = project_trace_one_psd(&p).unwrap();
            prop_assert!((pp - &p).norm() <= 1e-10);
        }

        #[test]
        fn projection_is_nonexpansive(x in sym_matrix(4), y in sym_matrix(4)) {
            let px = project_trace_one_psd(&x).unwrap();
            let py = project_trace_one_psd(&y).unwrap();
            prop_assert!((px - py).norm() <= (x - y).norm() + 1e-12);
        }

        #[test]
        fn variational_inequality(x in sym_matrix(4), m in spectrahedron_point(4)) {
            let p = project_trace_one_psd(&x).unwrap();
            let ip = (&x - &p).component_mul(&(&m - &p)).sum();
            prop_assert!(ip <= 1e-8);
        }

        #[test]
        fn spectrahedron_is_fixed(m in spectrahedron_point(4)) {
            let p = project_trace_one_psd(&m).unwrap();
            prop_assert!((p - &m).norm() <= 1e-12);
        }
    }
}
