//! Fitting a kernel SoS density to data by minimizing the projected MMD.
//!
//! The mass constraint `tr(B W) = 1` is handled through the change of
//! variables `C = R B Rᵀ` with `Rᵀ R = W (+ jitter)`, which maps it onto the
//! spectrahedron `{C ⪰ 0 : tr C = 1}`. The objective in `C` is
//!
//! ```text
//! f(C) = U(B)ᵀ K̃⁻¹ U(B) + ⟨C, R⁻ᵀ (λ K̃ - 2 V) R⁻¹⟩,   B = R⁻¹ C R⁻ᵀ
//! ```
//!
//! (the projected MMD² without its constant term, plus `λ tr(B K̃)`), and it
//! is minimized by projected gradient descent or FISTA.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{EmpiricalDistribution, Kernel, PointSet};
use crate::moments::{MomentData, MomentOptions, ReferenceMeasure};
use crate::psdproj::{
    cholesky_with_jitter, default_jitter, project_trace_one_psd, symmetrize, TraceOneFactorization,
    DEFAULT_JITTER_RETRIES,
};
use crate::sosmodel::{EmbeddingTarget, SosDensityModel, SupportSet};

/// Number of past iterations the stopping rule compares against.
pub const STOP_WINDOW: usize = 5;
/// Convergence also needs the projected-gradient residual below this multiple of `tol`.
pub const STATIONARITY_FACTOR: f64 = 10.0;
const MAX_STEP_HALVINGS: usize = 20;
const POWER_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepSize {
    /// `1 / L` with `L` a power-iteration estimate of the gradient's Lipschitz constant.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    /// Weight of the `λ tr(B K̃)` regularizer.
    pub lambda_trace: f64,
    pub max_iters: usize,
    pub step_size: StepSize,
    /// Stop once the relative objective decrease over [`STOP_WINDOW`] iterations
    /// drops below this and the projected-gradient residual is below
    /// [`STATIONARITY_FACTOR`] times this.
    pub tol: f64,
    pub accelerate: bool,
    /// Initial diagonal shift for factoring `W`; `None` uses `1e-10 tr(W) / m`.
    pub jitter: Option<f64>,
    pub jitter_retries: usize,
    pub rng_seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda_trace: 1e-3,
            max_iters: 5000,
            step_size: StepSize::Auto,
            tol: 1e-8,
            accelerate: true,
            jitter: None,
            jitter_retries: DEFAULT_JITTER_RETRIES,
            rng_seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_trace.is_finite() && self.lambda_trace >= 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be nonnegative, got {}", self.lambda_trace)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if let StepSize::Fixed(s) = self.step_size {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidParameter(format!("step size must be positive, got {s}")));
            }
        }
        if let Some(j) = self.jitter {
            if !(j.is_finite() && j >= 0.0) {
                return Err(Error::InvalidParameter(format!("jitter must be nonnegative, got {j}")));
            }
        }
        Ok(())
    }
}

/// Per-iteration diagnostics of a fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    /// `f(C_k)` for `k = 0..=iterations`.
    pub objective_trace: Vec<f64>,
    /// Projected MMD² (constant term included) at each iterate.
    pub projected_mmd_trace: Vec<f64>,
    pub final_mass: f64,
    /// Diagonal shift used when factoring `W`.
    pub jitter_used: f64,
    /// Every shift tried for `W`, in order.
    pub jitter_attempts: Vec<f64>,
    /// Diagonal shift used when factoring the support Gram matrix.
    pub support_jitter: f64,
    pub iterations: usize,
    pub converged: bool,
    pub accelerate: bool,
    pub step_size: f64,
    /// Times the sufficient-decrease test shrank the step.
    pub backtracks: usize,
    /// Times the objective went up and FISTA momentum was reset.
    pub restarts: usize,
    /// `|C* - Π(C* - s ∇f(C*))|_F` at the returned iterate.
    pub stationarity: f64,
}

impl FitReport {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial iterate")
    }

    pub fn final_projected_mmd(&self) -> f64 {
        *self.projected_mmd_trace.last().expect("trace holds the initial iterate")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `iteration,objective,projected_mmd` rows, 17 significant digits.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,objective,projected_mmd\n");
        for (k, (f, d)) in self.objective_trace.iter().zip(&self.projected_mmd_trace).enumerate() {
            let _ = writeln!(out, "{k},{f:.16e},{d:.16e}");
        }
        out
    }

    pub fn write_trace_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.trace_csv())?;
        Ok(())
    }
}

/// Precomputed quantities for evaluating the objective in `C`.
#[derive(Debug, Clone)]
pub struct FitContext {
    support: Arc<SupportSet>,
    moments: Arc<MomentData>,
    w_factor: TraceOneFactorization,
    target: EmbeddingTarget,
    lambda: f64,
    /// `R⁻ᵀ (λ K̃ - 2 V) R⁻¹`
    linear: DMatrix<f64>,
}

impl FitContext {
    pub fn new(
        support: Arc<SupportSet>,
        moments: Arc<MomentData>,
        target: EmbeddingTarget,
        lambda: f64,
        w_factor: TraceOneFactorization,
    ) -> Result<Self> {
        let m = support.len();
        if moments.support_size() != m || w_factor.dim() != m || target.v().nrows() != m {
            return Err(Error::DimensionMismatch { expected: m, found: moments.support_size() });
        }
        let r_inv = w_factor.r_inv();
        let inner = support.gram() * lambda - target.v() * 2.0;
        let linear = symmetrize(&(r_inv.transpose() * inner * r_inv));
        Ok(Self { support, moments, w_factor, target, lambda, linear })
    }

    /// Factors `W` (with jitter escalation) and assembles the context.
    pub fn assemble(
        support: Arc<SupportSet>,
        moments: Arc<MomentData>,
        target: EmbeddingTarget,
        lambda: f64,
        jitter: Option<f64>,
        retries: usize,
    ) -> Result<Self> {
        let w = moments.w();
        let jitter = jitter.unwrap_or_else(|| default_jitter(w));
        let w_factor = cholesky_with_jitter(w, jitter, retries)?;
        Self::new(support, moments, target, lambda, w_factor)
    }

    pub fn dim(&self) -> usize {
        self.support.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn support(&self) -> &Arc<SupportSet> {
        &self.support
    }

    pub fn moments(&self) -> &Arc<MomentData> {
        &self.moments
    }

    pub fn target(&self) -> &EmbeddingTarget {
        &self.target
    }

    pub fn w_factor(&self) -> &TraceOneFactorization {
        &self.w_factor
    }

    /// Same context with the moment tensor multiplied by `factor`.
    pub fn with_scaled_tensor(&self, factor: f64) -> Result<Self> {
        let moments = Arc::new(self.moments.with_scaled_tensor(factor));
        let target = self.target.with_scaled_tensor(factor);
        Self::new(self.support.clone(), moments, target, self.lambda, self.w_factor.clone())
    }

    /// `B = R⁻¹ C R⁻ᵀ`.
    pub fn b_from_c(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        let r_inv = self.w_factor.r_inv();
        symmetrize(&(r_inv * c * r_inv.transpose()))
    }

    /// `C = R B Rᵀ`.
    pub fn c_from_b(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let r = self.w_factor.r();
        symmetrize(&(r * b * r.transpose()))
    }

    fn quadratic(&self, b: &DMatrix<f64>) -> (f64, nalgebra::DVector<f64>) {
        let ub = self.moments.u_map(b).expect("dimensions checked at construction");
        let z = self.support.solve(&ub);
        (ub.dot(&z), z)
    }

    pub fn objective(&self, c: &DMatrix<f64>) -> f64 {
        self.evaluate(c).0
    }

    /// Objective and projected MMD² (constant term included) from one contraction.
    pub fn evaluate(&self, c: &DMatrix<f64>) -> (f64, f64) {
        let b = self.b_from_c(c);
        let (quad, _) = self.quadratic(&b);
        let objective = quad + c.component_mul(&self.linear).sum();
        let mmd = quad - 2.0 * b.component_mul(self.target.v()).sum() + self.target.norm_sq();
        (objective, mmd)
    }

    /// Objective and its gradient `R⁻ᵀ (2 Q + λ K̃ - 2 V) R⁻¹` with
    /// `Q[p, q] = u_pqᵀ K̃⁻¹ U(B)`.
    pub fn objective_and_gradient(&self, c: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let b = self.b_from_c(c);
        let (quad, z) = self.quadratic(&b);
        let value = quad + c.component_mul(&self.linear).sum();
        let q = self.moments.u_adjoint(&z).expect("dimensions checked at construction");
        let r_inv = self.w_factor.r_inv();
        let grad = symmetrize(&(r_inv.transpose() * (q * 2.0) * r_inv)) + &self.linear;
        (value, grad)
    }

    /// Projected MMD² at `C`, constant term included, not clamped.
    pub fn projected_mmd_sq(&self, c: &DMatrix<f64>) -> f64 {
        self.evaluate(c).1
    }

    /// Hessian of the quadratic part applied to `C` (halved): `R⁻ᵀ Q(B) R⁻¹`.
    fn half_hessian_apply(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        let b = self.b_from_c(c);
        let (_, z) = self.quadratic(&b);
        let q = self.moments.u_adjoint(&z).expect("dimensions checked at construction");
        let r_inv = self.w_factor.r_inv();
        symmetrize(&(r_inv.transpose() * q * r_inv))
    }

    /// Lipschitz constant `2 |M_U|²` of the gradient, where `M_U` maps
    /// `C ↦ K̃^{-1/2} U(R⁻¹ C R⁻ᵀ)`; estimated by power iteration on
    /// `M_Uᵀ M_U` from a seeded random start.
    pub fn lipschitz(&self, seed: u64) -> f64 {
        let m = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = symmetrize(&DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0)));
        let norm = c.norm();
        if norm == 0.0 {
            return 0.0;
        }
        c /= norm;
        let mut estimate = 0.0;
        for _ in 0..POWER_ITERATIONS {
            let next = self.half_hessian_apply(&c);
            estimate = c.component_mul(&next).sum();
            let n = next.norm();
            if !(n > 0.0) || !n.is_finite() {
                return if n.is_finite() { 0.0 } else { f64::INFINITY };
            }
            c = next / n;
        }
        let rayleigh = c.component_mul(&self.half_hessian_apply(&c)).sum();
        2.0 * rayleigh.max(estimate)
    }

    /// `1 / L`, or `1.0` when the quadratic part vanishes.
    pub fn step_size_auto(&self, seed: u64) -> f64 {
        let l = self.lipschitz(seed);
        if l > 0.0 && l.is_finite() {
            1.0 / l
        } else {
            1.0
        }
    }

    /// `|C - Π(C - s ∇f(C))|_F`.
    pub fn stationarity(&self, c: &DMatrix<f64>, step: f64) -> Result<f64> {
        let (_, g) = self.objective_and_gradient(c);
        let p = project_trace_one_psd(&(c - g * step))?;
        Ok((c - p).norm())
    }
}

/// Free-function form of [`FitContext::objective_and_gradient`].
pub fn objective_and_gradient(c: &DMatrix<f64>, ctx: &FitContext) -> (f64, DMatrix<f64>) {
    ctx.objective_and_gradient(c)
}

struct Step {
    c: DMatrix<f64>,
    objective: f64,
    mmd: f64,
    /// `|from - c|_F`, the projected-gradient residual at the base point.
    residual: f64,
}

/// Result of the iterative solve in `C` coordinates.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub c: DMatrix<f64>,
    pub objective_trace: Vec<f64>,
    pub projected_mmd_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub step_size: f64,
    pub backtracks: usize,
    pub restarts: usize,
}

fn window_converged(trace: &[f64], tol: f64) -> bool {
    if trace.len() <= STOP_WINDOW {
        return false;
    }
    let now = trace[trace.len() - 1];
    let then = trace[trace.len() - 1 - STOP_WINDOW];
    let scale = then.abs().max(f64::MIN_POSITIVE);
    (then - now) / scale < tol
}

/// Minimizes `f` over the spectrahedron from `C₀ = I / m`.
pub fn solve(ctx: &FitContext, cfg: &FitConfig) -> Result<SolveOutcome> {
    cfg.validate()?;
    let m = ctx.dim();
    let mut step = match cfg.step_size {
        StepSize::Auto => ctx.step_size_auto(cfg.rng_seed),
        StepSize::Fixed(s) => s,
    };
    let mut x = DMatrix::identity(m, m) / m as f64;
    let (mut fx, mmd0) = ctx.evaluate(&x);
    if !fx.is_finite() {
        return Err(Error::NonFinite("objective at the initial iterate"));
    }
    let mut objective_trace = vec![fx];
    let mut projected_mmd_trace = vec![mmd0];

    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut halvings = 0usize;
    let mut backtracks = 0usize;
    let mut restarts = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;
    let stationarity_bound = STATIONARITY_FACTOR * cfg.tol;

    // One projected gradient step from `from`, shrinking the step until the
    // quadratic upper bound holds.
    let mut prox_step = |from: &DMatrix<f64>, step: &mut f64| -> Result<Step> {
        let (f_from, g) = ctx.objective_and_gradient(from);
        loop {
            let cand = project_trace_one_psd(&(from - &g * *step))?;
            let (f_cand, mmd) = ctx.evaluate(&cand);
            if !f_cand.is_finite() {
                halvings += 1;
                if halvings > MAX_STEP_HALVINGS {
                    return Err(Error::Solver(format!(
                        "objective is not finite after {MAX_STEP_HALVINGS} step halvings (step {:e})",
                        *step
                    )));
                }
                *step *= 0.5;
                continue;
            }
            let d = &cand - from;
            let model = f_from + g.component_mul(&d).sum() + d.norm_squared() / (2.0 * *step);
            let slack = 1e-12 * f_from.abs().max(f_cand.abs()).max(1.0);
            if f_cand <= model + slack {
                return Ok(Step { c: cand, objective: f_cand, mmd, residual: d.norm() });
            }
            backtracks += 1;
            *step *= 0.5;
            if *step == 0.0 {
                return Err(Error::Solver("step size underflowed during backtracking".into()));
            }
        }
    };

    for _ in 0..cfg.max_iters {
        let mut next = prox_step(&y, &mut step)?;
        if cfg.accelerate {
            if next.objective > fx {
                // function-value restart: drop momentum and step from x instead
                restarts += 1;
                t = 1.0;
                next = prox_step(&x, &mut step)?;
                y = next.c.clone();
            } else {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                y = &next.c + (&next.c - &x) * ((t - 1.0) / t_next);
                t = t_next;
            }
        } else {
            y = next.c.clone();
        }
        x = next.c;
        fx = next.objective;
        iterations += 1;
        objective_trace.push(fx);
        projected_mmd_trace.push(next.mmd);
        // the residual at the step's base point gates the exact check at x
        if next.residual <= 10.0 * stationarity_bound
            && window_converged(&objective_trace, cfg.tol)
            && ctx.stationarity(&x, step)? <= stationarity_bound
        {
            converged = true;
            break;
        }
    }

    Ok(SolveOutcome {
        c: x,
        objective_trace,
        projected_mmd_trace,
        iterations,
        converged,
        step_size: step,
        backtracks,
        restarts,
    })
}

/// Fits `B` for fixed support and moments; returns the normalized model.
pub fn fit_with_context(
    ctx: &FitContext,
    measure: &ReferenceMeasure,
    cfg: &FitConfig,
) -> Result<(SosDensityModel, FitReport)> {
    let outcome = solve(ctx, cfg)?;
    let b = ctx.b_from_c(&outcome.c);
    let raw = SosDensityModel::new(ctx.support.clone(), ctx.moments.clone(), measure.clone(), b)?;
    let jitter = ctx.w_factor.jitter();
    let model = if jitter > 0.0 { raw.normalize_with_jitter(jitter)? } else { raw.normalize()? };
    let final_mass = model.mass();
    if (final_mass - 1.0).abs() > 1e-8 {
        return Err(Error::Conditioning(format!(
            "fitted model has mass {final_mass} after renormalization (W jitter {jitter:e})"
        )));
    }
    let stationarity = ctx.stationarity(&outcome.c, outcome.step_size)?;
    let report = FitReport {
        objective_trace: outcome.objective_trace,
        projected_mmd_trace: outcome.projected_mmd_trace,
        final_mass,
        jitter_used: jitter,
        jitter_attempts: ctx.w_factor.attempts().to_vec(),
        support_jitter: ctx.support.factor().jitter(),
        iterations: outcome.iterations,
        converged: outcome.converged,
        accelerate: cfg.accelerate,
        step_size: outcome.step_size,
        backtracks: outcome.backtracks,
        restarts: outcome.restarts,
        stationarity,
    };
    Ok((model, report))
}

/// Fits a model given precomputed support and moments.
pub fn fit_with(
    emp: &EmpiricalDistribution,
    support: Arc<SupportSet>,
    moments: Arc<MomentData>,
    measure: &ReferenceMeasure,
    cfg: &FitConfig,
) -> Result<(SosDensityModel, FitReport)> {
    cfg.validate()?;
    if emp.points().dim() != support.dim() {
        return Err(Error::DimensionMismatch { expected: support.dim(), found: emp.points().dim() });
    }
    let target = EmbeddingTarget::from_empirical(&support, &moments, emp)?;
    let ctx = FitContext::assemble(support, moments, target, cfg.lambda_trace, cfg.jitter, cfg.jitter_retries)?;
    fit_with_context(&ctx, measure, cfg)
}

/// Fits `p_B` with the given support points to the empirical distribution.
pub fn fit(
    emp: &EmpiricalDistribution,
    support: &PointSet,
    kernel: &Kernel,
    measure: &ReferenceMeasure,
    cfg: &FitConfig,
) -> Result<(SosDensityModel, FitReport)> {
    let moments = MomentData::compute(kernel, support, measure, &MomentOptions::default())?;
    let support = SupportSet::new(*kernel, support.clone())?;
    fit_with(emp, Arc::new(support), Arc::new(moments), measure, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::closed_form;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn context(support: &[&[f64]], data: &[&[f64]], sigma: f64, lambda: f64) -> FitContext {
        let kernel = Kernel::gaussian(sigma).unwrap();
        let pts = PointSet::from_rows(support).unwrap();
        let moments = Arc::new(closed_form(&kernel, &pts, &ReferenceMeasure::LebesgueRd).unwrap());
        let support = Arc::new(SupportSet::new(kernel, pts).unwrap());
        let emp = EmpiricalDistribution::uniform(PointSet::from_rows(data).unwrap()).unwrap();
        let target = EmbeddingTarget::from_empirical(&support, &moments, &emp).unwrap();
        FitContext::assemble(support, moments, target, lambda, None, 5).unwrap()
    }

    #[test]
    fn zero_c_gives_linear_gradient() {
        let ctx = context(&[&[0.0], &[1.0], &[2.5]], &[&[0.3], &[1.9]], 1.0, 0.01);
        let (f, g) = ctx.objective_and_gradient(&DMatrix::zeros(3, 3));
        assert_eq!(f, 0.0);
        let r_inv = ctx.w_factor().r_inv();
        let expected = r_inv.transpose()
            * (ctx.support().gram() * 0.01 - ctx.target().v() * 2.0)
            * r_inv;
        assert_relative_eq!(g, expected, max_relative = 1e-10, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_part_is_nonnegative() {
        let ctx = context(&[&[0.0], &[1.0]], &[&[0.5]], 1.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let c = symmetrize(&DMatrix::from_fn(2, 2, |_, _| rng.random_range(-3.0..3.0)));
            let quad = ctx.objective(&c) - c.component_mul(&ctx.linear).sum();
            assert!(quad >= -1e-12 * c.norm_squared().max(1.0));
        }
    }

    #[test]
    fn parameterization_round_trip() {
        let ctx = context(&[&[0.0], &[0.8], &[-1.1]], &[&[0.5]], 1.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let b = &a * a.transpose();
        let back = ctx.b_from_c(&ctx.c_from_b(&b));
        assert!((back - &b).norm() <= 1e-10 * b.norm().max(1.0));
    }

    #[test]
    fn singleton_problem_is_solved_exactly() {
        let kernel = Kernel::gaussian(1.0).unwrap();
        let pts = PointSet::from_rows(&[[0.0]]).unwrap();
        let emp = EmpiricalDistribution::uniform(pts.clone()).unwrap();
        let cfg = FitConfig { lambda_trace: 0.0, ..Default::default() };
        let (model, report) = fit(&emp, &pts, &kernel, &ReferenceMeasure::LebesgueRd, &cfg).unwrap();
        assert_relative_eq!(model.b()[(0, 0)], 1.0 / (PI / 2.0).sqrt(), max_relative = 1e-9);
        assert!((report.final_mass - 1.0).abs() <= 1e-12);
        assert!(report.converged);
    }

    #[test]
    fn step_auto_degenerate_tensor() {
        let ctx = context(&[&[0.0], &[1.0]], &[&[0.5]], 1.0, 0.0);
        let zero = ctx.with_scaled_tensor(0.0).unwrap();
        assert_eq!(zero.lipschitz(0), 0.0);
        assert_eq!(zero.step_size_auto(0), 1.0);
    }

    #[test]
    fn lipschitz_scales_quadratically() {
        let ctx = context(&[&[0.0], &[1.0], &[1.7]], &[&[0.5]], 1.0, 0.0);
        let l1 = ctx.lipschitz(3);
        let l10 = ctx.with_scaled_tensor(10.0).unwrap().lipschitz(3);
        assert_relative_eq!(l10, 100.0 * l1, max_relative = 1e-8);
        assert_relative_eq!(
            ctx.with_scaled_tensor(10.0).unwrap().step_size_auto(3),
            ctx.step_size_auto(3) / 100.0,
            max_relative = 1e-8
        );
    }

    #[test]
    fn config_validation() {
        assert!(FitConfig { tol: 0.0, ..Default::default() }.validate().is_err());
        assert!(FitConfig { max_iters: 0, ..Default::default() }.validate().is_err());
        assert!(FitConfig { lambda_trace: -1.0, ..Default::default() }.validate().is_err());
        assert!(FitConfig { step_size: StepSize::Fixed(0.0), ..Default::default() }.validate().is_err());
        assert!(FitConfig::default().validate().is_ok());
    }

    #[test]
    fn trace_csv_layout() {
        let ctx = context(&[&[0.0], &[1.0]], &[&[0.5], &[0.2]], 1.0, 0.0);
        let (_, report) = fit_with_context(&ctx, &ReferenceMeasure::LebesgueRd, &FitConfig { max_iters: 3, ..Default::default() }).unwrap();
        let csv = report.trace_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "iteration,objective,projected_mmd");
        assert_eq!(lines.len(), report.objective_trace.len() + 1);
        assert!(lines[1].starts_with("0,"));
        let json: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert_eq!(json["iterations"].as_u64().unwrap() as usize, report.iterations);
    }
}
