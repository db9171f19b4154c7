//! Robust-versus-relaxed comparison for a Dirac data distribution.
//!
//! For a decision `θ` on a grid and the empirical measure `μ̂ = δ_{x₀}`, two
//! worst-case objectives are computed:
//!
//! * relaxed: `k(θ, x₀) - ε √k(θ, θ)`, the closed form obtained when the
//!   adversary ranges over an RKHS ball instead of distributions;
//! * unrelaxed: `g(θ) = min { Σ w_i k(θ, z_i) : w ∈ Δ, MMD²(w, μ̂) ≤ ε² }`
//!   over probability vectors `w` on an adversary grid `z`.
//!
//! The inner problem is a linear objective over the simplex with one convex
//! quadratic constraint. Its solutions are sparse, so it is solved by column
//! generation: a log-barrier Newton method on a small active atom set, with
//! atoms priced in by their reduced costs under the recovered multipliers.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelFamily};

/// Allowed excess of `MMD²(w, μ̂)` over `ε²` in a returned adversary.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-8;
const GAP_TOLERANCE: f64 = 1e-9;
const PRICING_TOLERANCE: f64 = 1e-9;
const MAX_PRICING_ROUNDS: usize = 200;
const MAX_NEWTON_STEPS: usize = 100;
const BARRIER_GROWTH: f64 = 20.0;
const ATOMS_PER_ROUND: usize = 4;
/// Atoms below this weight leave the active set between pricing rounds.
const PRUNE_WEIGHT: f64 = 1e-7;
/// θ values solved sequentially with a shared warm start.
const SWEEP_CHUNK: usize = 16;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleConfig {
    pub epsilon: f64,
    pub lower: f64,
    pub upper: f64,
    /// Points in both the θ grid and the adversary grid.
    pub grid_points: usize,
    pub sigma: f64,
    pub data_point: f64,
    pub kernel: KernelFamily,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.3,
            lower: -2.0,
            upper: 2.0,
            grid_points: 401,
            sigma: 1.0,
            data_point: 0.0,
            kernel: KernelFamily::Gaussian,
        }
    }
}

impl CounterexampleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be nonnegative, got {}", self.epsilon)));
        }
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(Error::InvalidParameter(format!("invalid interval [{}, {}]", self.lower, self.upper)));
        }
        if self.grid_points < 3 {
            return Err(Error::InvalidParameter(format!("grid_points must be at least 3, got {}", self.grid_points)));
        }
        if !self.data_point.is_finite() {
            return Err(Error::NonFinite("data point"));
        }
        Kernel::new(self.kernel, self.sigma)?;
        Ok(())
    }

    pub fn kernel(&self) -> Result<Kernel> {
        Kernel::new(self.kernel, self.sigma)
    }

    /// Equispaced grid including both endpoints.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.grid_points;
        let h = (self.upper - self.lower) / (n - 1) as f64;
        (0..n).map(|i| if i == n - 1 { self.upper } else { self.lower + i as f64 * h }).collect()
    }
}

/// The inner minimization for one `θ`.
#[derive(Debug, Clone)]
pub struct AdversarySolution {
    /// Probability vector over the adversary grid.
    pub weights: Vec<f64>,
    /// `Σ w_i k(θ, z_i)`.
    pub value: f64,
    /// `MMD²(w, μ̂)`.
    pub mmd_sq: f64,
    /// Multiplier of the MMD constraint.
    pub multiplier: f64,
    /// Atoms carried into the next solve.
    active: Vec<usize>,
}

impl AdversarySolution {
    pub fn support(&self) -> Vec<usize> {
        self.weights.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(i, _)| i).collect()
    }
}

/// The quantities shared by every inner solve.
#[derive(Debug, Clone)]
pub struct AdversaryProblem {
    kernel: Kernel,
    grid: Vec<f64>,
    gram: DMatrix<f64>,
    /// `k(z_i, x₀)`
    b: DVector<f64>,
    /// `k(x₀, x₀)`
    kappa: f64,
    epsilon_sq: f64,
    /// Grid index of the point nearest `x₀`.
    anchor: usize,
}

impl AdversaryProblem {
    pub fn new(cfg: &CounterexampleConfig) -> Result<Self> {
        cfg.validate()?;
        let kernel = cfg.kernel()?;
        let grid = cfg.grid();
        let n = grid.len();
        let gram = DMatrix::from_fn(n, n, |i, j| kernel.eval_unchecked(&[grid[i]], &[grid[j]]));
        let x0 = cfg.data_point;
        let b = DVector::from_iterator(n, grid.iter().map(|&z| kernel.eval_unchecked(&[z], &[x0])));
        let kappa = kernel.eval_unchecked(&[x0], &[x0]);
        let anchor = grid
            .iter()
            .enumerate()
            .min_by(|(_, p), (_, q)| (*p - x0).abs().total_cmp(&(*q - x0).abs()))
            .map(|(i, _)| i)
            .expect("grid is nonempty");
        Ok(Self { kernel, grid, gram, b, kappa, epsilon_sq: cfg.epsilon * cfg.epsilon, anchor })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    /// `MMD²(w, δ_{x₀}) = wᵀ K w - 2 bᵀ w + k(x₀, x₀)` for a dense weight vector.
    pub fn mmd_sq(&self, w: &[f64]) -> f64 {
        let w = DVector::from_column_slice(w);
        (&self.gram * &w).dot(&w) - 2.0 * self.b.dot(&w) + self.kappa
    }

    fn objective_row(&self, theta: f64) -> DVector<f64> {
        DVector::from_iterator(self.grid.len(), self.grid.iter().map(|&z| self.kernel.eval_unchecked(&[theta], &[z])))
    }

    /// Solves the inner problem at `θ`, optionally warm-started from a previous atom set.
    pub fn solve(&self, theta: f64, warm: Option<&[usize]>) -> Result<AdversarySolution> {
        let a = self.objective_row(theta);
        let n = self.grid.len();
        let i0 = self.anchor;
        let c0 = self.gram[(i0, i0)] - 2.0 * self.b[i0] + self.kappa;
        let point_mass = |multiplier: f64| {
            let mut weights = vec![0.0; n];
            weights[i0] = 1.0;
            AdversarySolution { weights, value: a[i0], mmd_sq: c0, multiplier, active: vec![i0] }
        };
        if self.epsilon_sq == 0.0 {
            if c0 > FEASIBILITY_TOLERANCE {
                return Err(Error::Infeasible(format!(
                    "grid point {} is at MMD² {c0:e} from the data point; radius 0 admits no adversary",
                    self.grid[i0]
                )));
            }
            return Ok(point_mass(0.0));
        }
        if c0 >= self.epsilon_sq {
            return Err(Error::Infeasible(format!(
                "nearest grid point to the data point has MMD² {c0:e} ≥ ε² = {:e}",
                self.epsilon_sq
            )));
        }

        let argmin = a.argmin().0;
        let mut active: Vec<usize> = vec![i0];
        for j in warm.unwrap_or(&[]).iter().copied().chain([0, n - 1, argmin]) {
            if j < n && !active.contains(&j) {
                active.push(j);
            }
        }
        let mut w = vec![1.0];
        let mut pending: Vec<usize> = active.drain(1..).collect();

        for _ in 0..MAX_PRICING_ROUNDS {
            if !pending.is_empty() {
                w = mix_in(&w, pending.len());
                active.append(&mut pending);
            }
            let sub = Restricted::new(self, &a, &active);
            let (ws, eta) = sub.solve(&w)?;
            w = ws;

            let dense = scatter(n, &active, &w);
            let kw = &self.gram * &dense;
            // ν = Σ w_i (a_i + η ∂c_i) at the restricted optimum
            let nu: f64 = active
                .iter()
                .zip(&w)
                .map(|(&i, &wi)| wi * (a[i] + 2.0 * eta * (kw[i] - self.b[i])))
                .sum();
            let mut priced: Vec<(f64, usize)> = (0..n)
                .filter(|j| !active.contains(j))
                .map(|j| (a[j] + 2.0 * eta * (kw[j] - self.b[j]) - nu, j))
                .filter(|(r, _)| *r < -PRICING_TOLERANCE)
                .collect();
            if priced.is_empty() {
                let sum: f64 = dense.iter().sum();
                let weights: Vec<f64> = dense.iter().map(|v| v.max(0.0) / sum).collect();
                let value = a.iter().zip(&weights).map(|(x, y)| x * y).sum::<f64>();
                let mmd_sq = self.mmd_sq(&weights);
                if value > a[i0] || mmd_sq > self.epsilon_sq + FEASIBILITY_TOLERANCE {
                    return Ok(point_mass(eta));
                }
                let keep: Vec<usize> = active.iter().zip(&w).filter(|(_, &x)| x > PRUNE_WEIGHT).map(|(&i, _)| i).collect();
                return Ok(AdversarySolution { weights, value, mmd_sq, multiplier: eta, active: keep });
            }
            priced.sort_by(|p, q| p.0.total_cmp(&q.0));
            pending = priced.into_iter().take(ATOMS_PER_ROUND).map(|(_, j)| j).collect();
            // drop atoms the barrier has all but emptied; the anchor stays first
            let (kept_atoms, kept_w): (Vec<usize>, Vec<f64>) = active
                .iter()
                .zip(&w)
                .enumerate()
                .filter(|(k, (_, &x))| *k == 0 || x > PRUNE_WEIGHT)
                .map(|(_, (&i, &x))| (i, x))
                .unzip();
            let total: f64 = kept_w.iter().sum();
            active = kept_atoms;
            w = kept_w.into_iter().map(|x| x / total).collect();
        }
        Err(Error::Solver(format!(
            "adversary column generation did not settle within {MAX_PRICING_ROUNDS} rounds at θ = {theta}"
        )))
    }

}

/// Moves 1% of the mass onto `extra` new atoms; feasibility is restored by the restricted solve.
fn mix_in(w: &[f64], extra: usize) -> Vec<f64> {
    let alpha = 1e-2;
    let mut next: Vec<f64> = w.iter().map(|x| x * (1.0 - alpha)).collect();
    next.extend(std::iter::repeat_n(alpha / extra as f64, extra));
    next
}

fn scatter(n: usize, idx: &[usize], w: &[f64]) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    for (&i, &x) in idx.iter().zip(w) {
        out[i] = x;
    }
    out
}

/// The inner problem restricted to a set of atoms.
struct Restricted {
    a: DVector<f64>,
    k: DMatrix<f64>,
    b: DVector<f64>,
    kappa: f64,
    eps_sq: f64,
}

impl Restricted {
    fn new(p: &AdversaryProblem, a: &DVector<f64>, idx: &[usize]) -> Self {
        let s = idx.len();
        Self {
            a: DVector::from_iterator(s, idx.iter().map(|&i| a[i])),
            k: DMatrix::from_fn(s, s, |i, j| p.gram[(idx[i], idx[j])]),
            b: DVector::from_iterator(s, idx.iter().map(|&i| p.b[i])),
            kappa: p.kappa,
            eps_sq: p.epsilon_sq,
        }
    }

    fn slack(&self, w: &DVector<f64>) -> f64 {
        self.eps_sq - ((&self.k * w).dot(w) - 2.0 * self.b.dot(w) + self.kappa)
    }

    /// Pulls `w` toward the first atom until it is strictly feasible.
    fn interior(&self, w: &[f64]) -> Result<DVector<f64>> {
        let mut w = DVector::from_column_slice(w);
        for _ in 0..200 {
            if self.slack(&w) > 0.0 && w.iter().all(|&x| x > 0.0) {
                return Ok(w);
            }
            let s = w.len();
            let mut e = DVector::from_element(s, 1e-3 / s as f64);
            e[0] += 1.0 - 1e-3;
            w = (w + e) * 0.5;
        }
        Err(Error::Solver("no strictly feasible adversary on the active atom set".into()))
    }

    /// Barrier method; returns the weights and the constraint multiplier.
    fn solve(&self, start: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut w = self.interior(start)?;
        let s = w.len();
        let constraints = (s + 1) as f64;
        let mut t = 1.0;
        loop {
            self.center(&mut w, t)?;
            if constraints / t <= GAP_TOLERANCE {
                break;
            }
            t *= BARRIER_GROWTH;
        }
        let eta = 1.0 / (t * self.slack(&w));
        Ok((w.iter().copied().collect(), eta))
    }

    /// Damped Newton on `t aᵀw - Σ log w_i - log(ε² - c(w))` subject to `1ᵀw = 1`.
    fn center(&self, w: &mut DVector<f64>, t: f64) -> Result<()> {
        let s = w.len();
        let ones = DVector::from_element(s, 1.0);
        for _ in 0..MAX_NEWTON_STEPS {
            let kw = &self.k * &*w;
            let slack = self.slack(w);
            let gc = (&kw - &self.b) * 2.0;
            let inv_w = w.map(|x| 1.0 / x);
            let g = &self.a * t - &inv_w + &gc / slack;
            let mut h = &self.k * (2.0 / slack) + &gc * gc.transpose() / (slack * slack);
            for i in 0..s {
                h[(i, i)] += inv_w[i] * inv_w[i];
            }
            let (hg, h1) = match h.clone().cholesky() {
                Some(ch) => (ch.solve(&g), ch.solve(&ones)),
                None => {
                    let lu = h.lu();
                    match (lu.solve(&g), lu.solve(&ones)) {
                        (Some(x), Some(y)) => (x, y),
                        _ => return Err(Error::Solver("singular Newton system in the adversary solve".into())),
                    }
                }
            };
            let nu = -hg.sum() / h1.sum();
            let dw = -(hg + h1 * nu);
            let decrement = -g.dot(&dw);
            if !decrement.is_finite() {
                return Err(Error::NonFinite("Newton decrement in the adversary solve"));
            }
            if decrement <= 1e-10 {
                return Ok(());
            }
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..80 {
                let cand = &*w + &dw * step;
                if cand.iter().all(|&x| x > 0.0) {
                    let cs = self.slack(&cand);
                    if cs > 0.0 {
                        // barrier change, computed without forming the large t aᵀw terms
                        let change = t * self.a.dot(&(&dw * step))
                            - cand.iter().zip(w.iter()).map(|(c, x)| ((c - x) / x).ln_1p()).sum::<f64>()
                            - ((cs - slack) / slack).ln_1p();
                        if change <= -0.25 * step * decrement {
                            *w = cand;
                            accepted = true;
                            break;
                        }
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                return Ok(());
            }
            let total = w.sum();
            *w /= total;
        }
        Ok(())
    }
}

/// Both objective curves and their maximizers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub config: CounterexampleConfig,
    pub theta: Vec<f64>,
    pub relaxed: Vec<f64>,
    pub unrelaxed: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub theta_star_relaxed: f64,
    pub theta_star_mmd: f64,
    pub argmax_relaxed: usize,
    pub argmax_mmd: usize,
    /// Adversary at `θ*_mmd` over the adversary grid.
    pub adversary_weights: Vec<f64>,
    pub adversary_mmd_sq: f64,
    /// Largest `MMD²(w(θ), μ̂) - ε²` over the θ grid.
    pub max_constraint_violation: f64,
}

impl CounterexampleReport {
    /// `theta,relaxed,unrelaxed` rows, 17 significant digits.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("theta,relaxed,unrelaxed\n");
        for ((t, r), u) in self.theta.iter().zip(&self.relaxed).zip(&self.unrelaxed) {
            let _ = writeln!(out, "{t:.16e},{r:.16e},{u:.16e}");
        }
        out
    }

    /// `z,weight` rows for the adversary at `θ*_mmd`.
    pub fn adversary_csv(&self) -> String {
        let mut out = String::from("z,weight\n");
        for (z, w) in self.theta.iter().zip(&self.adversary_weights) {
            let _ = writeln!(out, "{z:.16e},{w:.16e}");
        }
        out
    }

    /// Summary without the per-grid-point arrays.
    pub fn summary_json(&self) -> Result<String> {
        let summary = serde_json::json!({
            "config": self.config,
            "theta_star_relaxed": self.theta_star_relaxed,
            "theta_star_mmd": self.theta_star_mmd,
            "relaxed_max": self.relaxed[self.argmax_relaxed],
            "unrelaxed_max": self.unrelaxed[self.argmax_mmd],
            "adversary_mmd_sq": self.adversary_mmd_sq,
            "adversary_support": self.theta.iter().zip(&self.adversary_weights)
                .filter(|(_, &w)| w > 1e-6)
                .map(|(z, w)| serde_json::json!({"z": z, "weight": w}))
                .collect::<Vec<_>>(),
            "max_constraint_violation": self.max_constraint_violation,
        });
        Ok(serde_json::to_string_pretty(&summary)?)
    }
}

/// `k(θ, x₀) - ε √k(θ, θ)` on the θ grid.
pub fn relaxed_curve(cfg: &CounterexampleConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let kernel = cfg.kernel()?;
    Ok(cfg
        .grid()
        .iter()
        .map(|&t| kernel.eval_unchecked(&[t], &[cfg.data_point]) - cfg.epsilon * kernel.eval_unchecked(&[t], &[t]).sqrt())
        .collect())
}

/// First index attaining the maximum.
pub fn grid_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Inner solutions for every θ on the grid, in grid order.
pub fn unrelaxed_sweep(problem: &AdversaryProblem) -> Result<Vec<AdversarySolution>> {
    let grid = problem.grid().to_vec();
    let chunks: Vec<Result<Vec<AdversarySolution>>> = grid
        .par_chunks(SWEEP_CHUNK)
        .map(|chunk| {
            let mut out = Vec::with_capacity(chunk.len());
            let mut warm: Option<Vec<usize>> = None;
            for &theta in chunk {
                let sol = problem.solve(theta, warm.as_deref())?;
                warm = Some(sol.active.clone());
                out.push(sol);
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(grid.len());
    for c in chunks {
        all.extend(c?);
    }
    Ok(all)
}

/// Runs the full comparison.
pub fn run(cfg: &CounterexampleConfig) -> Result<CounterexampleReport> {
    let problem = AdversaryProblem::new(cfg)?;
    let relaxed = relaxed_curve(cfg)?;
    let solutions = unrelaxed_sweep(&problem)?;
    let eps_sq = cfg.epsilon * cfg.epsilon;
    let mut max_violation = f64::NEG_INFINITY;
    for (sol, theta) in solutions.iter().zip(problem.grid()) {
        let sum: f64 = sol.weights.iter().sum();
        if sol.weights.iter().any(|&w| !(w >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Solver(format!("adversary at θ = {theta} is not a probability vector (sum {sum})")));
        }
        let violation = sol.mmd_sq - eps_sq;
        if violation > FEASIBILITY_TOLERANCE {
            return Err(Error::Solver(format!(
                "adversary at θ = {theta} violates the MMD constraint by {violation:e}"
            )));
        }
        max_violation = max_violation.max(violation);
    }
    let unrelaxed: Vec<f64> = solutions.iter().map(|s| s.value).collect();
    let multipliers: Vec<f64> = solutions.iter().map(|s| s.multiplier).collect();
    let argmax_relaxed = grid_argmax(&relaxed);
    let argmax_mmd = grid_argmax(&unrelaxed);
    let theta = problem.grid().to_vec();
    Ok(CounterexampleReport {
        config: cfg.clone(),
        theta_star_relaxed: theta[argmax_relaxed],
        theta_star_mmd: theta[argmax_mmd],
        argmax_relaxed,
        argmax_mmd,
        adversary_weights: solutions[argmax_mmd].weights.clone(),
        adversary_mmd_sq: solutions[argmax_mmd].mmd_sq,
        max_constraint_violation: max_violation,
        theta,
        relaxed,
        unrelaxed,
        multipliers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(epsilon: f64) -> CounterexampleConfig {
        CounterexampleConfig { epsilon, grid_points: 81, ..Default::default() }
    }

    #[test]
    fn grid_is_exact_at_ends_and_center() {
        let g = CounterexampleConfig::default().grid();
        assert_eq!(g.len(), 401);
        assert_eq!(g[0], -2.0);
        assert_eq!(g[200], 0.0);
        assert_eq!(g[400], 2.0);
    }

    #[test]
    fn relaxed_curve_is_shifted_section() {
        let cfg = small(0.3);
        let k = cfg.kernel().unwrap();
        for (t, r) in cfg.grid().iter().zip(relaxed_curve(&cfg).unwrap()) {
            assert_eq!(r, k.eval_unchecked(&[*t], &[0.0]) - 0.3);
        }
    }

    #[test]
    fn zero_radius_returns_data_point() {
        let p = AdversaryProblem::new(&small(0.0)).unwrap();
        let sol = p.solve(0.7, None).unwrap();
        assert_eq!(sol.weights[p.anchor()], 1.0);
        assert_eq!(sol.mmd_sq, 0.0);
    }

    #[test]
    fn off_grid_data_point_with_tiny_radius_is_infeasible() {
        let cfg = CounterexampleConfig { data_point: 0.025, epsilon: 1e-3, grid_points: 81, ..Default::default() };
        let p = AdversaryProblem::new(&cfg).unwrap();
        assert!(matches!(p.solve(0.0, None), Err(Error::Infeasible(_))));
    }

    #[test]
    fn inner_solution_is_feasible_and_improves_on_data_point() {
        let p = AdversaryProblem::new(&small(0.3)).unwrap();
        for theta in [-1.5, -0.4, 0.0, 0.3, 1.9] {
            let sol = p.solve(theta, None).unwrap();
            let sum: f64 = sol.weights.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
            assert!(sol.weights.iter().all(|&w| w >= 0.0));
            assert!(sol.mmd_sq <= 0.09 + FEASIBILITY_TOLERANCE);
            let at_data = p.kernel.eval_unchecked(&[theta], &[0.0]);
            assert!(sol.value <= at_data);
        }
    }

    #[test]
    fn inner_solution_beats_random_feasible_points() {
        use rand::{Rng, SeedableRng};
        let p = AdversaryProblem::new(&small(0.3)).unwrap();
        let theta = 0.4;
        let sol = p.solve(theta, None).unwrap();
        let a = p.objective_row(theta);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let n = p.grid().len();
        let mut checked = 0;
        while checked < 200 {
            // sparse random mixtures of the data point and a few atoms
            let mut w = vec![0.0; n];
            let keep: f64 = rng.random_range(0.0..1.0);
            w[p.anchor()] = keep;
            for _ in 0..3 {
                w[rng.random_range(0..n)] += (1.0 - keep) / 3.0;
            }
            if p.mmd_sq(&w) <= 0.09 {
                let v: f64 = a.iter().zip(&w).map(|(x, y)| x * y).sum();
                assert!(sol.value <= v + 1e-9, "{} > {v}", sol.value);
                checked += 1;
            }
        }
    }

    #[test]
    fn warm_start_agrees_with_cold_start() {
        let p = AdversaryProblem::new(&small(0.5)).unwrap();
        let cold = p.solve(0.35, None).unwrap();
        let prev = p.solve(0.3, None).unwrap();
        let warm = p.solve(0.35, Some(&prev.active)).unwrap();
        assert!((cold.value - warm.value).abs() <= 1e-9);
    }

    #[test]
    fn config_validation() {
        assert!(CounterexampleConfig { epsilon: -0.1, ..Default::default() }.validate().is_err());
        assert!(CounterexampleConfig { grid_points: 2, ..Default::default() }.validate().is_err());
        assert!(CounterexampleConfig { lower: 1.0, upper: 1.0, ..Default::default() }.validate().is_err());
        assert!(CounterexampleConfig { sigma: 0.0, ..Default::default() }.validate().is_err());
    }
}
