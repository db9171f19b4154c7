//! Synthetic data, point CSV files and density grids.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::PointSet;
use crate::sosmodel::SosDensityModel;

/// Two interleaving half-circles of radius 1: the upper one centered at the
/// origin, the lower one shifted by `(1, -0.5)` from its reflection.
/// Angles are equispaced; `noise` is the standard deviation of isotropic
/// Gaussian perturbations.
pub fn gen_two_moons(n: usize, noise: f64, seed: u64) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::InvalidParameter("two moons needs at least one point".into()));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise must be nonnegative, got {noise}")));
    }
    let n_upper = n / 2 + n % 2;
    let n_lower = n - n_upper;
    let angle = |i: usize, count: usize| {
        if count <= 1 {
            0.0
        } else {
            std::f64::consts::PI * i as f64 / (count - 1) as f64
        }
    };
    let mut data = Vec::with_capacity(2 * n);
    for i in 0..n_upper {
        let t = angle(i, n_upper);
        data.extend([t.cos(), t.sin()]);
    }
    for i in 0..n_lower {
        let t = angle(i, n_lower);
        data.extend([1.0 - t.cos(), 0.5 - t.sin()]);
    }
    if noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        for v in &mut data {
            *v += normal.sample(&mut rng);
        }
    }
    PointSet::new(2, data)
}

/// Parses headerless comma-separated rows of numbers; blank lines and lines
/// starting with `#` are skipped, as is a non-numeric first line.
pub fn parse_points_csv(text: &str) -> Result<PointSet> {
    let mut dim = None;
    let mut data = Vec::new();
    let mut seen_row = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let row = match parsed {
            Ok(r) => r,
            Err(_) if !seen_row => {
                seen_row = true;
                continue;
            }
            Err(e) => return Err(Error::Csv { line: lineno + 1, message: e.to_string() }),
        };
        seen_row = true;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Csv { line: lineno + 1, message: "non-finite value".into() });
        }
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Csv { line: lineno + 1, message: format!("expected {d} columns, found {}", row.len()) })
            }
            _ => {}
        }
        data.extend(row);
    }
    let dim = dim.ok_or(Error::Csv { line: 0, message: "no data rows".into() })?;
    PointSet::new(dim, data)
}

pub fn read_points_csv(path: impl AsRef<Path>) -> Result<PointSet> {
    parse_points_csv(&fs::read_to_string(path)?)
}

/// One row per point, 17 significant digits, no header.
pub fn points_csv(points: &PointSet) -> String {
    let mut out = String::new();
    for row in points.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_points_csv(path: impl AsRef<Path>, points: &PointSet) -> Result<()> {
    fs::write(path, points_csv(points))?;
    Ok(())
}

/// A rectangular evaluation grid with `resolution` equispaced nodes per axis,
/// endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: usize,
}

impl GridSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: usize) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), found: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l < u)) {
            return Err(Error::InvalidParameter("grid bounds need lower < upper on every axis".into()));
        }
        if resolution < 2 {
            return Err(Error::InvalidParameter(format!("grid resolution must be at least 2, got {resolution}")));
        }
        Ok(Self { lower, upper, resolution })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| (u - l) / (self.resolution - 1) as f64).collect()
    }

    pub fn axis(&self, k: usize) -> Vec<f64> {
        let n = self.resolution;
        let h = (self.upper[k] - self.lower[k]) / (n - 1) as f64;
        (0..n).map(|i| if i == n - 1 { self.upper[k] } else { self.lower[k] + i as f64 * h }).collect()
    }

    /// Multi-index of flat node `i`; the first axis varies slowest.
    fn index(&self, mut i: usize) -> Vec<usize> {
        let d = self.dim();
        let mut idx = vec![0; d];
        for k in (0..d).rev() {
            idx[k] = i % self.resolution;
            i /= self.resolution;
        }
        idx
    }

    pub fn points(&self) -> PointSet {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|k| self.axis(k)).collect();
        let mut data = Vec::with_capacity(self.len() * self.dim());
        for i in 0..self.len() {
            for (k, j) in self.index(i).into_iter().enumerate() {
                data.push(axes[k][j]);
            }
        }
        PointSet::new(self.dim(), data).expect("grid coordinates are finite")
    }
}

/// Densities on a grid plus mass estimates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridEvaluation {
    pub grid: GridSpec,
    #[serde(skip)]
    pub points: Option<PointSet>,
    pub values: Vec<f64>,
    /// `Σ p(x) Π h_k` over all nodes.
    pub riemann_mass: f64,
    /// Trapezoidal estimate of the same integral.
    pub trapezoid_mass: f64,
    /// Difference between the two mass estimates.
    pub discretization_error: f64,
    pub min_value: f64,
    pub model_mass: f64,
}

impl GridEvaluation {
    /// `x₁,…,x_d,p` rows in grid order, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let points = self.points.clone().unwrap_or_else(|| self.grid.points());
        let d = self.grid.dim();
        let mut out = String::new();
        out.push_str(&(1..=d).map(|k| format!("x{k}")).chain(["p".to_string()]).collect::<Vec<_>>().join(","));
        out.push('\n');
        for (row, p) in points.rows().zip(&self.values) {
            for x in row {
                let _ = write!(out, "{x:.16e},");
            }
            let _ = writeln!(out, "{p:.16e}");
        }
        out
    }
}

/// Evaluates the model on every grid node, in parallel, in grid order.
pub fn evaluate_grid(model: &SosDensityModel, grid: &GridSpec) -> Result<GridEvaluation> {
    if grid.dim() != model.support().dim() {
        return Err(Error::DimensionMismatch { expected: model.support().dim(), found: grid.dim() });
    }
    let points = grid.points();
    let values: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| model.density(points.row(i)))
        .collect::<Result<_>>()?;
    let cell: f64 = grid.spacing().iter().product();
    let riemann_mass = values.iter().sum::<f64>() * cell;
    let trapezoid_mass = (0..values.len())
        .map(|i| {
            let w: f64 = grid
                .index(i)
                .iter()
                .map(|&j| if j == 0 || j == grid.resolution - 1 { 0.5 } else { 1.0 })
                .product();
            w * values[i]
        })
        .sum::<f64>()
        * cell;
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GridEvaluation {
        grid: grid.clone(),
        points: Some(points),
        riemann_mass,
        trapezoid_mass,
        discretization_error: (riemann_mass - trapezoid_mass).abs(),
        min_value,
        model_mass: model.mass(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_moons_lie_on_half_circles() {
        let pts = gen_two_moons(4, 0.0, 1).unwrap();
        for p in pts.rows() {
            let upper = (p[0].hypot(p[1]) - 1.0).abs() < 1e-15 && p[1] >= 0.0;
            let lower = ((p[0] - 1.0).hypot(p[1] - 0.5) - 1.0).abs() < 1e-15 && p[1] <= 0.5;
            assert!(upper || lower, "{p:?}");
        }
    }

    #[test]
    fn moons_are_deterministic_and_bounded() {
        let a = gen_two_moons(100, 0.1, 7).unwrap();
        assert_eq!(a, gen_two_moons(100, 0.1, 7).unwrap());
        assert_ne!(a, gen_two_moons(100, 0.1, 8).unwrap());
        for p in a.rows() {
            assert!((-1.0 - 0.6..=2.0 + 0.6).contains(&p[0]));
            assert!((-0.5 - 0.6..=1.0 + 0.6).contains(&p[1]));
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let pts = gen_two_moons(25, 0.3, 3).unwrap();
        assert_eq!(parse_points_csv(&points_csv(&pts)).unwrap(), pts);
    }

    #[test]
    fn csv_header_and_errors() {
        let pts = parse_points_csv("x,y\n1,2\n\n3,4\n").unwrap();
        assert_eq!(pts.len(), 2);
        assert!(matches!(parse_points_csv("1,2\n3\n"), Err(Error::Csv { line: 2, .. })));
        assert!(matches!(parse_points_csv("1,2\nfoo,4\n"), Err(Error::Csv { line: 2, .. })));
        assert!(parse_points_csv("").is_err());
    }

    #[test]
    fn grid_layout() {
        let g = GridSpec::new(vec![0.0, -1.0], vec![1.0, 1.0], 2).unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 4);
        assert_eq!(pts.row(1), &[0.0, 1.0]);
        assert_eq!(pts.row(2), &[1.0, -1.0]);
        assert!(GridSpec::new(vec![0.0], vec![1.0], 1).is_err());
        assert!(GridSpec::new(vec![1.0], vec![0.0], 5).is_err());
    }
}
