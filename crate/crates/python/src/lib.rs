//! Python bindings for `sos_density`.
//!
//! Points and matrices cross the boundary as lists of rows of floats.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nalgebra::DMatrix;
use sos_density::counterexample::{self, CounterexampleConfig};
use sos_density::data::{self, GridSpec};
use sos_density::psdproj;
use sos_density::{
    fit_with, select_support, EmpiricalDistribution, Error, FitConfig, FitReport, KernelFamily,
    MomentCache, MomentData, MomentOptions, PointSet, ReferenceMeasure, SosDensityModel, StepSize,
    SupportSet,
};

create_exception!(
    sos_density,
    NumericalError,
    PyException,
    "A numerical routine failed."
);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        e if e.is_numerical() => NumericalError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn parse_family(name: &str) -> PyResult<KernelFamily> {
    name.parse().map_err(to_py)
}

fn point_set(rows: Vec<Vec<f64>>) -> PyResult<PointSet> {
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    PointSet::from_rows(&refs).map_err(to_py)
}

fn rows_of(points: &PointSet) -> Vec<Vec<f64>> {
    points.rows().map(<[f64]>::to_vec).collect()
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err(
            "expected a square matrix given as a list of rows",
        ));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Gaussian `exp(-|x-y|²/σ²)` or Laplace `exp(-|x-y|/σ)` kernel.
#[pyclass(name = "Kernel", frozen)]
struct PyKernel {
    inner: sos_density::Kernel,
}

#[pymethods]
impl PyKernel {
    #[new]
    #[pyo3(signature = (family = "gaussian", bandwidth = 1.0))]
    fn new(family: &str, bandwidth: f64) -> PyResult<Self> {
        let inner = sos_density::Kernel::new(parse_family(family)?, bandwidth).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family().name()
    }

    #[getter]
    fn bandwidth(&self) -> f64 {
        self.inner.bandwidth()
    }

    fn __call__(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.inner.eval(&x, &y).map_err(to_py)
    }

    fn gram(&self, xs: Vec<Vec<f64>>, ys: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let g = self
            .inner
            .gram(&point_set(xs)?, &point_set(ys)?)
            .map_err(to_py)?;
        Ok(matrix_rows(&g))
    }

    fn __repr__(&self) -> String {
        format!(
            "Kernel({:?}, bandwidth={})",
            self.inner.family().name(),
            self.inner.bandwidth()
        )
    }
}

/// Fitted density `p(x) = k(x)ᵀ B k(x)`.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: SosDensityModel,
}

#[pymethods]
impl PyModel {
    fn density(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.density(&x).map_err(to_py)
    }

    fn density_batch(&self, xs: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        self.inner.density_batch(&point_set(xs)?).map_err(to_py)
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.inner.mass()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn b(&self) -> Vec<Vec<f64>> {
        matrix_rows(self.inner.b())
    }

    #[getter]
    fn support_points(&self) -> Vec<Vec<f64>> {
        rows_of(self.inner.support().points())
    }

    #[getter]
    fn kernel(&self) -> PyKernel {
        PyKernel {
            inner: *self.inner.kernel(),
        }
    }

    /// Densities on a rectangular grid plus its Riemann mass estimate.
    fn eval_grid<'py>(
        &self,
        py: Python<'py>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        resolution: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let grid = GridSpec::new(lower, upper, resolution).map_err(to_py)?;
        let eval = py
            .detach(|| data::evaluate_grid(&self.inner, &grid))
            .map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item("points", rows_of(&grid.points()))?;
        out.set_item("values", eval.values)?;
        out.set_item("riemann_mass", eval.riemann_mass)?;
        out.set_item("discretization_error", eval.discretization_error)?;
        Ok(out)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: SosDensityModel::from_json(text, None).map_err(to_py)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: SosDensityModel::load(path, None).map_err(to_py)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(m={}, d={}, mass={})",
            self.inner.support().len(),
            self.inner.dim(),
            self.inner.mass()
        )
    }
}

/// Optimisation diagnostics returned by `fit`.
#[pyclass(name = "FitReport", frozen)]
struct PyFitReport {
    inner: FitReport,
}

#[pymethods]
impl PyFitReport {
    #[getter]
    fn objective_trace(&self) -> Vec<f64> {
        self.inner.objective_trace.clone()
    }

    #[getter]
    fn projected_mmd_trace(&self) -> Vec<f64> {
        self.inner.projected_mmd_trace.clone()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    #[getter]
    fn final_mass(&self) -> f64 {
        self.inner.final_mass
    }

    #[getter]
    fn final_projected_mmd(&self) -> f64 {
        self.inner.final_projected_mmd()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    fn trace_csv(&self) -> String {
        self.inner.trace_csv()
    }
}

/// Fits a model to `data` with `m` support points drawn from it.
///
/// `box` is a list of `(lo, hi)` pairs selecting Lebesgue measure on that box;
/// Lebesgue measure on the whole space is used otherwise.
#[pyfunction]
#[pyo3(signature = (
    data, m = None, *, kernel = "gaussian", sigma = 1.0, lam = 1e-3, r#box = None,
    iters = 5000, tol = 1e-8, seed = 0, accelerate = true, step = None, cache_dir = None,
))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    data: Vec<Vec<f64>>,
    m: Option<usize>,
    kernel: &str,
    sigma: f64,
    lam: f64,
    r#box: Option<Vec<(f64, f64)>>,
    iters: usize,
    tol: f64,
    seed: u64,
    accelerate: bool,
    step: Option<f64>,
    cache_dir: Option<String>,
) -> PyResult<(PyModel, PyFitReport)> {
    let points = point_set(data)?;
    let kernel = sos_density::Kernel::new(parse_family(kernel)?, sigma).map_err(to_py)?;
    let measure = match r#box {
        None => ReferenceMeasure::LebesgueRd,
        Some(b) => {
            let (lower, upper) = b.into_iter().unzip();
            ReferenceMeasure::lebesgue_box(lower, upper).map_err(to_py)?
        }
    };
    let cfg = FitConfig {
        lambda_trace: lam,
        max_iters: iters,
        tol,
        accelerate,
        rng_seed: seed,
        step_size: step.map_or(StepSize::Auto, StepSize::Fixed),
        ..FitConfig::default()
    };
    let m = m.unwrap_or(points.len().min(50));
    let (model, report) = py
        .detach(|| {
            let support_points = select_support(&points, m, seed)?;
            let opts = MomentOptions::default();
            let moments = match &cache_dir {
                Some(dir) => MomentCache::new(dir).load_or_compute(
                    &kernel,
                    &support_points,
                    &measure,
                    &opts,
                )?,
                None => MomentData::compute(&kernel, &support_points, &measure, &opts)?,
            };
            let support = SupportSet::new(kernel, support_points)?;
            let emp = EmpiricalDistribution::uniform(points)?;
            fit_with(&emp, Arc::new(support), Arc::new(moments), &measure, &cfg)
        })
        .map_err(to_py)?;
    Ok((PyModel { inner: model }, PyFitReport { inner: report }))
}

/// Two interleaving half-moons with Gaussian noise.
#[pyfunction]
#[pyo3(signature = (n = 100, noise = 0.1, seed = 0))]
fn gen_two_moons(n: usize, noise: f64, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows_of(
        &data::gen_two_moons(n, noise, seed).map_err(to_py)?,
    ))
}

/// Euclidean projection onto `{C ⪰ 0, tr C = 1}`.
#[pyfunction]
fn project_trace_one_psd(c: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(matrix_rows(
        &psdproj::project_trace_one_psd(&matrix(c)?).map_err(to_py)?,
    ))
}

/// Euclidean projection onto the probability simplex.
#[pyfunction]
fn simplex_project(v: Vec<f64>) -> PyResult<Vec<f64>> {
    psdproj::simplex_project(&v).map_err(to_py)
}

/// Relaxed and exact worst-case objectives over an MMD ball around a point mass.
#[pyfunction]
#[pyo3(signature = (epsilon = 0.3, *, sigma = 1.0, kernel = "gaussian", lower = -2.0, upper = 2.0, grid_points = 401, data_point = 0.0))]
#[allow(clippy::too_many_arguments)]
fn run_counterexample<'py>(
    py: Python<'py>,
    epsilon: f64,
    sigma: f64,
    kernel: &str,
    lower: f64,
    upper: f64,
    grid_points: usize,
    data_point: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = CounterexampleConfig {
        epsilon,
        lower,
        upper,
        grid_points,
        sigma,
        data_point,
        kernel: parse_family(kernel)?,
    };
    let report = py.detach(|| counterexample::run(&cfg)).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("theta", report.theta)?;
    out.set_item("relaxed", report.relaxed)?;
    out.set_item("unrelaxed", report.unrelaxed)?;
    out.set_item("theta_star_relaxed", report.theta_star_relaxed)?;
    out.set_item("theta_star_mmd", report.theta_star_mmd)?;
    out.set_item("adversary_weights", report.adversary_weights)?;
    out.set_item("max_constraint_violation", report.max_constraint_violation)?;
    Ok(out)
}

#[pymodule]
#[pyo3(name = "sos_density")]
fn sos_density_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernel>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyFitReport>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(gen_two_moons, m)?)?;
    m.add_function(wrap_pyfunction!(project_trace_one_psd, m)?)?;
    m.add_function(wrap_pyfunction!(simplex_project, m)?)?;
    m.add_function(wrap_pyfunction!(run_counterexample, m)?)?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    Ok(())
}
