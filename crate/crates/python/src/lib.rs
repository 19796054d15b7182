//! Python bindings for `rrsgd-core`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rrsgd_core::analysis::{self, sweep::write_csv, BoundCheck};
use rrsgd_core::engine::{self, RunResult, Sampling};
use rrsgd_core::problems::{Family, FiniteSumProblem, ProblemSpec};
use rrsgd_core::recurrences::{self, TheoremSetting};
use rrsgd_core::schedules::ProblemConstants;
use rrsgd_core::{DVector, Error, ExperimentConfig, StepSchedule};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Diverged { .. } | Error::TrialFailed { .. } | Error::SolveFailed { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn vector(problem: &FiniteSumProblem, x: Vec<f64>, what: &str) -> PyResult<DVector<f64>> {
    if x.len() != problem.d() {
        return Err(PyValueError::new_err(format!(
            "{what} has length {}, expected {}",
            x.len(),
            problem.d()
        )));
    }
    Ok(DVector::from_vec(x))
}

/// Finite-sum problem regenerated from a seed.
#[pyclass(name = "Problem", module = "rrsgd", frozen)]
struct PyProblem {
    inner: FiniteSumProblem,
    spec: ProblemSpec,
}

impl PyProblem {
    fn from_spec(spec: ProblemSpec) -> PyResult<Self> {
        Ok(Self { inner: spec.build().map_err(to_py)?, spec })
    }
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    #[pyo3(signature = (n, d, mu, L, seed, radius = 2.0))]
    #[allow(non_snake_case)]
    fn quadratic(n: usize, d: usize, mu: f64, L: f64, seed: u64, radius: f64) -> PyResult<Self> {
        let spec = ProblemSpec { kind: Family::Quadratic, n, d, mu, l: L, seed, radius };
        Self::from_spec(spec)
    }

    #[staticmethod]
    #[pyo3(signature = (n, d, mu, L, seed, radius = 2.0))]
    #[allow(non_snake_case)]
    fn logcosh(n: usize, d: usize, mu: f64, L: f64, seed: u64, radius: f64) -> PyResult<Self> {
        let spec = ProblemSpec { kind: Family::LogCosh, n, d, mu, l: L, seed, radius };
        Self::from_spec(spec)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: ProblemSpec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Self::from_spec(spec)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.spec).expect("spec serializes")
    }

    #[getter]
    fn family(&self) -> &'static str {
        self.inner.family().as_str()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu()
    }

    #[getter(L)]
    fn l(&self) -> f64 {
        self.inner.l()
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa()
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.inner.radius()
    }

    #[getter(G)]
    fn g(&self) -> f64 {
        self.inner.g()
    }

    #[getter]
    fn x_star(&self) -> Vec<f64> {
        self.inner.x_star().as_slice().to_vec()
    }

    #[getter]
    fn f_star(&self) -> f64 {
        self.inner.f_star()
    }

    fn default_start(&self, seed: u64) -> Vec<f64> {
        self.inner.default_start(seed).as_slice().to_vec()
    }

    fn cost(&self, x: Vec<f64>) -> PyResult<f64> {
        Ok(self.inner.cost(&vector(&self.inner, x, "x")?))
    }

    fn full_gradient(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.full_gradient(&vector(&self.inner, x, "x")?).as_slice().to_vec())
    }

    fn component_gradient(&self, i: usize, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let g = self.inner.component_gradient(i, &vector(&self.inner, x, "x")?).map_err(to_py)?;
        Ok(g.as_slice().to_vec())
    }

    fn effective_lipschitz_g(&self, radius: f64) -> f64 {
        self.inner.effective_lipschitz_g(radius)
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(kind={}, n={}, d={}, mu={}, L={}, seed={})",
            self.spec.kind, self.spec.n, self.spec.d, self.spec.mu, self.spec.l, self.spec.seed
        )
    }
}

/// Step-size rule.
#[pyclass(name = "Schedule", module = "rrsgd", frozen)]
struct PySchedule {
    inner: StepSchedule,
}

fn schedule(r: rrsgd_core::Result<StepSchedule>) -> PyResult<PySchedule> {
    r.map(|inner| PySchedule { inner }).map_err(to_py)
}

#[pymethods]
impl PySchedule {
    #[staticmethod]
    fn constant(eta: f64) -> PyResult<Self> {
        schedule(StepSchedule::constant(eta))
    }

    #[staticmethod]
    fn epoch_log_constant(alpha: f64) -> PyResult<Self> {
        schedule(StepSchedule::epoch_log_constant(alpha))
    }

    #[staticmethod]
    fn per_iteration(alpha: f64) -> PyResult<Self> {
        schedule(StepSchedule::per_iteration(alpha))
    }

    #[staticmethod]
    fn epoch_only_decay(alpha: f64) -> PyResult<Self> {
        schedule(StepSchedule::epoch_only_decay(alpha))
    }

    #[staticmethod]
    fn two_phase(alpha: f64) -> PyResult<Self> {
        schedule(StepSchedule::two_phase(alpha))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: StepSchedule = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("schedule serializes")
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    #[getter]
    fn parameter(&self) -> f64 {
        self.inner.parameter()
    }

    /// Step at one-based epoch `k`, iteration `i`.
    #[pyo3(signature = (problem, k, i, epochs = None))]
    fn step_size(&self, problem: &PyProblem, k: usize, i: usize, epochs: Option<usize>) -> PyResult<f64> {
        let mut consts = ProblemConstants::of(&problem.inner);
        if let Some(total) = epochs {
            consts = consts.with_epochs(total);
        }
        self.inner.step_size(&consts, k, i).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Schedule({})", self.inner)
    }
}

fn run_dict<'py>(py: Python<'py>, r: &RunResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("y", &r.y)?;
    d.set_item("dist_sq", &r.dist_sq)?;
    d.set_item("grad_evals", r.grad_evals)?;
    d.set_item("exited_ball", r.exited_ball)?;
    d.set_item("max_dist", r.max_dist)?;
    d.set_item("seed", r.seed)?;
    d.set_item("iterates", &r.iterates)?;
    Ok(d)
}

fn check_dict<'py>(py: Python<'py>, c: &BoundCheck) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("bound", c.bound.as_str())?;
    d.set_item("eta", c.eta)?;
    d.set_item("lhs_mean", c.lhs.mean)?;
    d.set_item("lhs_std_err", c.lhs.std_err)?;
    d.set_item("rhs_mean", c.rhs.mean)?;
    d.set_item("rhs_std_err", c.rhs.std_err)?;
    d.set_item("slack", c.slack)?;
    d.set_item("holds_within_ci", c.holds_within_ci())?;
    d.set_item("verdict", serde_json::to_value(c.verdict).expect("verdict").as_str())?;
    d.set_item("G", c.g)?;
    d.set_item("radius", c.radius)?;
    d.set_item("locality_breach", c.locality_breach)?;
    Ok(d)
}

/// One SGD run; returns a dict with `y`, `dist_sq`, `grad_evals`, `exited_ball`, `max_dist`, `seed`.
#[pyfunction]
#[pyo3(signature = (problem, schedule, x0, epochs, seed, with_replacement = false, record_iterates = false))]
fn run<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    schedule: &PySchedule,
    x0: Vec<f64>,
    epochs: usize,
    seed: u64,
    with_replacement: bool,
    record_iterates: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let x0 = vector(&problem.inner, x0, "x0")?;
    let sampling = if with_replacement {
        Sampling::WithReplacement
    } else {
        Sampling::WithoutReplacement
    };
    let r = py
        .detach(|| engine::run_sgd(&problem.inner, &schedule.inner, &x0, epochs, seed, sampling, record_iterates))
        .map_err(to_py)?;
    run_dict(py, &r)
}

/// Monte Carlo estimate of `E‖y_K − x*‖²`; returns `(mean, half_width)`.
#[pyfunction]
#[pyo3(signature = (problem, schedule, x0, epochs, trials, seed))]
fn mc_distance_sq(
    py: Python<'_>,
    problem: &PyProblem,
    schedule: &PySchedule,
    x0: Vec<f64>,
    epochs: usize,
    trials: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let x0 = vector(&problem.inner, x0, "x0")?;
    let e = py
        .detach(|| analysis::mc_distance_sq(&problem.inner, &schedule.inner, &x0, epochs, trials, seed))
        .map_err(to_py)?;
    Ok((e.mean, e.half_width))
}

#[pyfunction]
fn check_per_iteration_bound<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    state: Vec<f64>,
    k: usize,
    i: usize,
    eta: f64,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let state = vector(&problem.inner, state, "state")?;
    let c = py
        .detach(|| analysis::check_per_iteration_bound(&problem.inner, &state, k, i, eta, trials, seed))
        .map_err(to_py)?;
    check_dict(py, &c)
}

#[pyfunction]
fn check_per_epoch_bound<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    y_k: Vec<f64>,
    eta: f64,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let y = vector(&problem.inner, y_k, "y_k")?;
    let c = py
        .detach(|| analysis::check_per_epoch_bound(&problem.inner, &y, eta, trials, seed))
        .map_err(to_py)?;
    check_dict(py, &c)
}

#[pyfunction]
fn check_quadratic_epoch_bound<'py>(
    py: Python<'py>,
    problem: &PyProblem,
    y_k: Vec<f64>,
    eta: f64,
    trials: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let y = vector(&problem.inner, y_k, "y_k")?;
    let c = py
        .detach(|| analysis::check_quadratic_epoch_bound(&problem.inner, &y, eta, trials, seed))
        .map_err(to_py)?;
    check_dict(py, &c)
}

/// Log-log least squares on `(scale, value)` pairs.
#[pyfunction]
fn fit_rate<'py>(py: Python<'py>, points: Vec<(f64, f64)>) -> PyResult<Bound<'py, PyDict>> {
    let f = analysis::fit_rate(&points).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("slope", f.slope)?;
    d.set_item("intercept", f.intercept)?;
    d.set_item("r_squared", f.r_squared)?;
    d.set_item("points", f.points)?;
    d.set_item("dropped_head", f.dropped_head)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (mu, L, G, n, alpha, epochs, dist0))]
#[allow(non_snake_case)]
fn theorem1_bound(mu: f64, L: f64, G: f64, n: usize, alpha: f64, epochs: usize, dist0: f64) -> PyResult<f64> {
    recurrences::theorem1_bound(&TheoremSetting::new(mu, L, G, n, alpha), epochs, dist0).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (mu, L, G, n, alpha, epochs, dist0))]
#[allow(non_snake_case)]
fn theorem2_bound(mu: f64, L: f64, G: f64, n: usize, alpha: f64, epochs: usize, dist0: f64) -> PyResult<f64> {
    recurrences::theorem2_bound(&TheoremSetting::new(mu, L, G, n, alpha), epochs, dist0).map_err(to_py)
}

/// Runs an experiment config (JSON text) and returns the sweep CSV.
#[pyfunction]
fn sweep(py: Python<'_>, config_json: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_json(config_json).map_err(to_py)?;
    let rows = py.detach(|| analysis::sweep(&cfg)).map_err(to_py)?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows, cfg.master_seed).map_err(to_py)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

/// Registers every class and function on `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_class::<PySchedule>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(mc_distance_sq, m)?)?;
    m.add_function(wrap_pyfunction!(check_per_iteration_bound, m)?)?;
    m.add_function(wrap_pyfunction!(check_per_epoch_bound, m)?)?;
    m.add_function(wrap_pyfunction!(check_quadratic_epoch_bound, m)?)?;
    m.add_function(wrap_pyfunction!(fit_rate, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1_bound, m)?)?;
    m.add_function(wrap_pyfunction!(theorem2_bound, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

#[pymodule]
fn rrsgd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
