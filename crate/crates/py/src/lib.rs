//! Python bindings for `hbl_core`.

use hbl_core::dyadic::{self, AlphaTree, DyadicTree, LeafFunction};
use hbl_core::extremal::{self, ExtremalSequenceSpec, PowerLawFunction, SequenceKind};
use hbl_core::monotone;
use hbl_core::optimizer::{self, AscentConfig};
use hbl_core::verify::{self, Selection};
use hbl_core::{Error, MomentPair};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Csv(_) => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn params(p: f64) -> PyResult<hbl_core::PParams> {
    hbl_core::PParams::new(p).map_err(to_py)
}

fn moments(p: f64, f: f64, big_f: f64) -> PyResult<(hbl_core::PParams, MomentPair)> {
    let params = params(p)?;
    let m = MomentPair::new(params, f, big_f).map_err(to_py)?;
    Ok((params, m))
}

/// Exponent `p > 1` with its conjugate.
#[pyclass(name = "PParams", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyPParams(hbl_core::PParams);

#[pymethods]
impl PyPParams {
    #[new]
    fn new(p: f64) -> PyResult<Self> {
        params(p).map(PyPParams)
    }

    #[getter]
    fn p(&self) -> f64 {
        self.0.p()
    }

    #[getter]
    fn conjugate(&self) -> f64 {
        self.0.conjugate()
    }

    fn __repr__(&self) -> String {
        format!("PParams(p={})", self.0.p())
    }
}

/// Non-increasing step function on `[0, 1]`.
#[pyclass(name = "StepFunction", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyStepFunction(monotone::StepFunction);

#[pymethods]
impl PyStepFunction {
    #[new]
    fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        monotone::StepFunction::new(breakpoints, values).map(PyStepFunction).map_err(to_py)
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        monotone::StepFunction::read_csv(text.as_bytes()).map(PyStepFunction).map_err(to_py)
    }

    #[getter]
    fn breakpoints(&self) -> Vec<f64> {
        self.0.breakpoints().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __call__(&self, t: f64) -> PyResult<f64> {
        self.0.eval(t).map_err(to_py)
    }

    fn integral(&self) -> f64 {
        monotone::integral(&self.0)
    }

    fn p_moment(&self, p: f64) -> PyResult<f64> {
        Ok(monotone::p_moment(&self.0, params(p)?))
    }

    fn hardy(&self, t: f64) -> PyResult<f64> {
        monotone::hardy_at(&self.0, t).map_err(to_py)
    }

    fn phi(&self, p: f64) -> PyResult<f64> {
        Ok(monotone::phi_functional(&self.0, params(p)?))
    }

    fn defect(&self, c: f64, p: f64) -> PyResult<f64> {
        monotone::defect(&self.0, c, params(p)?).map(|d| d.value()).map_err(to_py)
    }

    fn lp_distance(&self, other: &PyStepFunction, p: f64) -> PyResult<f64> {
        Ok(monotone::lp_distance(&self.0, &other.0, params(p)?))
    }

    fn to_csv(&self) -> String {
        self.0.to_csv_string()
    }

    fn __repr__(&self) -> String {
        format!("StepFunction(cells={})", self.0.len())
    }
}

/// The extremal power law `k t^e` with eigenvalue `c`.
#[pyclass(name = "PowerLaw", frozen)]
struct PyPowerLaw {
    inner: PowerLawFunction,
    params: hbl_core::PParams,
    moments: MomentPair,
}

#[pymethods]
impl PyPowerLaw {
    #[getter]
    fn k(&self) -> f64 {
        self.inner.k
    }

    #[getter]
    fn e(&self) -> f64 {
        self.inner.e
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.c
    }

    fn __call__(&self, t: f64) -> f64 {
        self.inner.eval(t)
    }

    fn p_moment(&self) -> f64 {
        self.inner.p_moment(self.params)
    }

    fn tail_p_mass(&self, delta: f64) -> f64 {
        self.inner.tail_p_mass(self.params, delta)
    }

    fn discretize(&self, cells: usize) -> PyResult<PyStepFunction> {
        extremal::discretize_g0(&self.inner, cells, self.moments, self.params)
            .map(PyStepFunction)
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("PowerLaw(k={}, e={}, c={})", self.inner.k, self.inner.e, self.inner.c)
    }
}

#[pyclass(name = "AscentResult", frozen, get_all)]
struct PyAscentResult {
    best: Py<PyStepFunction>,
    objective: f64,
    bellman: f64,
    converged: bool,
    max_candidate_objective: f64,
    /// Rows `(iter, objective, defect, lp_dist, accepted)`.
    trace: Vec<(usize, f64, f64, f64, bool)>,
}

#[pyclass(name = "Sandwich", frozen, get_all)]
struct PySandwich {
    a: f64,
    lower: f64,
    tree: f64,
    upper: f64,
    start_rank: u32,
    depth: u32,
    truncated: bool,
}

#[pymethods]
impl PySandwich {
    fn relative_gap(&self) -> f64 {
        (self.upper - self.lower) / self.upper
    }

    fn __repr__(&self) -> String {
        format!("Sandwich(a={}, lower={}, tree={}, upper={})", self.a, self.lower, self.tree, self.upper)
    }
}

/// `B(f, F)`.
#[pyfunction]
#[pyo3(name = "bellman", signature = (p, f, big_f))]
fn bellman(p: f64, f: f64, big_f: f64) -> PyResult<f64> {
    let (params, m) = moments(p, f, big_f)?;
    hbl_core::bellman_value(params, m).map_err(to_py)
}

#[pyfunction]
fn hp(p: f64, z: f64) -> PyResult<f64> {
    hbl_core::hp_eval(params(p)?, z).map_err(to_py)
}

/// `ω_p(x)` for `x = f^p / F` in `(0, 1]`.
#[pyfunction]
fn omega(p: f64, x: f64) -> PyResult<f64> {
    hbl_core::omega_p(params(p)?, x).map(|w| w.c).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (p, f, big_f))]
fn build_g0(p: f64, f: f64, big_f: f64) -> PyResult<PyPowerLaw> {
    let (params, m) = moments(p, f, big_f)?;
    let inner = extremal::build_g0(params, m).map_err(to_py)?;
    Ok(PyPowerLaw { inner, params, moments: m })
}

#[pyfunction]
#[pyo3(signature = (kind, n, p, f, big_f, cells=4096))]
fn make_sequence(kind: &str, n: usize, p: f64, f: f64, big_f: f64, cells: usize) -> PyResult<PyStepFunction> {
    let kind: SequenceKind = kind.parse().map_err(to_py)?;
    let (params, m) = moments(p, f, big_f)?;
    let spec = ExtremalSequenceSpec::new(kind, n, params, m).with_cells(cells);
    extremal::make_sequence(&spec).map(PyStepFunction).map_err(to_py)
}

#[pyfunction]
fn phi(g: &PyStepFunction, p: f64) -> PyResult<f64> {
    g.phi(p)
}

/// Projected ascent on `Φ_p` under the moment constraints.
#[pyfunction]
#[pyo3(signature = (p, f, big_f, cells=4096, max_iters=5000, step_size=1e-2, tol_obj=1e-12, seed=0))]
#[allow(clippy::too_many_arguments)]
fn maximize(
    py: Python<'_>,
    p: f64,
    f: f64,
    big_f: f64,
    cells: usize,
    max_iters: usize,
    step_size: f64,
    tol_obj: f64,
    seed: u64,
) -> PyResult<PyAscentResult> {
    let (params, m) = moments(p, f, big_f)?;
    let config = AscentConfig { cells, max_iters, step_size, tol_obj, seed };
    let out = py
        .detach(|| optimizer::maximize(&config, params, m))
        .map_err(to_py)?;
    let trace = out
        .trace
        .records
        .iter()
        .map(|r| (r.iter, r.objective, r.defect, r.lp_dist, r.accepted))
        .collect();
    Ok(PyAscentResult {
        objective: out.objective(),
        bellman: out.bellman,
        converged: out.converged,
        max_candidate_objective: out.max_candidate_objective,
        trace,
        best: Py::new(py, PyStepFunction(out.best))?,
    })
}

/// `(∫ (M φ)^p, Φ_p(φ*))` for leaf values on a full dyadic tree.
#[pyfunction]
fn symmetrization(values: Vec<f64>, p: f64) -> PyResult<(f64, f64)> {
    let n = values.len();
    if !n.is_power_of_two() {
        return Err(PyValueError::new_err(format!("need 2^N leaf values, got {n}")));
    }
    let tree = DyadicTree::new(n.trailing_zeros()).map_err(to_py)?;
    let phi = LeafFunction::new(tree, values).map_err(to_py)?;
    dyadic::symmetrization_check(&tree, &phi, params(p)?).map_err(to_py)
}

/// Dyadic lower and upper bounds for `Φ_p(g)` at tree parameter `a`.
#[pyfunction]
#[pyo3(signature = (a, g, p, gamma=1.0, branching=1))]
fn sandwich(a: f64, g: &PyStepFunction, p: f64, gamma: f64, branching: u32) -> PyResult<PySandwich> {
    let alpha = AlphaTree::new(a)
        .and_then(|t| t.with_branching(branching))
        .map_err(to_py)?;
    let s = dyadic::sandwich(&alpha, &g.0, params(p)?, gamma).map_err(to_py)?;
    Ok(PySandwich {
        a: s.a,
        lower: s.lower,
        tree: s.tree,
        upper: s.upper,
        start_rank: s.start_rank,
        depth: s.depth,
        truncated: s.truncated,
    })
}

/// Runs the acceptance criteria and returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (only=None))]
fn run_verify(py: Python<'_>, only: Option<String>) -> PyResult<String> {
    let selection = Selection::parse(only.as_deref()).map_err(to_py)?;
    let report = py.detach(|| verify::run(&selection)).map_err(to_py)?;
    report.to_json().map_err(to_py)
}

#[pymodule]
pub fn hbl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPParams>()?;
    m.add_class::<PyStepFunction>()?;
    m.add_class::<PyPowerLaw>()?;
    m.add_class::<PyAscentResult>()?;
    m.add_class::<PySandwich>()?;
    m.add_function(wrap_pyfunction!(bellman, m)?)?;
    m.add_function(wrap_pyfunction!(hp, m)?)?;
    m.add_function(wrap_pyfunction!(omega, m)?)?;
    m.add_function(wrap_pyfunction!(build_g0, m)?)?;
    m.add_function(wrap_pyfunction!(make_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(maximize, m)?)?;
    m.add_function(wrap_pyfunction!(symmetrization, m)?)?;
    m.add_function(wrap_pyfunction!(sandwich, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
