use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use thqaoa::search::{self, SearchMode, ThresholdSearchOptions};
use thqaoa::spectrum::{self, DEFAULT_ENUMERATION_CAP};
use thqaoa::standard::{self, OptimizerOptions};
use thqaoa::statevec::{PhaseKind, StateVectorSim, DEFAULT_STATEVEC_CAP};
use thqaoa::{thresh, AngleSchedule, BitString, Error, ObjectiveSpectrum, ProblemKind, ThresholdSplit};

create_exception!(thqaoa, CapExceededError, PyException, "Enumeration would exceed the configured cap.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::CapExceeded { .. } => CapExceededError::new_err(e.to_string()),
        Error::Invariant(_) => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) | Error::Csv(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn schedule(betas: Vec<f64>, gammas: Vec<f64>) -> PyResult<AngleSchedule> {
    AngleSchedule::explicit(betas, gammas).map_err(to_py)
}

fn angles(s: &AngleSchedule) -> (Vec<f64>, Vec<f64>) {
    (s.betas().to_vec(), s.gammas().to_vec())
}

#[pyclass(name = "Graph", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGraph(thqaoa::Graph);

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        thqaoa::Graph::new(n, edges).map(PyGraph).map_err(to_py)
    }

    #[staticmethod]
    fn complete(n: usize) -> PyResult<Self> {
        thqaoa::Graph::complete(n).map(PyGraph).map_err(to_py)
    }

    #[staticmethod]
    fn erdos_renyi(n: usize, edge_prob: f64, seed: u64) -> PyResult<Self> {
        thqaoa::Graph::erdos_renyi(n, edge_prob, seed).map(PyGraph).map_err(to_py)
    }

    #[staticmethod]
    fn from_edge_list(text: &str) -> PyResult<Self> {
        thqaoa::Graph::parse_edge_list(text).map(PyGraph).map_err(to_py)
    }

    fn to_edge_list(&self) -> String {
        self.0.to_edge_list()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    #[getter]
    fn edges(&self) -> Vec<(u32, u32)> {
        self.0.edges().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, m={})", self.0.n(), self.0.m())
    }
}

#[pyclass(name = "ProblemInstance", frozen)]
struct PyInstance(thqaoa::ProblemInstance);

#[pymethods]
impl PyInstance {
    /// `kind` is one of maxcut, kvc, kds, bisection.
    #[new]
    #[pyo3(signature = (graph, kind, k=None))]
    fn new(graph: &PyGraph, kind: &str, k: Option<usize>) -> PyResult<Self> {
        let kind: ProblemKind = kind.parse().map_err(to_py)?;
        thqaoa::ProblemInstance::new(graph.0.clone(), kind, k).map(PyInstance).map_err(to_py)
    }

    /// Objective of a bit string; character `i` is vertex `i`.
    fn objective(&self, bits: &str) -> PyResult<u32> {
        let x: BitString = bits.parse().map_err(to_py)?;
        self.0.objective(&x).map_err(to_py)
    }

    fn is_feasible(&self, bits: &str) -> PyResult<bool> {
        let x: BitString = bits.parse().map_err(to_py)?;
        self.0.is_feasible(&x).map_err(to_py)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind().as_str()
    }

    #[getter]
    fn k(&self) -> Option<usize> {
        self.0.k()
    }

    #[getter]
    fn graph(&self) -> PyGraph {
        PyGraph(self.0.graph().clone())
    }

    fn feasible_count(&self) -> u128 {
        self.0.feasible_count()
    }

    #[pyo3(signature = (cap=DEFAULT_ENUMERATION_CAP))]
    fn spectrum(&self, py: Python<'_>, cap: u64) -> PyResult<PySpectrum> {
        py.detach(|| spectrum::build_spectrum(&self.0, cap)).map(PySpectrum).map_err(to_py)
    }

    /// Dense state-vector expectation. `threshold=None` uses the objective
    /// as phase separator.
    #[pyo3(signature = (betas, gammas, threshold=None, cap=DEFAULT_STATEVEC_CAP))]
    fn statevec_expectation(&self, betas: Vec<f64>, gammas: Vec<f64>, threshold: Option<i64>, cap: u64) -> PyResult<f64> {
        let sim = StateVectorSim::new(&self.0, cap).map_err(to_py)?;
        let phase = threshold.map_or(PhaseKind::Standard, PhaseKind::Threshold);
        Ok(sim.expectation(&sim.run(phase, &schedule(betas, gammas)?)))
    }

    fn __repr__(&self) -> String {
        format!("ProblemInstance(kind={}, n={}, k={:?})", self.0.kind(), self.0.n(), self.0.k())
    }
}

#[pyclass(name = "Spectrum", frozen)]
struct PySpectrum(ObjectiveSpectrum);

#[pymethods]
impl PySpectrum {
    #[staticmethod]
    fn from_cache_string(text: &str) -> PyResult<Self> {
        ObjectiveSpectrum::parse_cache(text).map(PySpectrum).map_err(to_py)
    }

    fn to_cache_string(&self) -> String {
        self.0.to_cache_string()
    }

    /// `[(value, count), ...]` in increasing value order.
    #[getter]
    fn entries(&self) -> Vec<(u32, u64)> {
        self.0.entries().to_vec()
    }

    #[getter]
    fn total(&self) -> u64 {
        self.0.total()
    }

    #[getter]
    fn c_max(&self) -> u32 {
        self.0.c_max()
    }

    #[getter]
    fn l(&self) -> usize {
        self.0.l()
    }

    fn uniform_mean(&self) -> f64 {
        self.0.uniform_mean()
    }

    fn threshold_candidates(&self) -> Vec<i64> {
        self.0.threshold_candidates()
    }

    /// `(d0, d1, r)` for the rule `C(x) > th`.
    fn split(&self, th: i64) -> (u64, u64, f64) {
        let s = self.0.split_at(th);
        (s.d0, s.d1, s.r())
    }

    fn __repr__(&self) -> String {
        format!("Spectrum(l={}, total={}, c_max={})", self.0.l(), self.0.total(), self.0.c_max())
    }
}

#[pyclass(name = "RunResult", frozen, get_all)]
struct PyRunResult {
    expectation: f64,
    ratio: f64,
    p_above: f64,
    evals: u64,
    wall_ns: u128,
    truncated: bool,
}

impl From<thqaoa::RunResult> for PyRunResult {
    fn from(r: thqaoa::RunResult) -> Self {
        PyRunResult {
            expectation: r.expectation,
            ratio: r.ratio,
            p_above: r.p_above,
            evals: r.evals,
            wall_ns: r.wall_ns,
            truncated: r.truncated,
        }
    }
}

#[pymethods]
impl PyRunResult {
    fn __repr__(&self) -> String {
        format!("RunResult(expectation={}, ratio={}, p_above={}, evals={})", self.expectation, self.ratio, self.p_above, self.evals)
    }
}

#[pyfunction]
fn expectation_thresh(spec: &PySpectrum, th: i64, betas: Vec<f64>, gammas: Vec<f64>) -> PyResult<PyRunResult> {
    thresh::expectation_thresh(&spec.0, th, &schedule(betas, gammas)?).map(Into::into).map_err(to_py)
}

#[pyfunction]
fn expectation_std(spec: &PySpectrum, betas: Vec<f64>, gammas: Vec<f64>) -> PyResult<PyRunResult> {
    standard::expectation_std(&spec.0, &schedule(betas, gammas)?).map(Into::into).map_err(to_py)
}

#[pyfunction]
fn first_round_angles(r: f64) -> PyResult<(f64, f64)> {
    thresh::first_round_angles(r).map_err(to_py)
}

#[pyfunction]
fn min_rounds(r: f64) -> PyResult<usize> {
    thresh::min_rounds(r).map_err(to_py)
}

/// Shortest schedule that empties the unmarked states of a `(d0, d1)` split.
#[pyfunction]
fn optimal_schedule(d0: u64, d1: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let split = ThresholdSplit::from_counts(d0, d1).map_err(to_py)?;
    thresh::optimal_schedule(&split).map(|s| angles(&s)).map_err(to_py)
}

/// Returns `(threshold, betas, gammas, result)`.
#[pyfunction]
#[pyo3(signature = (spec, p, mode="analytic", exhaustive=false))]
fn find_threshold(
    py: Python<'_>,
    spec: &PySpectrum,
    p: usize,
    mode: &str,
    exhaustive: bool,
) -> PyResult<(i64, Vec<f64>, Vec<f64>, PyRunResult)> {
    let mode = match mode {
        "analytic" => SearchMode::Analytic,
        "oracle" => SearchMode::Oracle,
        other => return Err(PyValueError::new_err(format!("unknown mode '{other}'"))),
    };
    let opts = ThresholdSearchOptions { mode, exhaustive, ..Default::default() };
    let out = py.detach(|| search::find_threshold(&spec.0, p, &opts)).map_err(to_py)?;
    let (b, g) = angles(&out.schedule);
    Ok((out.th, b, g, out.result.into()))
}

/// Returns `(betas, gammas, result)`.
#[pyfunction]
#[pyo3(signature = (spec, p, restarts=20, budget_per_restart=20_000, seed=0))]
fn optimize_angles(
    py: Python<'_>,
    spec: &PySpectrum,
    p: usize,
    restarts: usize,
    budget_per_restart: u64,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<f64>, PyRunResult)> {
    let opts = OptimizerOptions { restarts, budget_per_restart, seed, ..Default::default() };
    let (s, r) = py.detach(|| standard::optimize_angles(&spec.0, p, &opts)).map_err(to_py)?;
    let (b, g) = angles(&s);
    Ok((b, g, r.into()))
}

#[pymodule]
#[pyo3(name = "thqaoa")]
fn thqaoa_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("CapExceededError", m.py().get_type::<CapExceededError>())?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(expectation_thresh, m)?)?;
    m.add_function(wrap_pyfunction!(expectation_std, m)?)?;
    m.add_function(wrap_pyfunction!(first_round_angles, m)?)?;
    m.add_function(wrap_pyfunction!(min_rounds, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(find_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_angles, m)?)?;
    Ok(())
}
