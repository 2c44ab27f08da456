use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use asymembed_core::classifier::{check_membership, derive_params, ClassParams, Overrides};
use asymembed_core::decomposition::{build_decomposition_t, verify_decomposition};
use asymembed_core::embedding::{assemble_asymptotic_kernel, recheck_certificate, AssembleOptions};
use asymembed_core::experiments::{
    classify_batch, pipeline_run, run_montecarlo, ExperimentConfig, ExperimentMode,
};
use asymembed_core::graph::{girth, spectral_gap, MetricTable};
use asymembed_core::kernel::{self, Kernel as CoreKernel};
use asymembed_core::random_regular::{sample_indexed, SamplerConfig};
use asymembed_core::report::to_json_string;

fn err(e: asymembed_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = to_json_string(value).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// A simple undirected graph on vertices `0..n`.
#[pyclass(module = "asymembed", frozen)]
struct Graph {
    inner: asymembed_core::Graph,
}

#[pymethods]
impl Graph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Graph {
            inner: asymembed_core::Graph::from_edges(n, edges).map_err(err)?,
        })
    }

    /// Parses the `n m` header plus edge-list format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let parsed = asymembed_core::parse_graph(text, true).map_err(err)?;
        Ok(Graph {
            inner: parsed.graph,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.sorted_edges()
    }

    fn degree(&self, v: usize) -> PyResult<usize> {
        if v >= self.inner.n() {
            return Err(PyValueError::new_err(format!("vertex {v} out of range")));
        }
        Ok(self.inner.degree(v))
    }

    fn is_connected(&self) -> bool {
        self.inner.is_connected()
    }

    /// `None` when disconnected.
    fn diameter(&self) -> Option<u32> {
        MetricTable::from_graph(&self.inner).diameter().value()
    }

    /// `None` for forests.
    fn girth(&self) -> Option<usize> {
        girth(&self.inner)
    }

    /// Second-largest adjacency eigenvalue (connected regular graphs).
    fn lambda2(&self) -> PyResult<f64> {
        spectral_gap(&self.inner).map_err(err)
    }

    fn to_edge_list(&self) -> String {
        self.inner.to_edge_list()
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, m={})", self.inner.n(), self.inner.edge_count())
    }
}

/// Uniform simple `d`-regular graph; `(seed, index)` fixes the draw.
#[pyfunction]
#[pyo3(signature = (n, d, seed=0, index=0))]
fn sample_regular_graph(n: usize, d: usize, seed: u64, index: u64) -> PyResult<Graph> {
    let s = sample_indexed(&SamplerConfig::new(n, d, seed), index).map_err(err)?;
    Ok(Graph { inner: s.graph })
}

#[allow(clippy::too_many_arguments)]
fn params(
    g: &asymembed_core::Graph,
    epsilon: f64,
    m: f64,
    t: Option<usize>,
    delta: Option<f64>,
    size_threshold: Option<f64>,
    cycle_bound: Option<f64>,
    r: Option<f64>,
) -> PyResult<ClassParams> {
    let d = g.regular_degree().unwrap_or(3).max(3);
    let o = Overrides {
        t,
        delta,
        size_threshold,
        cycle_bound,
        r,
    };
    derive_params(d, epsilon, m, g.n() as u64, o).map_err(err)
}

/// Class-membership report as a dict.
#[pyfunction]
#[pyo3(signature = (graph, epsilon=0.1, m=10.0, t=None, delta=None, size_threshold=None, cycle_bound=None, r=None))]
#[allow(clippy::too_many_arguments)]
fn classify(
    py: Python<'_>,
    graph: &Graph,
    epsilon: f64,
    m: f64,
    t: Option<usize>,
    delta: Option<f64>,
    size_threshold: Option<f64>,
    cycle_bound: Option<f64>,
    r: Option<f64>,
) -> PyResult<Py<PyAny>> {
    let p = params(
        &graph.inner,
        epsilon,
        m,
        t,
        delta,
        size_threshold,
        cycle_bound,
        r,
    )?;
    to_py(py, &check_membership(&graph.inner, &p).map_err(err)?)
}

/// Short-cycle decomposition with its verification report.
#[pyfunction]
#[pyo3(signature = (graph, t))]
fn decompose(py: Python<'_>, graph: &Graph, t: usize) -> PyResult<Py<PyAny>> {
    let dec = build_decomposition_t(&graph.inner, t).map_err(err)?;
    let report = verify_decomposition(&dec);
    let out = PyDict::new(py);
    out.set_item("decomposition", to_py(py, &dec)?)?;
    out.set_item("report", to_py(py, &report)?)?;
    Ok(out.into_any().unbind())
}

/// Builds and re-checks an embedding certificate.
#[pyfunction]
#[pyo3(signature = (graph, epsilon=0.1, m=10.0, t=None, delta=None, size_threshold=None, cycle_bound=None, r=None, sample_budget=200, seed=0, tol=1e-9))]
#[allow(clippy::too_many_arguments)]
fn assemble(
    py: Python<'_>,
    graph: &Graph,
    epsilon: f64,
    m: f64,
    t: Option<usize>,
    delta: Option<f64>,
    size_threshold: Option<f64>,
    cycle_bound: Option<f64>,
    r: Option<f64>,
    sample_budget: usize,
    seed: u64,
    tol: f64,
) -> PyResult<Py<PyAny>> {
    let p = params(
        &graph.inner,
        epsilon,
        m,
        t,
        delta,
        size_threshold,
        cycle_bound,
        r,
    )?;
    let opts = AssembleOptions {
        sample_budget,
        seed,
        tol,
        r: None,
    };
    let cert = py
        .detach(|| assemble_asymptotic_kernel(&graph.inner, &p, &opts))
        .map_err(err)?;
    let recheck = recheck_certificate(&cert).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("certificate", to_py(py, &cert)?)?;
    out.set_item("recheck", to_py(py, &recheck)?)?;
    Ok(out.into_any().unbind())
}

fn kernel_from_rows(rows: Vec<Vec<f64>>) -> PyResult<CoreKernel> {
    let m = rows.len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("kernel must be a square matrix"));
    }
    CoreKernel::new((0..m).collect(), rows.into_iter().flatten().collect()).map_err(err)
}

fn rows_of(values: &[f64], m: usize) -> Vec<Vec<f64>> {
    values.chunks(m.max(1)).map(<[f64]>::to_vec).collect()
}

/// Conditional negativity test; returns a dict with `holds`,
/// `min_eigenvalue` and a `witness` on failure.
#[pyfunction]
#[pyo3(signature = (matrix, tol=1e-9))]
fn is_cnd(py: Python<'_>, matrix: Vec<Vec<f64>>, tol: f64) -> PyResult<Py<PyAny>> {
    let k = kernel_from_rows(matrix)?;
    to_py(py, &kernel::is_cnd(&k, tol).map_err(err)?)
}

/// Positive-type test for a symmetric matrix.
#[pyfunction]
#[pyo3(signature = (matrix, tol=1e-9))]
fn is_pt(py: Python<'_>, matrix: Vec<Vec<f64>>, tol: f64) -> PyResult<Py<PyAny>> {
    let m = matrix.len();
    if matrix.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("kernel must be a square matrix"));
    }
    let pk = kernel::PositiveKernel::new((0..m).collect(), matrix.into_iter().flatten().collect())
        .map_err(err)?;
    to_py(py, &kernel::is_pt(&pk, tol).map_err(err)?)
}

/// `exp(-t K)` entrywise.
#[pyfunction]
fn schoenberg_transform(matrix: Vec<Vec<f64>>, t: f64) -> PyResult<Vec<Vec<f64>>> {
    let k = kernel_from_rows(matrix)?;
    let pk = kernel::schoenberg_transform(&k, t).map_err(err)?;
    Ok(rows_of(pk.values(), pk.m()))
}

/// Runs an experiment described by a config dict (same keys as the TOML
/// file) and returns the report.
#[pyfunction]
fn run_experiment(py: Python<'_>, config: &Bound<'_, PyDict>) -> PyResult<Py<PyAny>> {
    let text: String = py
        .import("json")?
        .call_method1("dumps", (config,))?
        .extract()?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = py.detach(|| -> asymembed_core::Result<String> {
        match cfg.mode {
            ExperimentMode::Cycles => run_montecarlo(&cfg)?.to_json(),
            ExperimentMode::Classify => classify_batch(&cfg)?.0.to_json(),
            ExperimentMode::Pipeline => pipeline_run(&cfg)?.to_json(),
        }
    });
    let text = report.map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

#[pymodule]
pub fn asymembed(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_function(wrap_pyfunction!(sample_regular_graph, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(assemble, m)?)?;
    m.add_function(wrap_pyfunction!(is_cnd, m)?)?;
    m.add_function(wrap_pyfunction!(is_pt, m)?)?;
    m.add_function(wrap_pyfunction!(schoenberg_transform, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("SCHEMA_VERSION", asymembed_core::report::SCHEMA_VERSION)?;
    Ok(())
}
