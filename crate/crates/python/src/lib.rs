//! Python bindings for `regionmdl`.
//!
//! Symbols cross the boundary 1-based, as in the CSV formats. Cluster labels
//! are `1..=D`, numbered by smallest member.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use regionmdl::evaluation;
use regionmdl::graph::{build_delaunay_adjacency, log_spanning_tree_count};
use regionmdl::ingest::discretize_values;
use regionmdl::optimizer::{self, GreedyOptions, QueueRefresh, SpanningTreeTerm};
use regionmdl::synthetic::{self, NoiseModel, SyntheticParams};
use regionmdl::{CodelengthBreakdown, Error, MergeTrajectory, Partition, SpatialGraph, SymbolMatrix};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Csv { .. } => PyIOError::new_err(e.to_string()),
        Error::Invariant(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn greedy_options(skip_tree_count: bool, lazy_queue: bool) -> GreedyOptions {
    let refresh = if lazy_queue { QueueRefresh::Lazy } else { QueueRefresh::Eager };
    GreedyOptions { tree: tree_term(skip_tree_count), refresh }
}

fn tree_term(skip_tree_count: bool) -> SpanningTreeTerm {
    if skip_tree_count {
        SpanningTreeTerm::Skip
    } else {
        SpanningTreeTerm::Compute
    }
}

/// `N x T` matrix of symbols in `1..=S`.
#[pyclass(name = "SymbolMatrix", module = "regionmdl", frozen)]
struct PySymbolMatrix {
    inner: SymbolMatrix,
}

#[pymethods]
impl PySymbolMatrix {
    #[new]
    fn new(rows: Vec<Vec<u16>>, alphabet_size: usize) -> PyResult<Self> {
        SymbolMatrix::from_rows(&rows, alphabet_size).map(|inner| Self { inner }).map_err(to_py)
    }

    /// Equal-width binning of real-valued series into `alphabet_size` symbols.
    #[staticmethod]
    fn discretize(values: Vec<Vec<f64>>, alphabet_size: usize) -> PyResult<Self> {
        discretize_values(&values, alphabet_size).map(|inner| Self { inner }).map_err(to_py)
    }

    #[getter]
    fn n_series(&self) -> usize {
        self.inner.n_series()
    }

    #[getter]
    fn series_length(&self) -> usize {
        self.inner.series_length()
    }

    #[getter]
    fn alphabet_size(&self) -> usize {
        self.inner.alphabet_size()
    }

    fn to_rows(&self) -> Vec<Vec<u16>> {
        self.inner.to_rows()
    }

    fn content_hash(&self) -> String {
        self.inner.content_hash()
    }

    fn __repr__(&self) -> String {
        format!(
            "SymbolMatrix(n_series={}, series_length={}, alphabet_size={})",
            self.inner.n_series(),
            self.inner.series_length(),
            self.inner.alphabet_size()
        )
    }
}

/// Undirected adjacency network over the locations.
#[pyclass(name = "SpatialGraph", module = "regionmdl", frozen)]
struct PySpatialGraph {
    inner: SpatialGraph,
}

#[pymethods]
impl PySpatialGraph {
    #[new]
    #[pyo3(signature = (n_nodes, edges, coordinates=None))]
    fn new(n_nodes: usize, edges: Vec<(usize, usize)>, coordinates: Option<Vec<(f64, f64)>>) -> PyResult<Self> {
        SpatialGraph::from_edges(n_nodes, edges, coordinates).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn delaunay(points: Vec<(f64, f64)>) -> PyResult<Self> {
        build_delaunay_adjacency(&points).map(|inner| Self { inner }).map_err(to_py)
    }

    /// Rook adjacency on a `rows x cols` lattice, nodes in row-major order.
    #[staticmethod]
    fn grid(rows: usize, cols: usize) -> PyResult<Self> {
        SpatialGraph::grid(rows, cols, None).map(|inner| Self { inner }).map_err(to_py)
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inner.n_nodes()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }

    fn neighbors(&self, node: usize) -> PyResult<Vec<usize>> {
        if node >= self.inner.n_nodes() {
            return Err(PyValueError::new_err(format!("node {node} out of range")));
        }
        Ok(self.inner.neighbors(node).to_vec())
    }

    fn is_connected(&self) -> bool {
        self.inner.is_connected()
    }

    /// `log2` of the number of spanning trees.
    fn log_spanning_tree_count(&self, py: Python<'_>) -> PyResult<f64> {
        py.detach(|| log_spanning_tree_count(&self.inner)).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("SpatialGraph(n_nodes={}, n_edges={})", self.inner.n_nodes(), self.inner.n_edges())
    }
}

/// Description length split into its terms, in bits.
#[pyclass(name = "Codelength", module = "regionmdl", frozen)]
struct PyCodelength {
    inner: CodelengthBreakdown,
}

#[pymethods]
impl PyCodelength {
    #[getter]
    fn spanning_tree_bits(&self) -> f64 {
        self.inner.spanning_tree_bits
    }

    #[getter]
    fn partition_choice_bits(&self) -> f64 {
        self.inner.partition_choice_bits
    }

    #[getter]
    fn driver_bits(&self) -> f64 {
        self.inner.driver_bits
    }

    #[getter]
    fn table_bits(&self) -> f64 {
        self.inner.table_bits
    }

    #[getter]
    fn member_bits(&self) -> f64 {
        self.inner.member_bits
    }

    #[getter]
    fn total_bits(&self) -> f64 {
        self.inner.total_bits
    }

    fn __repr__(&self) -> String {
        format!("Codelength(total_bits={:.3})", self.inner.total_bits)
    }
}

#[pyclass(name = "Partition", module = "regionmdl", frozen)]
struct PyPartition {
    inner: Partition,
}

#[pymethods]
impl PyPartition {
    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.inner.labels.clone()
    }

    /// Driver series per cluster, indexed by `label - 1`.
    #[getter]
    fn drivers(&self) -> Vec<Vec<u16>> {
        self.inner.drivers.clone()
    }

    #[getter]
    fn n_clusters(&self) -> usize {
        self.inner.n_clusters()
    }

    #[getter]
    fn codelength(&self) -> PyCodelength {
        PyCodelength { inner: self.inner.breakdown }
    }

    #[getter]
    fn total_bits(&self) -> f64 {
        self.inner.breakdown.total_bits
    }

    fn clusters(&self) -> Vec<Vec<usize>> {
        self.inner.clusters()
    }

    fn __repr__(&self) -> String {
        format!("Partition(n_clusters={}, total_bits={:.3})", self.inner.n_clusters(), self.inner.breakdown.total_bits)
    }
}

/// `(n_clusters, merged pair, total_bits)`
type Step = (usize, Option<(usize, usize)>, f64);

/// Codelength after every greedy merge.
#[pyclass(name = "Trajectory", module = "regionmdl", frozen)]
struct PyTrajectory {
    inner: MergeTrajectory,
}

#[pymethods]
impl PyTrajectory {
    /// `(n_clusters, merged, total_bits)` per step, where `merged` is the
    /// pair of smallest members joined or `None` for the singleton start.
    fn steps(&self) -> Vec<Step> {
        self.inner.steps.iter().map(|s| (s.n_clusters, s.merged, s.total_bits)).collect()
    }

    #[getter]
    fn best_step_index(&self) -> usize {
        self.inner.best_step_index
    }

    #[getter]
    fn baseline(&self) -> PyCodelength {
        PyCodelength { inner: self.inner.baseline }
    }

    fn labels_at(&self, step: usize) -> PyResult<Vec<usize>> {
        self.inner.labels_at(step).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.steps.len()
    }
}

#[pyclass(name = "SyntheticDataset", module = "regionmdl", frozen)]
struct PySyntheticDataset {
    #[pyo3(get)]
    z: Py<PySymbolMatrix>,
    #[pyo3(get)]
    graph: Py<PySpatialGraph>,
    #[pyo3(get)]
    points: Vec<(f64, f64)>,
    #[pyo3(get)]
    planted_labels: Vec<usize>,
    #[pyo3(get)]
    planted_drivers: Vec<Vec<u16>>,
    #[pyo3(get)]
    confusers: Vec<usize>,
    #[pyo3(get)]
    seed: u64,
}

/// Greedy agglomeration; returns the partition at the codelength minimum
/// and the full merge trajectory. `lazy_queue` re-scores queued merges only
/// when they reach the front, which is much faster on large inputs.
#[pyfunction]
#[pyo3(signature = (z, graph, skip_tree_count=false, lazy_queue=false))]
fn regionalize(
    py: Python<'_>,
    z: &PySymbolMatrix,
    graph: &PySpatialGraph,
    skip_tree_count: bool,
    lazy_queue: bool,
) -> PyResult<(PyPartition, PyTrajectory)> {
    let options = greedy_options(skip_tree_count, lazy_queue);
    let (trajectory, partition) =
        py.detach(|| optimizer::greedy_regionalize_opts(&z.inner, &graph.inner, &options)).map_err(to_py)?;
    Ok((PyPartition { inner: partition }, PyTrajectory { inner: trajectory }))
}

#[pyfunction]
#[pyo3(signature = (z, graph, n_clusters, skip_tree_count=false, lazy_queue=false))]
fn regionalize_fixed_d(
    py: Python<'_>,
    z: &PySymbolMatrix,
    graph: &PySpatialGraph,
    n_clusters: usize,
    skip_tree_count: bool,
    lazy_queue: bool,
) -> PyResult<PyPartition> {
    let options = greedy_options(skip_tree_count, lazy_queue);
    py.detach(|| optimizer::regionalize_fixed_d_opts(&z.inner, &graph.inner, n_clusters, &options))
        .map(|(_, inner)| PyPartition { inner })
        .map_err(to_py)
}

/// Optimum over every contiguous partition. Small graphs only.
#[pyfunction]
#[pyo3(signature = (z, graph, skip_tree_count=false))]
fn exact_regionalize(
    py: Python<'_>,
    z: &PySymbolMatrix,
    graph: &PySpatialGraph,
    skip_tree_count: bool,
) -> PyResult<PyPartition> {
    py.detach(|| optimizer::exact_regionalize_with(&z.inner, &graph.inner, tree_term(skip_tree_count)))
        .map(|inner| PyPartition { inner })
        .map_err(to_py)
}

/// Score an arbitrary contiguous labelling.
#[pyfunction]
#[pyo3(signature = (z, graph, labels, skip_tree_count=false))]
fn evaluate_partition(
    z: &PySymbolMatrix,
    graph: &PySpatialGraph,
    labels: Vec<usize>,
    skip_tree_count: bool,
) -> PyResult<PyPartition> {
    let bits = tree_term(skip_tree_count).resolve(&graph.inner).map_err(to_py)?;
    Partition::from_labels(&z.inner, &graph.inner, &labels, bits).map(|inner| PyPartition { inner }).map_err(to_py)
}

/// Codelength of the all-singletons partition.
#[pyfunction]
#[pyo3(signature = (z, graph, skip_tree_count=false))]
fn singleton_partition(z: &PySymbolMatrix, graph: &PySpatialGraph, skip_tree_count: bool) -> PyResult<PyPartition> {
    let bits = tree_term(skip_tree_count).resolve(&graph.inner).map_err(to_py)?;
    optimizer::singleton_partition(&z.inner, &graph.inner, bits).map(|inner| PyPartition { inner }).map_err(to_py)
}

#[pyfunction]
fn adjusted_mutual_information(a: Vec<i64>, b: Vec<i64>) -> PyResult<f64> {
    evaluation::adjusted_mutual_information(&a, &b).map_err(to_py)
}

/// Selected codelength over the singleton baseline.
#[pyfunction]
fn inverse_compression_ratio(selected: &PyCodelength, baseline: &PyCodelength) -> PyResult<f64> {
    evaluation::inverse_compression_ratio(&selected.inner, &baseline.inner).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n=100, t=51, s=4, d=5, noise=0.0, seed=0, noise_model="other", confuser_fraction=0.0))]
#[allow(clippy::too_many_arguments)]
fn generate(
    py: Python<'_>,
    n: usize,
    t: usize,
    s: usize,
    d: usize,
    noise: f64,
    seed: u64,
    noise_model: &str,
    confuser_fraction: f64,
) -> PyResult<PySyntheticDataset> {
    let noise_model: NoiseModel = noise_model.parse().map_err(to_py)?;
    let params = SyntheticParams { n, t, s, d, noise, seed, noise_model, confuser_fraction };
    let data = py.detach(|| synthetic::generate(&params)).map_err(to_py)?;
    Ok(PySyntheticDataset {
        z: Py::new(py, PySymbolMatrix { inner: data.z })?,
        graph: Py::new(py, PySpatialGraph { inner: data.graph })?,
        points: data.points,
        planted_labels: data.planted_labels,
        planted_drivers: data.planted_drivers,
        confusers: data.confusers,
        seed: data.seed,
    })
}

#[pymodule(name = "regionmdl")]
fn regionmdl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySymbolMatrix>()?;
    m.add_class::<PySpatialGraph>()?;
    m.add_class::<PyCodelength>()?;
    m.add_class::<PyPartition>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_class::<PySyntheticDataset>()?;
    m.add_function(wrap_pyfunction!(regionalize, m)?)?;
    m.add_function(wrap_pyfunction!(regionalize_fixed_d, m)?)?;
    m.add_function(wrap_pyfunction!(exact_regionalize, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_partition, m)?)?;
    m.add_function(wrap_pyfunction!(singleton_partition, m)?)?;
    m.add_function(wrap_pyfunction!(adjusted_mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_compression_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
