//! Python bindings. The extension module is called `girthlab`.

use girthlab::covariance::AlphaTable as CoreAlphaTable;
use girthlab::experiments::{run_campaign as core_run_campaign, ExperimentConfig};
use girthlab::functionals::{self, TraceEngine, DEFAULT_TRUNCATION_TOLERANCE};
use girthlab::treeform;
use girthlab::{EnvironmentSampler, GraphSpec, PowerSeries as CoreSeries, SamplerKind, TransitiveGraph};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: girthlab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T>(r: girthlab::Result<T>) -> PyResult<T> {
    r.map_err(err)
}

/// A vertex-transitive graph.
#[pyclass(name = "Graph", module = "girthlab", frozen)]
pub struct Graph(TransitiveGraph);

#[pymethods]
impl Graph {
    /// Build from a description such as `"cycle n=200"` or `"lcf name=foster"`.
    #[new]
    fn new(description: &str) -> PyResult<Self> {
        let spec: GraphSpec = to_py(description.parse())?;
        Ok(Graph(to_py(spec.build())?))
    }

    #[staticmethod]
    fn cycle(n: usize) -> PyResult<Self> {
        Ok(Graph(to_py(TransitiveGraph::cycle(n))?))
    }

    #[staticmethod]
    fn lcf(name: &str) -> PyResult<Self> {
        Ok(Graph(to_py(TransitiveGraph::lcf_named(name))?))
    }

    #[staticmethod]
    fn cayley(p: u32) -> PyResult<Self> {
        let gens = girthlab::graphs::standard_generators(p);
        Ok(Graph(to_py(TransitiveGraph::cayley(p, &gens))?))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.d()
    }

    #[getter]
    fn girth(&self) -> usize {
        self.0.girth()
    }

    #[getter]
    fn label(&self) -> &str {
        self.0.label()
    }

    #[getter]
    fn bipartite(&self) -> bool {
        self.0.is_bipartite()
    }

    /// Neighbor lists in slot order.
    fn neighbors(&self, u: usize) -> PyResult<Vec<u32>> {
        if u >= self.0.n() {
            return Err(PyValueError::new_err(format!("vertex {u} out of range")));
        }
        let d = self.0.d();
        Ok(self.0.adjacency()[u * d..(u + 1) * d].to_vec())
    }

    /// `M x` for the simple random walk.
    fn apply_m(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        to_py(self.0.apply_m(&x))
    }

    fn __repr__(&self) -> String {
        format!("Graph({:?}, n={}, d={}, girth={})", self.0.label(), self.0.n(), self.0.d(), self.0.girth())
    }
}

/// Law of the rows of the environment.
#[pyclass(name = "Sampler", module = "girthlab", frozen)]
pub struct Sampler(EnvironmentSampler);

#[pymethods]
impl Sampler {
    /// `kind` is `"antisym"`, `"balanced"` or `"permvec"`.
    #[new]
    #[pyo3(signature = (kind, d, base_vector=None))]
    fn new(kind: &str, d: usize, base_vector: Option<Vec<f64>>) -> PyResult<Self> {
        let kind: SamplerKind = to_py(kind.parse())?;
        Ok(Sampler(to_py(EnvironmentSampler::new(kind, d, base_vector.as_deref()))?))
    }

    #[getter]
    fn c1(&self) -> f64 {
        self.0.c1()
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.d()
    }

    /// Row covariance as a list of rows.
    fn row_covariance(&self) -> Vec<Vec<f64>> {
        self.0.row_covariance().chunks(self.0.d()).map(<[f64]>::to_vec).collect()
    }

    fn sample(&self, graph: &Graph, seed: u64) -> PyResult<Perturbation> {
        Ok(Perturbation(to_py(self.0.sample(&graph.0, seed))?))
    }

    fn __repr__(&self) -> String {
        format!("Sampler({})", self.0)
    }
}

/// One realization of the environment.
#[pyclass(name = "Perturbation", module = "girthlab", frozen)]
pub struct Perturbation(girthlab::Perturbation);

#[pymethods]
impl Perturbation {
    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.d()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed()
    }

    fn row(&self, u: usize) -> PyResult<Vec<f64>> {
        if u >= self.0.n() {
            return Err(PyValueError::new_err(format!("vertex {u} out of range")));
        }
        Ok(self.0.row(u).to_vec())
    }

    /// All entries, row by row.
    fn entries(&self) -> Vec<f64> {
        self.0.entries().to_vec()
    }
}

/// Power series `sum a_k z^k` with a radius of convergence above 1.
#[pyclass(name = "PowerSeries", module = "girthlab", frozen)]
pub struct PowerSeries(CoreSeries);

#[pymethods]
impl PowerSeries {
    #[new]
    #[pyo3(signature = (coeffs, radius=None))]
    fn new(coeffs: Vec<f64>, radius: Option<f64>) -> PyResult<Self> {
        Ok(PowerSeries(match radius {
            Some(r) => to_py(CoreSeries::with_radius(coeffs, r))?,
            None => CoreSeries::polynomial(coeffs),
        }))
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PowerSeries(to_py(text.parse())?))
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.0.coeffs().to_vec()
    }

    fn star_norm(&self) -> f64 {
        self.0.star_norm()
    }

    /// `f(z^2)`.
    fn compose_square(&self) -> Self {
        PowerSeries(self.0.compose_square())
    }

    fn __call__(&self, x: f64) -> f64 {
        self.0.eval(x)
    }

    fn __repr__(&self) -> String {
        format!("PowerSeries({:?})", self.0.to_string())
    }
}

/// `(T(f), tail_bound)` for one environment.
#[pyfunction]
fn t_function(graph: &Graph, b: &Perturbation, f: &PowerSeries) -> PyResult<(f64, f64)> {
    let v = to_py(functionals::t_function(&graph.0, &b.0, &f.0))?;
    Ok((v.t, v.tail_bound))
}

/// `[T(z^0), ..., T(z^max_degree)]`.
#[pyfunction]
fn t_monomials(py: Python<'_>, graph: &Graph, b: &Perturbation, max_degree: usize) -> PyResult<Vec<f64>> {
    py.detach(|| to_py(TraceEngine::new(&graph.0, max_degree).monomials(&b.0)))
}

#[pyfunction]
#[pyo3(signature = (graph, b, f, eps, tolerance=DEFAULT_TRUNCATION_TOLERANCE))]
fn m_eps(graph: &Graph, b: &Perturbation, f: &PowerSeries, eps: f64, tolerance: f64) -> PyResult<f64> {
    to_py(functionals::m_eps(&graph.0, &b.0, &f.0, eps, tolerance))
}

#[pyfunction]
fn zero_entry_check(graph: &Graph, b: &Perturbation, kmax: usize) -> PyResult<f64> {
    to_py(functionals::zero_entry_check(&graph.0, &b.0, kmax))
}

/// Coefficients `alpha_ij` of a graph or of the regular tree.
#[pyclass(name = "AlphaTable", module = "girthlab", frozen)]
pub struct AlphaTable(CoreAlphaTable);

#[pymethods]
impl AlphaTable {
    #[staticmethod]
    fn for_graph(py: Python<'_>, graph: &Graph, sampler: &Sampler, imax: usize) -> PyResult<Self> {
        py.detach(|| Ok(AlphaTable(to_py(CoreAlphaTable::for_graph(&graph.0, &sampler.0, imax))?)))
    }

    #[staticmethod]
    #[pyo3(signature = (d, sampler, imax, depth=None))]
    fn tree(d: usize, sampler: &Sampler, imax: usize, depth: Option<usize>) -> PyResult<Self> {
        let t = match depth {
            Some(depth) => CoreAlphaTable::tree_with_depth(d, &sampler.0, imax, depth),
            None => CoreAlphaTable::tree(d, &sampler.0, imax),
        };
        Ok(AlphaTable(to_py(t)?))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(AlphaTable)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn imax(&self) -> usize {
        self.0.imax
    }

    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        self.0.values.clone()
    }

    fn alpha(&self, i: usize, j: usize) -> PyResult<f64> {
        to_py(self.0.alpha(i, j))
    }

    fn gated(&self, i: usize, j: usize) -> bool {
        self.0.gated(i, j)
    }

    fn h_form(&self, f: &PowerSeries, g: &PowerSeries) -> PyResult<f64> {
        to_py(self.0.h_form(&f.0, &g.0))
    }
}

/// Closed forms on the infinite `d`-regular tree.
#[pyclass(name = "TreeModel", module = "girthlab", frozen)]
pub struct TreeModel(treeform::TreeModel);

#[pymethods]
impl TreeModel {
    #[new]
    fn new(d: f64) -> PyResult<Self> {
        Ok(TreeModel(to_py(treeform::TreeModel::new(d))?))
    }

    #[getter]
    fn d(&self) -> f64 {
        self.0.d()
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.0.rho()
    }

    fn green(&self, lam: Complex64, r: usize) -> PyResult<Complex64> {
        to_py(self.0.green(lam, r))
    }

    fn lhs_closed(&self, lam: Complex64, mu: Complex64) -> PyResult<Complex64> {
        to_py(self.0.lhs_closed(lam, mu))
    }

    fn kernel_beta(&self, x: f64, y: f64) -> PyResult<f64> {
        to_py(self.0.kernel_beta(x, y))
    }

    fn kernel_beta_boundary_check(&self, x: f64, y: f64) -> PyResult<f64> {
        to_py(self.0.kernel_beta_boundary_check(x, y))
    }

    fn limit_density(&self, x: f64) -> f64 {
        self.0.limit_density(x)
    }

    fn localization_ratio(&self) -> PyResult<f64> {
        to_py(self.0.localization_ratio())
    }

    /// `(value, error, converged)`.
    #[pyo3(signature = (f, g, tolerance=1e-8))]
    fn tree_covariance(&self, py: Python<'_>, f: &PowerSeries, g: &PowerSeries, tolerance: f64) -> (f64, f64, bool) {
        let q = py.detach(|| self.0.tree_covariance(&f.0, &g.0, tolerance));
        (q.value, q.error, q.converged)
    }

    #[pyo3(signature = (lam, mu, tolerance=1e-9))]
    fn stieltjes_residual(&self, py: Python<'_>, lam: Complex64, mu: Complex64, tolerance: f64) -> PyResult<f64> {
        py.detach(|| to_py(self.0.stieltjes_residual(lam, mu, tolerance)))
    }
}

#[pyfunction]
fn kernel_beta2_diagonal(x: f64) -> PyResult<f64> {
    to_py(treeform::kernel_beta2_diagonal(x))
}

/// Runs a campaign from TOML text and returns the result as JSON text.
#[pyfunction]
fn run_campaign(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_toml(config).map_err(PyValueError::new_err)?;
    let result = py.detach(|| core_run_campaign(&cfg)).map_err(err)?;
    serde_json::to_string(&result).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule(name = "girthlab")]
fn girthlab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<Sampler>()?;
    m.add_class::<Perturbation>()?;
    m.add_class::<PowerSeries>()?;
    m.add_class::<AlphaTable>()?;
    m.add_class::<TreeModel>()?;
    m.add_function(wrap_pyfunction!(t_function, m)?)?;
    m.add_function(wrap_pyfunction!(t_monomials, m)?)?;
    m.add_function(wrap_pyfunction!(m_eps, m)?)?;
    m.add_function(wrap_pyfunction!(zero_entry_check, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_beta2_diagonal, m)?)?;
    m.add_function(wrap_pyfunction!(run_campaign, m)?)?;
    Ok(())
}
