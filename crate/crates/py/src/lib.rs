use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use bookembed::encoder::{self, FactProfile, SymmetryRule};
use bookembed::layout::{self, Monotone, SpineOrder, ViolationReport};
use bookembed::{family, solver};
use bookembed::{BookEmbedding, GadgetGraph, PlaneGraph, RestrictionProfile, SubproblemSpec, VertexId};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn ids(xs: Vec<u32>) -> Vec<VertexId> {
    xs.into_iter().map(VertexId).collect()
}

/// A plane graph stored as a rotation system.
#[pyclass(name = "Graph", module = "bookembed_py", skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: PlaneGraph,
}

#[pymethods]
impl PyGraph {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        PlaneGraph::parse(text).map(|inner| PyGraph { inner }).map_err(value_err)
    }

    fn serialize(&self) -> String {
        self.inner.serialize()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_owned()
    }

    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn face_count(&self) -> usize {
        self.inner.face_count()
    }

    fn edges(&self) -> Vec<(u32, u32)> {
        self.inner.edges().into_iter().map(|e| (e.u().0, e.v().0)).collect()
    }

    fn faces(&self) -> Vec<Vec<u32>> {
        self.inner
            .faces()
            .iter()
            .map(|f| f.boundary().iter().map(|v| v.0).collect())
            .collect()
    }

    fn is_maximal_planar(&self) -> bool {
        self.inner.is_maximal_planar()
    }

    fn is_biconnected(&self) -> bool {
        self.inner.is_biconnected()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(name={:?}, vertices={}, edges={})",
            self.inner.name(),
            self.inner.vertex_count(),
            self.inner.edge_count()
        )
    }
}

/// A gadget graph with its poles and terminals.
#[pyclass(name = "Gadget", module = "bookembed_py", skip_from_py_object)]
#[derive(Clone)]
struct PyGadget {
    inner: GadgetGraph,
}

#[pymethods]
impl PyGadget {
    #[getter]
    fn graph(&self) -> PyGraph {
        PyGraph {
            inner: self.inner.graph.clone(),
        }
    }

    #[getter]
    fn poles(&self) -> (u32, u32) {
        (self.inner.poles.0 .0, self.inner.poles.1 .0)
    }

    #[getter]
    fn terminals(&self) -> Vec<u32> {
        self.inner.terminals.iter().map(|v| v.0).collect()
    }

    #[staticmethod]
    fn from_graph(graph: &PyGraph) -> PyResult<Self> {
        GadgetGraph::from_roles(graph.inner.clone())
            .map(|inner| PyGadget { inner })
            .map_err(value_err)
    }
}

#[pyclass(name = "Embedding", module = "bookembed_py", skip_from_py_object)]
#[derive(Clone)]
struct PyEmbedding {
    inner: BookEmbedding,
}

#[pymethods]
impl PyEmbedding {
    #[new]
    fn new(order: Vec<u32>, pages: Vec<(u32, u32, usize)>, page_count: usize) -> PyResult<Self> {
        let pages = pages
            .into_iter()
            .map(|(u, v, p)| (bookembed::Edge::new(VertexId(u), VertexId(v)), p))
            .collect();
        BookEmbedding::new(ids(order), pages, page_count)
            .map(|inner| PyEmbedding { inner })
            .map_err(value_err)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        BookEmbedding::parse(text).map(|inner| PyEmbedding { inner }).map_err(value_err)
    }

    fn serialize(&self) -> String {
        self.inner.serialize()
    }

    #[getter]
    fn order(&self) -> Vec<u32> {
        self.inner.order.vertices().iter().map(|v| v.0).collect()
    }

    #[getter]
    fn page_count(&self) -> usize {
        self.inner.page_count
    }

    fn page(&self, u: u32, v: u32) -> Option<usize> {
        self.inner.page(bookembed::Edge::new(VertexId(u), VertexId(v)))
    }
}

/// A CNF formula together with its variable map.
#[pyclass(name = "Formula", module = "bookembed_py")]
struct PyFormula {
    cnf: bookembed::CnfFormula,
    map: bookembed::VarMap,
}

#[pymethods]
impl PyFormula {
    fn variable_count(&self) -> u32 {
        self.cnf.variable_count()
    }

    fn clause_count(&self) -> usize {
        self.cnf.clause_count()
    }

    fn dimacs(&self) -> PyResult<String> {
        let mut out = Vec::new();
        solver::write_dimacs(&self.cnf, &mut out).map_err(value_err)?;
        String::from_utf8(out).map_err(value_err)
    }

    fn var_map(&self) -> String {
        self.map.to_text()
    }

    /// True if the assignment (list of signed literals) satisfies every clause.
    fn check(&self, literals: Vec<i64>) -> bool {
        self.cnf.is_satisfied_by(&assignment(&literals, self.cnf.variable_count()))
    }

    /// Decodes a model given as signed literals into an embedding.
    fn decode(&self, literals: Vec<i64>) -> PyResult<PyEmbedding> {
        let a = assignment(&literals, self.cnf.variable_count());
        encoder::decode_model(&self.map, &a)
            .map(|inner| PyEmbedding { inner })
            .map_err(value_err)
    }

    /// Solves with the backend in SAT_SOLVER_CMD; returns the decoded embedding or None.
    #[pyo3(signature = (timeout=60.0))]
    fn solve(&self, py: Python<'_>, timeout: f64) -> PyResult<(String, Option<PyEmbedding>)> {
        let config = solver::BackendConfig::from_env(std::time::Duration::from_secs_f64(timeout), 1)
            .map_err(value_err)?;
        let outcome = py.detach(|| solver::run_backend(&self.cnf, &config)).map_err(value_err)?;
        let emb = match outcome.status.model() {
            Some(m) => Some(PyEmbedding {
                inner: encoder::decode_model(&self.map, m).map_err(value_err)?,
            }),
            None => None,
        };
        Ok((outcome.status.label().to_owned(), emb))
    }
}

fn assignment(literals: &[i64], vars: u32) -> Vec<bool> {
    let mut a = vec![false; vars as usize + 1];
    for &l in literals {
        if let Some(slot) = a.get_mut(l.unsigned_abs() as usize) {
            *slot = l > 0;
        }
    }
    a
}

fn reports(rs: Vec<ViolationReport>) -> Vec<(String, Vec<(u32, u32)>)> {
    rs.into_iter()
        .map(|r| {
            let w = r.witnesses.iter().map(|e| (e.u().0, e.v().0)).collect();
            (r.kind.to_string(), w)
        })
        .collect()
}

#[pyfunction]
fn build_qk(k: usize) -> PyResult<PyGadget> {
    family::build_qk(k).map(|inner| PyGadget { inner }).map_err(value_err)
}

#[pyfunction]
fn build_qk_contracted(k: usize) -> PyResult<PyGadget> {
    family::build_qk_contracted(k).map(|inner| PyGadget { inner }).map_err(value_err)
}

#[pyfunction]
fn build_base_gn(k: usize, n: usize) -> PyResult<PyGadget> {
    family::build_base_gn(k, n).map(|inner| PyGadget { inner }).map_err(value_err)
}

#[pyfunction]
fn dq_distance(gadget: &PyGadget) -> PyResult<usize> {
    family::dq_distance(&gadget.inner).map_err(value_err)
}

/// Encodes `graph` for `pages` pages. `profile` is "none", "fact1" or
/// "fact2"; `symmetry` lists rule names or contains "all".
#[pyfunction]
#[pyo3(signature = (graph, pages, profile="none", symmetry=vec![], subproblem=None))]
fn encode(
    graph: &PyGraph,
    pages: usize,
    profile: &str,
    symmetry: Vec<String>,
    subproblem: Option<&str>,
) -> PyResult<PyFormula> {
    let needs_roles = profile != "none" || !symmetry.is_empty() || subproblem.is_some();
    let mut p = if needs_roles {
        let gadget = GadgetGraph::from_roles(graph.inner.clone()).map_err(value_err)?;
        RestrictionProfile::for_gadget(&gadget)
    } else {
        RestrictionProfile::none()
    };
    match profile {
        "none" => {}
        "fact1" => p = p.with_fact(FactProfile::Fact1),
        "fact2" => p = p.with_fact(FactProfile::Fact2),
        other => return Err(PyValueError::new_err(format!("unknown profile `{other}`"))),
    }
    for name in &symmetry {
        p = if name == "all" {
            p.with_all_symmetry()
        } else {
            p.with_rule(name.parse::<SymmetryRule>().map_err(PyValueError::new_err)?)
        };
    }
    if let Some(spec) = subproblem {
        p = p.with_subproblem(spec.parse::<SubproblemSpec>().map_err(PyValueError::new_err)?);
    }
    let (cnf, map) = bookembed::encode(&graph.inner, pages, &p).map_err(value_err)?;
    Ok(PyFormula { cnf, map })
}

#[pyfunction]
fn validate_embedding(graph: &PyGraph, emb: &PyEmbedding) -> PyResult<Vec<(String, Vec<(u32, u32)>)>> {
    layout::validate_embedding(&graph.inner, &emb.inner)
        .map(reports)
        .map_err(value_err)
}

#[pyfunction]
fn lemma1_scan(graph: &PyGraph, emb: &PyEmbedding) -> PyResult<Vec<(String, Vec<(u32, u32)>)>> {
    layout::lemma1_scan(&graph.inner, &emb.inner).map(reports).map_err(value_err)
}

/// Returns `(kind, size)` with kind one of rainbow/twist/necklace/mixed.
#[pyfunction]
fn classify_pairs(order: Vec<u32>, pairs: Vec<(u32, u32)>) -> PyResult<(String, usize)> {
    let order = SpineOrder::new(ids(order)).map_err(value_err)?;
    let pairs: Vec<_> = pairs.into_iter().map(|(s, t)| (VertexId(s), VertexId(t))).collect();
    let c = layout::classify_pairs(&order, &pairs).map_err(value_err)?;
    Ok((format!("{:?}", c.kind).to_lowercase(), c.size))
}

/// Returns `("increasing" | "decreasing", indices)`.
#[pyfunction]
fn monotone_subsequence(seq: Vec<f64>, a: usize, b: usize) -> PyResult<(String, Vec<usize>)> {
    match layout::monotone_subsequence(&seq, a, b).map_err(value_err)? {
        Monotone::Increasing(ix) => Ok(("increasing".into(), ix)),
        Monotone::Decreasing(ix) => Ok(("decreasing".into(), ix)),
    }
}

#[pymodule]
fn bookembed_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyGadget>()?;
    m.add_class::<PyEmbedding>()?;
    m.add_class::<PyFormula>()?;
    m.add_function(wrap_pyfunction!(build_qk, m)?)?;
    m.add_function(wrap_pyfunction!(build_qk_contracted, m)?)?;
    m.add_function(wrap_pyfunction!(build_base_gn, m)?)?;
    m.add_function(wrap_pyfunction!(dq_distance, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(validate_embedding, m)?)?;
    m.add_function(wrap_pyfunction!(lemma1_scan, m)?)?;
    m.add_function(wrap_pyfunction!(classify_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(monotone_subsequence, m)?)?;
    Ok(())
}
