//! Python bindings for the chainrec toolkit.
//!
//! Exposes the map DSL, grids and cell sets, the chain-recurrence and
//! attractor pipelines, and the exact finite-state oracle. Built as the
//! extension module `_chainrec`; see `python/smoke_test.py` at the repo root
//! for a usage tour.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use chainrec::attractor as at;
use chainrec::chain;
use chainrec::expr;
use chainrec::finite;
use chainrec::grid;
use chainrec::words;
use chainrec::IntervalBox2;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn box_from_tuple(b: (f64, f64, f64, f64)) -> PyResult<IntervalBox2> {
    IntervalBox2::new(b.0, b.1, b.2, b.3).map_err(value_err)
}

fn box_to_tuple(b: &IntervalBox2) -> (f64, f64, f64, f64) {
    (b.re_lo, b.re_hi, b.im_lo, b.im_hi)
}

/// A parsed generator map, evaluable on points and rigorously on boxes.
#[pyclass(name = "MapExpr", frozen)]
struct PyMapExpr {
    inner: expr::MapExpr,
}

#[pymethods]
impl PyMapExpr {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        Ok(PyMapExpr {
            inner: expr::parse_map_expr(source).map_err(value_err)?,
        })
    }

    /// Exact evaluation at a complex point.
    fn eval(&self, z: Complex64) -> Complex64 {
        expr::eval_point(&self.inner, z)
    }

    /// Rigorous image enclosure of a rectangle (re_lo, re_hi, im_lo, im_hi).
    fn eval_box(&self, b: (f64, f64, f64, f64)) -> PyResult<(f64, f64, f64, f64)> {
        let img = expr::eval_box(&self.inner, &box_from_tuple(b)?);
        Ok(box_to_tuple(&img))
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("MapExpr({:?})", self.inner.to_string())
    }
}

/// A uniform box grid over a compact rectangle, optionally trimmed to the
/// unit disc.
#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: grid::Grid,
}

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (bounds, depth, membership="rect"))]
    fn new(bounds: (f64, f64, f64, f64), depth: u32, membership: &str) -> PyResult<Self> {
        let m = match membership {
            "rect" => grid::Membership::All,
            "disc" => grid::Membership::Disc {
                center_re: 0.0,
                center_im: 0.0,
                radius: 1.0,
            },
            other => return Err(PyValueError::new_err(format!("unknown membership `{other}`"))),
        };
        Ok(PyGrid {
            inner: grid::Grid::new(box_from_tuple(bounds)?, depth, m).map_err(value_err)?,
        })
    }

    #[getter]
    fn depth(&self) -> u32 {
        self.inner.depth()
    }

    #[getter]
    fn bounds(&self) -> (f64, f64, f64, f64) {
        box_to_tuple(&self.inner.bounds())
    }

    #[getter]
    fn cell_width(&self) -> f64 {
        self.inner.cell_width()
    }

    fn cell_count(&self) -> usize {
        self.inner.cell_count()
    }

    /// All retained cells as the full region.
    fn all_cells(&self) -> PyBoxSet {
        PyBoxSet {
            inner: self.inner.all_cells(),
        }
    }

    /// Cells meeting the closed ball of the given center and radius.
    fn cover_ball(&self, center: Complex64, radius: f64) -> PyBoxSet {
        PyBoxSet {
            inner: grid::cover_ball(&self.inner, center, radius),
        }
    }

    /// The cell containing a point, or None outside the bounds.
    fn locate(&self, z: Complex64) -> Option<(u32, u32)> {
        self.inner.locate(z).map(|c| (c.ix, c.iy))
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(depth={}, cells={})",
            self.inner.depth(),
            self.inner.cell_count()
        )
    }
}

/// An immutable set of grid cells.
#[pyclass(name = "BoxSet", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBoxSet {
    inner: grid::BoxSet,
}

#[pymethods]
impl PyBoxSet {
    #[new]
    fn new(g: &PyGrid, cells: Vec<(u32, u32)>) -> PyResult<Self> {
        let cells = cells
            .into_iter()
            .map(|(ix, iy)| grid::Cell::new(ix, iy))
            .collect();
        Ok(PyBoxSet {
            inner: grid::BoxSet::from_cells(g.inner, cells).map_err(value_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn cells(&self) -> Vec<(u32, u32)> {
        self.inner.cells().iter().map(|c| (c.ix, c.iy)).collect()
    }

    fn contains(&self, ix: u32, iy: u32) -> bool {
        self.inner.contains(grid::Cell::new(ix, iy))
    }

    fn union(&self, other: &PyBoxSet) -> PyBoxSet {
        PyBoxSet {
            inner: self.inner.union(&other.inner),
        }
    }

    fn intersect(&self, other: &PyBoxSet) -> PyBoxSet {
        PyBoxSet {
            inner: self.inner.intersect(&other.inner),
        }
    }

    fn difference(&self, other: &PyBoxSet) -> PyBoxSet {
        PyBoxSet {
            inner: self.inner.difference(&other.inner),
        }
    }

    fn complement(&self) -> PyBoxSet {
        PyBoxSet {
            inner: self.inner.complement(),
        }
    }

    fn is_subset(&self, other: &PyBoxSet) -> bool {
        self.inner.is_subset(&other.inner)
    }

    /// Cells within Euclidean distance eps of the set; eps=0 adds exactly the
    /// touching neighbors (one-layer closure).
    fn fatten(&self, eps: f64) -> PyBoxSet {
        PyBoxSet {
            inner: self.inner.fatten(eps),
        }
    }

    /// Symmetric Hausdorff distance on cell centers.
    fn hausdorff(&self, other: &PyBoxSet) -> PyResult<f64> {
        self.inner.hausdorff(&other.inner).map_err(value_err)
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        self.inner
            .write_csv(std::path::Path::new(path))
            .map_err(runtime_err)
    }

    fn write_pgm(&self, path: &str) -> PyResult<()> {
        self.inner
            .write_pgm(std::path::Path::new(path))
            .map_err(runtime_err)
    }

    fn __repr__(&self) -> String {
        format!("BoxSet({} cells)", self.inner.len())
    }
}

/// A finitely generated system of maps given by DSL expressions.
#[pyclass(name = "GeneratorSystem", frozen)]
struct PyGeneratorSystem {
    inner: words::GeneratorSystem,
}

#[pymethods]
impl PyGeneratorSystem {
    #[new]
    fn new(exprs: Vec<String>) -> PyResult<Self> {
        let gens = exprs
            .iter()
            .map(|s| expr::parse_map_expr(s).map_err(value_err))
            .collect::<PyResult<Vec<_>>>()?;
        Ok(PyGeneratorSystem {
            inner: words::GeneratorSystem::new(gens).map_err(value_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Apply the word (generator index list, rightmost applied first).
    fn apply_word(&self, word: Vec<usize>, z: Complex64) -> PyResult<Complex64> {
        let w = words::Word::new(word, self.inner.len()).map_err(value_err)?;
        Ok(words::apply_word(&self.inner, &w, z))
    }

    /// Sampled commutation check over a rectangle.
    fn check_abelian_sampled(
        &self,
        bounds: (f64, f64, f64, f64),
        n_samples: usize,
    ) -> PyResult<bool> {
        Ok(words::check_abelian_sampled(
            &self.inner,
            &box_from_tuple(bounds)?,
            n_samples,
        ))
    }
}

fn parse_words(sys: &words::GeneratorSystem, lists: Vec<Vec<usize>>) -> PyResult<Vec<words::Word>> {
    lists
        .into_iter()
        .map(|l| words::Word::new(l, sys.len()).map_err(value_err))
        .collect()
}

/// Outer approximation of the chain recurrent set over the schedules.
#[pyfunction]
fn approx_cr(
    g: &PyGrid,
    sys: &PyGeneratorSystem,
    g_schedule: Vec<Vec<usize>>,
    eps_schedule: Vec<f64>,
    step_budget: usize,
) -> PyResult<PyBoxSet> {
    let g_words = parse_words(&sys.inner, g_schedule)?;
    let cr = chain::approx_cr(&g.inner, &sys.inner, &g_words, &eps_schedule, step_budget)
        .map_err(runtime_err)?;
    Ok(PyBoxSet { inner: cr })
}

/// Chain components of `cr` across the schedules, as a list of cell sets.
#[pyfunction]
fn chain_components(
    g: &PyGrid,
    sys: &PyGeneratorSystem,
    cr: &PyBoxSet,
    g_schedule: Vec<Vec<usize>>,
    eps_schedule: Vec<f64>,
    step_budget: usize,
) -> PyResult<Vec<PyBoxSet>> {
    let g_words = parse_words(&sys.inner, g_schedule)?;
    let comps = chain::chain_components_schedule(
        &g.inner,
        &sys.inner,
        &cr.inner,
        &g_words,
        &eps_schedule,
        step_budget,
    )
    .map_err(runtime_err)?;
    Ok(comps
        .classes()
        .iter()
        .map(|c| PyBoxSet { inner: c.clone() })
        .collect())
}

/// Pairwise transitivity test; returns (transitive, failing_pair | None).
#[pyfunction]
fn is_topologically_transitive(
    g: &PyGrid,
    sys: &PyGeneratorSystem,
    word_budget: usize,
) -> PyResult<(bool, Option<((u32, u32), (u32, u32))>)> {
    let t = chain::is_topologically_transitive(&g.inner, &sys.inner, word_budget)
        .map_err(runtime_err)?;
    Ok((
        t.transitive,
        t.failing_pair.map(|(a, b)| ((a.ix, a.iy), (b.ix, b.iy))),
    ))
}

/// Certify a trapping region; returns a dict with the outcome.
#[pyfunction]
fn certify_trapping<'py>(
    py: Python<'py>,
    g: &PyGrid,
    sys: &PyGeneratorSystem,
    u: &PyBoxSet,
    h: Vec<usize>,
    step_budget: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let hw = words::Word::new(h, sys.inner.len()).map_err(value_err)?;
    let out = at::certify_trapping(&g.inner, &sys.inner, &u.inner, &hw, step_budget)
        .map_err(runtime_err)?;
    let dict = PyDict::new(py);
    match out {
        at::CertifyOutcome::Certified(cert) => {
            dict.set_item("certified", true)?;
            dict.set_item(
                "image_set",
                PyBoxSet {
                    inner: cert.image_set().clone(),
                },
            )?;
        }
        at::CertifyOutcome::Rejected { violating_cell, .. } => {
            dict.set_item("certified", false)?;
            dict.set_item("violating_cell", (violating_cell.ix, violating_cell.iy))?;
        }
    }
    Ok(dict)
}

/// Certify, compute the attractor and its basin, and return a dict.
#[pyfunction]
fn compute_attractor<'py>(
    py: Python<'py>,
    g: &PyGrid,
    sys: &PyGeneratorSystem,
    u: &PyBoxSet,
    h: Vec<usize>,
    step_budget: usize,
    alpha0: usize,
    m_max: usize,
    omega_depth: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let hw = words::Word::new(h, sys.inner.len()).map_err(value_err)?;
    let out = at::certify_trapping(&g.inner, &sys.inner, &u.inner, &hw, step_budget)
        .map_err(runtime_err)?;
    let dict = PyDict::new(py);
    match out {
        at::CertifyOutcome::Rejected { violating_cell, .. } => {
            dict.set_item("certified", false)?;
            dict.set_item("violating_cell", (violating_cell.ix, violating_cell.iy))?;
        }
        at::CertifyOutcome::Certified(cert) => {
            let mut rec = at::compute_attractor(&g.inner, &sys.inner, cert, alpha0, m_max)
                .map_err(runtime_err)?;
            let b = at::basin(
                &g.inner,
                &sys.inner,
                &rec,
                alpha0,
                omega_depth,
                step_budget,
            )
            .map_err(runtime_err)?;
            rec.basin = Some(b.clone());
            dict.set_item("certified", true)?;
            dict.set_item("stabilized", rec.stabilized)?;
            dict.set_item("m_used", rec.m_used)?;
            dict.set_item(
                "attractor",
                PyBoxSet {
                    inner: rec.attractor.clone(),
                },
            )?;
            dict.set_item("basin", PyBoxSet { inner: b })?;
        }
    }
    Ok(dict)
}

/// Omega-limit cells of a start set for the designated generator.
#[pyfunction]
fn omega_limit_cells(
    g: &PyGrid,
    sys: &PyGeneratorSystem,
    start: &PyBoxSet,
    alpha0: usize,
    omega_depth: usize,
    step_budget: usize,
) -> PyResult<PyBoxSet> {
    let om = at::omega_limit_cells(
        &g.inner,
        &sys.inner,
        &start.inner,
        alpha0,
        omega_depth,
        step_budget,
    )
    .map_err(runtime_err)?;
    Ok(PyBoxSet { inner: om })
}

/// An exact finite metric space with generator lookup tables.
#[pyclass(name = "FiniteSystem", frozen)]
struct PyFiniteSystem {
    inner: finite::FiniteSystem,
    closure: finite::MonoidClosure,
}

#[pymethods]
impl PyFiniteSystem {
    #[new]
    fn new(n: usize, dist: Vec<Vec<f64>>, generators: Vec<Vec<usize>>) -> PyResult<Self> {
        let inner = finite::FiniteSystem::new(n, dist, generators).map_err(value_err)?;
        let closure = finite::monoid_closure(&inner).map_err(value_err)?;
        Ok(PyFiniteSystem { inner, closure })
    }

    /// Seeded random system (abelian by construction when requested).
    #[staticmethod]
    fn random(seed: u64, n_max: usize, abelian_only: bool) -> PyResult<Self> {
        let inner = finite::random_system(seed, n_max, abelian_only);
        let closure = finite::monoid_closure(&inner).map_err(value_err)?;
        Ok(PyFiniteSystem { inner, closure })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    fn closure_size(&self) -> usize {
        self.closure.len()
    }

    fn is_abelian(&self) -> bool {
        self.inner.is_abelian()
    }

    /// Exact chain recurrent states.
    fn exact_cr(&self) -> Vec<usize> {
        finite::exact_cr(&self.inner, &self.closure).states()
    }

    /// Exact chain components as state lists.
    fn exact_chain_components(&self) -> Vec<Vec<usize>> {
        finite::exact_chain_components(&self.inner, &self.closure)
            .iter()
            .map(|c| c.states())
            .collect()
    }

    /// (topological, chain, dense_orbit_state | None)
    fn exact_transitivity(&self) -> (bool, bool, Option<usize>) {
        let t = finite::exact_transitivity(&self.inner, &self.closure);
        (t.topological, t.chain, t.dense_orbit)
    }

    /// Exact duality comparison as a JSON-compatible dict.
    fn exact_duality<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = finite::exact_duality(&self.inner, &self.closure).map_err(runtime_err)?;
        let json = serde_json::to_value(&d).map_err(runtime_err)?;
        json_to_pydict(py, &json)
    }

    /// The system conjugated by a state permutation.
    fn conjugate(&self, rho: Vec<usize>) -> PyResult<PyFiniteSystem> {
        let inner = finite::conjugate_system(&self.inner, &rho).map_err(value_err)?;
        let closure = finite::monoid_closure(&inner).map_err(value_err)?;
        Ok(PyFiniteSystem { inner, closure })
    }
}

fn json_to_pydict<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    let obj = v
        .as_object()
        .ok_or_else(|| PyRuntimeError::new_err("expected a JSON object"))?;
    for (k, val) in obj {
        dict.set_item(k, json_to_py(py, val)?)?;
    }
    Ok(dict)
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Py<pyo3::types::PyAny>> {
    use pyo3::IntoPyObjectExt;
    use serde_json::Value;
    match v {
        Value::Null => Ok(py.None().into_bound(py).unbind()),
        Value::Bool(b) => b.into_py_any(py),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)
            }
        }
        Value::String(s) => s.into_py_any(py),
        Value::Array(items) => {
            let list = pyo3::types::PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_py_any(py)
        }
        Value::Object(_) => json_to_pydict(py, v)?.into_py_any(py),
    }
}

#[pymodule]
fn _chainrec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyMapExpr>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyBoxSet>()?;
    m.add_class::<PyGeneratorSystem>()?;
    m.add_class::<PyFiniteSystem>()?;
    m.add_function(wrap_pyfunction!(approx_cr, m)?)?;
    m.add_function(wrap_pyfunction!(chain_components, m)?)?;
    m.add_function(wrap_pyfunction!(is_topologically_transitive, m)?)?;
    m.add_function(wrap_pyfunction!(certify_trapping, m)?)?;
    m.add_function(wrap_pyfunction!(compute_attractor, m)?)?;
    m.add_function(wrap_pyfunction!(omega_limit_cells, m)?)?;
    Ok(())
}
