//! Python bindings: meshes, local matrices, single solves and convergence studies.

use dpg_lock::fem::AffineMap;
use dpg_lock::solver::{energy_residual, SolveMethod};
use dpg_lock::study::{self, BcKind, NormKind, Problem, StudyRow};
use dpg_lock::{BcLayout, Error};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(dpglock, SolverError, PyException, "The discrete system could not be solved.");

fn to_py(e: Error) -> PyErr {
    if e.is_solver_failure() {
        SolverError::new_err(e.to_string())
    } else if matches!(e, Error::Io(_)) {
        PyIOError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn parse<T>(what: &str, value: &str, options: &[(&str, T)]) -> PyResult<T>
where
    T: Copy,
{
    options.iter().find(|(k, _)| *k == value).map(|(_, v)| *v).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(k, _)| *k).collect();
        PyValueError::new_err(format!("{what} must be one of {names:?}, got {value:?}"))
    })
}

#[pyclass(name = "Mesh", module = "dpglock", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMesh {
    inner: dpg_lock::Mesh,
}

#[pymethods]
impl PyMesh {
    /// Structured mesh of (0, r1) x (0, r2) with `ny` cell rows. `bc` tags the
    /// boundary: "dirichlet" (whole boundary) or "mixed" (x = 0 and x = r1).
    #[staticmethod]
    #[pyo3(signature = (r1, r2, ny, bc = "dirichlet"))]
    fn rectangle(r1: f64, r2: f64, ny: usize, bc: &str) -> PyResult<Self> {
        let layout = parse("bc", bc, &[("dirichlet", BcLayout::AllDirichlet), ("mixed", BcLayout::LeftRightDirichlet)])?;
        let m = dpg_lock::Mesh::rectangle(r1, r2, ny).and_then(|m| m.classify_boundary(layout)).map_err(to_py)?;
        Ok(PyMesh { inner: m })
    }

    fn refine(&self) -> Self {
        PyMesh { inner: self.inner.refine_uniform() }
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_triangles(&self) -> usize {
        self.inner.num_triangles()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices().iter().map(|p| (p[0], p[1])).collect()
    }

    fn triangles(&self) -> Vec<(usize, usize, usize)> {
        self.inner.triangles().iter().map(|t| (t[0], t[1], t[2])).collect()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().iter().map(|e| (e[0], e[1])).collect()
    }

    fn max_diameter(&self) -> f64 {
        self.inner.max_diameter()
    }

    fn __repr__(&self) -> String {
        format!(
            "Mesh(vertices={}, triangles={}, edges={})",
            self.inner.num_vertices(),
            self.inner.num_triangles(),
            self.inner.num_edges()
        )
    }
}

#[pyclass(name = "StudyConfig", module = "dpglock", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyStudyConfig {
    inner: study::StudyConfig,
}

#[pymethods]
impl PyStudyConfig {
    #[new]
    #[pyo3(signature = (problem, r1, r2, *, gamma = 0.0, bc = "dirichlet", norm = "scaled", d = None, levels = 4, ny0 = 2, solver = "direct"))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        problem: &str,
        r1: f64,
        r2: f64,
        gamma: f64,
        bc: &str,
        norm: &str,
        d: Option<f64>,
        levels: usize,
        ny0: usize,
        solver: &str,
    ) -> PyResult<Self> {
        let inner = study::StudyConfig {
            problem: parse("problem", problem, &[("poisson", Problem::Poisson), ("plate", Problem::Plate)])?,
            gamma,
            r1,
            r2,
            bc: parse("bc", bc, &[("dirichlet", BcKind::Dirichlet), ("mixed", BcKind::Mixed)])?,
            norm: parse("norm", norm, &[("standard", NormKind::Standard), ("scaled", NormKind::Scaled)])?,
            d_override: d,
            levels,
            ny0,
            solver: parse("solver", solver, &[("direct", SolveMethod::Direct), ("pcg", SolveMethod::Pcg)])?,
        };
        inner.validate().map_err(to_py)?;
        Ok(PyStudyConfig { inner })
    }

    /// Scaling length used in the test norm.
    #[getter]
    fn d(&self) -> f64 {
        study::pick_d(&self.inner)
    }

    fn flags(&self) -> String {
        self.inner.flag_echo()
    }

    fn __repr__(&self) -> String {
        format!("StudyConfig({})", self.inner.flag_echo())
    }
}

#[pyclass(name = "Solution", module = "dpglock", frozen, skip_from_py_object)]
struct PySolution {
    cfg: study::StudyConfig,
    level: study::LevelSolve,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn dof_dpg(&self) -> usize {
        self.level.dofs.num_free()
    }

    #[getter]
    fn d(&self) -> f64 {
        self.level.d
    }

    #[getter]
    fn mesh(&self) -> PyMesh {
        PyMesh { inner: self.level.mesh.clone() }
    }

    /// Free unknowns in solver order.
    fn coefficients(&self) -> Vec<f64> {
        self.level.x.clone()
    }

    /// Element residuals in the dual test norm.
    fn energy_residuals(&self) -> PyResult<Vec<f64>> {
        let (eta, _) = energy_residual(&self.level.dofs, &self.level.locals, &self.level.x).map_err(to_py)?;
        Ok(eta)
    }

    /// `{"errU", "errSigma", "err"}` against the manufactured solution.
    fn errors<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = &self.level;
        let e = study::compute_errors(&s.mesh, &s.dofs, &s.locals, &s.x, &study::exact_bundle(&self.cfg)).map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item("errU", e.u)?;
        out.set_item("errSigma", e.flux)?;
        out.set_item("err", e.energy)?;
        Ok(out)
    }
}

fn row_dict<'py>(py: Python<'py>, r: &StudyRow) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("dofDPG", r.dof_dpg)?;
    out.set_item("errU", r.err_u)?;
    out.set_item("errSigma", r.err_sigma)?;
    out.set_item("err", r.err)?;
    Ok(out)
}

/// Assemble and solve on the mesh with `ny` cell rows.
#[pyfunction]
fn solve(py: Python<'_>, config: &PyStudyConfig, ny: usize) -> PyResult<PySolution> {
    let cfg = config.inner.clone();
    let level = py.detach(|| study::solve_level(&cfg, ny)).map_err(to_py)?;
    Ok(PySolution { cfg, level })
}

/// One dict per level with keys dofDPG, errU, errSigma, err.
#[pyfunction]
fn run_study<'py>(py: Python<'py>, config: &PyStudyConfig) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config.inner.clone();
    let rows = py.detach(|| study::run_study(&cfg)).map_err(to_py)?;
    rows.iter().map(|r| row_dict(py, r)).collect()
}

/// Run a study and return its CSV text (header comment, columns, rows).
#[pyfunction]
fn study_csv(py: Python<'_>, config: &PyStudyConfig) -> PyResult<String> {
    let cfg = config.inner.clone();
    let rows = py.detach(|| study::run_study(&cfg)).map_err(to_py)?;
    let mut buf = Vec::new();
    study::write_csv(&cfg, &rows, &mut buf).map_err(|e| to_py(e.into()))?;
    String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
fn loglog_slope(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(PyValueError::new_err("need two sequences of equal length >= 2"));
    }
    Ok(study::loglog_slope(&x, &y))
}

type Triangle = [(f64, f64); 3];

fn affine(points: Triangle) -> PyResult<AffineMap> {
    AffineMap::from_points(points.map(|p| [p.0, p.1])).ok_or_else(|| PyValueError::new_err("degenerate or clockwise triangle"))
}

fn rows(m: nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// 18 x 18 scaled Gram matrix of the Poisson test space on a triangle.
#[pyfunction]
fn local_gram_poisson(points: Triangle, d: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows(dpg_lock::poisson::local_gram_poisson(&affine(points)?, d)))
}

/// 55 x 55 scaled Gram matrix of the plate test space on a triangle.
#[pyfunction]
fn local_gram_plate(points: Triangle, d: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows(dpg_lock::plate::local_gram_plate(&affine(points)?, d)))
}

#[pymodule]
fn dpglock(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyStudyConfig>()?;
    m.add_class::<PySolution>()?;
    m.add("SolverError", m.py().get_type::<SolverError>())?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(study_csv, m)?)?;
    m.add_function(wrap_pyfunction!(loglog_slope, m)?)?;
    m.add_function(wrap_pyfunction!(local_gram_poisson, m)?)?;
    m.add_function(wrap_pyfunction!(local_gram_plate, m)?)?;
    Ok(())
}
