use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use riccati_core::care::Scaling;
use riccati_core::error::Error;
use riccati_core::harness::commands::{self, Method, SolveConfig};
use riccati_core::harness::{gen_problem, load_problem, save_problem, GeneratorSpec, ProblemFile, ProblemKind};
use riccati_core::linalg::Matrix;
use riccati_core::report::SolveReport;

create_exception!(riccati, RiccatiError, PyException);

fn err(e: Error) -> PyErr {
    RiccatiError::new_err(e.to_string())
}

fn kind(name: &str) -> PyResult<ProblemKind> {
    name.parse().map_err(|e: Error| PyValueError::new_err(e.to_string()))
}

fn to_matrix(rows: Vec<Vec<Complex64>>, name: &str) -> PyResult<Matrix> {
    Matrix::from_complex_rows(&rows).map_err(|e| PyValueError::new_err(format!("{name}: {e}")))
}

/// A problem file: kind, size and the coefficient matrices.
#[pyclass(module = "riccati", name = "Problem")]
struct PyProblem {
    inner: ProblemFile,
}

#[pymethods]
impl PyProblem {
    /// Builds a problem from nested lists (or arrays) of numbers.
    #[new]
    #[pyo3(signature = (kind, a, q=None, g=None, c=None, shifts=None))]
    fn new(
        kind: &str,
        a: Vec<Vec<Complex64>>,
        q: Option<Vec<Vec<Complex64>>>,
        g: Option<Vec<Vec<Complex64>>>,
        c: Option<Vec<Vec<Complex64>>>,
        shifts: Option<Vec<Complex64>>,
    ) -> PyResult<Self> {
        let a = to_matrix(a, "A")?;
        let mut file = ProblemFile::new(self::kind(kind)?, a.rows());
        file.set_matrix("A", &a);
        for (name, m) in [("Q", q), ("G", g), ("C", c)] {
            if let Some(m) = m {
                file.set_matrix(name, &to_matrix(m, name)?);
            }
        }
        file.shifts = shifts.map(|s| s.into_iter().map(|z| [z.re, z.im]).collect());
        file.validate().map_err(err)?;
        Ok(Self { inner: file })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        load_problem(&path).map(|inner| Self { inner }).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        ProblemFile::from_json(text).map(|inner| Self { inner }).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_problem(&path, &self.inner).map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind.name()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn seed(&self) -> Option<u64> {
        self.inner.metadata.as_ref().and_then(|m| m.seed)
    }

    /// Matrix `"A"`, `"G"`, `"Q"` or `"C"` as a list of rows.
    fn matrix(&self, name: &str) -> PyResult<Vec<Vec<Complex64>>> {
        self.inner.matrix(name).map(|m| m.to_rows()).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Problem(kind={}, n={})", self.inner.kind, self.inner.n)
    }
}

#[pyclass(module = "riccati", name = "Report", get_all, frozen)]
struct PyReport {
    method: String,
    converged: bool,
    iterations: usize,
    final_residual: f64,
    rate_estimate: f64,
    closed_loop_radius: Option<f64>,
    residual_history: Vec<f64>,
    elapsed_ns: Vec<u64>,
    x: Vec<Vec<Complex64>>,
}

impl PyReport {
    fn new(method: Method, r: SolveReport) -> Self {
        Self {
            method: method.name().to_string(),
            converged: r.converged,
            iterations: r.iterations,
            final_residual: r.final_residual(),
            rate_estimate: r.rate_estimate,
            closed_loop_radius: r.closed_loop_radius,
            x: r.x.as_matrix().to_rows(),
            residual_history: r.residual_history,
            elapsed_ns: r.elapsed_ns,
        }
    }
}

#[pymethods]
impl PyReport {
    fn __repr__(&self) -> String {
        format!(
            "Report(method={}, converged={}, iterations={}, final_residual={:.3e})",
            self.method,
            if self.converged { "True" } else { "False" },
            self.iterations,
            self.final_residual
        )
    }
}

#[pyclass(module = "riccati", name = "Check", get_all, frozen)]
struct PyCheck {
    name: String,
    value: Option<f64>,
    threshold: f64,
    status: String,
    note: String,
}

#[pymethods]
impl PyCheck {
    #[getter]
    fn passed(&self) -> bool {
        self.status != "FAIL"
    }

    fn __repr__(&self) -> String {
        format!("Check({}: {})", self.name, self.status)
    }
}

#[pyclass(module = "riccati", name = "BenchRow", get_all, frozen)]
struct PyBenchRow {
    kind: String,
    method: String,
    n: usize,
    iterations: usize,
    final_residual: f64,
    wall_ns: u128,
    converged: bool,
}

#[pymethods]
impl PyBenchRow {
    fn __repr__(&self) -> String {
        format!("BenchRow({} {} n={} iterations={})", self.kind, self.method, self.n, self.iterations)
    }
}

/// Seeded random problem of the given kind.
#[pyfunction]
#[pyo3(signature = (kind, n, seed=0, r=None, a=None, b=None, p=None, critical=false, nonnormal=0.0))]
#[allow(clippy::too_many_arguments)]
fn generate(
    kind: &str,
    n: usize,
    seed: u64,
    r: Option<f64>,
    a: Option<f64>,
    b: Option<f64>,
    p: Option<usize>,
    critical: bool,
    nonnormal: f64,
) -> PyResult<PyProblem> {
    let mut spec = GeneratorSpec::new(self::kind(kind)?, n, seed);
    spec.r = r;
    spec.p = p;
    spec.critical = critical;
    spec.nonnormal = nonnormal;
    spec.interval = match (a, b) {
        (None, None) => None,
        (Some(a), Some(b)) => Some((a, b)),
        _ => return Err(PyValueError::new_err("a and b go together")),
    };
    gen_problem(&spec).map(|inner| PyProblem { inner }).map_err(err)
}

/// Method names accepted for a problem kind.
#[pyfunction]
fn methods(kind: &str) -> PyResult<Vec<&'static str>> {
    Ok(Method::for_kind(self::kind(kind)?).iter().map(|m| m.name()).collect())
}

fn scaling(name: Option<&str>) -> PyResult<Option<Scaling>> {
    match name {
        None => Ok(None),
        Some("determinantal") => Ok(Some(Scaling::Determinantal)),
        Some("none") => Ok(Some(Scaling::None)),
        Some(other) => Err(PyValueError::new_err(format!("unknown scaling \"{other}\""))),
    }
}

/// Runs one method. Non-convergence is reported, not raised.
#[pyfunction]
#[pyo3(signature = (problem, method, tol=None, max_iter=None, shifts=None, scaling=None))]
fn solve(
    py: Python<'_>,
    problem: &PyProblem,
    method: &str,
    tol: Option<f64>,
    max_iter: Option<usize>,
    shifts: Option<Vec<Complex64>>,
    scaling: Option<&str>,
) -> PyResult<PyReport> {
    let file = &problem.inner;
    let m = Method::parse(file.kind, method)
        .ok_or_else(|| PyValueError::new_err(format!("unknown method \"{method}\" for {}", file.kind)))?;
    let cfg = SolveConfig {
        tol,
        max_iter,
        shifts,
        scaling: self::scaling(scaling)?,
    };
    let report = py.detach(|| commands::solve_file(file, m, &cfg)).map_err(err)?;
    Ok(PyReport::new(m, report))
}

/// Oracle and structure checks for a problem.
#[pyfunction]
fn verify(py: Python<'_>, problem: &PyProblem) -> PyResult<Vec<PyCheck>> {
    let checks = py.detach(|| commands::verify_checks(&problem.inner)).map_err(err)?;
    Ok(checks
        .into_iter()
        .map(|c| PyCheck {
            status: c.status.to_string(),
            name: c.name,
            value: c.value,
            threshold: c.threshold,
            note: c.note,
        })
        .collect())
}

/// Basic against doubling iteration counts on generated problems.
#[pyfunction(name = "bench")]
#[pyo3(signature = (kind, sizes, seed=0, tol=None, max_iter=None))]
fn run_bench(
    py: Python<'_>,
    kind: &str,
    sizes: Vec<usize>,
    seed: u64,
    tol: Option<f64>,
    max_iter: Option<usize>,
) -> PyResult<Vec<PyBenchRow>> {
    if sizes.is_empty() {
        return Err(PyValueError::new_err("sizes must not be empty"));
    }
    let kind = self::kind(kind)?;
    let cfg = SolveConfig {
        tol,
        max_iter,
        ..SolveConfig::default()
    };
    let rows = py.detach(|| commands::bench_rows(kind, &sizes, seed, &cfg)).map_err(err)?;
    Ok(rows
        .into_iter()
        .map(|r| PyBenchRow {
            kind: r.kind.name().to_string(),
            method: r.method.name().to_string(),
            n: r.n,
            iterations: r.iterations,
            final_residual: r.final_residual,
            wall_ns: r.wall_ns,
            converged: r.converged,
        })
        .collect())
}

#[pymodule]
fn riccati(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RiccatiError", m.py().get_type::<RiccatiError>())?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyCheck>()?;
    m.add_class::<PyBenchRow>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(methods, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    Ok(())
}
