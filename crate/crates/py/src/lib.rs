//! Python bindings: closed forms, the radial solver, and the scenario runner.

use fuchs_core::anisotropy::AnisotropyMatrix;
use fuchs_core::cli::{run, ScenarioConfig};
use fuchs_core::fundamental::{self, CapacityNormalization, FundamentalSolution};
use fuchs_core::potential::PotentialSpec;
use fuchs_core::radial::{self, RadialProblem, SolverSpec};
use fuchs_core::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(err: Error) -> PyErr {
    match fuchs_core::cli::exit_code(&err) {
        2 => PyValueError::new_err(err.to_string()),
        _ => PyRuntimeError::new_err(err.to_string()),
    }
}

/// Identity when `matrix` is omitted, otherwise a square nested list.
fn build_matrix(d: usize, matrix: Option<Vec<Vec<f64>>>) -> PyResult<AnisotropyMatrix> {
    match matrix {
        None => AnisotropyMatrix::identity(d).map_err(to_py),
        Some(rows) => {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(PyValueError::new_err(format!("matrix must be {d}x{d}")));
            }
            AnisotropyMatrix::from_row_major(d, &rows.concat()).map_err(to_py)
        }
    }
}

fn build_potential(d: usize, p: f64, spec: Option<&str>) -> PyResult<fuchs_core::potential::Potential> {
    let spec: PotentialSpec = match spec {
        None => PotentialSpec::Zero,
        Some(text) => serde_json::from_str(text).map_err(|e| PyValueError::new_err(format!("potential: {e}")))?,
    };
    spec.build(d, p).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (p, d, matrix=None))]
fn fundamental_constant(p: f64, d: usize, matrix: Option<Vec<Vec<f64>>>) -> PyResult<f64> {
    fundamental::fundamental_constant(p, d, &build_matrix(d, matrix)?).map_err(to_py)
}

/// `μ(x)` for the pole at the origin.
#[pyfunction]
#[pyo3(signature = (p, x, matrix=None))]
fn mu(p: f64, x: Vec<f64>, matrix: Option<Vec<Vec<f64>>>) -> PyResult<f64> {
    let fs = FundamentalSolution::new(p, build_matrix(x.len(), matrix)?).map_err(to_py)?;
    fs.mu(&x).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (p, d, r, matrix=None, rtol=1e-10))]
fn flux_integral(p: f64, d: usize, r: f64, matrix: Option<Vec<Vec<f64>>>, rtol: f64) -> PyResult<f64> {
    let fs = FundamentalSolution::new(p, build_matrix(d, matrix)?).map_err(to_py)?;
    fs.flux_integral(r, rtol).map_err(to_py)
}

#[pyfunction]
fn hardy_constant(p: f64, d: usize) -> f64 {
    fundamental::hardy_constant(p, d)
}

#[pyfunction]
fn weighted_capacity(p: f64, d: usize, beta: f64, r: f64, big_r: f64) -> PyResult<f64> {
    fundamental::weighted_capacity(p, d, beta, r, big_r, CapacityNormalization::Full).map_err(to_py)
}

#[pyfunction]
fn criticality_closed_form(p: f64, d: usize, k: f64, r: f64) -> f64 {
    radial::criticality_closed_form(p, d, k, r)
}

/// Radial Dirichlet problem; `potential` is a JSON spec such as
/// `{"kind": "hardy", "lambda": 0.1}`. Returns a dict of lists `r`, `u`, `flux`.
#[pyfunction]
#[pyo3(signature = (p, d, inner, outer, bc_inner, bc_outer, potential=None, matrix=None, cells=2048))]
#[allow(clippy::too_many_arguments)]
fn solve_radial<'py>(
    py: Python<'py>,
    p: f64,
    d: usize,
    inner: f64,
    outer: f64,
    bc_inner: f64,
    bc_outer: f64,
    potential: Option<&str>,
    matrix: Option<Vec<Vec<f64>>>,
    cells: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let problem = RadialProblem::new(
        p,
        build_matrix(d, matrix)?,
        build_potential(d, p, potential)?,
        inner,
        outer,
        bc_inner,
        bc_outer,
    )
    .map_err(to_py)?;
    let spec = SolverSpec { cells, ..Default::default() };
    let sol = py.allow_threads(|| radial::solve_radial_dirichlet(&problem, &spec)).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("r", sol.grid.clone())?;
    out.set_item("u", sol.values.clone())?;
    out.set_item("flux", sol.flux.clone())?;
    out.set_item("conservation_residual", sol.conservation_residual())?;
    Ok(out)
}

/// Runs a scenario config (JSON text) and returns the report as JSON text.
#[pyfunction]
fn run_scenario(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg = ScenarioConfig::parse(config).map_err(to_py)?;
    let report = py.allow_threads(|| run(&cfg)).map_err(to_py)?;
    Ok(report.to_json())
}

#[pymodule]
fn fuchs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(fundamental_constant, m)?)?;
    m.add_function(wrap_pyfunction!(mu, m)?)?;
    m.add_function(wrap_pyfunction!(flux_integral, m)?)?;
    m.add_function(wrap_pyfunction!(hardy_constant, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(criticality_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(solve_radial, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
