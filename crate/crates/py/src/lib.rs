//! Python bindings: closed-form U1 values and the experiment runner.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use curvlab_cli::config::schema;
use curvlab_cli::{data_csv, run, CliError, ExperimentConfig, Kind, RunOptions};
use curvlab_core::{functionals, Geometry, GeomError, PointSet, Space};

fn geom_err(e: GeomError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cli_err(e: CliError) -> PyErr {
    match e {
        CliError::Io { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn space(geometry: &str, n: usize) -> PyResult<Space> {
    let kind: Geometry = geometry.parse().map_err(geom_err)?;
    Space::new(kind, n).map_err(geom_err)
}

/// U1 of the geodesic ball of radius `r` about the base point.
#[pyfunction]
#[pyo3(signature = (geometry, r, n = 2))]
fn u1_ball(geometry: &str, r: f64, n: usize) -> PyResult<f64> {
    functionals::u1_ball(space(geometry, n)?, r).map_err(geom_err)
}

/// U1 of the hull of points given in ambient coordinates (n = 2).
#[pyfunction]
fn u1_polytope(geometry: &str, points: Vec<Vec<f64>>) -> PyResult<f64> {
    let s = space(geometry, 2)?;
    let pts = points
        .into_iter()
        .map(|c| s.point(c))
        .collect::<Result<Vec<_>, _>>()
        .map_err(geom_err)?;
    let ps = PointSet::new(s, pts).map_err(geom_err)?;
    functionals::u1_exact(&ps).map_err(geom_err)
}

/// Run an experiment config (JSON text). Returns a dict with `exit_code`,
/// `result` (the result record) and `data_csv`.
#[pyfunction]
#[pyo3(signature = (config, kind = None, seed = None, workers = None, assert_ = false))]
fn run_experiment<'py>(
    py: Python<'py>,
    config: &str,
    kind: Option<&str>,
    seed: Option<u64>,
    workers: Option<usize>,
    assert_: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = ExperimentConfig::parse(config).map_err(cli_err)?;
    let kind = match (kind, cfg.kind) {
        (Some(k), _) => k.parse::<Kind>().map_err(cli_err)?,
        (None, Some(k)) => k,
        (None, None) => return Err(PyValueError::new_err("no experiment kind given")),
    };
    let opts = RunOptions { seed, workers, assert: assert_ };
    let out = py.detach(|| run(&cfg, kind, &opts)).map_err(cli_err)?;
    let record = serde_json::to_string(&out.record).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let json = py.import("json")?;
    let dict = PyDict::new(py);
    dict.set_item("exit_code", out.exit_code(assert_))?;
    dict.set_item("result", json.call_method1("loads", (record,))?)?;
    dict.set_item("data_csv", data_csv(&out.record))?;
    Ok(dict)
}

/// JSON schema of experiment configs, as text.
#[pyfunction]
fn config_schema() -> String {
    serde_json::to_string_pretty(&schema()).expect("schema serialises")
}

#[pymodule]
fn curvlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(u1_ball, m)?)?;
    m.add_function(wrap_pyfunction!(u1_polytope, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(config_schema, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
