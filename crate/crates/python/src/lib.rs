//! Python bindings: calibration, link budgets, sweeps, histograms,
//! optimization and QUBO construction.

use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use risqkd_core::experiments::{
    calibrate as fit_calibration, delta_metrics, evaluate_point, phase_histogram as histogram_grids,
    sweep_elevation, RunConfig, Scenario,
};
use risqkd_core::metrics::{Calibration, Metrics};
use risqkd_core::objective::Objective;
use risqkd_core::qubo::{build_qubo as build_model, read_qubo, write_qubo, QuboModel};
use risqkd_core::solvers::{optimize_secure, run_heuristic, ObjectiveKind, SolverConfig, SolverKind};
use risqkd_core::Error;

create_exception!(risqkd, ConfigError, PyValueError, "Invalid configuration or input.");
create_exception!(risqkd, CalibrationError, PyRuntimeError, "A calibration fit did not bracket its anchor.");
create_exception!(risqkd, InfeasibleError, PyRuntimeError, "No visited configuration met the QBER limit.");

fn py_err(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::Domain(_) | Error::Structural(_) => ConfigError::new_err(msg),
        Error::Calibration(_) => CalibrationError::new_err(msg),
        Error::Infeasible { .. } => InfeasibleError::new_err(msg),
        Error::Io(_) => PyIOError::new_err(msg),
    }
}

fn config_from(text: Option<&str>) -> PyResult<RunConfig> {
    match text {
        Some(t) => RunConfig::from_toml_str(t).map_err(py_err),
        None => Ok(RunConfig::default()),
    }
}

fn calibration_dict<'py>(py: Python<'py>, c: &Calibration) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("raw_rate_scale", c.raw_rate_scale)?;
    d.set_item("effective_visibility", c.effective_visibility)?;
    d.set_item("reference_transmittance", c.reference_transmittance)?;
    d.set_item("rf_gain_offset_db", c.rf_gain_offset_db)?;
    d.set_item("element_amp_scale", c.element_amp_scale)?;
    Ok(d)
}

fn calibration_from(d: &Bound<'_, PyDict>) -> PyResult<Calibration> {
    let field = |key: &str| -> PyResult<Bound<'_, PyAny>> {
        d.get_item(key)?.ok_or_else(|| ConfigError::new_err(format!("calibration is missing '{key}'")))
    };
    let cal = Calibration {
        raw_rate_scale: field("raw_rate_scale")?.extract()?,
        effective_visibility: field("effective_visibility")?.extract()?,
        reference_transmittance: field("reference_transmittance")?.extract()?,
        rf_gain_offset_db: field("rf_gain_offset_db")?.extract()?,
        element_amp_scale: field("element_amp_scale")?.extract()?,
    };
    cal.validate().map_err(py_err)?;
    Ok(cal)
}

fn resolve(py: Python<'_>, config: Option<&str>, calibration: Option<&Bound<'_, PyDict>>) -> PyResult<(RunConfig, Calibration)> {
    let cfg = config_from(config)?;
    let cal = match calibration {
        Some(d) => calibration_from(d)?,
        None => {
            let c = cfg.clone();
            py.detach(move || fit_calibration(&c)).map_err(py_err)?
        }
    };
    Ok((cfg, cal))
}

fn metrics_into(d: &Bound<'_, PyDict>, m: &Metrics) -> PyResult<()> {
    d.set_item("snr_db", m.snr_db())?;
    d.set_item("ber", m.ber)?;
    d.set_item("qber", m.qber)?;
    d.set_item("skr_bits_s", m.skr_bits_s)?;
    d.set_item("cost", m.cost)?;
    Ok(())
}

fn solver_kind(name: &str) -> PyResult<SolverKind> {
    match name {
        "brute" => Ok(SolverKind::Brute),
        "anneal" => Ok(SolverKind::Anneal),
        "tabu" => Ok(SolverKind::Tabu),
        "bcd" => Ok(SolverKind::Bcd),
        other => Err(ConfigError::new_err(format!("unknown solver '{other}'"))),
    }
}

fn objective_kind(name: &str) -> PyResult<ObjectiveKind> {
    match name {
        "exact" => Ok(ObjectiveKind::Exact),
        "quadratic" => Ok(ObjectiveKind::Quadratic),
        other => Err(ConfigError::new_err(format!("unknown objective '{other}'"))),
    }
}

/// The default run configuration as TOML text.
#[pyfunction]
fn default_config() -> PyResult<String> {
    RunConfig::default().to_toml_string().map_err(py_err)
}

/// Fits the calibration constants for a configuration (TOML text).
#[pyfunction]
#[pyo3(signature = (config=None))]
fn calibrate<'py>(py: Python<'py>, config: Option<&str>) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config_from(config)?;
    let cal = py.detach(move || fit_calibration(&cfg)).map_err(py_err)?;
    calibration_dict(py, &cal)
}

/// Metrics of one link, optimized and security-checked when `n > 0`.
#[pyfunction]
#[pyo3(signature = (elevation, n=0, trial=0, config=None, calibration=None))]
fn link_budget<'py>(
    py: Python<'py>,
    elevation: f64,
    n: usize,
    trial: usize,
    config: Option<&str>,
    calibration: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let (cfg, cal) = resolve(py, config, calibration)?;
    let row = py.detach(|| evaluate_point(&cfg, &cal, elevation, n, trial)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("elevation_deg", row.elevation_deg)?;
    d.set_item("n_elements", row.n_elements)?;
    d.set_item("snr_db", row.snr_db)?;
    d.set_item("ber", row.ber)?;
    d.set_item("qber", row.qber)?;
    d.set_item("skr_bits_s", row.skr_bits_s)?;
    d.set_item("cost", row.cost)?;
    d.set_item("feasible", row.feasible)?;
    Ok(d)
}

/// Elevation sweep; one dict per row with the improvement columns added.
#[pyfunction]
#[pyo3(signature = (config=None, calibration=None))]
fn sweep<'py>(py: Python<'py>, config: Option<&str>, calibration: Option<&Bound<'py, PyDict>>) -> PyResult<Bound<'py, PyList>> {
    let (cfg, cal) = resolve(py, config, calibration)?;
    let (rows, deltas) = py
        .detach(|| {
            let rows = sweep_elevation(&cfg, &cal)?;
            let deltas = delta_metrics(&rows)?;
            Ok::<_, Error>((rows, deltas))
        })
        .map_err(py_err)?;
    let out = PyList::empty(py);
    for (r, dr) in rows.iter().zip(&deltas) {
        let d = PyDict::new(py);
        d.set_item("elevation_deg", r.elevation_deg)?;
        d.set_item("n_elements", r.n_elements)?;
        d.set_item("trial", r.trial)?;
        d.set_item("snr_db", r.snr_db)?;
        d.set_item("ber", r.ber)?;
        d.set_item("qber", r.qber)?;
        d.set_item("skr_bits_s", r.skr_bits_s)?;
        d.set_item("cost", r.cost)?;
        d.set_item("feasible", r.feasible)?;
        d.set_item("solver_evals", r.solver_evals)?;
        d.set_item("delta_snr_db", dr.delta_snr_db)?;
        d.set_item("delta_qber_pp", dr.delta_qber_pp)?;
        out.append(d)?;
    }
    Ok(out)
}

/// Joint phase-level histograms; `counts[q][c]` per attenuation level.
#[pyfunction]
#[pyo3(signature = (attenuation=None, config=None, calibration=None))]
fn phase_histogram<'py>(
    py: Python<'py>,
    attenuation: Option<Vec<f64>>,
    config: Option<&str>,
    calibration: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyList>> {
    let (cfg, cal) = resolve(py, config, calibration)?;
    let levels = attenuation.unwrap_or_else(|| cfg.sweep.attenuation_levels.clone());
    let grids = py.detach(|| histogram_grids(&cfg, &cal, &levels)).map_err(py_err)?;
    let out = PyList::empty(py);
    for g in &grids {
        let d = PyDict::new(py);
        d.set_item("attenuation", g.attenuation)?;
        d.set_item("counts", g.counts.clone())?;
        d.set_item("chi_square", g.chi_square)?;
        d.set_item("feasible", g.feasible)?;
        d.set_item("qber", g.qber)?;
        out.append(d)?;
    }
    Ok(out)
}

/// Optimizes one scenario under the QBER limit.
#[pyfunction]
#[pyo3(signature = (elevation, n=None, solver="bcd", objective="exact", seed=None, config=None, calibration=None))]
#[allow(clippy::too_many_arguments)]
fn optimize<'py>(
    py: Python<'py>,
    elevation: f64,
    n: Option<usize>,
    solver: &str,
    objective: &str,
    seed: Option<u64>,
    config: Option<&str>,
    calibration: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let (mut cfg, cal) = resolve(py, config, calibration)?;
    cfg.solver.kind = solver_kind(solver)?;
    cfg.solver.objective = objective_kind(objective)?;
    let n = n.unwrap_or(cfg.ris.n_elements);
    let (best, metrics) = py
        .detach(|| {
            let scenario = Scenario::build(&cfg, &cal, elevation, n, 0, 1.0)?;
            let solver = cfg.solver.with_seed(seed.unwrap_or_else(|| scenario.solver_seed(&cfg)));
            let best = optimize_secure(&scenario.objective, &solver)?;
            let metrics = scenario.objective.metrics(&best.best_bits)?;
            Ok::<_, Error>((best, metrics))
        })
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("bits", best.best_bits.clone())?;
    d.set_item("value", best.best_value)?;
    d.set_item("evaluations", best.evaluations)?;
    d.set_item("feasible", best.feasible)?;
    metrics_into(&d, &metrics)?;
    Ok(d)
}

/// Quadratic binary model `x^T J x + c^T x + offset` over `{0,1}^dim`.
#[pyclass(name = "Qubo", module = "risqkd", frozen)]
struct Qubo {
    model: QuboModel,
}

#[pymethods]
impl Qubo {
    /// Builds a model from linear terms, `(i, j, J_ij)` couplings and an offset.
    #[new]
    #[pyo3(signature = (linear, couplings, offset=0.0))]
    fn new(linear: Vec<f64>, couplings: Vec<(usize, usize, f64)>, offset: f64) -> PyResult<Self> {
        Ok(Self { model: QuboModel::new(linear, couplings, offset).map_err(py_err)? })
    }

    /// Parses the sparse text format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self { model: read_qubo(text.as_bytes()).map_err(py_err)? })
    }

    fn to_text(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        write_qubo(&self.model, &mut buf, &[]).map_err(py_err)?;
        String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.model.dim()
    }

    #[getter]
    fn offset(&self) -> f64 {
        self.model.offset()
    }

    #[getter]
    fn linear(&self) -> Vec<f64> {
        self.model.linear().to_vec()
    }

    #[getter]
    fn couplings(&self) -> Vec<(usize, usize, f64)> {
        self.model.couplings().to_vec()
    }

    fn evaluate(&self, bits: Vec<bool>) -> PyResult<f64> {
        if bits.len() != self.model.dim() {
            return Err(ConfigError::new_err(format!("expected {} bits, got {}", self.model.dim(), bits.len())));
        }
        Ok(self.model.evaluate(&bits))
    }

    /// Minimizes the model with `brute`, `anneal` or `tabu`.
    #[pyo3(signature = (solver="anneal", seed=0, max_iters=None))]
    fn solve<'py>(&self, py: Python<'py>, solver: &str, seed: u64, max_iters: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
        let mut cfg = SolverConfig { kind: solver_kind(solver)?, seed, ..Default::default() };
        if let Some(m) = max_iters {
            cfg.max_iters = m;
        }
        cfg.validate().map_err(py_err)?;
        let r = py.detach(|| run_heuristic(&self.model, &cfg)).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("bits", r.best_bits)?;
        d.set_item("value", r.best_value)?;
        d.set_item("evaluations", r.evaluations)?;
        Ok(d)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.model == other.model
    }

    fn __repr__(&self) -> String {
        format!("Qubo(dim={}, couplings={}, offset={})", self.model.dim(), self.model.couplings().len(), self.model.offset())
    }
}

/// QUBO of one scenario, expanded about the all-zero vector.
#[pyfunction]
#[pyo3(signature = (elevation=45.0, n=None, config=None, calibration=None))]
fn build_qubo<'py>(
    py: Python<'py>,
    elevation: f64,
    n: Option<usize>,
    config: Option<&str>,
    calibration: Option<&Bound<'py, PyDict>>,
) -> PyResult<Qubo> {
    let (cfg, cal) = resolve(py, config, calibration)?;
    let n = n.unwrap_or(cfg.ris.n_elements);
    let model = py
        .detach(|| {
            let scenario = Scenario::build(&cfg, &cal, elevation, n, 0, 1.0)?;
            build_model(&scenario.objective, &vec![false; scenario.objective.dim()])
        })
        .map_err(py_err)?;
    Ok(Qubo { model })
}

#[pymodule]
fn risqkd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("CalibrationError", py.get_type::<CalibrationError>())?;
    m.add("InfeasibleError", py.get_type::<InfeasibleError>())?;
    m.add_class::<Qubo>()?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(link_budget, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(phase_histogram, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(build_qubo, m)?)?;
    Ok(())
}
