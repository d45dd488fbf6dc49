//! Python extension module exposing the planning toolkit: the input
//! types (network, risk table, plan file) and the four pipeline
//! operations (validate, plan, simulate, sweep).
//!
//! Input and configuration problems raise `ValueError`, solver failures
//! raise `RuntimeError`, and output I/O failures raise `OSError`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use psps_core::config::{CliOverrides, RunConfig, SolverMode};
use psps_core::formulations::{count_model, InvestmentCatalog, ModelDims, PlanFile, Scenario};
use psps_core::net::Network as CoreNetwork;
use psps_core::pipeline::{self, PipelineError};
use psps_core::risk::{psps_days, psps_threshold, RiskTable as CoreRiskTable};

fn to_py(e: PipelineError) -> PyErr {
    match e {
        PipelineError::Config(msg) => PyValueError::new_err(msg),
        PipelineError::Solve(msg) => PyRuntimeError::new_err(msg),
        PipelineError::Io(msg) => PyIOError::new_err(msg),
    }
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Validated transmission network.
#[pyclass(name = "Network", frozen)]
struct PyNetwork {
    inner: CoreNetwork,
}

#[pymethods]
impl PyNetwork {
    /// Loads and validates a network JSON file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyNetwork {
            inner: CoreNetwork::load(path).map_err(value_err)?,
        })
    }

    #[getter]
    fn num_buses(&self) -> usize {
        self.inner.buses.len()
    }

    #[getter]
    fn num_lines(&self) -> usize {
        self.inner.lines.len()
    }

    #[getter]
    fn num_generators(&self) -> usize {
        self.inner.generators.len()
    }

    fn bus_ids(&self) -> Vec<String> {
        self.inner.buses.iter().map(|b| b.id.clone()).collect()
    }

    fn line_ids(&self) -> Vec<String> {
        self.inner.lines.iter().map(|l| l.id.clone()).collect()
    }

    fn switchable_line_ids(&self) -> Vec<String> {
        self.inner
            .switchable_lines()
            .into_iter()
            .map(|i| self.inner.lines[i].id.clone())
            .collect()
    }

    /// Variable and constraint counts of the placement model for a
    /// scenario over a given horizon.
    #[pyo3(signature = (scenario, hours = 24))]
    fn model_counts(&self, scenario: u8, hours: usize) -> PyResult<BTreeMap<String, usize>> {
        let s = Scenario::from_id(scenario).map_err(value_err)?;
        let catalog = InvestmentCatalog::for_scenario(&self.inner, s);
        let c = count_model(&ModelDims::new(&self.inner, &catalog, hours));
        Ok(BTreeMap::from([
            ("continuous".into(), c.continuous),
            ("integer".into(), c.integer),
            ("bound".into(), c.bound),
            ("inequality".into(), c.inequality),
            ("equality".into(), c.equality),
        ]))
    }

    fn __repr__(&self) -> String {
        format!(
            "Network({} buses, {} lines, {} generators)",
            self.inner.buses.len(),
            self.inner.lines.len(),
            self.inner.generators.len()
        )
    }
}

/// Per-line daily wildfire risk.
#[pyclass(name = "RiskTable", frozen)]
struct PyRiskTable {
    inner: CoreRiskTable,
}

#[pymethods]
impl PyRiskTable {
    /// Loads a risk source for a network: either a per-line
    /// `line_id,date,risk` table or a gridded `date,lat,lon,value` file
    /// integrated along line geometry.
    #[staticmethod]
    fn load(path: PathBuf, network: &PyNetwork) -> PyResult<Self> {
        Ok(PyRiskTable {
            inner: pipeline::load_risk_source(&path, &network.inner).map_err(to_py)?,
        })
    }

    #[getter]
    fn num_days(&self) -> usize {
        self.inner.dates.len()
    }

    fn dates(&self) -> Vec<String> {
        self.inner.dates.iter().map(|d| d.to_string()).collect()
    }

    fn line_ids(&self) -> Vec<String> {
        self.inner.line_ids.clone()
    }

    /// Daily totals across all lines, aligned with `dates()`.
    fn daily_totals(&self) -> Vec<f64> {
        self.inner
            .values
            .iter()
            .map(|row| row.iter().sum())
            .collect()
    }

    /// Shutoff trigger level: the given percentile of daily totals.
    fn threshold(&self, percentile: f64) -> PyResult<f64> {
        psps_threshold(&self.daily_totals(), percentile).map_err(value_err)
    }

    /// Dates whose total risk reaches the threshold.
    fn shutoff_dates(&self, threshold: f64) -> Vec<String> {
        psps_days(&self.inner, threshold)
            .iter()
            .map(|d| d.date.to_string())
            .collect()
    }

    /// Per-line planning risk: the mean of each line's top share of days.
    fn representative_profile(&self, top_fraction: f64) -> PyResult<Vec<f64>> {
        Ok(self
            .inner
            .representative_profile(top_fraction)
            .map_err(value_err)?
            .values)
    }

    fn __repr__(&self) -> String {
        format!(
            "RiskTable({} days x {} lines)",
            self.inner.dates.len(),
            self.inner.line_ids.len()
        )
    }
}

/// A saved investment plan with the headline numbers of its run.
#[pyclass(name = "Plan", frozen)]
struct PyPlan {
    inner: PlanFile,
}

#[pymethods]
impl PyPlan {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyPlan {
            inner: PlanFile::load(path).map_err(value_err)?,
        })
    }

    #[getter]
    fn scenario(&self) -> u8 {
        self.inner.scenario
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn budget_musd(&self) -> f64 {
        self.inner.budget_musd
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }

    #[getter]
    fn shed_fraction(&self) -> f64 {
        self.inner.shed_fraction
    }

    #[getter]
    fn risk_fraction(&self) -> f64 {
        self.inner.risk_fraction
    }

    /// Spend by technology in million dollars.
    fn spend(&self) -> BTreeMap<String, f64> {
        let s = &self.inner.spend;
        BTreeMap::from([
            ("battery_musd".into(), s.battery_musd),
            ("solar_musd".into(), s.solar_musd),
            ("hardening_musd".into(), s.hardening_musd),
            ("total_musd".into(), s.total_musd),
        ])
    }

    /// Battery units by bus id.
    fn batteries(&self, network: &PyNetwork) -> PyResult<BTreeMap<String, i64>> {
        let plan = self.inner.to_plan(&network.inner).map_err(value_err)?;
        Ok(plan
            .batteries
            .iter()
            .map(|(&bus, &units)| (network.inner.buses[bus].id.clone(), units))
            .collect())
    }

    /// Solar units by bus id.
    fn solar(&self, network: &PyNetwork) -> PyResult<BTreeMap<String, f64>> {
        let plan = self.inner.to_plan(&network.inner).map_err(value_err)?;
        Ok(plan
            .solar
            .iter()
            .map(|(&bus, &units)| (network.inner.buses[bus].id.clone(), units))
            .collect())
    }

    /// Hardening technology by line id.
    fn hardened(&self, network: &PyNetwork) -> PyResult<BTreeMap<String, String>> {
        let plan = self.inner.to_plan(&network.inner).map_err(value_err)?;
        Ok(plan
            .hardened
            .iter()
            .map(|(&line, kind)| {
                (
                    network.inner.lines[line].id.clone(),
                    kind.label().to_string(),
                )
            })
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Plan(scenario={}, alpha={}, budget={} $M, objective={:.6})",
            self.inner.scenario, self.inner.alpha, self.inner.budget_musd, self.inner.objective
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn overrides(
    alpha: Option<f64>,
    budget: Option<f64>,
    scenario: Option<u8>,
    gap: Option<f64>,
    gamma: Option<f64>,
    seed: Option<u64>,
    workers: Option<usize>,
    solver: Option<String>,
    out: Option<PathBuf>,
) -> PyResult<CliOverrides> {
    let solver = match solver {
        None => None,
        Some(text) => Some(SolverMode::parse(&text).map_err(value_err)?),
    };
    Ok(CliOverrides {
        alpha,
        budget_musd: budget,
        scenario,
        gap,
        gamma,
        seed,
        workers,
        solver,
        out,
    })
}

macro_rules! pipeline_fn {
    ($name:ident, $cmd:expr, $doc:literal) => {
        #[pyfunction]
        #[pyo3(signature = (config, *, alpha=None, budget=None, scenario=None, gap=None,
                            gamma=None, seed=None, workers=None, solver=None, out=None))]
        #[doc = $doc]
        #[allow(clippy::too_many_arguments)]
        fn $name(
            config: PathBuf,
            alpha: Option<f64>,
            budget: Option<f64>,
            scenario: Option<u8>,
            gap: Option<f64>,
            gamma: Option<f64>,
            seed: Option<u64>,
            workers: Option<usize>,
            solver: Option<String>,
            out: Option<PathBuf>,
        ) -> PyResult<String> {
            let ov = overrides(alpha, budget, scenario, gap, gamma, seed, workers, solver, out)?;
            let cfg = RunConfig::load(&config, &ov).map_err(value_err)?;
            $cmd(&cfg).map_err(to_py)
        }
    };
}

pipeline_fn!(
    validate,
    pipeline::cmd_validate,
    "Load every configured input, check invariants, and report sizes."
);
pipeline_fn!(
    plan,
    pipeline::cmd_plan,
    "Optimize placement and sizing; writes plan.json and dispatch files."
);
pipeline_fn!(
    sweep,
    pipeline::cmd_sweep,
    "Run the configured scenario x budget x weight grid; writes result tables."
);

/// Replay a saved plan over the evaluation season; writes season.csv.
#[pyfunction]
#[pyo3(signature = (config, *, plan=None, alpha=None, budget=None, scenario=None, gap=None,
                    gamma=None, seed=None, workers=None, solver=None, out=None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    config: PathBuf,
    plan: Option<PathBuf>,
    alpha: Option<f64>,
    budget: Option<f64>,
    scenario: Option<u8>,
    gap: Option<f64>,
    gamma: Option<f64>,
    seed: Option<u64>,
    workers: Option<usize>,
    solver: Option<String>,
    out: Option<PathBuf>,
) -> PyResult<String> {
    let ov = overrides(alpha, budget, scenario, gap, gamma, seed, workers, solver, out)?;
    let cfg = RunConfig::load(&config, &ov).map_err(value_err)?;
    let path = plan.unwrap_or_else(|| cfg.effective_out_dir().join("plan.json"));
    pipeline::cmd_simulate(&cfg, &path).map_err(to_py)
}

#[pymodule]
fn psps_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyRiskTable>()?;
    m.add_class::<PyPlan>()?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
