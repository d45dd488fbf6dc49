//! Run configuration: a single TOML file plus command-line overrides,
//! flags winning. Relative paths resolve against the config file's
//! directory, and every referenced input file must exist at load time.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use crate::formulations::{BatteryParams, SolarParams};
use crate::milp::SolveOptions;
use crate::risk::{DEFAULT_PERCENTILE, DEFAULT_TOP_FRACTION};
use crate::sweep::SweepGrid;

pub const OUT_DIR_ENV: &str = "PSPS_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(String),
    #[error("config: {0}")]
    Invalid(String),
    #[error("config: {0} does not exist (looked for {1})")]
    MissingFile(&'static str, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMode {
    /// Solve with the built-in branch and bound.
    Builtin,
    /// Write the model to LP and MPS files without solving.
    Export,
}

impl SolverMode {
    pub fn parse(s: &str) -> Result<SolverMode, ConfigError> {
        match s {
            "builtin" => Ok(SolverMode::Builtin),
            "export" => Ok(SolverMode::Export),
            other => Err(ConfigError::Invalid(format!(
                "solver mode '{other}' is neither 'builtin' nor 'export'"
            ))),
        }
    }
}

/// Candidate locations for one investment type: either every eligible
/// bus/line in the network, or an explicit id list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CandidateSet {
    All,
    Ids(Vec<String>),
}

impl Default for CandidateSet {
    fn default() -> CandidateSet {
        CandidateSet::All
    }
}

/// Flag values that override their config-file counterparts.
#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub alpha: Option<f64>,
    pub budget_musd: Option<f64>,
    pub scenario: Option<u8>,
    pub gap: Option<f64>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub solver: Option<SolverMode>,
    pub out: Option<PathBuf>,
}

/// A fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub network: PathBuf,
    /// Planning-season per-line risk table, or a raster cell table.
    pub risk: PathBuf,
    /// Evaluation-season risk; the planning table doubles for it when
    /// absent.
    pub eval_risk: Option<PathBuf>,
    pub demand_profile: PathBuf,
    /// Hourly solar availability; all-zero when absent.
    pub solar_profile: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    pub alpha: f64,
    pub budget_musd: f64,
    pub scenario: u8,
    pub gamma: f64,
    pub gap: f64,
    pub percentile: f64,
    pub top_fraction: f64,
    /// Season window as inclusive (month, day) bounds.
    pub season_start: (u32, u32),
    pub season_end: (u32, u32),
    pub solver: SolverMode,
    pub seed: u64,
    pub workers: usize,
    pub time_limit_secs: Option<u64>,
    pub grid: SweepGrid,
    pub battery: BatteryParams,
    pub solar_cost: SolarParams,
    pub battery_buses: CandidateSet,
    pub solar_buses: CandidateSet,
    pub harden_lines: CandidateSet,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    paths: RawPaths,
    #[serde(default)]
    parameters: RawParameters,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    catalog: RawCatalog,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPaths {
    network: Option<String>,
    risk: Option<String>,
    eval_risk: Option<String>,
    demand_profile: Option<String>,
    solar_profile: Option<String>,
    out_dir: Option<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawParameters {
    alpha: Option<f64>,
    budget_musd: Option<f64>,
    scenario: Option<u8>,
    gamma: Option<f64>,
    gap: Option<f64>,
    percentile: Option<f64>,
    top_fraction: Option<f64>,
    season_start: Option<String>,
    season_end: Option<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    mode: Option<String>,
    seed: Option<u64>,
    workers: Option<usize>,
    time_limit_secs: Option<u64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    scenarios: Option<Vec<u8>>,
    budgets_musd: Option<Vec<f64>>,
    alphas: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawCatalog {
    battery_buses: Option<toml::Value>,
    solar_buses: Option<toml::Value>,
    harden_lines: Option<toml::Value>,
    #[serde(default)]
    battery: RawBattery,
    #[serde(default)]
    solar: RawSolarCost,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawBattery {
    energy_min_pu: Option<f64>,
    energy_max_pu: Option<f64>,
    efficiency: Option<f64>,
    charge_min_pu: Option<f64>,
    charge_max_pu: Option<f64>,
    discharge_min_pu: Option<f64>,
    discharge_max_pu: Option<f64>,
    unit_cost_musd: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSolarCost {
    unit_cost_musd: Option<f64>,
}

fn parse_month_day(label: &str, value: &str) -> Result<(u32, u32), ConfigError> {
    let invalid = || {
        ConfigError::Invalid(format!(
            "{label} '{value}' is not a valid MM-DD month-day"
        ))
    };
    let (m, d) = value.split_once('-').ok_or_else(invalid)?;
    let month: u32 = m.parse().map_err(|_| invalid())?;
    let day: u32 = d.parse().map_err(|_| invalid())?;
    // Validate against a leap year so 02-29 is accepted.
    chrono::NaiveDate::from_ymd_opt(2020, month, day).ok_or_else(invalid)?;
    Ok((month, day))
}

fn parse_candidates(label: &str, value: Option<toml::Value>) -> Result<CandidateSet, ConfigError> {
    match value {
        None => Ok(CandidateSet::All),
        Some(toml::Value::String(s)) if s == "all" => Ok(CandidateSet::All),
        Some(toml::Value::String(s)) => Err(ConfigError::Invalid(format!(
            "{label} '{s}' is not 'all' (use an id array for an explicit set)"
        ))),
        Some(toml::Value::Array(items)) => {
            let mut ids = Vec::with_capacity(items.len());
            for item in items {
                match item {
                    toml::Value::String(id) => ids.push(id),
                    other => {
                        return Err(ConfigError::Invalid(format!(
                            "{label} entries must be id strings, got {other}"
                        )))
                    }
                }
            }
            Ok(CandidateSet::Ids(ids))
        }
        Some(other) => Err(ConfigError::Invalid(format!(
            "{label} must be \"all\" or an id array, got {other}"
        ))),
    }
}

impl RunConfig {
    /// Loads, overrides, and validates a config file.
    pub fn load(path: impl AsRef<Path>, overrides: &CliOverrides) -> Result<RunConfig, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        RunConfig::from_toml_str(&text, base, overrides)
    }

    /// Parses config text with paths resolved against `base`.
    pub fn from_toml_str(
        text: &str,
        base: &Path,
        overrides: &CliOverrides,
    ) -> Result<RunConfig, ConfigError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;

        let resolve = |p: String| -> PathBuf {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let require = |label: &'static str, p: Option<String>| -> Result<PathBuf, ConfigError> {
            p.map(resolve)
                .ok_or_else(|| ConfigError::Invalid(format!("paths.{label} is required")))
        };

        let network = require("network", raw.paths.network)?;
        let risk = require("risk", raw.paths.risk)?;
        let demand_profile = require("demand_profile", raw.paths.demand_profile)?;
        let eval_risk = raw.paths.eval_risk.map(resolve);
        let solar_profile = raw.paths.solar_profile.map(resolve);
        let out_dir = overrides
            .out
            .clone()
            .or_else(|| raw.paths.out_dir.map(resolve));

        let p = raw.parameters;
        let alpha = overrides.alpha.or(p.alpha).unwrap_or(0.5);
        let budget_musd = overrides.budget_musd.or(p.budget_musd).unwrap_or(100.0);
        let scenario = overrides.scenario.or(p.scenario).unwrap_or(1);
        let gamma = overrides.gamma.or(p.gamma).unwrap_or(0.01);
        let gap = overrides.gap.or(p.gap).unwrap_or(0.01);
        let percentile = p.percentile.unwrap_or(DEFAULT_PERCENTILE);
        let top_fraction = p.top_fraction.unwrap_or(DEFAULT_TOP_FRACTION);
        let season_start = parse_month_day(
            "parameters.season_start",
            p.season_start.as_deref().unwrap_or("06-01"),
        )?;
        let season_end = parse_month_day(
            "parameters.season_end",
            p.season_end.as_deref().unwrap_or("10-31"),
        )?;

        let solver = match overrides.solver {
            Some(mode) => mode,
            None => SolverMode::parse(raw.solver.mode.as_deref().unwrap_or("builtin"))?,
        };
        let seed = overrides.seed.or(raw.solver.seed).unwrap_or(0);
        let workers = overrides.workers.or(raw.solver.workers).unwrap_or(1);
        let time_limit_secs = raw.solver.time_limit_secs;

        // An explicit flag narrows the sweep grid to its single value, so
        // `--scenario 3` sweeps only scenario 3.
        let default_grid = SweepGrid::default();
        let grid = SweepGrid {
            scenarios: overrides
                .scenario
                .map(|s| vec![s])
                .or(raw.sweep.scenarios)
                .unwrap_or(default_grid.scenarios),
            budgets_musd: overrides
                .budget_musd
                .map(|b| vec![b])
                .or(raw.sweep.budgets_musd)
                .unwrap_or(default_grid.budgets_musd),
            alphas: overrides
                .alpha
                .map(|a| vec![a])
                .or(raw.sweep.alphas)
                .unwrap_or(default_grid.alphas),
        };

        let mut battery = BatteryParams::default();
        let rb = raw.catalog.battery;
        for (slot, value) in [
            (&mut battery.energy_min_pu, rb.energy_min_pu),
            (&mut battery.energy_max_pu, rb.energy_max_pu),
            (&mut battery.efficiency, rb.efficiency),
            (&mut battery.charge_min_pu, rb.charge_min_pu),
            (&mut battery.charge_max_pu, rb.charge_max_pu),
            (&mut battery.discharge_min_pu, rb.discharge_min_pu),
            (&mut battery.discharge_max_pu, rb.discharge_max_pu),
            (&mut battery.unit_cost_musd, rb.unit_cost_musd),
        ] {
            if let Some(v) = value {
                *slot = v;
            }
        }
        let mut solar_cost = SolarParams::default();
        if let Some(v) = raw.catalog.solar.unit_cost_musd {
            solar_cost.unit_cost_musd = v;
        }
        let battery_buses = parse_candidates("catalog.battery_buses", raw.catalog.battery_buses)?;
        let solar_buses = parse_candidates("catalog.solar_buses", raw.catalog.solar_buses)?;
        let harden_lines = parse_candidates("catalog.harden_lines", raw.catalog.harden_lines)?;

        let config = RunConfig {
            network,
            risk,
            eval_risk,
            demand_profile,
            solar_profile,
            out_dir,
            alpha,
            budget_musd,
            scenario,
            gamma,
            gap,
            percentile,
            top_fraction,
            season_start,
            season_end,
            solver,
            seed,
            workers,
            time_limit_secs,
            grid,
            battery,
            solar_cost,
            battery_buses,
            solar_buses,
            harden_lines,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if !(self.alpha.is_finite() && self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!(
                "alpha {} must lie strictly between 0 and 1",
                self.alpha
            ));
        }
        if !(self.budget_musd.is_finite() && self.budget_musd >= 0.0) {
            return bad(format!("budget {} must be non-negative", self.budget_musd));
        }
        if !(1..=8).contains(&self.scenario) {
            return bad(format!("scenario {} is outside 1..=8", self.scenario));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return bad(format!("gamma {} must be non-negative", self.gamma));
        }
        if !(self.gap.is_finite() && self.gap >= 0.0) {
            return bad(format!("gap {} must be non-negative", self.gap));
        }
        if !(self.percentile > 0.0 && self.percentile <= 1.0) {
            return bad(format!(
                "percentile {} must lie in (0, 1]",
                self.percentile
            ));
        }
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return bad(format!(
                "top_fraction {} must lie in (0, 1]",
                self.top_fraction
            ));
        }
        if self.season_start > self.season_end {
            return bad(format!(
                "season window {:02}-{:02}..{:02}-{:02} must not wrap the year end",
                self.season_start.0, self.season_start.1, self.season_end.0, self.season_end.1
            ));
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        self.grid.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.battery
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.solar_cost
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    /// Errors on the first referenced input file that does not exist.
    pub fn check_files(&self) -> Result<(), ConfigError> {
        let mut required: Vec<(&'static str, &PathBuf)> = vec![
            ("paths.network", &self.network),
            ("paths.risk", &self.risk),
            ("paths.demand_profile", &self.demand_profile),
        ];
        if let Some(p) = &self.eval_risk {
            required.push(("paths.eval_risk", p));
        }
        if let Some(p) = &self.solar_profile {
            required.push(("paths.solar_profile", p));
        }
        for (label, path) in required {
            if !path.is_file() {
                return Err(ConfigError::MissingFile(label, path.display().to_string()));
            }
        }
        Ok(())
    }

    /// Output directory: `--out` flag beats the config entry, which beats
    /// the `PSPS_OUT_DIR` environment variable, which beats the working
    /// directory.
    pub fn effective_out_dir(&self) -> PathBuf {
        if let Some(dir) = &self.out_dir {
            return dir.clone();
        }
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                return PathBuf::from(dir);
            }
        }
        PathBuf::from(".")
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            relative_gap: self.gap,
            node_limit: None,
            time_limit: self.time_limit_secs.map(Duration::from_secs),
            seed: self.seed,
        }
    }
}
