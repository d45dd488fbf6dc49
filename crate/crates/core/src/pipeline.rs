//! File-level orchestration behind the command-line interface: load and
//! cross-check the configured inputs, run one command, write its output
//! files, and return a short human-readable report.
//!
//! Every output file is deterministic for fixed inputs: no timestamps, no
//! machine-dependent values, numbers rendered with a fixed format.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{CandidateSet, RunConfig, SolverMode};
use crate::formulations::{
    build_invest, count_model, decode, FormError, InvestmentCatalog, ModelDims, PlanFile,
    Scenario, SpendBreakdown,
};
use crate::milp::{solve, write_lp, write_mps, MilpError, SolveStatus};
use crate::net::{apply_profile, DemandProfile, DemandSeries, NetError, Network, SolarProfile};
use crate::risk::{RiskError, RiskRaster, RiskTable, DEFAULT_STEP_MILES};
use crate::season::{season_csv, simulate_season, SeasonError, SeasonOptions};
use crate::sweep::{
    breakdown_csv, run_sweep, sweep_csv, tradeoff_csv, tradeoff_curves, CaseResult, SweepError,
    SweepEval, SweepInputs,
};

/// Failures grouped by exit code: configuration and input problems (2),
/// solver failures (3), output I/O (4).
#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Solve(String),
    #[error("{0}")]
    Io(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Solve(_) => 3,
            PipelineError::Io(_) => 4,
        }
    }
}

impl From<crate::config::ConfigError> for PipelineError {
    fn from(e: crate::config::ConfigError) -> PipelineError {
        PipelineError::Config(e.to_string())
    }
}

impl From<NetError> for PipelineError {
    fn from(e: NetError) -> PipelineError {
        PipelineError::Config(e.to_string())
    }
}

impl From<RiskError> for PipelineError {
    fn from(e: RiskError) -> PipelineError {
        PipelineError::Config(e.to_string())
    }
}

impl From<FormError> for PipelineError {
    fn from(e: FormError) -> PipelineError {
        match e {
            FormError::Milp(_) | FormError::Decode(_) => PipelineError::Solve(e.to_string()),
            other => PipelineError::Config(other.to_string()),
        }
    }
}

impl From<MilpError> for PipelineError {
    fn from(e: MilpError) -> PipelineError {
        PipelineError::Solve(e.to_string())
    }
}

impl From<SeasonError> for PipelineError {
    fn from(e: SeasonError) -> PipelineError {
        match e {
            SeasonError::Form(inner) => inner.into(),
            other => PipelineError::Config(other.to_string()),
        }
    }
}

impl From<SweepError> for PipelineError {
    fn from(e: SweepError) -> PipelineError {
        PipelineError::Config(e.to_string())
    }
}

/// All loaded and window-restricted inputs of a run.
pub struct Inputs {
    pub net: Network,
    pub demand: DemandSeries,
    /// Planning-season risk, restricted to the season window.
    pub plan_table: RiskTable,
    /// Evaluation-season risk; a copy of the planning table when no
    /// separate evaluation source is configured.
    pub eval_table: RiskTable,
    pub solar: SolarProfile,
}

fn read_input(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Config(format!("reading {}: {e}", path.display())))
}

/// Loads a risk source, accepting either a per-line `line_id,date,risk`
/// table or a gridded `date,lat,lon,value` cell table (detected by
/// header) that is integrated along line geometry.
pub fn load_risk_source(path: &Path, net: &Network) -> Result<RiskTable, PipelineError> {
    let text = read_input(path)?;
    let header = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .unwrap_or("");
    let table = if header.to_ascii_lowercase().contains("lat") {
        let rasters = RiskRaster::from_csv_str(&text)?;
        RiskTable::from_rasters(net, &rasters, DEFAULT_STEP_MILES)?
    } else {
        RiskTable::from_csv_str(&text, net)?
    };
    Ok(table)
}

fn restrict(table: RiskTable, config: &RunConfig, label: &str) -> Result<RiskTable, PipelineError> {
    let restricted = table.restrict_window(config.season_start, config.season_end);
    if restricted.dates.is_empty() {
        return Err(PipelineError::Config(format!(
            "{label} risk has no days inside the {:02}-{:02}..{:02}-{:02} season window",
            config.season_start.0, config.season_start.1, config.season_end.0, config.season_end.1
        )));
    }
    Ok(restricted)
}

pub fn load_inputs(config: &RunConfig) -> Result<Inputs, PipelineError> {
    config.check_files()?;
    let net = Network::load(&config.network)?;
    let profile = DemandProfile::load(&config.demand_profile)?;
    let demand = apply_profile(&net, &profile);
    demand.total_demand()?;
    let plan_table = restrict(load_risk_source(&config.risk, &net)?, config, "planning")?;
    let eval_table = match &config.eval_risk {
        Some(path) => restrict(load_risk_source(path, &net)?, config, "evaluation")?,
        None => plan_table.clone(),
    };
    let solar = match &config.solar_profile {
        Some(path) => SolarProfile::load(path, &net)?,
        None => SolarProfile::zeros(&net, demand.hours),
    };
    if solar.hours != demand.hours {
        return Err(PipelineError::Config(format!(
            "solar profile covers {} hours, demand {}",
            solar.hours, demand.hours
        )));
    }
    Ok(Inputs {
        net,
        demand,
        plan_table,
        eval_table,
        solar,
    })
}

fn resolve_ids<'a>(
    set: &'a CandidateSet,
    label: &str,
    mut lookup: impl FnMut(&str) -> Option<usize>,
) -> Result<Option<Vec<usize>>, PipelineError> {
    match set {
        CandidateSet::All => Ok(None),
        CandidateSet::Ids(ids) => {
            let mut out = Vec::with_capacity(ids.len());
            for id in ids {
                out.push(lookup(id).ok_or_else(|| {
                    PipelineError::Config(format!("{label}: unknown id '{id}'"))
                })?);
            }
            Ok(Some(out))
        }
    }
}

/// Candidate index lists from the config, `None` meaning "all eligible".
pub struct Candidates {
    pub battery_buses: Option<Vec<usize>>,
    pub solar_buses: Option<Vec<usize>>,
    pub harden_lines: Option<Vec<usize>>,
}

pub fn resolve_candidates(net: &Network, config: &RunConfig) -> Result<Candidates, PipelineError> {
    Ok(Candidates {
        battery_buses: resolve_ids(&config.battery_buses, "catalog.battery_buses", |id| {
            net.bus_index(id)
        })?,
        solar_buses: resolve_ids(&config.solar_buses, "catalog.solar_buses", |id| {
            net.bus_index(id)
        })?,
        harden_lines: resolve_ids(&config.harden_lines, "catalog.harden_lines", |id| {
            net.line_index(id)
        })?,
    })
}

/// The investment catalog for the configured scenario, with candidate
/// restrictions and technology parameters applied.
pub fn build_catalog(net: &Network, config: &RunConfig) -> Result<InvestmentCatalog, PipelineError> {
    let scenario = Scenario::from_id(config.scenario)?;
    let mut catalog = InvestmentCatalog::for_scenario(net, scenario);
    catalog.battery = config.battery.clone();
    catalog.solar = config.solar_cost.clone();
    let candidates = resolve_candidates(net, config)?;
    if scenario.batteries {
        if let Some(list) = candidates.battery_buses {
            catalog.battery_buses = list;
        }
    }
    if scenario.solar {
        if let Some(list) = candidates.solar_buses {
            catalog.solar_buses = list;
        }
    }
    if scenario.hardening.is_some() {
        if let Some(list) = candidates.harden_lines {
            catalog.harden_lines = list;
        }
    }
    catalog.normalize();
    catalog.validate(net)?;
    Ok(catalog)
}

fn write_out(dir: &Path, name: &str, content: &str) -> Result<PathBuf, PipelineError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| PipelineError::Io(format!("creating {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| PipelineError::Io(format!("writing {}: {e}", path.display())))?;
    Ok(path)
}

fn num(v: f64) -> String {
    format!("{v:.8e}")
}

/// Loads everything, re-runs every input invariant, and reports the
/// model dimensions the configured scenario would build.
pub fn cmd_validate(config: &RunConfig) -> Result<String, PipelineError> {
    let inputs = load_inputs(config)?;
    let net = &inputs.net;
    let catalog = build_catalog(net, config)?;
    let dims = ModelDims::new(net, &catalog, inputs.demand.hours);
    let counts = count_model(&dims);
    let scenario = Scenario::from_id(config.scenario)?;
    let covered = inputs
        .eval_table
        .dates
        .iter()
        .filter(|d| inputs.demand.day_index(**d).is_some())
        .count();
    let mut r = String::new();
    let _ = writeln!(
        r,
        "network: {} buses, {} lines ({} switchable, {} hardenable), {} generators",
        net.buses.len(),
        net.lines.len(),
        net.switchable_lines().len(),
        net.hardenable_lines().len(),
        net.generators.len()
    );
    let _ = writeln!(
        r,
        "demand: {} days x {} hours, peak-day total {:.6} pu",
        inputs.demand.dates.len(),
        inputs.demand.hours,
        inputs.demand.day_total(inputs.demand.peak_day())
    );
    let _ = writeln!(
        r,
        "risk: {} planning days, {} evaluation days ({} covered by demand), window {:02}-{:02}..{:02}-{:02}",
        inputs.plan_table.dates.len(),
        inputs.eval_table.dates.len(),
        covered,
        config.season_start.0,
        config.season_start.1,
        config.season_end.0,
        config.season_end.1
    );
    let _ = writeln!(
        r,
        "scenario {}: {} ({} battery buses, {} solar buses, {} hardenable lines)",
        scenario.id,
        scenario.describe(),
        catalog.battery_buses.len(),
        catalog.solar_buses.len(),
        catalog.harden_lines.len()
    );
    let _ = writeln!(
        r,
        "model size: {} continuous, {} integer, {} bound, {} inequality, {} equality",
        counts.continuous, counts.integer, counts.bound, counts.inequality, counts.equality
    );
    let _ = writeln!(r, "validate: ok");
    Ok(r)
}

struct PlanningDay<'a> {
    demand: &'a [Vec<f64>],
    risk: Vec<f64>,
    top_days: usize,
    source_days: usize,
}

fn planning_day<'a>(
    inputs: &'a Inputs,
    config: &RunConfig,
) -> Result<PlanningDay<'a>, PipelineError> {
    let profile = inputs.plan_table.representative_profile(config.top_fraction)?;
    let peak = inputs.demand.peak_day();
    Ok(PlanningDay {
        demand: &inputs.demand.values[peak],
        risk: profile.values,
        top_days: profile.top_days,
        source_days: profile.source_days,
    })
}

/// Solves the placement model on the representative planning day and
/// writes the plan with its dispatch; in export mode writes the model
/// files instead of solving.
pub fn cmd_plan(config: &RunConfig) -> Result<String, PipelineError> {
    let inputs = load_inputs(config)?;
    let net = &inputs.net;
    let catalog = build_catalog(net, config)?;
    let day = planning_day(&inputs, config)?;
    let built = build_invest(
        net,
        day.demand,
        &day.risk,
        config.alpha,
        &catalog,
        config.budget_musd,
        &inputs.solar,
    )?;
    let out_dir = config.effective_out_dir();
    let mut r = String::new();
    let _ = writeln!(
        r,
        "planning day: risk from top {} of {} days, demand from the peak day",
        day.top_days, day.source_days
    );

    if config.solver == SolverMode::Export {
        let lp = write_out(&out_dir, "model.lp", &write_lp(&built.milp))?;
        let mps = write_out(&out_dir, "model.mps", &write_mps(&built.milp))?;
        let _ = writeln!(
            r,
            "export: wrote {} and {} ({} vars, {} rows); no solve requested",
            lp.display(),
            mps.display(),
            built.milp.num_vars(),
            built.milp.num_cons()
        );
        return Ok(r);
    }

    let res = solve(&built.milp, &config.solve_options())?;
    let usable = matches!(
        res.status,
        SolveStatus::OptimalWithinGap | SolveStatus::LimitReached
    ) && res.values.is_some();
    if !usable {
        return Err(PipelineError::Solve(format!(
            "placement solve ended {}",
            res.status.as_str()
        )));
    }
    let dec = decode(&built, res.values.as_ref().expect("usable result"))?;
    let plan_file = PlanFile::new(
        net,
        &dec.plan,
        config.scenario,
        config.alpha,
        config.budget_musd,
        dec.objective,
        dec.shed_fraction,
        dec.risk_fraction,
        dec.spend.clone(),
    );
    let plan_path = write_out(&out_dir, "plan.json", &plan_file.to_json_string())?;
    let bus_path = write_out(&out_dir, "dispatch_bus.csv", &dispatch_bus_csv(&built, &dec))?;
    let line_path = write_out(&out_dir, "dispatch_line.csv", &dispatch_line_csv(&built, &dec))?;
    let _ = writeln!(
        r,
        "objective {:.8}, shed fraction {:.6}, risk fraction {:.6}",
        dec.objective, dec.shed_fraction, dec.risk_fraction
    );
    let _ = writeln!(
        r,
        "spend: batteries {:.4} + solar {:.4} + hardening {:.4} = {:.4} of {:.4} $M",
        dec.spend.battery_musd,
        dec.spend.solar_musd,
        dec.spend.hardening_musd,
        dec.spend.total_musd,
        config.budget_musd
    );
    if let Some(gap) = res.gap {
        if gap > 0.0 {
            let _ = writeln!(r, "solve stopped at relative gap {gap:.6}");
        }
    }
    let _ = writeln!(
        r,
        "wrote {}, {}, {}",
        plan_path.display(),
        bus_path.display(),
        line_path.display()
    );
    Ok(r)
}

fn dispatch_bus_csv(
    built: &crate::formulations::BuiltModel,
    dec: &crate::formulations::DecodedSolution,
) -> String {
    let ctx = &built.ctx;
    let net = &ctx.net;
    let hours = ctx.hours;
    let mut gen_by_bus = vec![vec![0.0; hours]; net.buses.len()];
    for (g, rows) in dec.generation.iter().enumerate() {
        for (t, &v) in rows.iter().enumerate() {
            gen_by_bus[net.generators[g].bus][t] += v;
        }
    }
    let mut out = String::from("# dispatch-bus v1\n");
    out.push_str("bus,hour,demand_pu,shed_pu,generation_pu,charge_pu,discharge_pu,solar_pu,soc_pu,angle_rad\n");
    for (n, bus) in net.buses.iter().enumerate() {
        for t in 0..hours {
            let battery = dec.batteries.get(&n);
            let soc = battery.map_or(String::new(), |b| num(b.soc[t + 1]));
            out.push_str(&format!(
                "{},{t},{},{},{},{},{},{},{soc},{}\n",
                bus.id,
                num(ctx.demand[n][t]),
                num(dec.shed[n][t]),
                num(gen_by_bus[n][t]),
                num(battery.map_or(0.0, |b| b.charge[t])),
                num(battery.map_or(0.0, |b| b.discharge[t])),
                num(dec.solar.get(&n).map_or(0.0, |s| s.output[t])),
                num(dec.angles[n][t]),
            ));
        }
    }
    out
}

fn dispatch_line_csv(
    built: &crate::formulations::BuiltModel,
    dec: &crate::formulations::DecodedSolution,
) -> String {
    let ctx = &built.ctx;
    let net = &ctx.net;
    let mut out = String::from("# dispatch-line v1\n");
    out.push_str("line,hour,energized,hardened,flow_pu\n");
    for (l, line) in net.lines.iter().enumerate() {
        let on = dec.energized.get(&l).copied().unwrap_or(true);
        let hardened = u8::from(dec.plan.hardened.contains_key(&l));
        for t in 0..ctx.hours {
            out.push_str(&format!(
                "{},{t},{},{hardened},{}\n",
                line.id,
                u8::from(on),
                num(dec.flows[l][t]),
            ));
        }
    }
    out
}

/// Replays the evaluation season under a saved plan and writes the
/// per-day outcomes.
pub fn cmd_simulate(config: &RunConfig, plan_path: &Path) -> Result<String, PipelineError> {
    let inputs = load_inputs(config)?;
    let net = &inputs.net;
    if !plan_path.is_file() {
        return Err(PipelineError::Config(format!(
            "plan file {} does not exist (run `psps plan` first or pass --plan)",
            plan_path.display()
        )));
    }
    let plan_file = PlanFile::load(plan_path)?;
    let plan = plan_file.to_plan(net)?;
    let opts = SeasonOptions {
        alpha: config.alpha,
        gamma: config.gamma,
        percentile: config.percentile,
        threshold: None,
        solve: config.solve_options(),
    };
    let result = simulate_season(
        net,
        &plan,
        &config.battery,
        &inputs.eval_table,
        &inputs.demand,
        &inputs.solar,
        &opts,
    )?;
    let out_dir = config.effective_out_dir();
    let path = write_out(&out_dir, "season.csv", &season_csv(net, &result))?;
    let s = result.summary;
    let mut r = String::new();
    let _ = writeln!(
        r,
        "threshold {:.6} ({}th percentile of {} daily totals)",
        result.threshold,
        (result.percentile * 100.0).round() as u32,
        inputs.eval_table.dates.len()
    );
    let _ = writeln!(
        r,
        "season: {} days, {} shutoff days ({} solved, {} failed), {:.6} pu shed, {} line-day de-energizations",
        s.days, s.psps_days, s.solved_days, s.failed_days, s.total_shed_pu, s.de_energizations
    );
    let _ = writeln!(r, "wrote {}", path.display());
    Ok(r)
}

/// Runs the configured sweep grid and writes its result tables plus one
/// plan file per successful case.
pub fn cmd_sweep(config: &RunConfig) -> Result<String, PipelineError> {
    let inputs = load_inputs(config)?;
    let net = &inputs.net;
    let candidates = resolve_candidates(net, config)?;
    let day = planning_day(&inputs, config)?;
    let sweep_inputs = SweepInputs {
        net,
        plan_demand: day.demand,
        plan_risk: &day.risk,
        solar: &inputs.solar,
        battery: config.battery.clone(),
        solar_cost: config.solar_cost.clone(),
        battery_buses: candidates.battery_buses,
        solar_buses: candidates.solar_buses,
        harden_lines: candidates.harden_lines,
        gamma: config.gamma,
        percentile: config.percentile,
        solve: config.solve_options(),
        eval: Some(SweepEval {
            risk: &inputs.eval_table,
            demand: &inputs.demand,
        }),
    };
    let results = run_sweep(&sweep_inputs, &config.grid, config.workers)?;
    let out_dir = config.effective_out_dir();
    let sweep_path = write_out(&out_dir, "sweep.csv", &sweep_csv(&results))?;
    let tradeoff_path = write_out(
        &out_dir,
        "tradeoff.csv",
        &tradeoff_csv(&tradeoff_curves(&results)),
    )?;
    let breakdown_path = write_out(&out_dir, "breakdown.csv", &breakdown_csv(&results))?;
    let plans_dir = out_dir.join("plans");
    let mut plans_written = 0usize;
    for (i, case) in results.iter().enumerate() {
        let Some(file) = case_plan_file(net, case) else {
            continue;
        };
        let name = format!(
            "case_{i:04}_s{}_b{}_a{:.2}.json",
            case.scenario, case.budget_musd, case.alpha
        );
        write_out(&plans_dir, &name, &file.to_json_string())?;
        plans_written += 1;
    }
    let failed = results.iter().filter(|r| r.failed.is_some()).count();
    let mut r = String::new();
    let _ = writeln!(
        r,
        "sweep: {} cases, {} done, {} failed",
        results.len(),
        results.len() - failed,
        failed
    );
    let _ = writeln!(
        r,
        "wrote {}, {}, {}, and {} plan files under {}",
        sweep_path.display(),
        tradeoff_path.display(),
        breakdown_path.display(),
        plans_written,
        plans_dir.display()
    );
    Ok(r)
}

fn case_plan_file(net: &Network, case: &CaseResult) -> Option<PlanFile> {
    let plan = case.plan.as_ref()?;
    Some(PlanFile::new(
        net,
        plan,
        case.scenario,
        case.alpha,
        case.budget_musd,
        case.objective?,
        case.predicted_shed_fraction?,
        case.predicted_risk_fraction?,
        case.spend.clone().unwrap_or(SpendBreakdown {
            battery_musd: 0.0,
            solar_musd: 0.0,
            hardening_musd: 0.0,
            total_musd: 0.0,
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CliOverrides;

    const NETWORK: &str = r#"{
        "base_mva": 100.0,
        "buses": [
            {"id": "b0", "demand_pu": 0.0},
            {"id": "b1", "demand_pu": 0.5}
        ],
        "lines": [
            {"id": "l0", "from_bus": 0, "to_bus": 1, "susceptance_pu": -5.0,
             "flow_limit_pu": 2.0, "angle_min_rad": -0.5, "angle_max_rad": 0.5,
             "length_miles": 10.0, "switchable": true, "hardenable": true}
        ],
        "generators": [
            {"id": "g0", "bus": 0, "p_min_pu": 0.0, "p_max_pu": 0.3}
        ]
    }"#;

    fn demand_csv() -> String {
        let mut s = String::from("day,hour,scale\n");
        for day in ["2021-06-01", "2021-06-02", "2021-06-03", "2021-06-04", "2021-06-05"] {
            for h in 0..24 {
                let scale = if h == 10 || h == 11 { 1.0 } else { 0.0 };
                s.push_str(&format!("{day},{h},{scale}\n"));
            }
        }
        s
    }

    fn risk_csv() -> String {
        let mut s = String::from("line_id,date,risk\n");
        for (day, v) in [
            ("2021-06-01", 10.0),
            ("2021-06-02", 31.0),
            ("2021-06-03", 40.0),
            ("2021-06-04", 5.0),
            ("2021-06-05", 45.0),
        ] {
            s.push_str(&format!("l0,{day},{v}\n"));
        }
        s
    }

    fn write_fixture(dir: &Path) {
        std::fs::write(dir.join("network.json"), NETWORK).unwrap();
        std::fs::write(dir.join("demand.csv"), demand_csv()).unwrap();
        std::fs::write(dir.join("risk.csv"), risk_csv()).unwrap();
    }

    fn config(dir: &Path, extra: &str) -> RunConfig {
        let text = format!(
            r#"
            [paths]
            network = "network.json"
            risk = "risk.csv"
            demand_profile = "demand.csv"
            out_dir = "out"
            [parameters]
            alpha = 0.6
            budget_musd = 20.0
            gap = 0.0
            percentile = 0.6
            {extra}
            "#
        );
        RunConfig::from_toml_str(&text, dir, &CliOverrides::default()).unwrap()
    }

    #[test]
    fn validate_reports_sizes_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path());
        let report = cmd_validate(&config(dir.path(), "")).unwrap();
        assert!(report.contains("network: 2 buses, 1 lines (1 switchable, 1 hardenable), 1 generators"));
        assert!(report.contains("demand: 5 days x 24 hours"));
        assert!(report.contains("risk: 5 planning days, 5 evaluation days (5 covered by demand)"));
        // Scenario 1 on 2 buses, T=24: continuous = G*T + 2*N*T + L*T +
        // 2*Nb*T = 24 + 96 + 24 + 96 = 240, integer = Lsw + Nb*(1+T) = 51.
        assert!(report.contains("model size: 240 continuous, 51 integer"), "{report}");
        assert!(report.trim_end().ends_with("validate: ok"));
    }

    #[test]
    fn plan_writes_plan_and_dispatch_files() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path());
        let cfg = config(dir.path(), "");
        let report = cmd_plan(&cfg).unwrap();
        assert!(report.contains("planning day: risk from top 1 of 5 days"));
        let out = dir.path().join("out");
        let plan = PlanFile::load(out.join("plan.json")).unwrap();
        assert_eq!(plan.scenario, 1);
        let net = Network::load(dir.path().join("network.json")).unwrap();
        let decoded = plan.to_plan(&net).unwrap();
        assert_eq!(decoded.batteries.get(&1), Some(&1));
        let bus_csv = std::fs::read_to_string(out.join("dispatch_bus.csv")).unwrap();
        assert!(bus_csv.starts_with("# dispatch-bus v1\nbus,hour,"));
        assert_eq!(bus_csv.lines().count(), 2 + 2 * 24);
        let line_csv = std::fs::read_to_string(out.join("dispatch_line.csv")).unwrap();
        assert!(line_csv.starts_with("# dispatch-line v1\nline,hour,"));
        assert_eq!(line_csv.lines().count(), 2 + 24);
    }

    #[test]
    fn export_mode_writes_model_without_solving() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path());
        let cfg = config(dir.path(), "\n[solver]\nmode = \"export\"\n");
        let report = cmd_plan(&cfg).unwrap();
        assert!(report.contains("no solve requested"));
        let out = dir.path().join("out");
        assert!(out.join("model.lp").is_file());
        assert!(out.join("model.mps").is_file());
        assert!(!out.join("plan.json").exists());
    }

    #[test]
    fn simulate_requires_plan_and_writes_season() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path());
        let cfg = config(dir.path(), "");
        let missing = dir.path().join("out/plan.json");
        let err = cmd_simulate(&cfg, &missing).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("plan file"), "{err}");

        cmd_plan(&cfg).unwrap();
        let report = cmd_simulate(&cfg, &missing).unwrap();
        assert!(report.contains("threshold 31"), "{report}");
        assert!(report.contains("3 shutoff days (3 solved, 0 failed)"));
        let season = std::fs::read_to_string(dir.path().join("out/season.csv")).unwrap();
        assert!(season.starts_with("# season v1\n"));
        assert_eq!(season.lines().count(), 2 + 5);
    }

    #[test]
    fn sweep_writes_tables_and_per_case_plans() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path());
        let extra = "\n[sweep]\nscenarios = [1]\nbudgets_musd = [20.0]\nalphas = [0.3, 0.6]\n";
        let cfg = config(dir.path(), extra);
        let report = cmd_sweep(&cfg).unwrap();
        assert!(report.contains("sweep: 2 cases, 2 done, 0 failed"));
        let out = dir.path().join("out");
        let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
        assert_eq!(sweep.lines().count(), 2 + 2);
        assert!(out.join("tradeoff.csv").is_file());
        assert!(out.join("breakdown.csv").is_file());
        let plans: Vec<_> = std::fs::read_dir(out.join("plans")).unwrap().collect();
        assert_eq!(plans.len(), 2);

        let rerun_dir = tempfile::tempdir().unwrap();
        write_fixture(rerun_dir.path());
        let rerun_cfg = config(rerun_dir.path(), extra);
        cmd_sweep(&rerun_cfg).unwrap();
        for name in ["sweep.csv", "tradeoff.csv", "breakdown.csv"] {
            let a = std::fs::read_to_string(out.join(name)).unwrap();
            let b = std::fs::read_to_string(rerun_dir.path().join("out").join(name)).unwrap();
            assert_eq!(a, b, "{name} is byte-identical across reruns");
        }
    }

    #[test]
    fn unknown_candidate_ids_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path());
        let cfg = config(dir.path(), "\n[catalog]\nbattery_buses = [\"nope\"]\n");
        let err = cmd_plan(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("unknown id 'nope'"));
    }

    #[test]
    fn raster_risk_source_is_detected_and_integrated() {
        let dir = tempfile::tempdir().unwrap();
        let mut net: Network = serde_json::from_str(NETWORK).unwrap();
        net.buses[0].latitude = Some(0.0);
        net.buses[0].longitude = Some(0.0);
        net.buses[1].latitude = Some(0.0);
        net.buses[1].longitude = Some(0.2);
        std::fs::write(
            dir.path().join("network.json"),
            serde_json::to_string(&net).unwrap(),
        )
        .unwrap();
        std::fs::write(dir.path().join("demand.csv"), demand_csv()).unwrap();
        let mut raster = String::from("date,lat,lon,value\n");
        for (day, v) in [("2021-06-01", 10.0), ("2021-06-02", 31.0)] {
            raster.push_str(&format!("{day},0.0,0.0,{v}\n{day},0.0,0.2,{v}\n"));
        }
        std::fs::write(dir.path().join("risk.csv"), raster).unwrap();
        let cfg = config(dir.path(), "");
        let inputs = load_inputs(&cfg).unwrap();
        assert_eq!(inputs.plan_table.dates.len(), 2);
        // A uniform field integrates to value x geometric length, so the
        // two days scale exactly with their field values.
        let geom_len = inputs.plan_table.values[0][0] / 10.0;
        assert!(
            (10.0..20.0).contains(&geom_len),
            "0.2 degrees of equator longitude is roughly 14 miles, got {geom_len}"
        );
        let ratio = inputs.plan_table.values[1][0] / inputs.plan_table.values[0][0];
        assert!((ratio - 3.1).abs() < 1e-9, "ratio {ratio}");
    }
}
