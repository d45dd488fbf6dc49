//! Scenario × budget × α case sweeps: solve the placement model for every
//! case, evaluate each resulting plan over a season, and render trade-off
//! curves and budget-allocation breakdowns.
//!
//! Cases are independent and run on up to `worker_count` threads; results
//! are gathered in grid order (scenario, then budget, then α) no matter
//! which worker finishes first, so output files are reproducible byte for
//! byte. A case that fails is recorded with its message and never stops
//! the rest of the sweep. Wall-clock timings are kept on [`CaseResult`]
//! for diagnostics but never written to CSV.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use crate::formulations::{
    build_invest, decode, BatteryParams, InvestmentCatalog, InvestmentPlan, Scenario,
    SolarParams, SpendBreakdown,
};
use crate::milp::{solve, SolveOptions, SolveStatus};
use crate::net::{DemandSeries, Network, SolarProfile};
use crate::risk::RiskTable;
use crate::season::{simulate_season, DayStatus, SeasonOptions, SeasonResult};

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("sweep grid: {0}")]
    Grid(String),
    #[error("no cases to draw a curve from")]
    Empty,
    #[error("trade-off curve mixes {0}")]
    Mixed(&'static str),
}

/// The case lattice: every (scenario, budget, α) combination is one case.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub scenarios: Vec<u8>,
    pub budgets_musd: Vec<f64>,
    pub alphas: Vec<f64>,
}

impl Default for SweepGrid {
    /// Ten budgets ($100M to $1B in $100M steps) crossed with nineteen
    /// α values (0.05 to 0.95 in 0.05 steps) for scenario 1: 190 cases.
    fn default() -> SweepGrid {
        SweepGrid {
            scenarios: vec![1],
            budgets_musd: (1..=10).map(|i| i as f64 * 100.0).collect(),
            alphas: (1..=19).map(|i| i as f64 / 20.0).collect(),
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |msg: String| Err(SweepError::Grid(msg));
        if self.scenarios.is_empty() {
            return bad("scenario list is empty".into());
        }
        if self.budgets_musd.is_empty() {
            return bad("budget list is empty".into());
        }
        if self.alphas.is_empty() {
            return bad("alpha list is empty".into());
        }
        for &s in &self.scenarios {
            if !(1..=8).contains(&s) {
                return bad(format!("scenario {s} is outside 1..=8"));
            }
        }
        for &b in &self.budgets_musd {
            if !(b.is_finite() && b > 0.0) {
                return bad(format!("budget {b} must be positive and finite"));
            }
        }
        for &a in &self.alphas {
            if !(a.is_finite() && a > 0.0 && a < 1.0) {
                return bad(format!("alpha {a} must lie strictly between 0 and 1"));
            }
        }
        Ok(())
    }

    /// All cases in canonical order: scenario, then budget, then α,
    /// each ascending with duplicates dropped.
    pub fn cases(&self) -> Vec<CaseSpec> {
        let mut scenarios = self.scenarios.clone();
        scenarios.sort_unstable();
        scenarios.dedup();
        let mut budgets = self.budgets_musd.clone();
        budgets.sort_by(f64::total_cmp);
        budgets.dedup();
        let mut alphas = self.alphas.clone();
        alphas.sort_by(f64::total_cmp);
        alphas.dedup();
        let mut out = Vec::with_capacity(scenarios.len() * budgets.len() * alphas.len());
        for &scenario in &scenarios {
            for &budget_musd in &budgets {
                for &alpha in &alphas {
                    out.push(CaseSpec {
                        scenario,
                        budget_musd,
                        alpha,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseSpec {
    pub scenario: u8,
    pub budget_musd: f64,
    pub alpha: f64,
}

/// Season risk and demand the plans are evaluated against.
#[derive(Debug, Clone, Copy)]
pub struct SweepEval<'a> {
    pub risk: &'a RiskTable,
    pub demand: &'a DemandSeries,
}

/// Shared inputs for every case of a sweep.
///
/// `plan_demand` and `plan_risk` describe the representative planning day
/// the placement model sees; `eval`, when present, adds a full-season
/// evaluation of each plan. Candidate lists, when given, replace the
/// all-buses / all-hardenable-lines defaults for the investment types the
/// scenario enables.
#[derive(Debug, Clone)]
pub struct SweepInputs<'a> {
    pub net: &'a Network,
    /// Representative planning-day demand, `[bus][hour]`.
    pub plan_demand: &'a [Vec<f64>],
    /// Representative per-line risk for the planning day.
    pub plan_risk: &'a [f64],
    pub solar: &'a SolarProfile,
    pub battery: BatteryParams,
    pub solar_cost: SolarParams,
    pub battery_buses: Option<Vec<usize>>,
    pub solar_buses: Option<Vec<usize>>,
    pub harden_lines: Option<Vec<usize>>,
    pub gamma: f64,
    pub percentile: f64,
    pub solve: SolveOptions,
    pub eval: Option<SweepEval<'a>>,
}

/// Season evaluation of one plan, aggregated over its shutoff days.
///
/// Fractions are season-normalized: total shed over total demand, and
/// total realized risk over total baseline risk, each summed across the
/// solved shutoff days.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeasonAggregates {
    pub threshold: f64,
    pub psps_days: usize,
    pub solved_days: usize,
    pub failed_days: usize,
    pub total_shed_pu: f64,
    pub shed_fraction: f64,
    pub risk_fraction: f64,
    pub de_energizations: usize,
}

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub scenario: u8,
    pub budget_musd: f64,
    pub alpha: f64,
    /// Set when the case produced no plan at all.
    pub failed: Option<String>,
    pub objective: Option<f64>,
    pub predicted_shed_fraction: Option<f64>,
    pub predicted_risk_fraction: Option<f64>,
    pub plan: Option<InvestmentPlan>,
    pub spend: Option<SpendBreakdown>,
    /// Achieved optimality gap; positive when the solve hit its limits.
    pub gap: Option<f64>,
    pub nodes: u64,
    pub season: Option<SeasonAggregates>,
    /// Non-fatal diagnostics, e.g. a season evaluation that failed.
    pub note: Option<String>,
    /// Diagnostic only; excluded from CSV so reruns are byte-identical.
    pub wall_ms: u128,
}

/// Runs every case of the grid, in parallel up to `worker_count`, and
/// returns results in grid order.
pub fn run_sweep(
    inputs: &SweepInputs,
    grid: &SweepGrid,
    worker_count: usize,
) -> Result<Vec<CaseResult>, SweepError> {
    grid.validate()?;
    let cases = grid.cases();
    let workers = worker_count.max(1).min(cases.len());
    let mut slots: Vec<Option<CaseResult>> = Vec::new();
    slots.resize_with(cases.len(), || None);
    let slots = Mutex::new(slots);
    let cursor = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::Relaxed);
                if i >= cases.len() {
                    break;
                }
                let result = run_case(inputs, cases[i]);
                slots.lock().expect("no panics hold this lock")[i] = Some(result);
            });
        }
    });
    let results = slots
        .into_inner()
        .expect("threads are joined")
        .into_iter()
        .map(|slot| slot.expect("every case ran"))
        .collect();
    Ok(results)
}

fn run_case(inputs: &SweepInputs, spec: CaseSpec) -> CaseResult {
    let start = Instant::now();
    let mut out = CaseResult {
        scenario: spec.scenario,
        budget_musd: spec.budget_musd,
        alpha: spec.alpha,
        failed: None,
        objective: None,
        predicted_shed_fraction: None,
        predicted_risk_fraction: None,
        plan: None,
        spend: None,
        gap: None,
        nodes: 0,
        season: None,
        note: None,
        wall_ms: 0,
    };
    match plan_case(inputs, spec, &mut out) {
        Ok(plan) => {
            if let Some(eval) = &inputs.eval {
                let opts = SeasonOptions {
                    alpha: spec.alpha,
                    gamma: inputs.gamma,
                    percentile: inputs.percentile,
                    threshold: None,
                    solve: inputs.solve.clone(),
                };
                match simulate_season(
                    inputs.net,
                    &plan,
                    &inputs.battery,
                    eval.risk,
                    eval.demand,
                    inputs.solar,
                    &opts,
                ) {
                    Ok(season) => {
                        out.season = Some(season_aggregates(&season, eval.demand));
                    }
                    Err(e) => out.note = Some(format!("season evaluation failed: {e}")),
                }
            }
        }
        Err(message) => out.failed = Some(message),
    }
    out.wall_ms = start.elapsed().as_millis();
    out
}

fn plan_case(
    inputs: &SweepInputs,
    spec: CaseSpec,
    out: &mut CaseResult,
) -> Result<InvestmentPlan, String> {
    let scenario = Scenario::from_id(spec.scenario).map_err(|e| e.to_string())?;
    let mut catalog = InvestmentCatalog::for_scenario(inputs.net, scenario);
    catalog.battery = inputs.battery.clone();
    catalog.solar = inputs.solar_cost.clone();
    if scenario.batteries {
        if let Some(list) = &inputs.battery_buses {
            catalog.battery_buses = list.clone();
        }
    }
    if scenario.solar {
        if let Some(list) = &inputs.solar_buses {
            catalog.solar_buses = list.clone();
        }
    }
    if scenario.hardening.is_some() {
        if let Some(list) = &inputs.harden_lines {
            catalog.harden_lines = list.clone();
        }
    }
    catalog.normalize();
    let built = build_invest(
        inputs.net,
        inputs.plan_demand,
        inputs.plan_risk,
        spec.alpha,
        &catalog,
        spec.budget_musd,
        inputs.solar,
    )
    .map_err(|e| e.to_string())?;
    let res = solve(&built.milp, &inputs.solve).map_err(|e| e.to_string())?;
    let usable = matches!(
        res.status,
        SolveStatus::OptimalWithinGap | SolveStatus::LimitReached
    ) && res.values.is_some();
    if !usable {
        return Err(format!("solve ended {}", res.status.as_str()));
    }
    let dec = decode(&built, res.values.as_ref().expect("usable result"))
        .map_err(|e| e.to_string())?;
    out.objective = Some(dec.objective);
    out.predicted_shed_fraction = Some(dec.shed_fraction);
    out.predicted_risk_fraction = Some(dec.risk_fraction);
    out.spend = Some(dec.spend);
    out.gap = res.gap;
    out.nodes = res.nodes;
    out.plan = Some(dec.plan.clone());
    Ok(dec.plan)
}

/// Aggregates a season result over its shutoff days.
pub fn season_aggregates(result: &SeasonResult, demand: &DemandSeries) -> SeasonAggregates {
    let mut shed = 0.0;
    let mut demand_total = 0.0;
    let mut realized_risk = 0.0;
    let mut baseline_risk = 0.0;
    for o in &result.outcomes {
        if o.status != DayStatus::Solved {
            continue;
        }
        shed += o.shed_pu.unwrap_or(0.0);
        if let Some(di) = demand.day_index(o.date) {
            demand_total += demand.day_total(di);
        }
        realized_risk += o.remaining_risk.unwrap_or(0.0);
        baseline_risk += o.total_risk;
    }
    let s = result.summary;
    SeasonAggregates {
        threshold: result.threshold,
        psps_days: s.psps_days,
        solved_days: s.solved_days,
        failed_days: s.failed_days,
        total_shed_pu: s.total_shed_pu,
        shed_fraction: if demand_total > 0.0 { shed / demand_total } else { 0.0 },
        risk_fraction: if baseline_risk > 0.0 {
            realized_risk / baseline_risk
        } else {
            0.0
        },
        de_energizations: s.de_energizations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint {
    pub alpha: f64,
    pub predicted_shed_fraction: f64,
    pub predicted_risk_fraction: f64,
    pub simulated_shed_fraction: Option<f64>,
    pub simulated_risk_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffCurve {
    pub scenario: u8,
    pub budget_musd: f64,
    pub points: Vec<TradeoffPoint>,
}

/// Orders one scenario-and-budget slice of results into an α-sorted
/// trade-off curve. Failed cases are skipped; mixing scenarios or budgets
/// is an error.
pub fn tradeoff_curve(results: &[CaseResult]) -> Result<TradeoffCurve, SweepError> {
    let first = results.first().ok_or(SweepError::Empty)?;
    if results.iter().any(|r| r.scenario != first.scenario) {
        return Err(SweepError::Mixed("scenarios"));
    }
    if results.iter().any(|r| r.budget_musd != first.budget_musd) {
        return Err(SweepError::Mixed("budgets"));
    }
    let mut points: Vec<TradeoffPoint> = results
        .iter()
        .filter(|r| r.failed.is_none())
        .filter_map(|r| {
            Some(TradeoffPoint {
                alpha: r.alpha,
                predicted_shed_fraction: r.predicted_shed_fraction?,
                predicted_risk_fraction: r.predicted_risk_fraction?,
                simulated_shed_fraction: r.season.map(|s| s.shed_fraction),
                simulated_risk_fraction: r.season.map(|s| s.risk_fraction),
            })
        })
        .collect();
    if points.is_empty() {
        return Err(SweepError::Empty);
    }
    points.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    Ok(TradeoffCurve {
        scenario: first.scenario,
        budget_musd: first.budget_musd,
        points,
    })
}

/// Groups sweep results by (scenario, budget) in result order and draws
/// each group's curve. Groups whose every case failed are dropped — the
/// failures stay visible in the sweep rows.
pub fn tradeoff_curves(results: &[CaseResult]) -> Vec<TradeoffCurve> {
    let mut groups: Vec<(u8, f64, Vec<&CaseResult>)> = Vec::new();
    for r in results {
        match groups
            .iter_mut()
            .find(|(s, b, _)| *s == r.scenario && *b == r.budget_musd)
        {
            Some((_, _, members)) => members.push(r),
            None => groups.push((r.scenario, r.budget_musd, vec![r])),
        }
    }
    groups
        .into_iter()
        .filter_map(|(_, _, members)| {
            let owned: Vec<CaseResult> = members.into_iter().cloned().collect();
            tradeoff_curve(&owned).ok()
        })
        .collect()
}

/// Spend on each investment type as a percent of the case budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetShares {
    pub battery_pct: f64,
    pub solar_pct: f64,
    pub hardening_pct: f64,
    pub total_pct: f64,
}

/// Computes percent-of-budget shares for one case; `None` when the case
/// carries no plan.
pub fn budget_breakdown(case: &CaseResult) -> Option<BudgetShares> {
    let spend = case.spend.as_ref()?;
    let b = case.budget_musd;
    Some(BudgetShares {
        battery_pct: 100.0 * spend.battery_musd / b,
        solar_pct: 100.0 * spend.solar_musd / b,
        hardening_pct: 100.0 * spend.hardening_musd / b,
        total_pct: 100.0 * spend.total_musd / b,
    })
}

fn num(v: f64) -> String {
    format!("{v:.8e}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), num)
}

fn clean(msg: &str) -> String {
    msg.replace([',', '\n'], ";")
}

/// One row per case, in sweep order.
pub fn sweep_csv(results: &[CaseResult]) -> String {
    let mut out = String::from("# sweep v1\n");
    out.push_str(
        "scenario,budget_musd,alpha,status,objective,predicted_shed_fraction,predicted_risk_fraction,\
         battery_musd,solar_musd,hardening_musd,spend_musd,gap,nodes,\
         season_threshold,season_psps_days,season_solved_days,season_failed_days,\
         season_shed_pu,season_shed_fraction,season_risk_fraction,season_de_energizations,note\n",
    );
    for r in results {
        let status = if r.failed.is_some() { "failed" } else { "done" };
        let spend = r.spend.as_ref();
        let season = r.season.as_ref();
        let counts = |f: fn(&SeasonAggregates) -> usize| {
            season.map_or(String::new(), |s| f(s).to_string())
        };
        let note = r
            .failed
            .as_deref()
            .or(r.note.as_deref())
            .map_or(String::new(), clean);
        out.push_str(&format!(
            "{},{},{},{status},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{note}\n",
            r.scenario,
            num(r.budget_musd),
            num(r.alpha),
            opt(r.objective),
            opt(r.predicted_shed_fraction),
            opt(r.predicted_risk_fraction),
            opt(spend.map(|s| s.battery_musd)),
            opt(spend.map(|s| s.solar_musd)),
            opt(spend.map(|s| s.hardening_musd)),
            opt(spend.map(|s| s.total_musd)),
            opt(r.gap),
            r.nodes,
            opt(season.map(|s| s.threshold)),
            counts(|s| s.psps_days),
            counts(|s| s.solved_days),
            counts(|s| s.failed_days),
            opt(season.map(|s| s.total_shed_pu)),
            opt(season.map(|s| s.shed_fraction)),
            opt(season.map(|s| s.risk_fraction)),
            counts(|s| s.de_energizations),
        ));
    }
    out
}

/// One row per curve point, curves in (scenario, budget) order.
pub fn tradeoff_csv(curves: &[TradeoffCurve]) -> String {
    let mut out = String::from("# tradeoff v1\n");
    out.push_str(
        "scenario,budget_musd,alpha,predicted_shed_fraction,predicted_risk_fraction,\
         simulated_shed_fraction,simulated_risk_fraction\n",
    );
    for curve in curves {
        for p in &curve.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                curve.scenario,
                num(curve.budget_musd),
                num(p.alpha),
                num(p.predicted_shed_fraction),
                num(p.predicted_risk_fraction),
                opt(p.simulated_shed_fraction),
                opt(p.simulated_risk_fraction),
            ));
        }
    }
    out
}

/// One row per case that produced a plan.
pub fn breakdown_csv(results: &[CaseResult]) -> String {
    let mut out = String::from("# breakdown v1\n");
    out.push_str("scenario,budget_musd,alpha,battery_pct,solar_pct,hardening_pct,total_pct\n");
    for r in results {
        let Some(shares) = budget_breakdown(r) else {
            continue;
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.scenario,
            num(r.budget_musd),
            num(r.alpha),
            num(shares.battery_pct),
            num(shares.solar_pct),
            num(shares.hardening_pct),
            num(shares.total_pct),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Bus, Generator, Line};
    use crate::risk::psps_days;
    use chrono::NaiveDate;

    #[test]
    fn default_grid_is_190_cases_in_canonical_order() {
        let grid = SweepGrid::default();
        grid.validate().unwrap();
        let cases = grid.cases();
        assert_eq!(cases.len(), 190);
        assert_eq!(cases[0].scenario, 1);
        assert_eq!(cases[0].budget_musd, 100.0);
        assert!((cases[0].alpha - 0.05).abs() < 1e-12);
        let last = cases.last().unwrap();
        assert_eq!(last.budget_musd, 1000.0);
        assert!((last.alpha - 0.95).abs() < 1e-12);
        for w in cases.windows(2) {
            let key = |c: &CaseSpec| (c.scenario, c.budget_musd, c.alpha);
            assert!(key(&w[0]) < key(&w[1]), "cases are strictly ordered");
        }
        assert!(cases.iter().all(|c| c.alpha > 0.0 && c.alpha < 1.0));
    }

    #[test]
    fn grid_validation_rejects_bad_entries() {
        let mut grid = SweepGrid::default();
        grid.alphas.clear();
        assert!(matches!(grid.validate(), Err(SweepError::Grid(_))));
        let mut grid = SweepGrid::default();
        grid.alphas.push(1.0);
        assert!(grid.validate().is_err());
        let mut grid = SweepGrid::default();
        grid.budgets_musd.push(0.0);
        assert!(grid.validate().is_err());
        let mut grid = SweepGrid::default();
        grid.scenarios = vec![9];
        assert!(grid.validate().is_err());
        let grid = SweepGrid {
            scenarios: (1..=8).collect(),
            ..SweepGrid::default()
        };
        assert_eq!(grid.cases().len(), 8 * 190);
    }

    fn net() -> Network {
        Network {
            base_mva: 100.0,
            buses: vec![
                Bus {
                    id: "b0".into(),
                    latitude: None,
                    longitude: None,
                    demand_pu: 0.0,
                    disabled: false,
                },
                Bus {
                    id: "b1".into(),
                    latitude: None,
                    longitude: None,
                    demand_pu: 0.5,
                    disabled: false,
                },
            ],
            lines: vec![Line {
                id: "l0".into(),
                from_bus: 0,
                to_bus: 1,
                susceptance_pu: -5.0,
                flow_limit_pu: 2.0,
                angle_min_rad: -0.5,
                angle_max_rad: 0.5,
                length_miles: 10.0,
                switchable: true,
                hardenable: true,
                geometry: None,
            }],
            generators: vec![Generator {
                id: "g0".into(),
                bus: 0,
                p_min_pu: 0.0,
                p_max_pu: 0.3,
            }],
        }
    }

    fn eval_fixture(net: &Network) -> (RiskTable, DemandSeries) {
        let dates: Vec<NaiveDate> = ["2021-06-01", "2021-06-02", "2021-06-03", "2021-06-04", "2021-06-05"]
            .iter()
            .map(|d| d.parse().unwrap())
            .collect();
        let risk = RiskTable {
            line_ids: net.lines.iter().map(|l| l.id.clone()).collect(),
            dates: dates.clone(),
            values: [10.0, 31.0, 40.0, 5.0, 45.0].iter().map(|&v| vec![v]).collect(),
        };
        let day = vec![vec![0.0, 0.0], vec![0.5, 0.5]];
        let demand = DemandSeries::new(dates, 2, vec![day; 5]).unwrap();
        (risk, demand)
    }

    fn inputs<'a>(
        net: &'a Network,
        plan_demand: &'a [Vec<f64>],
        solar: &'a SolarProfile,
        plan_risk: &'a [f64],
        eval: Option<SweepEval<'a>>,
    ) -> SweepInputs<'a> {
        SweepInputs {
            net,
            plan_demand,
            plan_risk,
            solar,
            battery: BatteryParams::default(),
            solar_cost: SolarParams::default(),
            battery_buses: None,
            solar_buses: None,
            harden_lines: None,
            gamma: 0.01,
            percentile: 0.6,
            solve: SolveOptions::exact(),
            eval,
        }
    }

    #[test]
    fn sweep_plans_evaluates_and_reruns_byte_identically() {
        let net = net();
        let (risk_table, demand_series) = eval_fixture(&net);
        let plan_demand = vec![vec![0.0, 0.0], vec![0.5, 0.5]];
        let plan_risk = vec![1.0];
        let solar = SolarProfile::zeros(&net, 2);
        let grid = SweepGrid {
            scenarios: vec![1],
            budgets_musd: vec![20.0, 40.0],
            alphas: vec![0.3, 0.6],
        };
        let eval = SweepEval {
            risk: &risk_table,
            demand: &demand_series,
        };
        let input = inputs(&net, &plan_demand, &solar, &plan_risk, Some(eval));
        let results = run_sweep(&input, &grid, 2).unwrap();
        assert_eq!(results.len(), 4);
        for r in &results {
            assert!(r.failed.is_none(), "{:?}", r.failed);
            let plan = r.plan.as_ref().unwrap();
            let units: i64 = plan.batteries.values().sum();
            let spend = r.spend.as_ref().unwrap();
            assert!(spend.total_musd <= r.budget_musd + 1e-9);
            // Every case de-energizes the line and islands the load on a
            // battery at its bus: one unit leaves 0.05 pu shed, two cover
            // everything.
            assert!(r.predicted_risk_fraction.unwrap() < 1e-9);
            if r.budget_musd < 30.0 {
                assert_eq!(units, 1);
                assert_eq!(plan.batteries[&1], 1);
                assert!((r.predicted_shed_fraction.unwrap() - 0.05).abs() < 1e-9);
            } else {
                assert_eq!(units, 2);
                assert_eq!(plan.batteries[&1], 2);
                assert!(r.predicted_shed_fraction.unwrap() < 1e-9);
            }
            let season = r.season.as_ref().unwrap();
            assert_eq!(season.threshold, 31.0);
            assert_eq!(season.psps_days, 3);
            assert_eq!(season.solved_days, 3);
            assert!((0.0..=1.0).contains(&season.shed_fraction));
            assert!((0.0..=1.0).contains(&season.risk_fraction));
        }
        let rerun = run_sweep(&input, &grid, 1).unwrap();
        assert_eq!(sweep_csv(&results), sweep_csv(&rerun));
        assert_eq!(
            tradeoff_csv(&tradeoff_curves(&results)),
            tradeoff_csv(&tradeoff_curves(&rerun))
        );
        assert_eq!(breakdown_csv(&results), breakdown_csv(&rerun));
        assert!(!sweep_csv(&results).contains("wall"), "timings stay out of CSV");
    }

    #[test]
    fn season_risk_never_exceeds_daily_baseline() {
        let net = net();
        let (risk_table, demand_series) = eval_fixture(&net);
        let plan_demand = vec![vec![0.0, 0.0], vec![0.5, 0.5]];
        let plan_risk = vec![1.0];
        let solar = SolarProfile::zeros(&net, 2);
        let opts = SeasonOptions {
            alpha: 0.6,
            gamma: 0.01,
            percentile: 0.6,
            threshold: None,
            solve: SolveOptions::exact(),
        };
        let input = inputs(&net, &plan_demand, &solar, &plan_risk, None);
        let grid = SweepGrid {
            scenarios: vec![1],
            budgets_musd: vec![20.0],
            alphas: vec![0.6],
        };
        let results = run_sweep(&input, &grid, 1).unwrap();
        let plan = results[0].plan.as_ref().unwrap();
        let season = simulate_season(
            &net,
            plan,
            &BatteryParams::default(),
            &risk_table,
            &demand_series,
            &solar,
            &opts,
        )
        .unwrap();
        let flagged = psps_days(&risk_table, season.threshold);
        assert_eq!(flagged.len(), 3);
        for o in &season.outcomes {
            if let Some(f) = o.risk_fraction {
                let realized = f * o.total_risk;
                assert!(realized <= o.total_risk + 1e-9);
            }
        }
    }

    fn bare_case(scenario: u8, budget: f64, alpha: f64) -> CaseResult {
        CaseResult {
            scenario,
            budget_musd: budget,
            alpha,
            failed: None,
            objective: Some(0.0),
            predicted_shed_fraction: Some(alpha),
            predicted_risk_fraction: Some(1.0 - alpha),
            plan: Some(InvestmentPlan::empty()),
            spend: Some(SpendBreakdown {
                battery_musd: 20.0,
                solar_musd: 0.0,
                hardening_musd: 0.0,
                total_musd: 20.0,
            }),
            gap: Some(0.0),
            nodes: 1,
            season: None,
            note: None,
            wall_ms: 7,
        }
    }

    #[test]
    fn tradeoff_curve_sorts_by_alpha_and_rejects_mixed_slices() {
        let cases = vec![
            bare_case(1, 100.0, 0.8),
            bare_case(1, 100.0, 0.2),
            bare_case(1, 100.0, 0.5),
        ];
        let curve = tradeoff_curve(&cases).unwrap();
        let alphas: Vec<f64> = curve.points.iter().map(|p| p.alpha).collect();
        assert_eq!(alphas, vec![0.2, 0.5, 0.8]);

        let mixed = vec![bare_case(1, 100.0, 0.2), bare_case(2, 100.0, 0.5)];
        assert!(matches!(
            tradeoff_curve(&mixed),
            Err(SweepError::Mixed("scenarios"))
        ));
        let mixed = vec![bare_case(1, 100.0, 0.2), bare_case(1, 200.0, 0.5)];
        assert!(matches!(
            tradeoff_curve(&mixed),
            Err(SweepError::Mixed("budgets"))
        ));
        assert!(matches!(tradeoff_curve(&[]), Err(SweepError::Empty)));

        let single = vec![bare_case(1, 100.0, 0.5)];
        assert_eq!(tradeoff_curve(&single).unwrap().points.len(), 1);
    }

    #[test]
    fn breakdown_is_percent_of_budget() {
        let case = bare_case(1, 100.0, 0.5);
        let shares = budget_breakdown(&case).unwrap();
        assert_eq!(shares.battery_pct, 20.0);
        assert_eq!(shares.solar_pct, 0.0);
        assert_eq!(shares.total_pct, 20.0);

        let mut empty = bare_case(1, 100.0, 0.5);
        empty.spend = Some(SpendBreakdown {
            battery_musd: 0.0,
            solar_musd: 0.0,
            hardening_musd: 0.0,
            total_musd: 0.0,
        });
        let shares = budget_breakdown(&empty).unwrap();
        assert_eq!(shares.total_pct, 0.0);

        let mut failed = bare_case(1, 100.0, 0.5);
        failed.spend = None;
        assert!(budget_breakdown(&failed).is_none());
    }

    #[test]
    fn csv_headers_and_failure_notes_are_sanitized() {
        let mut failed = bare_case(1, 100.0, 0.5);
        failed.failed = Some("bad, very bad\nnews".into());
        failed.objective = None;
        failed.spend = None;
        failed.plan = None;
        let ok = bare_case(1, 100.0, 0.2);
        let csv = sweep_csv(&[ok, failed]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# sweep v1");
        assert!(lines[1].starts_with("scenario,budget_musd,alpha,status,"));
        assert!(lines[2].contains(",done,"));
        assert!(lines[3].contains(",failed,"));
        assert!(lines[3].ends_with("bad; very bad;news"));
        assert_eq!(lines[2].matches(',').count(), lines[1].matches(',').count());
        assert_eq!(lines[3].matches(',').count(), lines[1].matches(',').count());

        let tcsv = tradeoff_csv(&tradeoff_curves(&[bare_case(1, 100.0, 0.2)]));
        assert!(tcsv.starts_with("# tradeoff v1\nscenario,budget_musd,alpha,"));
        let bcsv = breakdown_csv(&[bare_case(1, 100.0, 0.2)]);
        assert!(bcsv.starts_with("# breakdown v1\nscenario,"));
    }
}
