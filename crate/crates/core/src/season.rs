//! Full-season evaluation of an investment plan: detect shutoff days from
//! daily risk, solve the day-operation model on each, and carry battery
//! charge across consecutive events.
//!
//! Batteries recharge between events: any quiet calendar day resets them
//! to full. On back-to-back shutoff days the next morning starts exactly
//! at the previous day's closing charge, bit for bit. A day whose solve
//! fails is recorded and isolated — the failure never poisons the rest of
//! the season, and the following day starts from a full battery.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::formulations::{
    build_sequential, decode, BatteryParams, FormError, InvestmentPlan,
};
use crate::milp::{solve, SolveOptions, SolveStatus};
use crate::net::{DemandSeries, Network, SolarProfile};
use crate::risk::{psps_days, psps_threshold, RiskError, RiskTable, DEFAULT_PERCENTILE};

#[derive(Debug, thiserror::Error)]
pub enum SeasonError {
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error("season inputs: {0}")]
    Shape(String),
}

#[derive(Debug, Clone)]
pub struct SeasonOptions {
    /// Served-load versus risk weight used on every shutoff day.
    pub alpha: f64,
    /// End-of-day battery reserve reward.
    pub gamma: f64,
    /// Daily-risk percentile that sets the shutoff trigger threshold.
    pub percentile: f64,
    /// Explicit trigger threshold; when set, `percentile` is ignored and
    /// the season may legitimately contain no shutoff days at all.
    pub threshold: Option<f64>,
    pub solve: SolveOptions,
}

impl Default for SeasonOptions {
    fn default() -> SeasonOptions {
        SeasonOptions {
            alpha: 0.5,
            gamma: 0.01,
            percentile: DEFAULT_PERCENTILE,
            threshold: None,
            solve: SolveOptions::exact(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DayStatus {
    /// Below the trigger threshold; the grid runs normally.
    Quiet,
    Solved,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct DayOutcome {
    pub date: NaiveDate,
    /// Baseline risk for the day: the sum over all lines, untouched by
    /// any investment.
    pub total_risk: f64,
    /// True when the previous calendar day was also a shutoff day.
    pub consecutive_with_previous: bool,
    pub status: DayStatus,
    pub objective: Option<f64>,
    pub shed_pu: Option<f64>,
    pub shed_fraction: Option<f64>,
    /// Risk left after de-energization and hardening. Quiet days keep all
    /// lines energized, so only permanent hardening reduces theirs.
    pub remaining_risk: Option<f64>,
    /// `remaining_risk / total_risk`; zero when the day carries no risk.
    pub risk_fraction: Option<f64>,
    /// Relative optimality gap the day's solve achieved.
    pub gap: Option<f64>,
    /// Ids of lines de-energized for the day.
    pub de_energized: Vec<String>,
    /// Absolute closing battery charge per bus index.
    pub final_soc: BTreeMap<usize, f64>,
}

impl DayOutcome {
    pub fn triggered(&self) -> bool {
        self.status != DayStatus::Quiet
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SeasonSummary {
    pub days: usize,
    pub psps_days: usize,
    pub solved_days: usize,
    pub failed_days: usize,
    pub total_shed_pu: f64,
    /// Mean over solved days; zero when none were solved.
    pub mean_shed_fraction: f64,
    pub mean_risk_fraction: f64,
    /// Total line-day de-energizations.
    pub de_energizations: usize,
}

#[derive(Debug, Clone)]
pub struct SeasonResult {
    pub threshold: f64,
    pub percentile: f64,
    pub outcomes: Vec<DayOutcome>,
    pub summary: SeasonSummary,
}

/// Runs a full season of a fixed plan against daily per-line risk.
///
/// The trigger threshold is the given percentile of the season's daily
/// risk totals; each day at or above it solves the day-operation model
/// with that day's demand and risk.
pub fn simulate_season(
    net: &Network,
    plan: &InvestmentPlan,
    battery: &BatteryParams,
    risk: &RiskTable,
    demand: &DemandSeries,
    solar: &SolarProfile,
    opts: &SeasonOptions,
) -> Result<SeasonResult, SeasonError> {
    plan.validate(net)?;
    battery.validate()?;
    let net_ids: Vec<&str> = net.lines.iter().map(|l| l.id.as_str()).collect();
    let table_ids: Vec<&str> = risk.line_ids.iter().map(String::as_str).collect();
    if net_ids != table_ids {
        return Err(SeasonError::Shape(
            "risk table lines do not match the network".into(),
        ));
    }
    if solar.hours != demand.hours {
        return Err(SeasonError::Shape(format!(
            "solar profile covers {} hours, demand {}",
            solar.hours, demand.hours
        )));
    }
    let totals = risk.daily_totals();
    let threshold = match opts.threshold {
        Some(t) if t.is_finite() => t,
        Some(t) => return Err(SeasonError::Shape(format!("threshold {t} is not finite"))),
        None => psps_threshold(&totals, opts.percentile)?,
    };
    let trigger_days = psps_days(risk, threshold);

    let full_soc: BTreeMap<usize, f64> = plan
        .batteries
        .iter()
        .map(|(&bus, &units)| (bus, units as f64 * battery.energy_max_pu))
        .collect();
    let hardening_factor: Vec<f64> = (0..net.lines.len())
        .map(|l| {
            1.0 - plan
                .hardened
                .get(&l)
                .map_or(0.0, |kind| kind.risk_reduction())
        })
        .collect();

    let mut outcomes: Vec<DayOutcome> = Vec::with_capacity(risk.dates.len());
    let mut next_trigger = trigger_days.iter().peekable();
    let mut last_solved: Option<(NaiveDate, BTreeMap<usize, f64>)> = None;
    for (di, &date) in risk.dates.iter().enumerate() {
        let triggered = match next_trigger.peek() {
            Some(d) if d.index == di => Some(**d),
            _ => None,
        };
        let Some(day) = triggered else {
            let remaining: f64 = risk.values[di]
                .iter()
                .zip(&hardening_factor)
                .map(|(r, f)| r * f)
                .sum();
            outcomes.push(DayOutcome {
                date,
                total_risk: totals[di],
                consecutive_with_previous: false,
                status: DayStatus::Quiet,
                objective: None,
                shed_pu: Some(0.0),
                shed_fraction: Some(0.0),
                remaining_risk: Some(remaining),
                risk_fraction: Some(if totals[di] > 0.0 {
                    remaining / totals[di]
                } else {
                    0.0
                }),
                gap: None,
                de_energized: Vec::new(),
                final_soc: BTreeMap::new(),
            });
            continue;
        };
        next_trigger.next();

        let initial_soc = match (&last_solved, day.consecutive_with_previous) {
            (Some((prev_date, soc)), true) if prev_date.succ_opt() == Some(date) => soc.clone(),
            _ => full_soc.clone(),
        };

        let solved = solve_day(
            net, plan, battery, risk, demand, solar, opts, di, date, &initial_soc,
        );
        let outcome = match solved {
            Ok(day_solution) => {
                last_solved = Some((date, day_solution.final_soc.clone()));
                DayOutcome {
                    date,
                    total_risk: totals[di],
                    consecutive_with_previous: day.consecutive_with_previous,
                    status: DayStatus::Solved,
                    objective: Some(day_solution.objective),
                    shed_pu: Some(day_solution.shed_pu),
                    shed_fraction: Some(day_solution.shed_fraction),
                    remaining_risk: Some(day_solution.risk_fraction * totals[di]),
                    risk_fraction: Some(day_solution.risk_fraction),
                    gap: day_solution.gap,
                    de_energized: day_solution.de_energized,
                    final_soc: day_solution.final_soc,
                }
            }
            Err(message) => {
                last_solved = None;
                DayOutcome {
                    date,
                    total_risk: totals[di],
                    consecutive_with_previous: day.consecutive_with_previous,
                    status: DayStatus::Failed(message),
                    objective: None,
                    shed_pu: None,
                    shed_fraction: None,
                    remaining_risk: None,
                    risk_fraction: None,
                    gap: None,
                    de_energized: Vec::new(),
                    final_soc: BTreeMap::new(),
                }
            }
        };
        outcomes.push(outcome);
    }

    let summary = summarize(&outcomes);
    Ok(SeasonResult {
        threshold,
        percentile: opts.percentile,
        outcomes,
        summary,
    })
}

struct DaySolution {
    objective: f64,
    shed_pu: f64,
    shed_fraction: f64,
    risk_fraction: f64,
    gap: Option<f64>,
    de_energized: Vec<String>,
    final_soc: BTreeMap<usize, f64>,
}

#[allow(clippy::too_many_arguments)]
fn solve_day(
    net: &Network,
    plan: &InvestmentPlan,
    battery: &BatteryParams,
    risk: &RiskTable,
    demand: &DemandSeries,
    solar: &SolarProfile,
    opts: &SeasonOptions,
    day_index: usize,
    date: NaiveDate,
    initial_soc: &BTreeMap<usize, f64>,
) -> Result<DaySolution, String> {
    let demand_day = demand
        .day_index(date)
        .map(|i| &demand.values[i])
        .ok_or_else(|| format!("no demand profile for {date}"))?;
    let built = build_sequential(
        net,
        demand_day,
        &risk.values[day_index],
        opts.alpha,
        opts.gamma,
        plan,
        battery,
        initial_soc,
        solar,
    )
    .map_err(|e| e.to_string())?;
    let res = solve(&built.milp, &opts.solve).map_err(|e| e.to_string())?;
    let usable = matches!(
        res.status,
        SolveStatus::OptimalWithinGap | SolveStatus::LimitReached
    ) && res.values.is_some();
    if !usable {
        return Err(format!("solve ended {}", res.status.as_str()));
    }
    let values = res.values.as_ref().expect("usable result carries values");
    let dec = decode(&built, values).map_err(|e| e.to_string())?;
    let de_energized = dec
        .energized
        .iter()
        .filter(|&(_, &on)| !on)
        .map(|(&i, _)| net.lines[i].id.clone())
        .collect();
    Ok(DaySolution {
        objective: dec.objective,
        shed_pu: dec.shed_total_pu,
        shed_fraction: dec.shed_fraction,
        risk_fraction: dec.risk_fraction,
        gap: res.gap,
        de_energized,
        final_soc: dec.final_soc(),
    })
}

fn summarize(outcomes: &[DayOutcome]) -> SeasonSummary {
    let mut s = SeasonSummary {
        days: outcomes.len(),
        ..SeasonSummary::default()
    };
    let mut shed_fracs = 0.0;
    let mut risk_fracs = 0.0;
    for o in outcomes {
        match &o.status {
            DayStatus::Quiet => {}
            DayStatus::Solved => {
                s.psps_days += 1;
                s.solved_days += 1;
                s.total_shed_pu += o.shed_pu.unwrap_or(0.0);
                shed_fracs += o.shed_fraction.unwrap_or(0.0);
                risk_fracs += o.risk_fraction.unwrap_or(0.0);
                s.de_energizations += o.de_energized.len();
            }
            DayStatus::Failed(_) => {
                s.psps_days += 1;
                s.failed_days += 1;
            }
        }
    }
    if s.solved_days > 0 {
        s.mean_shed_fraction = shed_fracs / s.solved_days as f64;
        s.mean_risk_fraction = risk_fracs / s.solved_days as f64;
    }
    s
}

/// Renders a season result as CSV, one row per season day.
///
/// Columns: date, baseline risk, shutoff flag, consecutive flag, status,
/// objective, shed, shed fraction, remaining risk, risk fraction, gap,
/// de-energized line ids (`;`-joined), closing charge per battery bus
/// (`bus=value` `;`-joined), and a note carrying any failure message.
pub fn season_csv(net: &Network, result: &SeasonResult) -> String {
    let mut out = String::from("# season v1\n");
    out.push_str(
        "date,total_risk,psps,consecutive,status,objective,shed_pu,shed_fraction,remaining_risk,risk_fraction,gap,de_energized,final_soc,note\n",
    );
    let fmt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.8e}"));
    for o in &result.outcomes {
        let (status, note) = match &o.status {
            DayStatus::Quiet => ("quiet", String::new()),
            DayStatus::Solved => ("solved", String::new()),
            DayStatus::Failed(m) => ("failed", m.replace([',', '\n'], ";")),
        };
        let soc = o
            .final_soc
            .iter()
            .map(|(&bus, &v)| format!("{}={v:.8e}", net.buses[bus].id))
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!(
            "{},{:.8e},{},{},{status},{},{},{},{},{},{},{},{soc},{note}\n",
            o.date,
            o.total_risk,
            u8::from(o.triggered()),
            u8::from(o.consecutive_with_previous),
            fmt(o.objective),
            fmt(o.shed_pu),
            fmt(o.shed_fraction),
            fmt(o.remaining_risk),
            fmt(o.risk_fraction),
            fmt(o.gap),
            o.de_energized.join(";"),
        ));
    }
    out
}
