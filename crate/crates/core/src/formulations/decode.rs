//! Interpretation of raw solver values back into grid quantities, plus an
//! independent feasibility audit of decoded solutions.

use std::collections::BTreeMap;

use crate::milp::VarId;

use super::builder::{BuiltModel, ModelKind};
use super::plan::{InvestmentPlan, SpendBreakdown};
use super::FormError;

/// Tolerance on the objective decomposition: the recomputed value of the
/// objective from decoded quantities must match the evaluated linear
/// objective this closely, or the decode is rejected.
const DECOMP_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BatteryDispatch {
    pub units: i64,
    pub charge: Vec<f64>,
    pub discharge: Vec<f64>,
    /// Absolute state of charge, `hours + 1` entries starting at the
    /// initial charge.
    pub soc: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SolarDispatch {
    pub units: f64,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DecodedSolution {
    pub objective: f64,
    pub shed_total_pu: f64,
    /// Shed energy over total positive demand, in `[0, 1]`.
    pub shed_fraction: f64,
    /// Hardening-adjusted energized risk over total risk, in `[0, 1]`.
    pub risk_fraction: f64,
    /// Switchable line index -> stayed energized.
    pub energized: BTreeMap<usize, bool>,
    pub flows: Vec<Vec<f64>>,
    pub angles: Vec<Vec<f64>>,
    pub generation: Vec<Vec<f64>>,
    pub shed: Vec<Vec<f64>>,
    pub batteries: BTreeMap<usize, BatteryDispatch>,
    pub solar: BTreeMap<usize, SolarDispatch>,
    pub plan: InvestmentPlan,
    pub spend: SpendBreakdown,
}

impl DecodedSolution {
    /// Absolute end-of-horizon charge per battery bus.
    pub fn final_soc(&self) -> BTreeMap<usize, f64> {
        self.batteries
            .iter()
            .map(|(&bus, b)| (bus, *b.soc.last().expect("soc never empty")))
            .collect()
    }
}

/// Decodes a value assignment of the built model into grid quantities.
///
/// The objective is recomputed from the decoded pieces (shed share,
/// energized risk share, end-of-day reserve) and must agree with the
/// evaluated linear objective to within [`DECOMP_TOL`]; disagreement
/// means the model and its interpretation have drifted apart and is
/// reported as an error rather than silently returned.
pub fn decode(built: &BuiltModel, values: &[f64]) -> Result<DecodedSolution, FormError> {
    let model = &built.milp;
    let vars = &built.vars;
    let ctx = &built.ctx;
    if values.len() != model.num_vars() {
        return Err(FormError::Decode(format!(
            "{} values for {} variables",
            values.len(),
            model.num_vars()
        )));
    }
    let val = |v: VarId| values[v.index()];
    let grid =
        |ids: &Vec<Vec<VarId>>| -> Vec<Vec<f64>> { ids.iter().map(|row| row.iter().map(|&v| val(v)).collect()).collect() };

    let energized: BTreeMap<usize, bool> = vars
        .energize
        .iter()
        .map(|(&i, &z)| (i, val(z) > 0.5))
        .collect();
    let flows = grid(&vars.flow);
    let angles = grid(&vars.angle);
    let generation = grid(&vars.generation);
    let shed = grid(&vars.shed);
    let shed_total_pu: f64 = shed.iter().map(|row| row.iter().sum::<f64>()).sum();

    let mut batteries = BTreeMap::new();
    for (&bus, &x) in &vars.battery_units {
        let units = val(x).round() as i64;
        let charge: Vec<f64> = vars.charge[&bus].iter().map(|&v| val(v)).collect();
        let discharge: Vec<f64> = vars.discharge[&bus].iter().map(|&v| val(v)).collect();
        let initial = match ctx.kind {
            ModelKind::Sequential => ctx.initial_soc[&bus],
            _ => units as f64 * ctx.battery.energy_max_pu,
        };
        let mut soc = Vec::with_capacity(ctx.hours + 1);
        soc.push(initial);
        for t in 0..ctx.hours {
            let prev = soc[t];
            soc.push(prev + ctx.battery.efficiency * charge[t] - discharge[t] / ctx.battery.efficiency);
        }
        batteries.insert(
            bus,
            BatteryDispatch {
                units,
                charge,
                discharge,
                soc,
            },
        );
    }

    let mut solar = BTreeMap::new();
    for (&bus, outs) in &vars.solar_out {
        let units = match ctx.kind {
            ModelKind::Sequential => ctx
                .fixed
                .as_ref()
                .and_then(|p| p.solar.get(&bus).copied())
                .unwrap_or(0.0),
            _ => vars.solar_units.get(&bus).map_or(0.0, |&a| val(a)),
        };
        solar.insert(
            bus,
            SolarDispatch {
                units,
                output: outs.iter().map(|&v| val(v)).collect(),
            },
        );
    }

    let plan = match ctx.kind {
        ModelKind::Shutoff => InvestmentPlan::empty(),
        ModelKind::Sequential => ctx.fixed.clone().unwrap_or_default(),
        ModelKind::Invest => {
            let mut plan = InvestmentPlan::empty();
            for (&bus, b) in &batteries {
                if b.units > 0 {
                    plan.batteries.insert(bus, b.units);
                }
            }
            for (&bus, s) in &solar {
                if s.units > 1e-9 {
                    plan.solar.insert(bus, s.units);
                }
            }
            for (&i, &y) in &vars.harden {
                if val(y) > 0.5 {
                    plan.hardened.insert(i, ctx.hardening[&i]);
                }
            }
            plan
        }
    };
    let spend = plan.spend(&ctx.net, &ctx.battery, &ctx.solar);

    let shed_fraction = shed_total_pu / ctx.demand_total;
    let risk_fraction = if ctx.risk_total > 0.0 {
        let mut num = 0.0;
        for (i, _) in ctx.net.lines.iter().enumerate() {
            let on = energized.get(&i).copied().unwrap_or(true);
            if on {
                let scale = 1.0
                    - plan
                        .hardened
                        .get(&i)
                        .map_or(0.0, |k| k.risk_reduction());
                num += ctx.risk[i] * scale;
            }
        }
        num / ctx.risk_total
    } else {
        0.0
    };

    // Recompute the objective from raw values exactly as assembled:
    // weighted shed share, weighted linear risk terms, reserve reward.
    let mut recomputed = ctx.alpha / ctx.demand_total * shed_total_pu;
    if ctx.risk_total > 0.0 {
        let w = (1.0 - ctx.alpha) / ctx.risk_total;
        match ctx.kind {
            ModelKind::Shutoff | ModelKind::Invest => {
                for (i, _) in ctx.net.lines.iter().enumerate() {
                    match vars.energize.get(&i) {
                        Some(&z) => recomputed += w * ctx.risk[i] * val(z),
                        None => recomputed += w * ctx.risk[i],
                    }
                }
                for (&i, &y) in &vars.harden {
                    let beta = ctx.hardening[&i].risk_reduction();
                    recomputed -= w * beta * ctx.risk[i] * val(y);
                }
            }
            ModelKind::Sequential => {
                let fixed = ctx.fixed.as_ref().expect("sequential carries its plan");
                for (i, _) in ctx.net.lines.iter().enumerate() {
                    let scale = 1.0
                        - fixed
                            .hardened
                            .get(&i)
                            .map_or(0.0, |k| k.risk_reduction());
                    match vars.energize.get(&i) {
                        Some(&z) => recomputed += w * ctx.risk[i] * scale * val(z),
                        None => recomputed += w * ctx.risk[i] * scale,
                    }
                }
            }
        }
    }
    if ctx.kind == ModelKind::Sequential && ctx.gamma > 0.0 && ctx.energy_total > 0.0 {
        let g = ctx.gamma / ctx.energy_total;
        for b in batteries.values() {
            recomputed -= g * b.soc.last().expect("soc never empty");
        }
    }
    let objective = model.eval_objective(values);
    if (recomputed - objective).abs() > DECOMP_TOL * objective.abs().max(1.0) {
        return Err(FormError::Decode(format!(
            "objective decomposition {recomputed} disagrees with evaluated objective {objective}"
        )));
    }

    Ok(DecodedSolution {
        objective,
        shed_total_pu,
        shed_fraction,
        risk_fraction,
        energized,
        flows,
        angles,
        generation,
        shed,
        batteries,
        solar,
        plan,
        spend,
    })
}

/// Independent feasibility audit of a solution: verifies the raw
/// assignment against every model row and bound, then re-derives the
/// physical requirements from decoded quantities — power balance, exact
/// DC flow on energized lines, zero flow on open lines, battery charge
/// trajectories within capacity, one-sided charging, solar availability,
/// budget, and hardening only on energized lines. Returns one message
/// per violation; an empty result is a clean audit.
pub fn audit_solution(built: &BuiltModel, values: &[f64], tol: f64) -> Vec<String> {
    let mut issues = built.milp.verify_assignment(values, tol);
    let dec = match decode(built, values) {
        Ok(d) => d,
        Err(e) => {
            issues.push(format!("decode failed: {e}"));
            return issues;
        }
    };
    let ctx = &built.ctx;
    let net = &ctx.net;

    for t in 0..ctx.hours {
        for n in 0..net.buses.len() {
            let mut supply = dec.shed[n][t];
            for (g, gen) in net.generators.iter().enumerate() {
                if gen.bus == n {
                    supply += dec.generation[g][t];
                }
            }
            for (i, line) in net.lines.iter().enumerate() {
                if line.to_bus == n {
                    supply += dec.flows[i][t];
                }
                if line.from_bus == n {
                    supply -= dec.flows[i][t];
                }
            }
            if let Some(b) = dec.batteries.get(&n) {
                supply += b.discharge[t] - b.charge[t];
            }
            if let Some(s) = dec.solar.get(&n) {
                supply += s.output[t];
            }
            let miss = supply - ctx.demand[n][t];
            if miss.abs() > tol {
                issues.push(format!(
                    "balance at bus '{}' hour {t}: supply misses demand by {miss:e}",
                    net.buses[n].id
                ));
            }
        }
    }

    let (m_lo, m_hi) = ctx.angle_m;
    for t in 0..ctx.hours {
        for (i, line) in net.lines.iter().enumerate() {
            let f = dec.flows[i][t];
            let dth = dec.angles[line.from_bus][t] - dec.angles[line.to_bus][t];
            let on = dec.energized.get(&i).copied().unwrap_or(true);
            let b = line.susceptance_pu;
            if on {
                let resid = f + b * dth;
                if resid.abs() > tol * (1.0 + b.abs()) {
                    issues.push(format!(
                        "line '{}' hour {t}: energized flow misses dc value by {resid:e}",
                        line.id
                    ));
                }
                if f.abs() > line.flow_limit_pu + tol {
                    issues.push(format!("line '{}' hour {t}: flow {f} beyond limit", line.id));
                }
                if dth < line.angle_min_rad - tol || dth > line.angle_max_rad + tol {
                    issues.push(format!(
                        "line '{}' hour {t}: angle difference {dth} outside limits",
                        line.id
                    ));
                }
            } else {
                if f.abs() > tol {
                    issues.push(format!(
                        "line '{}' hour {t}: de-energized but carries flow {f}",
                        line.id
                    ));
                }
                if dth < m_lo - tol || dth > m_hi + tol {
                    issues.push(format!(
                        "line '{}' hour {t}: open-line angle spread {dth} outside envelope",
                        line.id
                    ));
                }
            }
        }
    }

    for (&bus, b) in &dec.batteries {
        let cap_lo = ctx.battery.energy_min_pu * b.units as f64;
        let cap_hi = ctx.battery.energy_max_pu * b.units as f64;
        for (t, &s) in b.soc.iter().enumerate() {
            if s < cap_lo - tol || s > cap_hi + tol {
                issues.push(format!(
                    "battery at bus '{}': charge {s} outside [{cap_lo}, {cap_hi}] after hour {t}",
                    net.buses[bus].id
                ));
            }
        }
        for t in 0..ctx.hours {
            if b.charge[t].min(b.discharge[t]) > tol {
                issues.push(format!(
                    "battery at bus '{}' hour {t}: charges and discharges at once",
                    net.buses[bus].id
                ));
            }
            let rate_hi = ctx.battery.charge_max_pu * b.units as f64;
            if b.charge[t] > rate_hi + tol {
                issues.push(format!(
                    "battery at bus '{}' hour {t}: charge {} beyond rate {rate_hi}",
                    net.buses[bus].id, b.charge[t]
                ));
            }
            let rate_hi = ctx.battery.discharge_max_pu * b.units as f64;
            if b.discharge[t] > rate_hi + tol {
                issues.push(format!(
                    "battery at bus '{}' hour {t}: discharge {} beyond rate {rate_hi}",
                    net.buses[bus].id, b.discharge[t]
                ));
            }
        }
    }

    for (&bus, s) in &dec.solar {
        for t in 0..ctx.hours {
            let lim = ctx.solar_avail[bus][t] * s.units;
            if s.output[t] < -tol || s.output[t] > lim + tol {
                issues.push(format!(
                    "solar at bus '{}' hour {t}: output {} outside [0, {lim}]",
                    net.buses[bus].id, s.output[t]
                ));
            }
        }
    }

    if ctx.kind == ModelKind::Invest {
        let budget_slack = dec.spend.total_musd - ctx.budget_musd;
        if budget_slack > tol * ctx.budget_musd.max(1.0) {
            issues.push(format!(
                "spend {} exceeds budget {} by {budget_slack:e}",
                dec.spend.total_musd, ctx.budget_musd
            ));
        }
    }
    for &i in dec.plan.hardened.keys() {
        if net.lines[i].switchable && !dec.energized[&i] {
            issues.push(format!(
                "line '{}' is hardened but de-energized",
                net.lines[i].id
            ));
        }
    }

    issues
}
