//! Assembly of the three planning models into solver-ready MILP form.
//!
//! Shared grid core per hour `t` of the horizon:
//!
//! * generation within unit bounds;
//! * load shedding per bus within `[0, max(demand, 0)]` (only positive
//!   demand can be shed; negative demand is a fixed injection);
//! * power balance per bus: generation + shedding + net line inflow +
//!   battery discharge + solar output - battery charge = demand;
//! * DC flow on energized lines: `flow = -susceptance * angle_diff`,
//!   angle differences within the line's limits;
//! * de-energized switchable lines carry no flow, and their endpoint
//!   angle difference relaxes to the network-wide envelope.
//!
//! A switchable line has one energization decision for the whole day.
//! Battery state of charge never appears as a variable: it is the
//! running sum of efficiency-adjusted charge and discharge, constrained
//! between empty and installed capacity.

use std::collections::BTreeMap;

use crate::milp::{MilpModel, Sense, VarId, VarKind};
use crate::net::{Network, SolarProfile};

use super::params::{BatteryParams, HardeningKind, InvestmentCatalog, SolarParams};
use super::plan::InvestmentPlan;
use super::FormError;

/// Angle-difference envelope applied across de-energized lines: the sums
/// of every line's angle bounds, wide enough that any angle spread
/// reachable through energized paths stays feasible.
pub fn big_m_angles(net: &Network) -> (f64, f64) {
    (
        net.lines.iter().map(|l| l.angle_min_rad).sum(),
        net.lines.iter().map(|l| l.angle_max_rad).sum(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Shutoff,
    Invest,
    Sequential,
}

/// Variable handles into the assembled model, keyed by network indices.
#[derive(Debug, Default)]
pub struct VarMap {
    /// Switchable line index -> stays-energized binary.
    pub energize: BTreeMap<usize, VarId>,
    /// `[generator][hour]` dispatch.
    pub generation: Vec<Vec<VarId>>,
    /// `[bus][hour]` voltage angle (bus 0 pinned to zero).
    pub angle: Vec<Vec<VarId>>,
    /// `[bus][hour]` load shed.
    pub shed: Vec<Vec<VarId>>,
    /// `[line][hour]` power flow.
    pub flow: Vec<Vec<VarId>>,
    /// Battery bus -> installed units.
    pub battery_units: BTreeMap<usize, VarId>,
    /// Battery bus -> per-hour charge-mode binary (1 = charging side).
    pub charge_mode: BTreeMap<usize, Vec<VarId>>,
    /// Battery bus -> per-hour charging power.
    pub charge: BTreeMap<usize, Vec<VarId>>,
    /// Battery bus -> per-hour discharging power.
    pub discharge: BTreeMap<usize, Vec<VarId>>,
    /// Solar bus -> installed units.
    pub solar_units: BTreeMap<usize, VarId>,
    /// Solar bus -> per-hour output.
    pub solar_out: BTreeMap<usize, Vec<VarId>>,
    /// Line index -> hardening binary.
    pub harden: BTreeMap<usize, VarId>,
}

/// Everything needed to interpret and audit a solution of the assembled
/// model, including a copy of the network it was built against.
#[derive(Debug, Clone)]
pub struct ModelContext {
    pub kind: ModelKind,
    pub net: Network,
    pub hours: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub budget_musd: f64,
    /// `[bus][hour]` demand in per-unit.
    pub demand: Vec<Vec<f64>>,
    /// Total positive demand over the horizon (shed normalizer).
    pub demand_total: f64,
    pub risk: Vec<f64>,
    /// Total line risk (risk normalizer).
    pub risk_total: f64,
    pub angle_m: (f64, f64),
    pub battery: BatteryParams,
    pub solar: SolarParams,
    /// Hardening technology per candidate (invest) or hardened (fixed
    /// plan) line.
    pub hardening: BTreeMap<usize, HardeningKind>,
    /// `[bus][hour]` solar availability per installed unit.
    pub solar_avail: Vec<Vec<f64>>,
    /// Absolute starting charge per battery bus (sequential only;
    /// investment batteries start full).
    pub initial_soc: BTreeMap<usize, f64>,
    /// Fixed investments being operated (sequential only).
    pub fixed: Option<InvestmentPlan>,
    /// Total installed battery energy capacity (sequential only).
    pub energy_total: f64,
}

#[derive(Debug)]
pub struct BuiltModel {
    pub milp: MilpModel,
    pub vars: VarMap,
    pub ctx: ModelContext,
}

struct BatteryEntry {
    bus: usize,
    units_lower: f64,
    units_upper: f64,
    /// Unit count bounding the charge/discharge mode rows.
    rate_units: f64,
    /// Charge-sum upper row: `sum + coeff * units <= rhs`.
    soc_hi: (f64, f64),
    /// Charge-sum lower row: `sum + coeff * units >= rhs`.
    soc_lo: (f64, f64),
}

enum SolarCap {
    Var { upper: f64 },
    Fixed(f64),
}

struct SolarEntry {
    bus: usize,
    cap: SolarCap,
}

struct Assembler<'a> {
    net: &'a Network,
    demand: &'a [Vec<f64>],
    risk: &'a [f64],
    alpha: f64,
    hours: usize,
    m_lo: f64,
    m_hi: f64,
    demand_total: f64,
    risk_total: f64,
    model: MilpModel,
    vars: VarMap,
}

impl<'a> Assembler<'a> {
    fn new(
        name: &str,
        net: &'a Network,
        demand: &'a [Vec<f64>],
        risk: &'a [f64],
        alpha: f64,
    ) -> Result<Assembler<'a>, FormError> {
        if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
            return Err(FormError::BadAlpha(alpha));
        }
        if demand.len() != net.buses.len() {
            return Err(FormError::DemandShape(format!(
                "{} rows for {} buses",
                demand.len(),
                net.buses.len()
            )));
        }
        let hours = demand.first().map_or(0, Vec::len);
        if hours == 0 {
            return Err(FormError::DemandShape(
                "horizon must cover at least one hour".into(),
            ));
        }
        for (n, row) in demand.iter().enumerate() {
            if row.len() != hours {
                return Err(FormError::DemandShape(format!(
                    "bus {n} has {} hours, expected {hours}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(FormError::DemandShape(format!("bus {n} has a non-finite value")));
            }
        }
        if risk.len() != net.lines.len() {
            return Err(FormError::RiskShape(format!(
                "{} entries for {} lines",
                risk.len(),
                net.lines.len()
            )));
        }
        if risk.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(FormError::RiskShape("values must be finite and non-negative".into()));
        }
        let demand_total: f64 = demand
            .iter()
            .map(|row| row.iter().map(|&d| d.max(0.0)).sum::<f64>())
            .sum();
        if demand_total <= 0.0 {
            return Err(FormError::ZeroDemand);
        }
        let risk_total: f64 = risk.iter().sum();
        let (m_lo, m_hi) = big_m_angles(net);
        Ok(Assembler {
            net,
            demand,
            risk,
            alpha,
            hours,
            m_lo,
            m_hi,
            demand_total,
            risk_total,
            model: MilpModel::new(name),
            vars: VarMap::default(),
        })
    }

    fn grid_vars(&mut self) -> Result<(), FormError> {
        for (i, line) in self.net.lines.iter().enumerate() {
            if line.switchable {
                let z = self
                    .model
                    .add_var(format!("z_l{i}"), VarKind::Binary, 0.0, 1.0)?;
                self.vars.energize.insert(i, z);
            }
        }
        for (g, gen) in self.net.generators.iter().enumerate() {
            let mut row = Vec::with_capacity(self.hours);
            for t in 0..self.hours {
                row.push(self.model.add_var(
                    format!("pg_g{g}_t{t}"),
                    VarKind::Continuous,
                    gen.p_min_pu,
                    gen.p_max_pu,
                )?);
            }
            self.vars.generation.push(row);
        }
        for n in 0..self.net.buses.len() {
            let (lo, hi) = if n == 0 {
                (0.0, 0.0)
            } else {
                (f64::NEG_INFINITY, f64::INFINITY)
            };
            let mut row = Vec::with_capacity(self.hours);
            for t in 0..self.hours {
                row.push(self.model.add_var(
                    format!("th_b{n}_t{t}"),
                    VarKind::Continuous,
                    lo,
                    hi,
                )?);
            }
            self.vars.angle.push(row);
        }
        for n in 0..self.net.buses.len() {
            let mut row = Vec::with_capacity(self.hours);
            for t in 0..self.hours {
                row.push(self.model.add_var(
                    format!("ls_b{n}_t{t}"),
                    VarKind::Continuous,
                    0.0,
                    self.demand[n][t].max(0.0),
                )?);
            }
            self.vars.shed.push(row);
        }
        for (i, line) in self.net.lines.iter().enumerate() {
            let mut row = Vec::with_capacity(self.hours);
            for t in 0..self.hours {
                row.push(self.model.add_var(
                    format!("flow_l{i}_t{t}"),
                    VarKind::Continuous,
                    -line.flow_limit_pu,
                    line.flow_limit_pu,
                )?);
            }
            self.vars.flow.push(row);
        }
        Ok(())
    }

    fn battery_vars(
        &mut self,
        params: &BatteryParams,
        entries: &[BatteryEntry],
    ) -> Result<(), FormError> {
        for e in entries {
            let x = self.model.add_var(
                format!("x_b{}", e.bus),
                VarKind::Integer,
                e.units_lower,
                e.units_upper,
            )?;
            self.vars.battery_units.insert(e.bus, x);
        }
        for e in entries {
            let mut row = Vec::with_capacity(self.hours);
            for t in 0..self.hours {
                row.push(self.model.add_var(
                    format!("u_b{}_t{t}", e.bus),
                    VarKind::Binary,
                    0.0,
                    1.0,
                )?);
            }
            self.vars.charge_mode.insert(e.bus, row);
        }
        for e in entries {
            let cap = params.charge_max_pu * e.units_upper;
            let mut row = Vec::with_capacity(self.hours);
            for t in 0..self.hours {
                row.push(self.model.add_var(
                    format!("pc_b{}_t{t}", e.bus),
                    VarKind::Continuous,
                    0.0,
                    cap,
                )?);
            }
            self.vars.charge.insert(e.bus, row);
        }
        for e in entries {
            let cap = params.discharge_max_pu * e.units_upper;
            let mut row = Vec::with_capacity(self.hours);
            for t in 0..self.hours {
                row.push(self.model.add_var(
                    format!("pw_b{}_t{t}", e.bus),
                    VarKind::Continuous,
                    0.0,
                    cap,
                )?);
            }
            self.vars.discharge.insert(e.bus, row);
        }
        Ok(())
    }

    fn solar_vars(
        &mut self,
        entries: &[SolarEntry],
        avail: &SolarProfile,
    ) -> Result<(), FormError> {
        for e in entries {
            if let SolarCap::Var { upper } = e.cap {
                let a = self.model.add_var(
                    format!("a_b{}", e.bus),
                    VarKind::Continuous,
                    0.0,
                    upper,
                )?;
                self.vars.solar_units.insert(e.bus, a);
            }
        }
        for e in entries {
            let units = match e.cap {
                SolarCap::Var { upper } => upper,
                SolarCap::Fixed(units) => units,
            };
            let mut row = Vec::with_capacity(self.hours);
            for t in 0..self.hours {
                row.push(self.model.add_var(
                    format!("ps_b{}_t{t}", e.bus),
                    VarKind::Continuous,
                    0.0,
                    avail.output[e.bus][t] * units,
                )?);
            }
            self.vars.solar_out.insert(e.bus, row);
        }
        Ok(())
    }

    fn line_rows(&mut self) -> Result<(), FormError> {
        for t in 0..self.hours {
            for (i, line) in self.net.lines.iter().enumerate() {
                let f = self.vars.flow[i][t];
                let th_f = self.vars.angle[line.from_bus][t];
                let th_t = self.vars.angle[line.to_bus][t];
                let b = line.susceptance_pu;
                let ab = b.abs();
                let (dlo, dhi) = (line.angle_min_rad, line.angle_max_rad);
                match self.vars.energize.get(&i) {
                    Some(&z) => {
                        self.model.add_con(
                            format!("fcap_l{i}_t{t}_hi"),
                            [(f, 1.0), (z, -line.flow_limit_pu)],
                            Sense::Le,
                            0.0,
                        )?;
                        self.model.add_con(
                            format!("fcap_l{i}_t{t}_lo"),
                            [(f, 1.0), (z, line.flow_limit_pu)],
                            Sense::Ge,
                            0.0,
                        )?;
                        self.model.add_con(
                            format!("ang_l{i}_t{t}_hi"),
                            [(th_f, 1.0), (th_t, -1.0), (z, -(dhi - self.m_hi))],
                            Sense::Le,
                            self.m_hi,
                        )?;
                        self.model.add_con(
                            format!("ang_l{i}_t{t}_lo"),
                            [(th_f, 1.0), (th_t, -1.0), (z, -(dlo - self.m_lo))],
                            Sense::Ge,
                            self.m_lo,
                        )?;
                        self.model.add_con(
                            format!("dc_l{i}_t{t}_hi"),
                            [(f, 1.0), (th_f, b), (th_t, -b), (z, ab * self.m_hi)],
                            Sense::Le,
                            ab * self.m_hi,
                        )?;
                        self.model.add_con(
                            format!("dc_l{i}_t{t}_lo"),
                            [(f, 1.0), (th_f, b), (th_t, -b), (z, ab * self.m_lo)],
                            Sense::Ge,
                            ab * self.m_lo,
                        )?;
                    }
                    None => {
                        self.model.add_con(
                            format!("ang_l{i}_t{t}_hi"),
                            [(th_f, 1.0), (th_t, -1.0)],
                            Sense::Le,
                            dhi,
                        )?;
                        self.model.add_con(
                            format!("ang_l{i}_t{t}_lo"),
                            [(th_f, 1.0), (th_t, -1.0)],
                            Sense::Ge,
                            dlo,
                        )?;
                        self.model.add_con(
                            format!("dc_l{i}_t{t}"),
                            [(f, 1.0), (th_f, b), (th_t, -b)],
                            Sense::Eq,
                            0.0,
                        )?;
                    }
                }
            }
        }
        Ok(())
    }

    fn balance_rows(&mut self) -> Result<(), FormError> {
        for t in 0..self.hours {
            for n in 0..self.net.buses.len() {
                let mut terms: Vec<(VarId, f64)> = Vec::new();
                for (i, line) in self.net.lines.iter().enumerate() {
                    if line.from_bus == n {
                        terms.push((self.vars.flow[i][t], 1.0));
                    }
                    if line.to_bus == n {
                        terms.push((self.vars.flow[i][t], -1.0));
                    }
                }
                for (g, gen) in self.net.generators.iter().enumerate() {
                    if gen.bus == n {
                        terms.push((self.vars.generation[g][t], -1.0));
                    }
                }
                terms.push((self.vars.shed[n][t], -1.0));
                if let Some(pcs) = self.vars.charge.get(&n) {
                    terms.push((pcs[t], 1.0));
                }
                if let Some(pws) = self.vars.discharge.get(&n) {
                    terms.push((pws[t], -1.0));
                }
                if let Some(pss) = self.vars.solar_out.get(&n) {
                    terms.push((pss[t], -1.0));
                }
                self.model.add_con(
                    format!("bal_b{n}_t{t}"),
                    terms,
                    Sense::Eq,
                    -self.demand[n][t],
                )?;
            }
        }
        Ok(())
    }

    fn battery_rows(
        &mut self,
        params: &BatteryParams,
        entries: &[BatteryEntry],
    ) -> Result<(), FormError> {
        let eff = params.efficiency;
        for e in entries {
            let x = self.vars.battery_units[&e.bus];
            let pcs = self.vars.charge[&e.bus].clone();
            let pws = self.vars.discharge[&e.bus].clone();
            let mut prefix: Vec<(VarId, f64)> = Vec::with_capacity(2 * self.hours);
            for t in 0..self.hours {
                prefix.push((pcs[t], eff));
                prefix.push((pws[t], -1.0 / eff));
                let mut hi = prefix.clone();
                hi.push((x, e.soc_hi.0));
                self.model.add_con(
                    format!("soc_b{}_t{t}_hi", e.bus),
                    hi,
                    Sense::Le,
                    e.soc_hi.1,
                )?;
                let mut lo = prefix.clone();
                lo.push((x, e.soc_lo.0));
                self.model.add_con(
                    format!("soc_b{}_t{t}_lo", e.bus),
                    lo,
                    Sense::Ge,
                    e.soc_lo.1,
                )?;
            }
        }
        for e in entries {
            let x = self.vars.battery_units[&e.bus];
            let us = self.vars.charge_mode[&e.bus].clone();
            let pcs = self.vars.charge[&e.bus].clone();
            let pws = self.vars.discharge[&e.bus].clone();
            for t in 0..self.hours {
                self.model.add_con(
                    format!("minrate_c_b{}_t{t}", e.bus),
                    [(pcs[t], 1.0), (us[t], -params.charge_min_pu)],
                    Sense::Ge,
                    0.0,
                )?;
                self.model.add_con(
                    format!("minrate_w_b{}_t{t}", e.bus),
                    [(pws[t], 1.0), (us[t], params.discharge_min_pu)],
                    Sense::Ge,
                    params.discharge_min_pu,
                )?;
                self.model.add_con(
                    format!("rate_c_b{}_t{t}", e.bus),
                    [(pcs[t], 1.0), (us[t], -params.charge_max_pu * e.rate_units)],
                    Sense::Le,
                    0.0,
                )?;
                self.model.add_con(
                    format!("rate_w_b{}_t{t}", e.bus),
                    [(pws[t], 1.0), (us[t], params.discharge_max_pu * e.rate_units)],
                    Sense::Le,
                    params.discharge_max_pu * e.rate_units,
                )?;
                self.model.add_con(
                    format!("cap_c_b{}_t{t}", e.bus),
                    [(pcs[t], 1.0), (x, -params.charge_max_pu)],
                    Sense::Le,
                    0.0,
                )?;
                self.model.add_con(
                    format!("cap_w_b{}_t{t}", e.bus),
                    [(pws[t], 1.0), (x, -params.discharge_max_pu)],
                    Sense::Le,
                    0.0,
                )?;
            }
        }
        Ok(())
    }

    fn solar_rows(
        &mut self,
        entries: &[SolarEntry],
        avail: &SolarProfile,
    ) -> Result<(), FormError> {
        for e in entries {
            let pss = self.vars.solar_out[&e.bus].clone();
            for t in 0..self.hours {
                let s = avail.output[e.bus][t];
                match e.cap {
                    SolarCap::Var { .. } => {
                        let a = self.vars.solar_units[&e.bus];
                        self.model.add_con(
                            format!("scap_b{}_t{t}", e.bus),
                            [(pss[t], 1.0), (a, -s)],
                            Sense::Le,
                            0.0,
                        )?;
                    }
                    SolarCap::Fixed(units) => {
                        self.model.add_con(
                            format!("scap_b{}_t{t}", e.bus),
                            [(pss[t], 1.0)],
                            Sense::Le,
                            s * units,
                        )?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Shed objective terms: `alpha / demand_total` per shed variable.
    fn shed_terms(&self) -> Vec<(VarId, f64)> {
        let w = self.alpha / self.demand_total;
        let mut terms = Vec::with_capacity(self.net.buses.len() * self.hours);
        for row in &self.vars.shed {
            for &v in row {
                terms.push((v, w));
            }
        }
        terms
    }
}

fn check_solar_shape(
    net: &Network,
    avail: &SolarProfile,
    hours: usize,
) -> Result<(), FormError> {
    if avail.output.len() != net.buses.len() {
        return Err(FormError::SolarShape(format!(
            "{} rows for {} buses",
            avail.output.len(),
            net.buses.len()
        )));
    }
    if avail.hours != hours {
        return Err(FormError::SolarShape(format!(
            "profile covers {} hours, model horizon is {hours}",
            avail.hours
        )));
    }
    for (n, row) in avail.output.iter().enumerate() {
        if row.len() != hours {
            return Err(FormError::SolarShape(format!("bus {n} row length {}", row.len())));
        }
        if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(FormError::SolarShape(format!(
                "bus {n} has a negative or non-finite value"
            )));
        }
    }
    Ok(())
}

/// De-energization planning for one representative day: which switchable
/// lines stay energized, trading shed demand against energized risk.
pub fn build_shutoff(
    net: &Network,
    demand: &[Vec<f64>],
    risk: &[f64],
    alpha: f64,
) -> Result<BuiltModel, FormError> {
    let mut asm = Assembler::new("shutoff", net, demand, risk, alpha)?;
    asm.grid_vars()?;
    asm.line_rows()?;
    asm.balance_rows()?;
    let mut obj = asm.shed_terms();
    let mut constant = 0.0;
    if asm.risk_total > 0.0 {
        let w = (1.0 - alpha) / asm.risk_total;
        for (i, _) in net.lines.iter().enumerate() {
            match asm.vars.energize.get(&i) {
                Some(&z) => obj.push((z, w * risk[i])),
                None => constant += w * risk[i],
            }
        }
    }
    asm.model.set_objective(obj, constant)?;
    let ctx = ModelContext {
        kind: ModelKind::Shutoff,
        net: net.clone(),
        hours: asm.hours,
        alpha,
        gamma: 0.0,
        budget_musd: 0.0,
        demand: asm.demand.to_vec(),
        demand_total: asm.demand_total,
        risk: asm.risk.to_vec(),
        risk_total: asm.risk_total,
        angle_m: (asm.m_lo, asm.m_hi),
        battery: BatteryParams::default(),
        solar: SolarParams::default(),
        hardening: BTreeMap::new(),
        solar_avail: Vec::new(),
        initial_soc: BTreeMap::new(),
        fixed: None,
        energy_total: 0.0,
    };
    Ok(BuiltModel {
        milp: asm.model,
        vars: asm.vars,
        ctx,
    })
}

/// Joint capital and de-energization planning for one representative
/// day: siting/sizing batteries, solar, and line hardening under a
/// budget, co-optimized with the shutoff decisions.
pub fn build_invest(
    net: &Network,
    demand: &[Vec<f64>],
    risk: &[f64],
    alpha: f64,
    catalog: &InvestmentCatalog,
    budget_musd: f64,
    solar_avail: &SolarProfile,
) -> Result<BuiltModel, FormError> {
    catalog.validate(net)?;
    if !budget_musd.is_finite() || budget_musd < 0.0 {
        return Err(FormError::BadBudget(budget_musd));
    }
    let mut asm = Assembler::new("invest", net, demand, risk, alpha)?;
    check_solar_shape(net, solar_avail, asm.hours)?;
    asm.grid_vars()?;

    let params = catalog.battery;
    let max_units = (budget_musd / params.unit_cost_musd).floor();
    let entries: Vec<BatteryEntry> = catalog
        .battery_buses
        .iter()
        .map(|&bus| BatteryEntry {
            bus,
            units_lower: 0.0,
            units_upper: max_units,
            rate_units: max_units,
            // Batteries enter service fully charged, so the charge sum can
            // never rise above zero nor fall below one capacity per unit.
            soc_hi: (0.0, 0.0),
            soc_lo: (params.energy_max_pu - params.energy_min_pu, 0.0),
        })
        .collect();
    asm.battery_vars(&params, &entries)?;

    let solar_entries: Vec<SolarEntry> = catalog
        .solar_buses
        .iter()
        .map(|&bus| SolarEntry {
            bus,
            cap: SolarCap::Var {
                upper: budget_musd / catalog.solar.unit_cost_musd,
            },
        })
        .collect();
    asm.solar_vars(&solar_entries, solar_avail)?;

    for &i in &catalog.harden_lines {
        let y = asm
            .model
            .add_var(format!("y_l{i}"), VarKind::Binary, 0.0, 1.0)?;
        asm.vars.harden.insert(i, y);
    }

    asm.line_rows()?;
    asm.balance_rows()?;
    asm.battery_rows(&params, &entries)?;
    asm.solar_rows(&solar_entries, solar_avail)?;

    for &i in &catalog.harden_lines {
        if let Some(&z) = asm.vars.energize.get(&i) {
            let y = asm.vars.harden[&i];
            asm.model.add_con(
                format!("excl_l{i}"),
                [(y, 1.0), (z, -1.0)],
                Sense::Le,
                0.0,
            )?;
        }
    }

    let kind = catalog.hardening;
    let mut budget_terms: Vec<(VarId, f64)> = Vec::new();
    for &x in asm.vars.battery_units.values() {
        budget_terms.push((x, params.unit_cost_musd));
    }
    for &a in asm.vars.solar_units.values() {
        budget_terms.push((a, catalog.solar.unit_cost_musd));
    }
    for (&i, &y) in &asm.vars.harden {
        let per_mile = kind
            .expect("harden candidates imply a technology (validated)")
            .cost_per_mile_musd();
        budget_terms.push((y, per_mile * net.lines[i].length_miles));
    }
    asm.model
        .add_con("budget", budget_terms, Sense::Le, budget_musd)?;

    let mut obj = asm.shed_terms();
    let mut constant = 0.0;
    if asm.risk_total > 0.0 {
        let w = (1.0 - alpha) / asm.risk_total;
        for (i, _) in net.lines.iter().enumerate() {
            match asm.vars.energize.get(&i) {
                Some(&z) => obj.push((z, w * risk[i])),
                None => constant += w * risk[i],
            }
        }
        for (&i, &y) in &asm.vars.harden {
            let beta = kind
                .expect("harden candidates imply a technology (validated)")
                .risk_reduction();
            obj.push((y, -w * beta * risk[i]));
        }
    }
    asm.model.set_objective(obj, constant)?;

    let hardening: BTreeMap<usize, HardeningKind> = catalog
        .harden_lines
        .iter()
        .map(|&i| (i, kind.expect("validated")))
        .collect();
    let ctx = ModelContext {
        kind: ModelKind::Invest,
        net: net.clone(),
        hours: asm.hours,
        alpha,
        gamma: 0.0,
        budget_musd,
        demand: asm.demand.to_vec(),
        demand_total: asm.demand_total,
        risk: asm.risk.to_vec(),
        risk_total: asm.risk_total,
        angle_m: (asm.m_lo, asm.m_hi),
        battery: params,
        solar: catalog.solar,
        hardening,
        solar_avail: solar_avail.output.clone(),
        initial_soc: BTreeMap::new(),
        fixed: None,
        energy_total: 0.0,
    };
    Ok(BuiltModel {
        milp: asm.model,
        vars: asm.vars,
        ctx,
    })
}

/// Operation of a fixed investment plan on one season day: shutoff and
/// dispatch only, starting batteries from the given absolute charge and
/// rewarding end-of-day reserves with weight `gamma`.
pub fn build_sequential(
    net: &Network,
    demand: &[Vec<f64>],
    risk: &[f64],
    alpha: f64,
    gamma: f64,
    plan: &InvestmentPlan,
    battery: &BatteryParams,
    initial_soc: &BTreeMap<usize, f64>,
    solar_avail: &SolarProfile,
) -> Result<BuiltModel, FormError> {
    plan.validate(net)?;
    battery.validate()?;
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(FormError::BadGamma(gamma));
    }
    let mut asm = Assembler::new("sequential", net, demand, risk, alpha)?;
    check_solar_shape(net, solar_avail, asm.hours)?;

    let mut soc0 = BTreeMap::new();
    for (&bus, &units) in &plan.batteries {
        let cap_lo = battery.energy_min_pu * units as f64;
        let cap_hi = battery.energy_max_pu * units as f64;
        let given = *initial_soc.get(&bus).ok_or_else(|| {
            FormError::BadPlan(format!(
                "no starting charge given for battery at bus '{}'",
                net.buses[bus].id
            ))
        })?;
        if !given.is_finite() || given < cap_lo - 1e-9 || given > cap_hi + 1e-9 {
            return Err(FormError::BadPlan(format!(
                "starting charge {given} at bus '{}' outside [{cap_lo}, {cap_hi}]",
                net.buses[bus].id
            )));
        }
        soc0.insert(bus, given.clamp(cap_lo, cap_hi));
    }
    if let Some(&bus) = initial_soc.keys().find(|b| !plan.batteries.contains_key(b)) {
        return Err(FormError::BadPlan(format!(
            "starting charge given for bus index {bus} which has no battery in the plan"
        )));
    }

    asm.grid_vars()?;
    // A hardened line is never de-energized; its energization binary is
    // pinned so the reduced risk is always incurred.
    for &i in plan.hardened.keys() {
        if let Some(&z) = asm.vars.energize.get(&i) {
            asm.model.set_bounds(z, 1.0, 1.0)?;
        }
    }
    let entries: Vec<BatteryEntry> = plan
        .batteries
        .iter()
        .map(|(&bus, &units)| {
            let u = units as f64;
            BatteryEntry {
                bus,
                units_lower: u,
                units_upper: u,
                rate_units: u,
                soc_hi: (-battery.energy_max_pu, -soc0[&bus]),
                soc_lo: (-battery.energy_min_pu, -soc0[&bus]),
            }
        })
        .collect();
    asm.battery_vars(battery, &entries)?;
    let solar_entries: Vec<SolarEntry> = plan
        .solar
        .iter()
        .map(|(&bus, &units)| SolarEntry {
            bus,
            cap: SolarCap::Fixed(units),
        })
        .collect();
    asm.solar_vars(&solar_entries, solar_avail)?;

    asm.line_rows()?;
    asm.balance_rows()?;
    asm.battery_rows(battery, &entries)?;
    asm.solar_rows(&solar_entries, solar_avail)?;

    let mut obj = asm.shed_terms();
    let mut constant = 0.0;
    if asm.risk_total > 0.0 {
        let w = (1.0 - alpha) / asm.risk_total;
        for (i, _) in net.lines.iter().enumerate() {
            let scale = 1.0
                - plan
                    .hardened
                    .get(&i)
                    .map_or(0.0, |kind| kind.risk_reduction());
            match asm.vars.energize.get(&i) {
                Some(&z) => obj.push((z, w * risk[i] * scale)),
                None => constant += w * risk[i] * scale,
            }
        }
    }
    let energy_total = plan.total_battery_energy(battery);
    if gamma > 0.0 && energy_total > 0.0 {
        let g = gamma / energy_total;
        for (&bus, pcs) in &asm.vars.charge {
            let pws = &asm.vars.discharge[&bus];
            for t in 0..asm.hours {
                obj.push((pcs[t], -g * battery.efficiency));
                obj.push((pws[t], g / battery.efficiency));
            }
            constant -= g * soc0[&bus];
        }
    }
    asm.model.set_objective(obj, constant)?;

    let ctx = ModelContext {
        kind: ModelKind::Sequential,
        net: net.clone(),
        hours: asm.hours,
        alpha,
        gamma,
        budget_musd: 0.0,
        demand: asm.demand.to_vec(),
        demand_total: asm.demand_total,
        risk: asm.risk.to_vec(),
        risk_total: asm.risk_total,
        angle_m: (asm.m_lo, asm.m_hi),
        battery: *battery,
        solar: SolarParams::default(),
        hardening: plan.hardened.clone(),
        solar_avail: solar_avail.output.clone(),
        initial_soc: soc0,
        fixed: Some(plan.clone()),
        energy_total,
    };
    Ok(BuiltModel {
        milp: asm.model,
        vars: asm.vars,
        ctx,
    })
}
