//! Shared fixtures for the integration suite: a deterministic PRNG,
//! small random planning instances, and an exhaustive-enumeration
//! optimum that is independent of the branch-and-bound search.
//!
//! Each integration test binary includes this module separately, so not
//! every item is used by every binary.
#![allow(dead_code)]

use std::collections::BTreeMap;

use psps_core::formulations::{
    build_invest, build_sequential, build_shutoff, BatteryParams, BuiltModel, HardeningKind,
    InvestmentCatalog, InvestmentPlan,
};
use psps_core::milp::{solve_lp_bounded, LpStatus, VarId};
use psps_core::net::{Bus, Generator, Line, Network, SolarProfile};
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic per-seed randomness for fixture generation.
pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.gen_range(lo..hi)
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        self.0.gen_range(lo..=hi)
    }

    pub fn flip(&mut self, p: f64) -> bool {
        self.0.gen_bool(p)
    }
}

pub fn bus(id: &str, demand_pu: f64) -> Bus {
    Bus {
        id: id.into(),
        latitude: None,
        longitude: None,
        demand_pu,
        disabled: false,
    }
}

#[allow(clippy::too_many_arguments)]
pub fn line(
    id: &str,
    from_bus: usize,
    to_bus: usize,
    susceptance_pu: f64,
    flow_limit_pu: f64,
    length_miles: f64,
    switchable: bool,
    hardenable: bool,
) -> Line {
    Line {
        id: id.into(),
        from_bus,
        to_bus,
        susceptance_pu,
        flow_limit_pu,
        angle_min_rad: -0.5,
        angle_max_rad: 0.5,
        length_miles,
        switchable,
        hardenable,
        geometry: None,
    }
}

pub fn generator(id: &str, bus: usize, p_max_pu: f64) -> Generator {
    Generator {
        id: id.into(),
        bus,
        p_min_pu: 0.0,
        p_max_pu,
    }
}

pub fn network(buses: Vec<Bus>, lines: Vec<Line>, generators: Vec<Generator>) -> Network {
    let net = Network {
        base_mva: 100.0,
        buses,
        lines,
        generators,
    };
    net.validate().expect("fixture network must be valid");
    net
}

/// Which of the three day-model shapes an instance exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Shutoff,
    Invest,
    Sequential,
}

/// A randomly drawn desk-scale planning instance.
pub struct Instance {
    pub seed: u64,
    pub variant: Variant,
    pub net: Network,
    /// `[bus][hour]`.
    pub demand: Vec<Vec<f64>>,
    pub risk: Vec<f64>,
    pub alpha: f64,
    pub solar_avail: SolarProfile,
    /// Invest only.
    pub catalog: InvestmentCatalog,
    pub budget_musd: f64,
    /// Sequential only.
    pub plan: InvestmentPlan,
    pub initial_soc: BTreeMap<usize, f64>,
    pub gamma: f64,
}

impl Instance {
    pub fn build(&self) -> BuiltModel {
        match self.variant {
            Variant::Shutoff => build_shutoff(&self.net, &self.demand, &self.risk, self.alpha),
            Variant::Invest => build_invest(
                &self.net,
                &self.demand,
                &self.risk,
                self.alpha,
                &self.catalog,
                self.budget_musd,
                &self.solar_avail,
            ),
            Variant::Sequential => build_sequential(
                &self.net,
                &self.demand,
                &self.risk,
                self.alpha,
                self.gamma,
                &self.plan,
                &BatteryParams::default(),
                &self.initial_soc,
                &self.solar_avail,
            ),
        }
        .expect("random instance must assemble")
    }
}

/// Draws a 3-to-5-bus instance. The variant cycles with the seed so a
/// seed range covers all three model shapes; investment instances keep
/// at most two battery buses and at most three switchable lines so the
/// enumeration oracle stays exhaustive at desk scale.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = Rng::new(seed);
    let variant = match seed % 3 {
        0 => Variant::Shutoff,
        1 => Variant::Invest,
        _ => Variant::Sequential,
    };

    let n_bus = rng.int(3, 5);
    let hours = rng.int(2, 3);
    let mut buses = Vec::with_capacity(n_bus);
    buses.push(bus("b0", 0.0));
    for n in 1..n_bus {
        buses.push(bus(&format!("b{n}"), rng.range(0.1, 0.7)));
    }
    let base_demand: Vec<f64> = buses.iter().map(|b| b.demand_pu).collect();
    let total_base: f64 = base_demand.iter().sum();

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for to in 1..n_bus {
        pairs.push((rng.int(0, to - 1), to));
    }
    for _ in 0..rng.int(0, 2) {
        let a = rng.int(0, n_bus - 2);
        let b = rng.int(a + 1, n_bus - 1);
        pairs.push((a, b));
    }
    let max_switchable = if variant == Variant::Invest { 3 } else { 6 };
    let mut switch_count = 0;
    let mut lines = Vec::with_capacity(pairs.len());
    for (i, (a, b)) in pairs.iter().enumerate() {
        let switchable = switch_count < max_switchable && rng.flip(0.8);
        if switchable {
            switch_count += 1;
        }
        lines.push(line(
            &format!("l{i}"),
            *a,
            *b,
            -rng.range(2.0, 8.0),
            rng.range(0.4, 1.2),
            rng.range(5.0, 25.0),
            switchable,
            rng.flip(0.5),
        ));
    }

    let mut generators = vec![generator("g0", 0, rng.range(0.4, 1.0) * total_base)];
    if rng.flip(0.4) {
        generators.push(generator(
            "g1",
            rng.int(1, n_bus - 1),
            rng.range(0.1, 0.4) * total_base,
        ));
    }
    let net = network(buses, lines, generators);

    let demand: Vec<Vec<f64>> = base_demand
        .iter()
        .map(|&d| (0..hours).map(|_| d * rng.range(0.7, 1.0)).collect())
        .collect();
    let risk: Vec<f64> = net.lines.iter().map(|_| rng.range(0.5, 15.0)).collect();
    let alpha = rng.range(0.15, 0.85);
    let solar_avail = SolarProfile {
        hours,
        output: (0..n_bus)
            .map(|_| (0..hours).map(|_| rng.range(0.0, 0.6)).collect())
            .collect(),
    };

    let mut catalog = InvestmentCatalog::empty();
    let mut budget_musd = 0.0;
    if variant == Variant::Invest {
        let n = rng.int(1, 2);
        catalog.battery_buses = pick_buses(&mut rng, n_bus, n);
        let n = rng.int(0, 2);
        catalog.solar_buses = pick_buses(&mut rng, n_bus, n);
        let hardenable: Vec<usize> = net.hardenable_lines();
        catalog.harden_lines = hardenable.into_iter().take(rng.int(0, 2)).collect();
        catalog.hardening = Some(match rng.int(0, 2) {
            0 => HardeningKind::Undergrounding,
            1 => HardeningKind::CoveredConductor,
            _ => HardeningKind::VegetationManagement,
        });
        if catalog.harden_lines.is_empty() {
            catalog.hardening = None;
        }
        budget_musd = rng.range(25.0, 115.0);
    }

    let mut plan = InvestmentPlan::empty();
    let mut initial_soc = BTreeMap::new();
    if variant == Variant::Sequential {
        let n = rng.int(1, 2);
        for b in pick_buses(&mut rng, n_bus, n) {
            let units = rng.int(1, 3) as i64;
            plan.batteries.insert(b, units);
            initial_soc.insert(b, rng.range(0.0, units as f64));
        }
        let n = rng.int(0, 2);
        for b in pick_buses(&mut rng, n_bus, n) {
            plan.solar.insert(b, rng.range(0.5, 2.0));
        }
        let hardenable: Vec<usize> = net.hardenable_lines();
        for i in hardenable.into_iter().take(rng.int(0, 2)) {
            let kind = match rng.int(0, 2) {
                0 => HardeningKind::Undergrounding,
                1 => HardeningKind::CoveredConductor,
                _ => HardeningKind::VegetationManagement,
            };
            plan.hardened.insert(i, kind);
        }
    }

    Instance {
        seed,
        variant,
        net,
        demand,
        risk,
        alpha,
        solar_avail,
        catalog,
        budget_musd,
        plan,
        initial_soc,
        gamma: 0.01,
    }
}

fn pick_buses(rng: &mut Rng, n_bus: usize, count: usize) -> Vec<usize> {
    let mut set: Vec<usize> = Vec::new();
    while set.len() < count {
        let b = rng.int(0, n_bus - 1);
        if !set.contains(&b) {
            set.push(b);
        }
    }
    set.sort_unstable();
    set
}

/// Exact optimum by complete enumeration, independent of the tree search:
/// every assignment of the design integers (energization, battery units,
/// hardening) is solved as a bounded LP. Charge-mode binaries carry no
/// objective weight, so a relaxed solution repairs to an integral one at
/// the same objective unless some battery both charges and discharges in
/// one hour; only then does the oracle split that single mode variable.
pub fn enumeration_optimum(built: &BuiltModel) -> Option<f64> {
    let model = &built.milp;
    let mut lower: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
    let mut upper: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();

    let mut design: Vec<VarId> = built.vars.energize.values().copied().collect();
    design.extend(built.vars.battery_units.values().copied());
    design.extend(built.vars.harden.values().copied());

    let domains: Vec<(f64, f64)> = design
        .iter()
        .map(|&v| (model.var(v).lower, model.var(v).upper))
        .collect();

    let mut best: Option<f64> = None;
    let mut assignment: Vec<f64> = domains.iter().map(|&(lo, _)| lo).collect();
    loop {
        for (k, &v) in design.iter().enumerate() {
            lower[v.index()] = assignment[k];
            upper[v.index()] = assignment[k];
        }
        if let Some(obj) = mode_split_optimum(built, &mut lower, &mut upper) {
            if best.map_or(true, |b| obj < b) {
                best = Some(obj);
            }
        }

        // Mixed-radix increment over the design domains.
        let mut k = 0;
        loop {
            if k == design.len() {
                return best;
            }
            assignment[k] += 1.0;
            if assignment[k] <= domains[k].1 + 1e-9 {
                break;
            }
            assignment[k] = domains[k].0;
            k += 1;
        }
    }
}

/// LP value with all remaining mode binaries relaxed, splitting on one
/// whenever the relaxation charges and discharges the same battery-hour.
fn mode_split_optimum(built: &BuiltModel, lower: &mut [f64], upper: &mut [f64]) -> Option<f64> {
    let sol = solve_lp_bounded(&built.milp, lower, upper).expect("LP solve must not error");
    if sol.status != LpStatus::Optimal {
        return None;
    }
    let values = sol.values.as_ref().expect("optimal LP carries values");

    for (bus, modes) in &built.vars.charge_mode {
        let charge = &built.vars.charge[bus];
        let discharge = &built.vars.discharge[bus];
        for (t, &mode) in modes.iter().enumerate() {
            let c = values[charge[t].index()];
            let d = values[discharge[t].index()];
            if c > 1e-7 && d > 1e-7 {
                let mi = mode.index();
                let (keep_lo, keep_hi) = (lower[mi], upper[mi]);
                let mut best: Option<f64> = None;
                for fixed in [0.0, 1.0] {
                    lower[mi] = fixed;
                    upper[mi] = fixed;
                    if let Some(obj) = mode_split_optimum(built, lower, upper) {
                        if best.map_or(true, |b| obj < b) {
                            best = Some(obj);
                        }
                    }
                }
                lower[mi] = keep_lo;
                upper[mi] = keep_hi;
                return best;
            }
        }
    }
    sol.objective
}
