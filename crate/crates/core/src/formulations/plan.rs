//! Investment plans: the decision output of planning and the input to
//! season simulation, with a stable JSON file form keyed by element ids.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::net::Network;

use super::params::{BatteryParams, HardeningKind, SolarParams};
use super::FormError;

pub const PLAN_SCHEMA: &str = "plan/v1";

/// Chosen investments, keyed by bus/line index into a specific network.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvestmentPlan {
    /// Bus index -> installed battery units.
    pub batteries: BTreeMap<usize, i64>,
    /// Bus index -> installed solar units (continuous).
    pub solar: BTreeMap<usize, f64>,
    /// Line index -> hardening technology applied.
    pub hardened: BTreeMap<usize, HardeningKind>,
}

impl InvestmentPlan {
    pub fn empty() -> InvestmentPlan {
        InvestmentPlan::default()
    }

    pub fn is_empty(&self) -> bool {
        self.batteries.is_empty() && self.solar.is_empty() && self.hardened.is_empty()
    }

    pub fn validate(&self, net: &Network) -> Result<(), FormError> {
        let bad = |msg: String| Err(FormError::BadPlan(msg));
        for (&bus, &units) in &self.batteries {
            if bus >= net.buses.len() {
                return bad(format!("battery bus index {bus} out of range"));
            }
            if units <= 0 {
                return bad(format!(
                    "battery at bus '{}' has non-positive units {units}",
                    net.buses[bus].id
                ));
            }
        }
        for (&bus, &units) in &self.solar {
            if bus >= net.buses.len() {
                return bad(format!("solar bus index {bus} out of range"));
            }
            if !(units > 0.0 && units.is_finite()) {
                return bad(format!(
                    "solar at bus '{}' has non-positive units {units}",
                    net.buses[bus].id
                ));
            }
        }
        for &line in self.hardened.keys() {
            if line >= net.lines.len() {
                return bad(format!("hardened line index {line} out of range"));
            }
            if !net.lines[line].hardenable {
                return bad(format!("line '{}' is not hardenable", net.lines[line].id));
            }
        }
        Ok(())
    }

    pub fn spend(
        &self,
        net: &Network,
        battery: &BatteryParams,
        solar: &SolarParams,
    ) -> SpendBreakdown {
        // `+ 0.0` turns the empty-sum identity -0.0 into plain zero.
        let battery_musd: f64 = self
            .batteries
            .values()
            .map(|&u| u as f64 * battery.unit_cost_musd)
            .sum::<f64>()
            + 0.0;
        let solar_musd: f64 =
            self.solar.values().map(|&u| u * solar.unit_cost_musd).sum::<f64>() + 0.0;
        let hardening_musd: f64 = self
            .hardened
            .iter()
            .map(|(&line, kind)| kind.cost_per_mile_musd() * net.lines[line].length_miles)
            .sum::<f64>()
            + 0.0;
        SpendBreakdown {
            battery_musd,
            solar_musd,
            hardening_musd,
            total_musd: battery_musd + solar_musd + hardening_musd,
        }
    }

    /// Total installed battery energy capacity in per-unit.
    pub fn total_battery_energy(&self, battery: &BatteryParams) -> f64 {
        self.batteries
            .values()
            .map(|&u| u as f64 * battery.energy_max_pu)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SpendBreakdown {
    pub battery_musd: f64,
    pub solar_musd: f64,
    pub hardening_musd: f64,
    pub total_musd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PlanBattery {
    bus: String,
    units: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PlanSolar {
    bus: String,
    units: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PlanHardened {
    line: String,
    kind: HardeningKind,
}

/// JSON file form of a plan plus the headline numbers of the run that
/// produced it. Elements are referenced by id so the file stays valid
/// under reordering of the network file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanFile {
    pub schema: String,
    pub scenario: u8,
    pub alpha: f64,
    pub budget_musd: f64,
    pub objective: f64,
    pub shed_fraction: f64,
    pub risk_fraction: f64,
    pub spend: SpendBreakdown,
    batteries: Vec<PlanBattery>,
    solar: Vec<PlanSolar>,
    hardened: Vec<PlanHardened>,
}

impl PlanFile {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        net: &Network,
        plan: &InvestmentPlan,
        scenario: u8,
        alpha: f64,
        budget_musd: f64,
        objective: f64,
        shed_fraction: f64,
        risk_fraction: f64,
        spend: SpendBreakdown,
    ) -> PlanFile {
        PlanFile {
            schema: PLAN_SCHEMA.to_string(),
            scenario,
            alpha,
            budget_musd,
            objective,
            shed_fraction,
            risk_fraction,
            spend,
            batteries: plan
                .batteries
                .iter()
                .map(|(&bus, &units)| PlanBattery {
                    bus: net.buses[bus].id.clone(),
                    units,
                })
                .collect(),
            solar: plan
                .solar
                .iter()
                .map(|(&bus, &units)| PlanSolar {
                    bus: net.buses[bus].id.clone(),
                    units,
                })
                .collect(),
            hardened: plan
                .hardened
                .iter()
                .map(|(&line, &kind)| PlanHardened {
                    line: net.lines[line].id.clone(),
                    kind,
                })
                .collect(),
        }
    }

    /// Resolves ids back to indices against a network.
    pub fn to_plan(&self, net: &Network) -> Result<InvestmentPlan, FormError> {
        if self.schema != PLAN_SCHEMA {
            return Err(FormError::BadPlan(format!(
                "unsupported schema '{}', expected '{PLAN_SCHEMA}'",
                self.schema
            )));
        }
        let mut plan = InvestmentPlan::empty();
        for b in &self.batteries {
            let bus = net
                .bus_index(&b.bus)
                .ok_or_else(|| FormError::BadPlan(format!("unknown bus '{}'", b.bus)))?;
            if plan.batteries.insert(bus, b.units).is_some() {
                return Err(FormError::BadPlan(format!("duplicate battery bus '{}'", b.bus)));
            }
        }
        for s in &self.solar {
            let bus = net
                .bus_index(&s.bus)
                .ok_or_else(|| FormError::BadPlan(format!("unknown bus '{}'", s.bus)))?;
            if plan.solar.insert(bus, s.units).is_some() {
                return Err(FormError::BadPlan(format!("duplicate solar bus '{}'", s.bus)));
            }
        }
        for h in &self.hardened {
            let line = net
                .line_index(&h.line)
                .ok_or_else(|| FormError::BadPlan(format!("unknown line '{}'", h.line)))?;
            if plan.hardened.insert(line, h.kind).is_some() {
                return Err(FormError::BadPlan(format!("duplicate hardened line '{}'", h.line)));
            }
        }
        plan.validate(net)?;
        Ok(plan)
    }

    pub fn from_json_str(text: &str) -> Result<PlanFile, FormError> {
        serde_json::from_str(text).map_err(|e| FormError::BadPlan(e.to_string()))
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serialization is infallible");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PlanFile, FormError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            FormError::BadPlan(format!("cannot read '{}': {e}", path.display()))
        })?;
        PlanFile::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FormError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| {
            FormError::BadPlan(format!("cannot write '{}': {e}", path.display()))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Bus, Generator, Line};

    fn net() -> Network {
        Network {
            base_mva: 100.0,
            buses: vec![
                Bus {
                    id: "alpha".into(),
                    latitude: None,
                    longitude: None,
                    demand_pu: 0.0,
                    disabled: false,
                },
                Bus {
                    id: "beta".into(),
                    latitude: None,
                    longitude: None,
                    demand_pu: 0.5,
                    disabled: false,
                },
            ],
            lines: vec![Line {
                id: "tie".into(),
                from_bus: 0,
                to_bus: 1,
                susceptance_pu: -5.0,
                flow_limit_pu: 1.0,
                angle_min_rad: -0.4,
                angle_max_rad: 0.4,
                length_miles: 12.0,
                switchable: true,
                hardenable: true,
                geometry: None,
            }],
            generators: vec![Generator {
                id: "g0".into(),
                bus: 0,
                p_min_pu: 0.0,
                p_max_pu: 1.0,
            }],
        }
    }

    fn sample_plan() -> InvestmentPlan {
        let mut plan = InvestmentPlan::empty();
        plan.batteries.insert(1, 2);
        plan.solar.insert(0, 150.0);
        plan.hardened.insert(0, HardeningKind::CoveredConductor);
        plan
    }

    #[test]
    fn spend_breakdown_matches_hand_total() {
        let net = net();
        let plan = sample_plan();
        let spend = plan.spend(&net, &BatteryParams::default(), &SolarParams::default());
        assert_eq!(spend.battery_musd, 40.0);
        assert!((spend.solar_musd - 0.141).abs() < 1e-12);
        assert_eq!(spend.hardening_musd, 6.0);
        assert!((spend.total_musd - 46.141).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_by_ids() {
        let net = net();
        let plan = sample_plan();
        let file = PlanFile::new(
            &net,
            &plan,
            7,
            0.5,
            100.0,
            0.25,
            0.1,
            0.4,
            plan.spend(&net, &BatteryParams::default(), &SolarParams::default()),
        );
        let text = file.to_json_string();
        assert!(text.contains("\"plan/v1\""));
        assert!(text.contains("\"beta\""));
        assert!(text.contains("\"covered_conductor\""));
        let back = PlanFile::from_json_str(&text).unwrap();
        assert_eq!(back.to_plan(&net).unwrap(), plan);
    }

    #[test]
    fn wrong_schema_rejected() {
        let net = net();
        let plan = InvestmentPlan::empty();
        let mut file = PlanFile::new(&net, &plan, 1, 0.5, 10.0, 0.0, 0.0, 0.0, SpendBreakdown::default());
        file.schema = "plan/v2".into();
        let err = file.to_plan(&net).unwrap_err();
        assert!(err.to_string().contains("unsupported schema"), "{err}");
    }

    #[test]
    fn unknown_ids_rejected() {
        let net = net();
        let text = r#"{
            "schema": "plan/v1", "scenario": 1, "alpha": 0.5, "budget_musd": 10.0,
            "objective": 0.0, "shed_fraction": 0.0, "risk_fraction": 0.0,
            "spend": {"battery_musd": 0.0, "solar_musd": 0.0, "hardening_musd": 0.0, "total_musd": 0.0},
            "batteries": [{"bus": "nope", "units": 1}], "solar": [], "hardened": []
        }"#;
        let file = PlanFile::from_json_str(text).unwrap();
        let err = file.to_plan(&net).unwrap_err();
        assert!(err.to_string().contains("unknown bus 'nope'"), "{err}");
    }

    #[test]
    fn plan_validation_rejects_bad_quantities() {
        let net = net();
        let mut plan = InvestmentPlan::empty();
        plan.batteries.insert(0, 0);
        assert!(plan.validate(&net).is_err());
        let mut plan = InvestmentPlan::empty();
        plan.solar.insert(0, -1.0);
        assert!(plan.validate(&net).is_err());
        let mut plan = InvestmentPlan::empty();
        plan.hardened.insert(5, HardeningKind::Undergrounding);
        assert!(plan.validate(&net).is_err());
    }
}
