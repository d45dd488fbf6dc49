//! Investment technology parameters, portfolio scenarios, and candidate
//! catalogs.

use serde::{Deserialize, Serialize};

use crate::net::Network;

use super::FormError;

/// Line-hardening technology: each cuts a hardened line's wildfire risk
/// by a fixed fraction at a per-mile capital cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardeningKind {
    Undergrounding,
    CoveredConductor,
    VegetationManagement,
}

impl HardeningKind {
    /// Fraction of a hardened line's risk that is eliminated.
    pub fn risk_reduction(self) -> f64 {
        match self {
            HardeningKind::Undergrounding => 1.0,
            HardeningKind::CoveredConductor => 0.5,
            HardeningKind::VegetationManagement => 0.25,
        }
    }

    /// Capital cost in million dollars per mile of line.
    pub fn cost_per_mile_musd(self) -> f64 {
        match self {
            HardeningKind::Undergrounding => 3.0,
            HardeningKind::CoveredConductor => 0.5,
            HardeningKind::VegetationManagement => 0.01,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            HardeningKind::Undergrounding => "undergrounding",
            HardeningKind::CoveredConductor => "covered_conductor",
            HardeningKind::VegetationManagement => "vegetation_management",
        }
    }

    pub fn from_label(s: &str) -> Option<HardeningKind> {
        match s {
            "undergrounding" => Some(HardeningKind::Undergrounding),
            "covered_conductor" => Some(HardeningKind::CoveredConductor),
            "vegetation_management" => Some(HardeningKind::VegetationManagement),
            _ => None,
        }
    }
}

/// Grid-scale battery unit: bounds are per installed unit in per-unit
/// power/energy on the network base.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatteryParams {
    pub energy_min_pu: f64,
    pub energy_max_pu: f64,
    /// One-way conversion efficiency applied to both charge and discharge.
    pub efficiency: f64,
    pub charge_min_pu: f64,
    pub charge_max_pu: f64,
    pub discharge_min_pu: f64,
    pub discharge_max_pu: f64,
    pub unit_cost_musd: f64,
}

impl Default for BatteryParams {
    fn default() -> BatteryParams {
        BatteryParams {
            energy_min_pu: 0.0,
            energy_max_pu: 1.0,
            efficiency: 0.95,
            charge_min_pu: 0.0,
            charge_max_pu: 0.95,
            discharge_min_pu: 0.0,
            discharge_max_pu: 0.95,
            unit_cost_musd: 20.0,
        }
    }
}

impl BatteryParams {
    pub fn validate(&self) -> Result<(), FormError> {
        let bad = |msg: String| Err(FormError::BadCatalog(msg));
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return bad(format!("battery efficiency {} not in (0, 1]", self.efficiency));
        }
        if !(self.energy_min_pu >= 0.0 && self.energy_max_pu > self.energy_min_pu) {
            return bad(format!(
                "battery energy range [{}, {}] invalid",
                self.energy_min_pu, self.energy_max_pu
            ));
        }
        for (label, lo, hi) in [
            ("charge", self.charge_min_pu, self.charge_max_pu),
            ("discharge", self.discharge_min_pu, self.discharge_max_pu),
        ] {
            if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
                return bad(format!("battery {label} rate range [{lo}, {hi}] invalid"));
            }
        }
        if !(self.unit_cost_musd > 0.0 && self.unit_cost_musd.is_finite()) {
            return bad(format!("battery unit cost {} invalid", self.unit_cost_musd));
        }
        Ok(())
    }
}

/// Solar PV unit: one unit produces the availability profile value in
/// per-unit power; capacity is continuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolarParams {
    pub unit_cost_musd: f64,
}

impl Default for SolarParams {
    fn default() -> SolarParams {
        SolarParams {
            unit_cost_musd: 0.00094,
        }
    }
}

impl SolarParams {
    pub fn validate(&self) -> Result<(), FormError> {
        if !(self.unit_cost_musd > 0.0 && self.unit_cost_musd.is_finite()) {
            return Err(FormError::BadCatalog(format!(
                "solar unit cost {} invalid",
                self.unit_cost_musd
            )));
        }
        Ok(())
    }
}

/// One of the eight studied investment portfolios: a single hardening
/// technology, with or without batteries and solar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scenario {
    pub id: u8,
    pub batteries: bool,
    pub solar: bool,
    pub hardening: Option<HardeningKind>,
}

impl Scenario {
    pub fn from_id(id: u8) -> Result<Scenario, FormError> {
        use HardeningKind::*;
        let (batteries, solar, hardening) = match id {
            1 => (true, false, None),
            2 => (false, true, None),
            3 => (false, false, Some(Undergrounding)),
            4 => (false, false, Some(CoveredConductor)),
            5 => (false, false, Some(VegetationManagement)),
            6 => (true, true, Some(Undergrounding)),
            7 => (true, true, Some(CoveredConductor)),
            8 => (true, true, Some(VegetationManagement)),
            other => return Err(FormError::BadScenario(other)),
        };
        Ok(Scenario {
            id,
            batteries,
            solar,
            hardening,
        })
    }

    pub fn all() -> Vec<Scenario> {
        (1..=8).map(|i| Scenario::from_id(i).expect("ids 1..=8 are valid")).collect()
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if self.batteries {
            parts.push("batteries".to_string());
        }
        if self.solar {
            parts.push("solar".to_string());
        }
        if let Some(h) = self.hardening {
            parts.push(h.label().to_string());
        }
        parts.join(" + ")
    }
}

/// Candidate locations and technology parameters available to the
/// investment model. Bus and line entries are indices into the network's
/// bus and line lists.
#[derive(Debug, Clone, PartialEq)]
pub struct InvestmentCatalog {
    pub battery_buses: Vec<usize>,
    pub solar_buses: Vec<usize>,
    pub harden_lines: Vec<usize>,
    pub hardening: Option<HardeningKind>,
    pub battery: BatteryParams,
    pub solar: SolarParams,
}

impl InvestmentCatalog {
    pub fn empty() -> InvestmentCatalog {
        InvestmentCatalog {
            battery_buses: Vec::new(),
            solar_buses: Vec::new(),
            harden_lines: Vec::new(),
            hardening: None,
            battery: BatteryParams::default(),
            solar: SolarParams::default(),
        }
    }

    /// Full candidate sets for a scenario: every bus for batteries and
    /// solar, every hardenable line for hardening, as the scenario allows.
    pub fn for_scenario(net: &Network, scenario: Scenario) -> InvestmentCatalog {
        let all_buses: Vec<usize> = (0..net.buses.len()).collect();
        InvestmentCatalog {
            battery_buses: if scenario.batteries {
                all_buses.clone()
            } else {
                Vec::new()
            },
            solar_buses: if scenario.solar { all_buses } else { Vec::new() },
            harden_lines: if scenario.hardening.is_some() {
                net.hardenable_lines()
            } else {
                Vec::new()
            },
            hardening: scenario.hardening,
            battery: BatteryParams::default(),
            solar: SolarParams::default(),
        }
    }

    /// Sorts and deduplicates the candidate lists in place.
    pub fn normalize(&mut self) {
        for list in [
            &mut self.battery_buses,
            &mut self.solar_buses,
            &mut self.harden_lines,
        ] {
            list.sort_unstable();
            list.dedup();
        }
    }

    pub fn validate(&self, net: &Network) -> Result<(), FormError> {
        let bad = |msg: String| Err(FormError::BadCatalog(msg));
        for (label, list, limit) in [
            ("battery bus", &self.battery_buses, net.buses.len()),
            ("solar bus", &self.solar_buses, net.buses.len()),
            ("hardening line", &self.harden_lines, net.lines.len()),
        ] {
            for w in list.windows(2) {
                if w[0] >= w[1] {
                    return bad(format!("{label} list must be strictly ascending"));
                }
            }
            if let Some(&ix) = list.iter().find(|&&ix| ix >= limit) {
                return bad(format!("{label} index {ix} out of range (count {limit})"));
            }
        }
        for &ix in &self.harden_lines {
            if !net.lines[ix].hardenable {
                return bad(format!("line '{}' is not hardenable", net.lines[ix].id));
            }
        }
        if !self.harden_lines.is_empty() && self.hardening.is_none() {
            return bad("hardening candidates listed but no technology chosen".into());
        }
        self.battery.validate()?;
        self.solar.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Bus, Generator, Line};

    fn two_bus() -> Network {
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
                flow_limit_pu: 1.0,
                angle_min_rad: -0.4,
                angle_max_rad: 0.4,
                length_miles: 10.0,
                switchable: true,
                hardenable: false,
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

    #[test]
    fn scenario_table_is_complete() {
        let all = Scenario::all();
        assert_eq!(all.len(), 8);
        assert_eq!(all[0].describe(), "batteries");
        assert_eq!(all[1].describe(), "solar");
        assert_eq!(all[2].describe(), "undergrounding");
        assert_eq!(all[7].describe(), "batteries + solar + vegetation_management");
        assert!(Scenario::from_id(0).is_err());
        assert!(Scenario::from_id(9).is_err());
    }

    #[test]
    fn hardening_parameters() {
        use HardeningKind::*;
        assert_eq!(Undergrounding.risk_reduction(), 1.0);
        assert_eq!(CoveredConductor.risk_reduction(), 0.5);
        assert_eq!(VegetationManagement.risk_reduction(), 0.25);
        assert_eq!(Undergrounding.cost_per_mile_musd(), 3.0);
        assert_eq!(CoveredConductor.cost_per_mile_musd(), 0.5);
        assert_eq!(VegetationManagement.cost_per_mile_musd(), 0.01);
        for k in [Undergrounding, CoveredConductor, VegetationManagement] {
            assert_eq!(HardeningKind::from_label(k.label()), Some(k));
        }
    }

    #[test]
    fn catalog_rejects_non_hardenable_candidates() {
        let net = two_bus();
        let mut cat = InvestmentCatalog::empty();
        cat.harden_lines = vec![0];
        cat.hardening = Some(HardeningKind::VegetationManagement);
        let err = cat.validate(&net).unwrap_err();
        assert!(err.to_string().contains("not hardenable"), "{err}");
    }

    #[test]
    fn catalog_rejects_out_of_range_and_unsorted() {
        let net = two_bus();
        let mut cat = InvestmentCatalog::empty();
        cat.battery_buses = vec![5];
        assert!(cat.validate(&net).is_err());
        cat.battery_buses = vec![1, 0];
        assert!(cat.validate(&net).is_err());
        cat.normalize();
        assert_eq!(cat.battery_buses, vec![0, 1]);
        assert!(cat.validate(&net).is_ok());
    }

    #[test]
    fn scenario_catalog_respects_flags() {
        let net = two_bus();
        let s = Scenario::from_id(1).unwrap();
        let cat = InvestmentCatalog::for_scenario(&net, s);
        assert_eq!(cat.battery_buses, vec![0, 1]);
        assert!(cat.solar_buses.is_empty());
        assert!(cat.harden_lines.is_empty());
        let s = Scenario::from_id(6).unwrap();
        let cat = InvestmentCatalog::for_scenario(&net, s);
        assert!(cat.harden_lines.is_empty(), "no hardenable lines in this net");
        assert_eq!(cat.hardening, Some(HardeningKind::Undergrounding));
    }
}
