//! Transmission network model: buses, lines, generators, and hourly demand.
//!
//! Quantities are per-unit on a 100 MVA system base. Networks load from a
//! single JSON document; hourly demand profiles load from CSV and scale the
//! nominal bus demands into a per-day series.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// System base power; all per-unit quantities refer to this.
pub const BASE_MVA: f64 = 100.0;

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("i/o error reading '{path}': {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("base_mva must be {BASE_MVA}, file declares {0}")]
    BadBase(f64),
    #[error("network has no buses")]
    NoBuses,
    #[error("duplicate {kind} id '{id}'")]
    DuplicateId { kind: &'static str, id: String },
    #[error("line '{id}' references invalid bus index {bus}")]
    BadEndpoint { id: String, bus: usize },
    #[error("line '{id}' connects a bus to itself")]
    SelfLoop { id: String },
    #[error("line '{id}': {reason}")]
    BadLine { id: String, reason: String },
    #[error("generator '{id}': {reason}")]
    BadGenerator { id: String, reason: String },
    #[error("demand profile: {0}")]
    BadProfile(String),
    #[error("solar profile: {0}")]
    BadSolar(String),
    #[error("total demand is zero")]
    ZeroDemand,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Bus {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub longitude: Option<f64>,
    /// Nominal hourly demand; negative values are fixed injections and are
    /// never sheddable.
    #[serde(default)]
    pub demand_pu: f64,
    /// Disabled injections are dropped (demand forced to zero) at load time.
    #[serde(default)]
    pub disabled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Line {
    pub id: String,
    /// Index into `Network::buses`.
    pub from_bus: usize,
    pub to_bus: usize,
    /// Susceptance, sign included: flow is `-b * (theta_from - theta_to)`.
    pub susceptance_pu: f64,
    pub flow_limit_pu: f64,
    pub angle_min_rad: f64,
    pub angle_max_rad: f64,
    pub length_miles: f64,
    /// Eligible for de-energization decisions.
    pub switchable: bool,
    /// Eligible for hardening investment.
    pub hardenable: bool,
    /// Polyline as (latitude, longitude) waypoints, used for risk
    /// integration; `length_miles` stays authoritative for costing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Generator {
    pub id: String,
    /// Index into `Network::buses`.
    pub bus: usize,
    pub p_min_pu: f64,
    pub p_max_pu: f64,
}

/// Validated transmission network.
///
/// Bus indices are dense (`0..buses.len()`) and line/generator references
/// are checked at load time; element ids are unique per kind.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Network {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
}

impl Network {
    pub fn load(path: impl AsRef<Path>) -> Result<Network, NetError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| NetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Network::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Network, NetError> {
        let mut net: Network =
            serde_json::from_str(text).map_err(|e| NetError::Parse(e.to_string()))?;
        for bus in &mut net.buses {
            if bus.disabled {
                bus.demand_pu = 0.0;
            }
        }
        net.validate()?;
        Ok(net)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serialization cannot fail")
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if (self.base_mva - BASE_MVA).abs() > 1e-9 {
            return Err(NetError::BadBase(self.base_mva));
        }
        if self.buses.is_empty() {
            return Err(NetError::NoBuses);
        }
        let mut seen = HashSet::new();
        for b in &self.buses {
            if !seen.insert(&b.id) {
                return Err(NetError::DuplicateId {
                    kind: "bus",
                    id: b.id.clone(),
                });
            }
            if !b.demand_pu.is_finite() {
                return Err(NetError::Parse(format!(
                    "bus '{}' demand is not finite",
                    b.id
                )));
            }
        }
        let mut seen = HashSet::new();
        for l in &self.lines {
            if !seen.insert(&l.id) {
                return Err(NetError::DuplicateId {
                    kind: "line",
                    id: l.id.clone(),
                });
            }
            for bus in [l.from_bus, l.to_bus] {
                if bus >= self.buses.len() {
                    return Err(NetError::BadEndpoint {
                        id: l.id.clone(),
                        bus,
                    });
                }
            }
            if l.from_bus == l.to_bus {
                return Err(NetError::SelfLoop { id: l.id.clone() });
            }
            let checks: [(bool, &str); 5] = [
                (
                    l.susceptance_pu.is_finite() && l.susceptance_pu != 0.0,
                    "susceptance must be finite and nonzero",
                ),
                (
                    l.flow_limit_pu.is_finite() && l.flow_limit_pu > 0.0,
                    "flow limit must be positive",
                ),
                (
                    l.angle_min_rad.is_finite()
                        && l.angle_max_rad.is_finite()
                        && l.angle_min_rad <= 0.0
                        && l.angle_max_rad >= 0.0
                        && l.angle_min_rad < l.angle_max_rad,
                    "angle limits must satisfy min <= 0 <= max with min < max",
                ),
                (
                    l.length_miles.is_finite() && l.length_miles >= 0.0,
                    "length must be non-negative",
                ),
                (
                    l.geometry.as_ref().map_or(true, |g| g.len() >= 2),
                    "geometry needs at least two waypoints",
                ),
            ];
            for (ok, reason) in checks {
                if !ok {
                    return Err(NetError::BadLine {
                        id: l.id.clone(),
                        reason: reason.into(),
                    });
                }
            }
        }
        let mut seen = HashSet::new();
        for g in &self.generators {
            if !seen.insert(&g.id) {
                return Err(NetError::DuplicateId {
                    kind: "generator",
                    id: g.id.clone(),
                });
            }
            if g.bus >= self.buses.len() {
                return Err(NetError::BadGenerator {
                    id: g.id.clone(),
                    reason: format!("invalid bus index {}", g.bus),
                });
            }
            if !(g.p_min_pu.is_finite() && g.p_max_pu.is_finite())
                || g.p_min_pu < 0.0
                || g.p_min_pu > g.p_max_pu
            {
                return Err(NetError::BadGenerator {
                    id: g.id.clone(),
                    reason: "limits must satisfy 0 <= p_min <= p_max".into(),
                });
            }
        }
        Ok(())
    }

    /// Bus index by id.
    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Line index by id.
    pub fn line_index(&self, id: &str) -> Option<usize> {
        self.lines.iter().position(|l| l.id == id)
    }

    /// Indices of switchable lines.
    pub fn switchable_lines(&self) -> Vec<usize> {
        self.lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.switchable)
            .map(|(i, _)| i)
            .collect()
    }

    /// Indices of hardenable lines.
    pub fn hardenable_lines(&self) -> Vec<usize> {
        self.lines
            .iter()
            .enumerate()
            .filter(|(_, l)| l.hardenable)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Hourly demand scale factors per calendar day.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandProfile {
    pub days: Vec<(NaiveDate, Vec<f64>)>,
}

impl DemandProfile {
    /// Loads a `day,hour,scale` CSV. Every listed day must carry exactly
    /// hours 0-23, each once, with non-negative scales.
    pub fn load(path: impl AsRef<Path>) -> Result<DemandProfile, NetError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| NetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        DemandProfile::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<DemandProfile, NetError> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut by_day: BTreeMap<NaiveDate, Vec<Option<f64>>> = BTreeMap::new();
        for (line_no, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| NetError::BadProfile(e.to_string()))?;
            if rec.len() != 3 {
                return Err(NetError::BadProfile(format!(
                    "row {}: expected day,hour,scale",
                    line_no + 2
                )));
            }
            let day: NaiveDate = rec[0]
                .trim()
                .parse()
                .map_err(|_| NetError::BadProfile(format!("bad date '{}'", &rec[0])))?;
            let hour: usize = rec[1]
                .trim()
                .parse()
                .map_err(|_| NetError::BadProfile(format!("bad hour '{}'", &rec[1])))?;
            if hour > 23 {
                return Err(NetError::BadProfile(format!("hour {hour} out of 0-23")));
            }
            let scale: f64 = rec[2]
                .trim()
                .parse()
                .map_err(|_| NetError::BadProfile(format!("bad scale '{}'", &rec[2])))?;
            if !scale.is_finite() || scale < 0.0 {
                return Err(NetError::BadProfile(format!(
                    "scale {scale} must be non-negative ({day} hour {hour})"
                )));
            }
            let slots = by_day.entry(day).or_insert_with(|| vec![None; 24]);
            if slots[hour].is_some() {
                return Err(NetError::BadProfile(format!(
                    "duplicate entry for {day} hour {hour}"
                )));
            }
            slots[hour] = Some(scale);
        }
        if by_day.is_empty() {
            return Err(NetError::BadProfile("profile is empty".into()));
        }
        let mut days = Vec::with_capacity(by_day.len());
        for (day, slots) in by_day {
            let mut scales = Vec::with_capacity(24);
            for (h, s) in slots.into_iter().enumerate() {
                scales.push(s.ok_or_else(|| {
                    NetError::BadProfile(format!("{day} is missing hour {h}"))
                })?);
            }
            days.push((day, scales));
        }
        Ok(DemandProfile { days })
    }
}

/// Per-day, per-bus, per-hour demand in p.u.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandSeries {
    pub dates: Vec<NaiveDate>,
    pub hours: usize,
    /// Indexed `[day][bus][hour]`.
    pub values: Vec<Vec<Vec<f64>>>,
}

impl DemandSeries {
    /// Builds a series directly (desk-scale fixtures may use short horizons;
    /// file-loaded profiles always carry 24 hours).
    pub fn new(
        dates: Vec<NaiveDate>,
        hours: usize,
        values: Vec<Vec<Vec<f64>>>,
    ) -> Result<DemandSeries, NetError> {
        if hours == 0 {
            return Err(NetError::BadProfile("horizon must be at least 1 hour".into()));
        }
        if dates.len() != values.len() {
            return Err(NetError::BadProfile(
                "date and value lengths differ".into(),
            ));
        }
        for day in &values {
            for bus in day {
                if bus.len() != hours {
                    return Err(NetError::BadProfile("ragged hourly values".into()));
                }
            }
        }
        Ok(DemandSeries {
            dates,
            hours,
            values,
        })
    }

    pub fn day_index(&self, date: NaiveDate) -> Option<usize> {
        self.dates.iter().position(|&d| d == date)
    }

    /// Positive-part demand total for one day.
    pub fn day_total(&self, day: usize) -> f64 {
        self.values[day]
            .iter()
            .flat_map(|bus| bus.iter())
            .map(|&v| v.max(0.0))
            .sum()
    }

    /// Positive-part demand total over all days; errors when zero (no
    /// formulation can normalize shed against it).
    pub fn total_demand(&self) -> Result<f64, NetError> {
        let total: f64 = (0..self.dates.len()).map(|d| self.day_total(d)).sum();
        if total <= 0.0 {
            return Err(NetError::ZeroDemand);
        }
        Ok(total)
    }

    /// Index of the day with the largest positive-part total.
    pub fn peak_day(&self) -> usize {
        (0..self.dates.len())
            .max_by(|&a, &b| self.day_total(a).total_cmp(&self.day_total(b)))
            .unwrap_or(0)
    }
}

/// Scales nominal bus demands by the profile into a per-day series.
/// Negative nominals scale identically and stay injections.
pub fn apply_profile(net: &Network, profile: &DemandProfile) -> DemandSeries {
    let dates: Vec<NaiveDate> = profile.days.iter().map(|(d, _)| *d).collect();
    let values: Vec<Vec<Vec<f64>>> = profile
        .days
        .iter()
        .map(|(_, scales)| {
            net.buses
                .iter()
                .map(|b| scales.iter().map(|s| b.demand_pu * s).collect())
                .collect()
        })
        .collect();
    DemandSeries {
        dates,
        hours: 24,
        values,
    }
}

/// Hourly output of one 1-kW solar unit per bus, in p.u.
#[derive(Debug, Clone, PartialEq)]
pub struct SolarProfile {
    pub hours: usize,
    /// Indexed `[bus][hour]`; buses without entries produce zero.
    pub output: Vec<Vec<f64>>,
}

impl SolarProfile {
    pub fn zeros(net: &Network, hours: usize) -> SolarProfile {
        SolarProfile {
            hours,
            output: vec![vec![0.0; hours]; net.buses.len()],
        }
    }

    /// Loads a `bus,hour,output_pu` CSV keyed by bus id.
    pub fn load(path: impl AsRef<Path>, net: &Network) -> Result<SolarProfile, NetError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| NetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        SolarProfile::from_csv_str(&text, net)
    }

    pub fn from_csv_str(text: &str, net: &Network) -> Result<SolarProfile, NetError> {
        let mut out = SolarProfile::zeros(net, 24);
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut seen = HashSet::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| NetError::BadSolar(e.to_string()))?;
            if rec.len() != 3 {
                return Err(NetError::BadSolar("expected bus,hour,output_pu".into()));
            }
            let bus_id = rec[0].trim();
            let bus = net
                .bus_index(bus_id)
                .ok_or_else(|| NetError::BadSolar(format!("unknown bus '{bus_id}'")))?;
            let hour: usize = rec[1]
                .trim()
                .parse()
                .map_err(|_| NetError::BadSolar(format!("bad hour '{}'", &rec[1])))?;
            if hour > 23 {
                return Err(NetError::BadSolar(format!("hour {hour} out of 0-23")));
            }
            let v: f64 = rec[2]
                .trim()
                .parse()
                .map_err(|_| NetError::BadSolar(format!("bad output '{}'", &rec[2])))?;
            if !v.is_finite() || v < 0.0 {
                return Err(NetError::BadSolar(format!(
                    "output {v} must be non-negative (bus '{bus_id}' hour {hour})"
                )));
            }
            if !seen.insert((bus, hour)) {
                return Err(NetError::BadSolar(format!(
                    "duplicate entry for bus '{bus_id}' hour {hour}"
                )));
            }
            out.output[bus][hour] = v;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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
                    demand_pu: 0.1,
                    disabled: false,
                },
            ],
            lines: vec![Line {
                id: "l0".into(),
                from_bus: 0,
                to_bus: 1,
                susceptance_pu: -5.0,
                flow_limit_pu: 0.5,
                angle_min_rad: -0.4,
                angle_max_rad: 0.4,
                length_miles: 10.0,
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

    #[test]
    fn round_trip_is_identity() {
        let net = two_bus();
        let text = net.to_json_string();
        let again = Network::from_json_str(&text).unwrap();
        assert_eq!(net, again);
    }

    #[test]
    fn empty_bus_list_rejected() {
        let mut net = two_bus();
        net.buses.clear();
        assert!(matches!(net.validate(), Err(NetError::NoBuses)));
    }

    #[test]
    fn bad_endpoint_names_line() {
        let mut net = two_bus();
        net.lines[0].to_bus = 9;
        match net.validate() {
            Err(NetError::BadEndpoint { id, bus }) => {
                assert_eq!(id, "l0");
                assert_eq!(bus, 9);
            }
            other => panic!("expected BadEndpoint, got {other:?}"),
        }
    }

    #[test]
    fn wrong_base_rejected() {
        let mut net = two_bus();
        net.base_mva = 50.0;
        assert!(matches!(net.validate(), Err(NetError::BadBase(_))));
    }

    #[test]
    fn disabled_injection_dropped_at_load() {
        let mut net = two_bus();
        net.buses[1].disabled = true;
        net.buses[1].demand_pu = -0.3;
        let again = Network::from_json_str(&net.to_json_string()).unwrap();
        assert_eq!(again.buses[1].demand_pu, 0.0);
    }

    #[test]
    fn profile_requires_full_day() {
        let csv = "day,hour,scale\n2021-06-01,0,1.0\n";
        let err = DemandProfile::from_csv_str(csv).unwrap_err();
        assert!(err.to_string().contains("missing hour"));
    }

    #[test]
    fn apply_profile_scales_nominals() {
        let net = two_bus();
        let mut csv = String::from("day,hour,scale\n");
        for h in 0..24 {
            csv.push_str(&format!("2021-06-01,{h},2.0\n"));
        }
        let profile = DemandProfile::from_csv_str(&csv).unwrap();
        let series = apply_profile(&net, &profile);
        assert_eq!(series.hours, 24);
        assert_eq!(series.values[0][1][5], 0.2);
        // 1 bus at 0.2 over 24 h.
        assert!((series.total_demand().unwrap() - 4.8).abs() < 1e-12);
    }

    #[test]
    fn negative_demand_excluded_from_total() {
        let date = NaiveDate::from_ymd_opt(2021, 6, 1).unwrap();
        let series =
            DemandSeries::new(vec![date], 1, vec![vec![vec![0.1], vec![-0.1]]]).unwrap();
        assert!((series.total_demand().unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_demand_errors() {
        let date = NaiveDate::from_ymd_opt(2021, 6, 1).unwrap();
        let series = DemandSeries::new(vec![date], 2, vec![vec![vec![0.0; 2]]]).unwrap();
        assert!(matches!(series.total_demand(), Err(NetError::ZeroDemand)));
    }
}
