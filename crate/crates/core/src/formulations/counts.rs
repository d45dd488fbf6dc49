//! Closed-form size formulas for the joint investment model, used to
//! sanity-check instance dimensions before solving.

use crate::net::Network;

use super::params::InvestmentCatalog;

/// Instance dimensions the size formulas depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub buses: usize,
    pub generators: usize,
    pub lines: usize,
    pub switchable: usize,
    pub battery_buses: usize,
    pub solar_buses: usize,
    pub harden_lines: usize,
    /// Hardening candidates that are also switchable.
    pub harden_switch_overlap: usize,
    pub hours: usize,
}

impl ModelDims {
    pub fn new(net: &Network, catalog: &InvestmentCatalog, hours: usize) -> ModelDims {
        ModelDims {
            buses: net.buses.len(),
            generators: net.generators.len(),
            lines: net.lines.len(),
            switchable: net.lines.iter().filter(|l| l.switchable).count(),
            battery_buses: catalog.battery_buses.len(),
            solar_buses: catalog.solar_buses.len(),
            harden_lines: catalog.harden_lines.len(),
            harden_switch_overlap: catalog
                .harden_lines
                .iter()
                .filter(|&&i| net.lines[i].switchable)
                .count(),
            hours,
        }
    }
}

/// Counted size of the joint investment model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelCounts {
    pub continuous: usize,
    pub integer: usize,
    pub bound: usize,
    pub inequality: usize,
    pub equality: usize,
}

/// Size of the joint investment model by closed-form count:
///
/// * continuous variables: generator dispatch, angles and shed per bus,
///   flows per line, charge/discharge per battery bus, solar capacity
///   plus output per solar bus;
/// * integer variables: one energization binary per switchable line,
///   battery units plus hourly mode binaries, one hardening binary per
///   candidate line;
/// * bound rows: two-sided generator and shed limits, two-sided flow
///   limits on non-switchable lines;
/// * inequality rows: four per switchable line-hour, four per
///   non-switchable line-hour, eight per battery bus-hour, one per solar
///   bus-hour, one hardening/energization exclusion per overlapping
///   candidate;
/// * equality rows: one balance per bus-hour.
pub fn count_model(d: &ModelDims) -> ModelCounts {
    let t = d.hours;
    let non_switchable = d.lines - d.switchable;
    ModelCounts {
        continuous: d.generators * t
            + 2 * d.buses * t
            + d.lines * t
            + 2 * d.battery_buses * t
            + d.solar_buses * (1 + t),
        integer: d.switchable + d.battery_buses * (1 + t) + d.harden_lines,
        bound: 2 * d.generators * t + 2 * d.buses * t + 2 * non_switchable * t,
        inequality: 4 * d.switchable * t
            + 4 * non_switchable * t
            + 8 * d.battery_buses * t
            + d.solar_buses * t
            + d.harden_switch_overlap,
        equality: d.buses * t,
    }
}
