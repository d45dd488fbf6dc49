//! Mixed-integer formulations of shutoff and investment planning over a
//! DC power-flow network.
//!
//! Three related models share a grid core (generation, bus angles, line
//! flows, load shedding, and one energization decision per switchable
//! line):
//!
//! * [`build_shutoff`] — de-energization only: trade served load against
//!   energized-line wildfire risk over one representative day.
//! * [`build_invest`] — adds capital decisions (grid batteries, solar PV,
//!   line hardening) under a budget, co-optimized with the shutoff.
//! * [`build_sequential`] — operates a fixed investment plan on one
//!   season day, carrying battery charge between consecutive shutoff
//!   days and rewarding end-of-day reserves.
//!
//! Objectives are normalized so both terms live on [0, 1]: shed energy
//! is divided by total sheddable demand and energized risk by total
//! line risk, weighted `alpha` against `1 - alpha`.

mod builder;
mod counts;
mod decode;
mod params;
mod plan;

pub use builder::{
    big_m_angles, build_invest, build_sequential, build_shutoff, BuiltModel, ModelContext,
    ModelKind, VarMap,
};
pub use counts::{count_model, ModelCounts, ModelDims};
pub use decode::{audit_solution, decode, BatteryDispatch, DecodedSolution, SolarDispatch};
pub use params::{BatteryParams, HardeningKind, InvestmentCatalog, Scenario, SolarParams};
pub use plan::{InvestmentPlan, PlanFile, SpendBreakdown, PLAN_SCHEMA};

use crate::milp::MilpError;

#[derive(Debug, thiserror::Error)]
pub enum FormError {
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    BadAlpha(f64),
    #[error("gamma must be finite and non-negative, got {0}")]
    BadGamma(f64),
    #[error("budget must be finite and non-negative, got {0}")]
    BadBudget(f64),
    #[error("demand matrix: {0}")]
    DemandShape(String),
    #[error("risk vector: {0}")]
    RiskShape(String),
    #[error("solar availability: {0}")]
    SolarShape(String),
    #[error("catalog: {0}")]
    BadCatalog(String),
    #[error("plan: {0}")]
    BadPlan(String),
    #[error("unknown scenario id {0}; valid ids are 1 through 8")]
    BadScenario(u8),
    #[error("total positive demand is zero; nothing to plan for")]
    ZeroDemand,
    #[error("decode: {0}")]
    Decode(String),
    #[error(transparent)]
    Milp(#[from] MilpError),
}
