//! Planning toolkit for wildfire-mitigation investments and public-safety
//! power-shutoff (PSPS) operation on DC power-flow network models.
//!
//! The crate covers the full pipeline: network and wildfire-risk ingestion,
//! mixed-integer optimization models for joint shutoff/investment planning,
//! a built-in exact MILP solver with LP/MPS export for production-scale
//! instances, season-long shutoff simulation, and budget/trade-off sweeps.

pub mod config;
pub mod formulations;
pub mod milp;
pub mod net;
pub mod pipeline;
pub mod risk;
pub mod season;
pub mod sweep;
