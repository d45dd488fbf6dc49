//! Solver-agnostic MILP representation with a built-in exact solver.
//!
//! Models are built through [`MilpModel`] and either solved in process
//! (bounded-variable primal simplex plus best-first branch-and-bound) or
//! exported to LP / MPS text for external solvers. The built-in solver is
//! intended for desk-scale models; production-scale instances should be
//! exported.

mod bb;
mod export;
mod model;
mod simplex;

pub use bb::{solve, SolveOptions, SolveResult, SolveStatus};
pub use export::{write_lp, write_mps};
pub use model::{ConId, Constraint, MilpModel, Sense, VarId, VarKind, Variable};
pub use simplex::{solve_lp, solve_lp_bounded, LpSolution, LpStatus};

/// Absolute feasibility tolerance applied to constraint and bound checks.
pub const FEAS_TOL: f64 = 1e-6;

/// Integrality tolerance: a value within this distance of an integer is
/// treated as integral.
pub const INT_TOL: f64 = 1e-6;

/// Everything that can go wrong while building or solving a model.
#[derive(Debug, thiserror::Error)]
pub enum MilpError {
    #[error("duplicate name '{0}'")]
    DuplicateName(String),
    #[error("invalid bounds [{lower}, {upper}] for '{name}'")]
    BadBounds {
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("unknown variable id {0}")]
    UnknownVariable(usize),
    #[error("non-finite coefficient for '{0}'")]
    NonFinite(String),
    #[error("simplex numerical failure: {0}")]
    Numerical(String),
    #[error("simplex iteration limit exceeded ({0} iterations)")]
    IterationLimit(u64),
}
