//! Best-first branch-and-bound over the simplex relaxation.
//!
//! Nodes are ordered by (LP bound, deeper first, creation order), which
//! dives to an incumbent quickly and still certifies the global bound.
//! Branching picks the fractional integer variable with the largest
//! objective-weighted fractionality, so decisions that move the bound
//! are fixed before indicator variables the objective never sees.
//! Integral relaxation solutions are re-solved with the integers fixed
//! ("polish") so stored incumbents satisfy big-M constraints exactly
//! rather than within the integrality tolerance, and a rounding
//! heuristic keeps an incumbent available on objective plateaus.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::model::MilpModel;
use super::simplex::{LpStatus, StandardForm};
use super::{MilpError, INT_TOL};

/// Tolerance below which a bound improvement is not worth pursuing.
const PRUNE_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Relative optimality gap at which the search stops (0 = exact).
    pub relative_gap: f64,
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Accepted for interface stability; the search itself is fully
    /// deterministic and never draws random numbers.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            relative_gap: 0.01,
            node_limit: None,
            time_limit: None,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn exact() -> Self {
        SolveOptions {
            relative_gap: 0.0,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    OptimalWithinGap,
    Infeasible,
    Unbounded,
    LimitReached,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::OptimalWithinGap => "optimal_within_gap",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::LimitReached => "limit_reached",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Incumbent objective (model constant included).
    pub objective: Option<f64>,
    /// Incumbent assignment aligned with model variable ids.
    pub values: Option<Vec<f64>>,
    /// Proven lower bound on the optimum at stop.
    pub best_bound: Option<f64>,
    /// Achieved relative gap, `(incumbent - bound) / max(|incumbent|, 1e-6)`.
    pub gap: Option<f64>,
    pub nodes: u64,
    pub iterations: u64,
}

struct Node {
    bound: f64,
    depth: u32,
    id: u64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for Node {}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap: "greater" pops first. Prefer lower bound, then deeper
        // node, then earlier creation.
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn gap_of(incumbent: f64, bound: f64) -> f64 {
    ((incumbent - bound) / incumbent.abs().max(1e-6)).max(0.0)
}

/// Nodes between rounding-heuristic retries once an incumbent exists.
const HEUR_PERIOD: u64 = 64;

/// Fixes every integer to a rounding of the relaxation point and
/// re-solves; a feasible result is an incumbent candidate. Keeps the
/// search from stalling on objective plateaus where relaxations stay
/// fractional in variables the objective never sees.
fn rounding_incumbent(
    sf: &StandardForm,
    model: &MilpModel,
    ints: &[usize],
    x: &[f64],
    lower: &[f64],
    upper: &[f64],
    floor_all: bool,
    iterations: &mut u64,
) -> Result<Option<(f64, Vec<f64>)>, MilpError> {
    let mut plo = lower.to_vec();
    let mut pup = upper.to_vec();
    for &vi in ints {
        let r = if floor_all { x[vi].floor() } else { x[vi].round() };
        let r = r.max(lower[vi]).min(upper[vi]);
        plo[vi] = r;
        pup[vi] = r;
    }
    let lp = sf.solve(model, &plo, &pup)?;
    *iterations += lp.iterations;
    Ok(match lp.status {
        LpStatus::Optimal => Some((lp.objective.unwrap(), lp.values.unwrap())),
        _ => None,
    })
}

/// Solves the model with branch-and-bound (a single LP solve when there
/// are no integer variables).
pub fn solve(model: &MilpModel, opts: &SolveOptions) -> Result<SolveResult, MilpError> {
    let start = Instant::now();
    let sf = StandardForm::build(model);
    let base_lower: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
    let base_upper: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();
    let ints: Vec<usize> = model.integer_vars().iter().map(|v| v.index()).collect();

    let mut iterations = 0u64;
    let root = sf.solve(model, &base_lower, &base_upper)?;
    iterations += root.iterations;
    match root.status {
        LpStatus::Infeasible => {
            return Ok(SolveResult {
                status: SolveStatus::Infeasible,
                objective: None,
                values: None,
                best_bound: None,
                gap: None,
                nodes: 1,
                iterations,
            })
        }
        LpStatus::Unbounded => {
            return Ok(SolveResult {
                status: SolveStatus::Unbounded,
                objective: None,
                values: None,
                best_bound: None,
                gap: None,
                nodes: 1,
                iterations,
            })
        }
        LpStatus::Optimal => {}
    }
    let root_obj = root.objective.expect("optimal LP carries an objective");
    if ints.is_empty() {
        return Ok(SolveResult {
            status: SolveStatus::OptimalWithinGap,
            objective: Some(root_obj),
            values: root.values,
            best_bound: Some(root_obj),
            gap: Some(0.0),
            nodes: 1,
            iterations,
        });
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: root_obj,
        depth: 0,
        id: 0,
        lower: base_lower,
        upper: base_upper,
    });
    let mut next_id = 1u64;
    let mut nodes = 0u64;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut stop_bound: Option<f64> = None;
    let mut limit_hit = false;

    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = incumbent.as_ref() {
            if node.bound >= inc - PRUNE_EPS || gap_of(*inc, node.bound) <= opts.relative_gap {
                stop_bound = Some(node.bound);
                break;
            }
        }
        if opts.node_limit.is_some_and(|lim| nodes >= lim)
            || opts.time_limit.is_some_and(|lim| start.elapsed() >= lim)
        {
            stop_bound = Some(node.bound);
            limit_hit = true;
            break;
        }
        nodes += 1;

        let lp = sf.solve(model, &node.lower, &node.upper)?;
        iterations += lp.iterations;
        let (obj, x) = match lp.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return Err(MilpError::Numerical(
                    "bounded node relaxation reported unbounded".into(),
                ))
            }
            LpStatus::Optimal => (lp.objective.unwrap(), lp.values.unwrap()),
        };
        if incumbent
            .as_ref()
            .is_some_and(|(inc, _)| obj >= inc - PRUNE_EPS)
        {
            continue;
        }

        // Fractional variable with the largest objective-weighted
        // fractionality; ties keep the lowest id.
        let coefs = model.objective_coefs();
        let mut branch: Option<(usize, f64)> = None;
        for &vi in &ints {
            let frac = (x[vi] - x[vi].round()).abs();
            if frac > INT_TOL {
                let score = frac * (1.0 + 1e6 * coefs[vi].abs());
                if branch.map_or(true, |(_, best)| score > best) {
                    branch = Some((vi, score));
                }
            }
        }
        match branch {
            None => {
                // Integral within tolerance: fix and re-solve for an exact
                // incumbent. If the polished LP fails, keep the node values.
                let mut plo = node.lower.clone();
                let mut pup = node.upper.clone();
                for &vi in &ints {
                    let r = x[vi].round();
                    plo[vi] = r;
                    pup[vi] = r;
                }
                let polished = sf.solve(model, &plo, &pup)?;
                iterations += polished.iterations;
                let (cand_obj, cand_x) = match polished.status {
                    LpStatus::Optimal => (polished.objective.unwrap(), polished.values.unwrap()),
                    _ => (obj, x),
                };
                if incumbent.as_ref().map_or(true, |(inc, _)| cand_obj < *inc) {
                    incumbent = Some((cand_obj, cand_x));
                }
            }
            Some((vi, _)) => {
                // When only objective-free integers remain fractional the
                // bound cannot move by branching, so a rounded completion
                // that reaches the bound settles this region outright.
                let plateau = coefs[vi] == 0.0;
                if plateau || incumbent.is_none() || nodes % HEUR_PERIOD == 1 {
                    let mut reached_bound = false;
                    for floor_all in [false, true] {
                        if reached_bound {
                            break;
                        }
                        let cand = rounding_incumbent(
                            &sf, model, &ints, &x, &node.lower, &node.upper, floor_all,
                            &mut iterations,
                        )?;
                        if let Some((cand_obj, cand_x)) = cand {
                            if cand_obj <= obj + PRUNE_EPS * (1.0 + obj.abs()) {
                                reached_bound = true;
                            }
                            if incumbent.as_ref().map_or(true, |(inc, _)| cand_obj < *inc) {
                                incumbent = Some((cand_obj, cand_x));
                            }
                        }
                    }
                    if plateau && reached_bound {
                        continue;
                    }
                }
                let down = x[vi].floor();
                let up = x[vi].ceil();
                if down >= node.lower[vi] - 0.5 {
                    let mut upper = node.upper.clone();
                    upper[vi] = down;
                    heap.push(Node {
                        bound: obj,
                        depth: node.depth + 1,
                        id: next_id,
                        lower: node.lower.clone(),
                        upper,
                    });
                    next_id += 1;
                }
                if up <= node.upper[vi] + 0.5 {
                    let mut lower = node.lower;
                    lower[vi] = up;
                    heap.push(Node {
                        bound: obj,
                        depth: node.depth + 1,
                        id: next_id,
                        lower,
                        upper: node.upper,
                    });
                    next_id += 1;
                }
            }
        }
    }

    match incumbent {
        Some((inc, x)) => {
            let bound = stop_bound.unwrap_or(inc).min(inc);
            Ok(SolveResult {
                status: if limit_hit {
                    SolveStatus::LimitReached
                } else {
                    SolveStatus::OptimalWithinGap
                },
                objective: Some(inc),
                values: Some(x),
                best_bound: Some(bound),
                gap: Some(gap_of(inc, bound)),
                nodes,
                iterations,
            })
        }
        None => Ok(SolveResult {
            status: if limit_hit {
                SolveStatus::LimitReached
            } else {
                SolveStatus::Infeasible
            },
            objective: None,
            values: None,
            best_bound: stop_bound,
            gap: None,
            nodes,
            iterations,
        }),
    }
}
