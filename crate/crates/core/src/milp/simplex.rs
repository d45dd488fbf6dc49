//! Bounded-variable primal simplex over a slack standard form.
//!
//! Variable bounds are handled implicitly (nonbasic variables rest at a
//! finite bound), so the working matrix has one row per constraint only.
//! Feasibility is established in phase 1 through signed artificial columns;
//! cycling is broken by falling back to Bland's rule after a degenerate
//! stall. The basis inverse is maintained explicitly and refactorized
//! periodically, and every reported optimum is re-verified against the
//! original rows before being returned.

use super::model::{MilpModel, Sense};
use super::MilpError;

const DUAL_TOL: f64 = 1e-8;
const PIVOT_TOL: f64 = 1e-10;
const RATIO_TIE: f64 = 1e-12;
const DEGEN_LIMIT: u32 = 400;
const REFACTOR_EVERY: u32 = 256;
const PHASE1_TOL: f64 = 1e-7;
const VERIFY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a linear relaxation solve.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective including the model constant; present when optimal.
    pub objective: Option<f64>,
    /// Structural variable values, aligned with model variable ids.
    pub values: Option<Vec<f64>>,
    /// One dual multiplier per constraint, from the final basis.
    pub duals: Option<Vec<f64>>,
    /// Reduced cost per structural variable, from the final basis.
    pub reduced_costs: Option<Vec<f64>>,
    pub iterations: u64,
}

/// Solves the LP relaxation of `model` (integrality dropped, declared
/// bounds kept).
pub fn solve_lp(model: &MilpModel) -> Result<LpSolution, MilpError> {
    let lower: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();
    solve_lp_bounded(model, &lower, &upper)
}

/// Solves the LP relaxation with overridden structural bounds (used by
/// branch-and-bound nodes and enumeration-style callers).
pub fn solve_lp_bounded(
    model: &MilpModel,
    lower: &[f64],
    upper: &[f64],
) -> Result<LpSolution, MilpError> {
    let sf = StandardForm::build(model);
    sf.solve(model, lower, upper)
}

/// Slack standard form `Ax + s = rhs` shared across repeated solves of the
/// same model with different variable bounds.
pub(crate) struct StandardForm {
    m: usize,
    n_struct: usize,
    /// Sparse columns for structural variables: (row, coefficient).
    cols: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    /// Slack bounds per row, derived from the constraint sense.
    slack_lower: Vec<f64>,
    slack_upper: Vec<f64>,
    cost: Vec<f64>,
}

impl StandardForm {
    pub(crate) fn build(model: &MilpModel) -> StandardForm {
        let m = model.num_cons();
        let n = model.num_vars();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut rhs = Vec::with_capacity(m);
        let mut slack_lower = Vec::with_capacity(m);
        let mut slack_upper = Vec::with_capacity(m);
        for (i, c) in model.cons().iter().enumerate() {
            for &(v, coef) in &c.terms {
                cols[v.index()].push((i, coef));
            }
            rhs.push(c.rhs);
            let (lo, hi) = match c.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            slack_lower.push(lo);
            slack_upper.push(hi);
        }
        StandardForm {
            m,
            n_struct: n,
            cols,
            rhs,
            slack_lower,
            slack_upper,
            cost: model.objective_coefs().to_vec(),
        }
    }

    pub(crate) fn solve(
        &self,
        model: &MilpModel,
        lower: &[f64],
        upper: &[f64],
    ) -> Result<LpSolution, MilpError> {
        let mut w = Work::new(self, lower, upper);
        let mut sol = w.run()?;
        if sol.status == LpStatus::Optimal {
            let values = sol.values.as_ref().expect("optimal LP carries values");
            self.verify(values, &w)?;
            sol.objective = Some(model.eval_objective(values));
        }
        Ok(sol)
    }

    /// Independent residual check of a claimed optimum; a failure here is a
    /// numerical breakdown, never silently accepted.
    fn verify(&self, x: &[f64], w: &Work) -> Result<(), MilpError> {
        let mut lhs = vec![0.0; self.m];
        for (j, col) in self.cols.iter().enumerate() {
            if x[j] != 0.0 {
                for &(row, coef) in col {
                    lhs[row] += coef * x[j];
                }
            }
        }
        for i in 0..self.m {
            let slack = w.value[self.n_struct + i];
            let art = w.value[self.n_struct + self.m + i];
            let resid = (lhs[i] + slack + art - self.rhs[i]).abs();
            if resid > VERIFY_TOL * (1.0 + self.rhs[i].abs()) {
                return Err(MilpError::Numerical(format!(
                    "row {i} residual {resid:.3e} exceeds tolerance"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum St {
    Basic(usize),
    AtLower,
    AtUpper,
    FreeZero,
}

struct Work<'a> {
    sf: &'a StandardForm,
    /// Columns: structural, then slack, then artificial.
    n_sa: usize,
    nt: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: Vec<f64>,
    state: Vec<St>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    cost: Vec<f64>,
    bland: bool,
    degen: u32,
    pivots_since_refactor: u32,
    iterations: u64,
}

enum StepOutcome {
    Optimal,
    Unbounded,
    Moved,
}

impl<'a> Work<'a> {
    fn new(sf: &'a StandardForm, lo: &[f64], hi: &[f64]) -> Work<'a> {
        let m = sf.m;
        let n_sa = sf.n_struct + m;
        let nt = n_sa + m;
        let mut cols = Vec::with_capacity(nt);
        cols.extend(sf.cols.iter().cloned());
        for i in 0..m {
            cols.push(vec![(i, 1.0)]); // slack
        }
        for i in 0..m {
            cols.push(vec![(i, 1.0)]); // artificial
        }
        let mut lower = Vec::with_capacity(nt);
        let mut upper = Vec::with_capacity(nt);
        lower.extend_from_slice(lo);
        upper.extend_from_slice(hi);
        lower.extend_from_slice(&sf.slack_lower);
        upper.extend_from_slice(&sf.slack_upper);
        lower.extend(std::iter::repeat(0.0).take(m));
        upper.extend(std::iter::repeat(0.0).take(m));

        let mut value = vec![0.0; nt];
        let mut state = vec![St::FreeZero; nt];
        for j in 0..n_sa {
            if lower[j].is_finite() {
                state[j] = St::AtLower;
                value[j] = lower[j];
            } else if upper[j].is_finite() {
                state[j] = St::AtUpper;
                value[j] = upper[j];
            } else {
                state[j] = St::FreeZero;
                value[j] = 0.0;
            }
        }
        // Crash basis: a row whose slack can absorb the starting residual
        // gets that slack basic; only genuinely violated rows (and
        // equalities) receive a basic signed artificial, so phase 1 works
        // on the violations alone.
        let mut resid = sf.rhs.clone();
        for j in 0..n_sa {
            if value[j] != 0.0 {
                for &(row, coef) in &cols[j] {
                    resid[row] -= coef * value[j];
                }
            }
        }
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            let s = sf.n_struct + i;
            let j = n_sa + i;
            let r = resid[i];
            if lower[s] < upper[s] && r >= lower[s] && r <= upper[s] {
                value[s] = r;
                state[s] = St::Basic(i);
                lower[j] = 0.0;
                upper[j] = 0.0;
                value[j] = 0.0;
                state[j] = St::AtLower;
                basis.push(s);
            } else {
                if r >= 0.0 {
                    lower[j] = 0.0;
                    upper[j] = f64::INFINITY;
                } else {
                    lower[j] = f64::NEG_INFINITY;
                    upper[j] = 0.0;
                }
                value[j] = r;
                state[j] = St::Basic(i);
                basis.push(j);
            }
        }
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        Work {
            sf,
            n_sa,
            nt,
            cols,
            lower,
            upper,
            value,
            state,
            basis,
            binv,
            cost: vec![0.0; nt],
            bland: false,
            degen: 0,
            pivots_since_refactor: 0,
            iterations: 0,
        }
    }

    fn run(&mut self) -> Result<LpSolution, MilpError> {
        let m = self.sf.m;
        // Phase 1: drive signed artificials to zero.
        for i in 0..m {
            let j = self.n_sa + i;
            self.cost[j] = if self.lower[j] == 0.0 { 1.0 } else { -1.0 };
        }
        let needs_phase1 = (0..m).any(|i| self.value[self.n_sa + i].abs() > 1e-12);
        if needs_phase1 {
            match self.iterate()? {
                StepOutcome::Unbounded => {
                    return Err(MilpError::Numerical("phase 1 unbounded".into()))
                }
                _ => {}
            }
            let infeas: f64 = (0..m).map(|i| self.value[self.n_sa + i].abs()).sum();
            if infeas > PHASE1_TOL {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    objective: None,
                    values: None,
                    duals: None,
                    reduced_costs: None,
                    iterations: self.iterations,
                });
            }
        }
        // Pin artificials and switch to the true objective.
        for i in 0..m {
            let j = self.n_sa + i;
            self.lower[j] = 0.0;
            self.upper[j] = 0.0;
            self.cost[j] = 0.0;
            if !matches!(self.state[j], St::Basic(_)) {
                self.state[j] = St::AtLower;
                self.value[j] = 0.0;
            }
        }
        self.cost[..self.sf.n_struct].copy_from_slice(&self.sf.cost);
        for j in self.sf.n_struct..self.n_sa {
            self.cost[j] = 0.0;
        }
        self.bland = false;
        self.degen = 0;
        match self.iterate()? {
            StepOutcome::Unbounded => {
                return Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    objective: None,
                    values: None,
                    duals: None,
                    reduced_costs: None,
                    iterations: self.iterations,
                })
            }
            _ => {}
        }
        let y = self.price();
        let reduced: Vec<f64> = (0..self.sf.n_struct)
            .map(|j| self.reduced_cost(j, &y))
            .collect();
        Ok(LpSolution {
            status: LpStatus::Optimal,
            objective: None, // filled by caller from model constant
            values: Some(self.value[..self.sf.n_struct].to_vec()),
            duals: Some(y),
            reduced_costs: Some(reduced),
            iterations: self.iterations,
        })
    }

    /// Runs simplex iterations with the current cost vector until optimal
    /// or unbounded.
    fn iterate(&mut self) -> Result<StepOutcome, MilpError> {
        let cap = 20_000 + 200 * (self.sf.m as u64 + self.nt as u64);
        loop {
            if self.iterations > cap {
                return Err(MilpError::IterationLimit(self.iterations));
            }
            self.iterations += 1;
            match self.step()? {
                StepOutcome::Moved => continue,
                done => return Ok(done),
            }
        }
    }

    /// Dual prices for the current basis under the current costs.
    fn price(&self) -> Vec<f64> {
        let m = self.sf.m;
        let mut y = vec![0.0; m];
        for r in 0..m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for i in 0..m {
                    y[i] += cb * row[i];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut d = self.cost[j];
        for &(row, coef) in &self.cols[j] {
            d -= y[row] * coef;
        }
        d
    }

    fn step(&mut self) -> Result<StepOutcome, MilpError> {
        let m = self.sf.m;
        let y = self.price();
        // Entering variable: most attractive reduced cost (Dantzig), or
        // lowest eligible index once Bland's rule is active.
        let mut q = usize::MAX;
        let mut q_dir = 1.0;
        let mut best = DUAL_TOL;
        for j in 0..self.nt {
            let dir = match self.state[j] {
                St::Basic(_) => continue,
                St::AtLower => 1.0,
                St::AtUpper => -1.0,
                St::FreeZero => 0.0,
            };
            if self.lower[j] == self.upper[j] && dir != 0.0 {
                continue; // fixed variable can never move
            }
            let d = self.reduced_cost(j, &y);
            let (eligible, dir) = if dir == 0.0 {
                (d.abs() > DUAL_TOL, if d > 0.0 { -1.0 } else { 1.0 })
            } else if dir > 0.0 {
                (d < -DUAL_TOL, 1.0)
            } else {
                (d > DUAL_TOL, -1.0)
            };
            if !eligible {
                continue;
            }
            if self.bland {
                q = j;
                q_dir = dir;
                break;
            }
            if d.abs() > best {
                best = d.abs();
                q = j;
                q_dir = dir;
            }
        }
        if q == usize::MAX {
            return Ok(StepOutcome::Optimal);
        }

        // Direction column in the current basis.
        let mut w = vec![0.0; m];
        for &(row, coef) in &self.cols[q] {
            for r in 0..m {
                w[r] += self.binv[r * m + row] * coef;
            }
        }

        // Ratio test: the entering variable moves by t in direction q_dir;
        // basic variable r changes at rate -q_dir * w[r].
        let own_range = self.upper[q] - self.lower[q]; // inf when unbounded
        let mut t_best = if own_range.is_finite() {
            own_range
        } else {
            f64::INFINITY
        };
        let mut leave: Option<usize> = None;
        let mut leave_to_upper = false;
        for r in 0..m {
            let rate = -q_dir * w[r];
            if rate > PIVOT_TOL {
                let ub = self.upper[self.basis[r]];
                if ub.is_finite() {
                    let t = ((ub - self.value[self.basis[r]]) / rate).max(0.0);
                    if t < t_best - RATIO_TIE {
                        t_best = t;
                        leave = Some(r);
                        leave_to_upper = true;
                    } else if t <= t_best + RATIO_TIE {
                        if self.better_leaving(leave, r, &w) {
                            t_best = t.min(t_best);
                            leave = Some(r);
                            leave_to_upper = true;
                        }
                    }
                }
            } else if rate < -PIVOT_TOL {
                let lb = self.lower[self.basis[r]];
                if lb.is_finite() {
                    let t = ((self.value[self.basis[r]] - lb) / -rate).max(0.0);
                    if t < t_best - RATIO_TIE {
                        t_best = t;
                        leave = Some(r);
                        leave_to_upper = false;
                    } else if t <= t_best + RATIO_TIE {
                        if self.better_leaving(leave, r, &w) {
                            t_best = t.min(t_best);
                            leave = Some(r);
                            leave_to_upper = false;
                        }
                    }
                }
            }
        }
        if t_best.is_infinite() {
            return Ok(StepOutcome::Unbounded);
        }

        if t_best <= 1e-10 {
            self.degen += 1;
            if self.degen > DEGEN_LIMIT + m as u32 {
                self.bland = true;
            }
        } else {
            self.degen = 0;
        }

        // Move the entering variable and update basic values.
        let t = t_best;
        let start = match self.state[q] {
            St::AtLower => self.lower[q],
            St::AtUpper => self.upper[q],
            St::FreeZero => 0.0,
            St::Basic(_) => unreachable!(),
        };
        for r in 0..m {
            if w[r] != 0.0 {
                let b = self.basis[r];
                self.value[b] -= q_dir * t * w[r];
            }
        }
        match leave {
            None => {
                // Bound flip: the entering variable traverses its own range.
                self.state[q] = match self.state[q] {
                    St::AtLower => St::AtUpper,
                    St::AtUpper => St::AtLower,
                    other => other,
                };
                self.value[q] = match self.state[q] {
                    St::AtUpper => self.upper[q],
                    _ => self.lower[q],
                };
            }
            Some(r) => {
                let piv = w[r];
                if piv.abs() < PIVOT_TOL {
                    self.refactor()?;
                    return Err(MilpError::Numerical(format!(
                        "pivot magnitude {:.3e} too small",
                        piv.abs()
                    )));
                }
                let lv = self.basis[r];
                self.value[lv] = if leave_to_upper {
                    self.upper[lv]
                } else {
                    self.lower[lv]
                };
                self.state[lv] = if leave_to_upper {
                    St::AtUpper
                } else {
                    St::AtLower
                };
                self.value[q] = start + q_dir * t;
                self.state[q] = St::Basic(r);
                self.basis[r] = q;
                self.pivot_update(r, &w);
                self.pivots_since_refactor += 1;
                if self.pivots_since_refactor >= REFACTOR_EVERY {
                    self.refactor()?;
                }
            }
        }
        Ok(StepOutcome::Moved)
    }

    /// Tie-break among leaving candidates: largest pivot magnitude for
    /// stability, lowest variable index under Bland's rule.
    fn better_leaving(&self, cur: Option<usize>, cand: usize, w: &[f64]) -> bool {
        match cur {
            None => true,
            Some(r) => {
                if self.bland {
                    self.basis[cand] < self.basis[r]
                } else {
                    w[cand].abs() > w[r].abs()
                }
            }
        }
    }

    /// Product-form update of the basis inverse after pivoting column `q`
    /// into row `r` with direction column `w`.
    fn pivot_update(&mut self, r: usize, w: &[f64]) {
        let m = self.sf.m;
        let piv = w[r];
        for i in 0..m {
            self.binv[r * m + i] /= piv;
        }
        for k in 0..m {
            if k != r {
                let f = w[k];
                if f != 0.0 {
                    for i in 0..m {
                        self.binv[k * m + i] -= f * self.binv[r * m + i];
                    }
                }
            }
        }
    }

    /// Rebuilds the basis inverse from scratch (Gauss-Jordan with partial
    /// pivoting) and recomputes basic values from nonbasic ones.
    fn refactor(&mut self) -> Result<(), MilpError> {
        let m = self.sf.m;
        self.pivots_since_refactor = 0;
        let mut a = vec![0.0; m * m];
        for (r, &b) in self.basis.iter().enumerate() {
            for &(row, coef) in &self.cols[b] {
                a[row * m + r] = coef;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv_row = col;
            let mut piv_val = a[col * m + col].abs();
            for r in (col + 1)..m {
                if a[r * m + col].abs() > piv_val {
                    piv_val = a[r * m + col].abs();
                    piv_row = r;
                }
            }
            if piv_val < 1e-12 {
                return Err(MilpError::Numerical("singular basis".into()));
            }
            if piv_row != col {
                for i in 0..m {
                    a.swap(col * m + i, piv_row * m + i);
                    inv.swap(col * m + i, piv_row * m + i);
                }
            }
            let p = a[col * m + col];
            for i in 0..m {
                a[col * m + i] /= p;
                inv[col * m + i] /= p;
            }
            for r in 0..m {
                if r != col {
                    let f = a[r * m + col];
                    if f != 0.0 {
                        for i in 0..m {
                            a[r * m + i] -= f * a[col * m + i];
                            inv[r * m + i] -= f * inv[col * m + i];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        let mut rhs = self.sf.rhs.clone();
        for j in 0..self.nt {
            if matches!(self.state[j], St::Basic(_)) {
                continue;
            }
            if self.value[j] != 0.0 {
                for &(row, coef) in &self.cols[j] {
                    rhs[row] -= coef * self.value[j];
                }
            }
        }
        for r in 0..m {
            let mut v = 0.0;
            for i in 0..m {
                v += self.binv[r * m + i] * rhs[i];
            }
            self.value[self.basis[r]] = v;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{MilpModel, Sense, VarKind};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-8
    }

    #[test]
    fn single_variable_min_at_lower_bound() {
        let mut m = MilpModel::new("t");
        let x = m.add_var("x", VarKind::Continuous, 1.5, 4.0).unwrap();
        m.set_objective([(x, 2.0)], 0.0).unwrap();
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(close(s.objective.unwrap(), 3.0));
        assert!(close(s.values.unwrap()[x.index()], 1.5));
    }

    #[test]
    fn two_variable_lp_with_constraints() {
        // min -x - 2y s.t. x + y <= 4, x <= 3, y <= 2 -> x=2, y=2, obj=-6.
        let mut m = MilpModel::new("t");
        let x = m.add_var("x", VarKind::Continuous, 0.0, 3.0).unwrap();
        let y = m.add_var("y", VarKind::Continuous, 0.0, 2.0).unwrap();
        m.add_con("cap", [(x, 1.0), (y, 1.0)], Sense::Le, 4.0)
            .unwrap();
        m.set_objective([(x, -1.0), (y, -2.0)], 0.0).unwrap();
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(close(s.objective.unwrap(), -6.0));
        let v = s.values.unwrap();
        assert!(close(v[x.index()], 2.0) && close(v[y.index()], 2.0));
    }

    #[test]
    fn infeasible_detected() {
        let mut m = MilpModel::new("t");
        let x = m.add_var("x", VarKind::Continuous, 0.0, 1.0).unwrap();
        m.add_con("hi", [(x, 1.0)], Sense::Ge, 2.0).unwrap();
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut m = MilpModel::new("t");
        let x = m
            .add_var("x", VarKind::Continuous, 0.0, f64::INFINITY)
            .unwrap();
        m.set_objective([(x, -1.0)], 0.0).unwrap();
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_row_with_free_variable() {
        // min x + y s.t. x + y = 2 with y free -> objective 2 everywhere.
        let mut m = MilpModel::new("t");
        let x = m.add_var("x", VarKind::Continuous, 0.0, 10.0).unwrap();
        let y = m
            .add_var("y", VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY)
            .unwrap();
        m.add_con("eq", [(x, 1.0), (y, 1.0)], Sense::Eq, 2.0)
            .unwrap();
        m.set_objective([(x, 1.0), (y, 1.0)], 0.0).unwrap();
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(close(s.objective.unwrap(), 2.0));
    }

    #[test]
    fn negative_lower_bounds_handled() {
        // min x s.t. x >= -3 (bound), x + y >= -1, y <= 1 -> x=-2 at y=1.
        let mut m = MilpModel::new("t");
        let x = m.add_var("x", VarKind::Continuous, -3.0, 5.0).unwrap();
        let y = m.add_var("y", VarKind::Continuous, 0.0, 1.0).unwrap();
        m.add_con("c", [(x, 1.0), (y, 1.0)], Sense::Ge, -1.0)
            .unwrap();
        m.set_objective([(x, 1.0)], 0.0).unwrap();
        let s = solve_lp(&m).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(close(s.objective.unwrap(), -2.0));
    }

    #[test]
    fn objective_constant_included() {
        let mut m = MilpModel::new("t");
        let x = m.add_var("x", VarKind::Continuous, 0.0, 1.0).unwrap();
        m.set_objective([(x, 1.0)], 10.0).unwrap();
        let s = solve_lp(&m).unwrap();
        assert!(close(s.objective.unwrap(), 10.0));
    }
}
