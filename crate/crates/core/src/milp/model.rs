use std::collections::HashMap;

use super::MilpError;

/// Handle to a variable in a [`MilpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) usize);

impl VarId {
    /// Position of the variable in the model (also its index into solution
    /// value vectors).
    pub fn index(self) -> usize {
        self.0
    }
}

/// Handle to a constraint in a [`MilpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConId(pub(crate) usize);

impl ConId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Integer,
    Binary,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    /// Sorted by variable id; duplicate ids merged at insertion.
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Mixed-integer linear program in minimization form.
///
/// Invariants: variable and constraint names are unique within their
/// namespaces, bounds satisfy `lower <= upper`, and all coefficients are
/// finite. Binary variables always carry bounds within `[0, 1]`.
#[derive(Debug, Clone)]
pub struct MilpModel {
    name: String,
    vars: Vec<Variable>,
    cons: Vec<Constraint>,
    /// Dense objective coefficients aligned with `vars`.
    obj: Vec<f64>,
    obj_constant: f64,
    var_names: HashMap<String, usize>,
    con_names: HashMap<String, usize>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        MilpModel {
            name: name.into(),
            vars: Vec::new(),
            cons: Vec::new(),
            obj: Vec::new(),
            obj_constant: 0.0,
            var_names: HashMap::new(),
            con_names: HashMap::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Adds a variable. Binary variables are forced to bounds `[0, 1]`
    /// regardless of the arguments.
    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, MilpError> {
        let name = name.into();
        let (lower, upper) = match kind {
            VarKind::Binary => (0.0, 1.0),
            _ => (lower, upper),
        };
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(MilpError::BadBounds { name, lower, upper });
        }
        if self.var_names.contains_key(&name) {
            return Err(MilpError::DuplicateName(name));
        }
        let id = self.vars.len();
        self.var_names.insert(name.clone(), id);
        self.vars.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        self.obj.push(0.0);
        Ok(VarId(id))
    }

    /// Tightens or relaxes the bounds of an existing variable.
    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) -> Result<(), MilpError> {
        let v = self
            .vars
            .get_mut(var.0)
            .ok_or(MilpError::UnknownVariable(var.0))?;
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(MilpError::BadBounds {
                name: v.name.clone(),
                lower,
                upper,
            });
        }
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    /// Adds a linear constraint. Duplicate variable terms are summed and
    /// exact-zero coefficients dropped.
    pub fn add_con(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<ConId, MilpError> {
        let name = name.into();
        if !rhs.is_finite() {
            return Err(MilpError::NonFinite(name));
        }
        if self.con_names.contains_key(&name) {
            return Err(MilpError::DuplicateName(name));
        }
        let merged = self.merge_terms(terms, &name)?;
        let id = self.cons.len();
        self.con_names.insert(name.clone(), id);
        self.cons.push(Constraint {
            name,
            terms: merged,
            sense,
            rhs,
        });
        Ok(ConId(id))
    }

    /// Replaces the objective with the given terms plus a constant.
    /// Duplicate variable terms are summed.
    pub fn set_objective(
        &mut self,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        constant: f64,
    ) -> Result<(), MilpError> {
        if !constant.is_finite() {
            return Err(MilpError::NonFinite("objective constant".into()));
        }
        let merged = self.merge_terms(terms, "objective")?;
        self.obj.iter_mut().for_each(|c| *c = 0.0);
        for (v, c) in merged {
            self.obj[v.0] = c;
        }
        self.obj_constant = constant;
        Ok(())
    }

    fn merge_terms(
        &self,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        context: &str,
    ) -> Result<Vec<(VarId, f64)>, MilpError> {
        let mut by_var: HashMap<usize, f64> = HashMap::new();
        for (v, c) in terms {
            if v.0 >= self.vars.len() {
                return Err(MilpError::UnknownVariable(v.0));
            }
            if !c.is_finite() {
                return Err(MilpError::NonFinite(context.to_string()));
            }
            *by_var.entry(v.0).or_insert(0.0) += c;
        }
        let mut merged: Vec<(VarId, f64)> = by_var
            .into_iter()
            .filter(|&(_, c)| c != 0.0)
            .map(|(i, c)| (VarId(i), c))
            .collect();
        merged.sort_by_key(|&(v, _)| v);
        Ok(merged)
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_cons(&self) -> usize {
        self.cons.len()
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn cons(&self) -> &[Constraint] {
        &self.cons
    }

    pub fn objective_coefs(&self) -> &[f64] {
        &self.obj
    }

    pub fn objective_constant(&self) -> f64 {
        self.obj_constant
    }

    /// Ids of all integer-constrained (integer or binary) variables.
    pub fn integer_vars(&self) -> Vec<VarId> {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind != VarKind::Continuous)
            .map(|(i, _)| VarId(i))
            .collect()
    }

    pub fn eval_objective(&self, x: &[f64]) -> f64 {
        self.obj_constant
            + self
                .obj
                .iter()
                .zip(x)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    /// Checks a full assignment against bounds, integrality, and every
    /// constraint. Returns a human-readable description per violation;
    /// an empty vector means the assignment is feasible within `tol`.
    pub fn verify_assignment(&self, x: &[f64], tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        if x.len() != self.vars.len() {
            out.push(format!(
                "assignment length {} != variable count {}",
                x.len(),
                self.vars.len()
            ));
            return out;
        }
        for (i, v) in self.vars.iter().enumerate() {
            if x[i] < v.lower - tol || x[i] > v.upper + tol {
                out.push(format!(
                    "variable '{}' = {} outside [{}, {}]",
                    v.name, x[i], v.lower, v.upper
                ));
            }
            if v.kind != VarKind::Continuous && (x[i] - x[i].round()).abs() > tol {
                out.push(format!("variable '{}' = {} not integral", v.name, x[i]));
            }
        }
        for c in &self.cons {
            let lhs: f64 = c.terms.iter().map(|&(v, coef)| coef * x[v.0]).sum();
            let bad = match c.sense {
                Sense::Le => lhs > c.rhs + tol,
                Sense::Ge => lhs < c.rhs - tol,
                Sense::Eq => (lhs - c.rhs).abs() > tol,
            };
            if bad {
                out.push(format!(
                    "constraint '{}' violated: lhs {} {} rhs {}",
                    c.name,
                    lhs,
                    match c.sense {
                        Sense::Le => "<=",
                        Sense::Ge => ">=",
                        Sense::Eq => "==",
                    },
                    c.rhs
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_variable_name_rejected() {
        let mut m = MilpModel::new("t");
        m.add_var("x", VarKind::Continuous, 0.0, 1.0).unwrap();
        let err = m.add_var("x", VarKind::Continuous, 0.0, 1.0).unwrap_err();
        assert!(matches!(err, MilpError::DuplicateName(_)));
    }

    #[test]
    fn binary_bounds_forced() {
        let mut m = MilpModel::new("t");
        let v = m.add_var("b", VarKind::Binary, -5.0, 7.0).unwrap();
        assert_eq!(m.var(v).lower, 0.0);
        assert_eq!(m.var(v).upper, 1.0);
    }

    #[test]
    fn crossed_bounds_rejected() {
        let mut m = MilpModel::new("t");
        let err = m.add_var("x", VarKind::Continuous, 2.0, 1.0).unwrap_err();
        assert!(matches!(err, MilpError::BadBounds { .. }));
    }

    #[test]
    fn duplicate_terms_are_summed() {
        let mut m = MilpModel::new("t");
        let x = m.add_var("x", VarKind::Continuous, 0.0, 10.0).unwrap();
        let c = m
            .add_con("c", [(x, 1.0), (x, 2.0)], Sense::Le, 5.0)
            .unwrap();
        assert_eq!(m.cons()[c.index()].terms, vec![(x, 3.0)]);
    }

    #[test]
    fn verify_assignment_reports_violations() {
        let mut m = MilpModel::new("t");
        let x = m.add_var("x", VarKind::Integer, 0.0, 10.0).unwrap();
        m.add_con("c", [(x, 1.0)], Sense::Le, 3.0).unwrap();
        assert!(m.verify_assignment(&[2.0], 1e-9).is_empty());
        let bad = m.verify_assignment(&[4.5], 1e-9);
        assert_eq!(bad.len(), 2);
    }
}
