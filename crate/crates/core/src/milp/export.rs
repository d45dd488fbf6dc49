//! LP and free-MPS text export for external solvers.
//!
//! Conventions: minimization only, `\n` line endings, names sanitized to
//! `[A-Za-z0-9_.]` with deterministic de-duplication. The LP format carries
//! the objective constant inline; MPS encodes it as a negated RHS entry on
//! the objective row (the convention Gurobi and CPLEX both accept).

use std::collections::HashSet;
use std::fmt::Write as _;

use super::model::{MilpModel, Sense, VarKind};

/// Sanitized, unique names for variables and constraints in export order.
struct Names {
    vars: Vec<String>,
    cons: Vec<String>,
}

fn sanitize(raw: &str) -> String {
    let mut s: String = raw
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() || s.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        s.insert(0, 'v');
    }
    s
}

impl Names {
    fn build(model: &MilpModel) -> Names {
        let mut seen = HashSet::new();
        seen.insert("COST".to_string());
        let mut unique = |raw: &str| {
            let base = sanitize(raw);
            let mut name = base.clone();
            let mut k = 1usize;
            while !seen.insert(name.clone()) {
                name = format!("{base}__{k}");
                k += 1;
            }
            name
        };
        Names {
            vars: model.vars().iter().map(|v| unique(&v.name)).collect(),
            cons: model.cons().iter().map(|c| unique(&c.name)).collect(),
        }
    }
}

fn push_terms(out: &mut String, terms: &[(super::model::VarId, f64)], names: &Names) {
    let mut first = true;
    for &(v, c) in terms {
        if first {
            if c < 0.0 {
                let _ = write!(out, "- {} {}", -c, names.vars[v.index()]);
            } else {
                let _ = write!(out, "{} {}", c, names.vars[v.index()]);
            }
            first = false;
        } else if c < 0.0 {
            let _ = write!(out, " - {} {}", -c, names.vars[v.index()]);
        } else {
            let _ = write!(out, " + {} {}", c, names.vars[v.index()]);
        }
    }
    if first {
        out.push('0');
    }
}

/// Renders the model in CPLEX LP format.
pub fn write_lp(model: &MilpModel) -> String {
    let names = Names::build(model);
    let mut out = String::new();
    let _ = writeln!(out, "\\ model: {}", sanitize(model.name()));
    out.push_str("Minimize\n obj: ");
    let obj_terms: Vec<_> = model
        .objective_coefs()
        .iter()
        .enumerate()
        .filter(|&(_, c)| *c != 0.0)
        .map(|(i, &c)| (super::model::VarId(i), c))
        .collect();
    push_terms(&mut out, &obj_terms, &names);
    let k = model.objective_constant();
    if k > 0.0 {
        let _ = write!(out, " + {k}");
    } else if k < 0.0 {
        let _ = write!(out, " - {}", -k);
    }
    out.push('\n');
    out.push_str("Subject To\n");
    for (i, c) in model.cons().iter().enumerate() {
        let _ = write!(out, " {}: ", names.cons[i]);
        push_terms(&mut out, &c.terms, &names);
        let op = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {} {}", op, c.rhs);
    }
    out.push_str("Bounds\n");
    for (i, v) in model.vars().iter().enumerate() {
        let n = &names.vars[i];
        let (lo, hi) = (v.lower, v.upper);
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {n} free");
            }
            (false, true) => {
                let _ = writeln!(out, " -infinity <= {n} <= {hi}");
            }
            (true, false) => {
                if lo != 0.0 {
                    let _ = writeln!(out, " {n} >= {lo}");
                }
            }
            (true, true) => {
                if lo == hi {
                    let _ = writeln!(out, " {n} = {lo}");
                } else {
                    let _ = writeln!(out, " {lo} <= {n} <= {hi}");
                }
            }
        }
    }
    let generals: Vec<&str> = model
        .vars()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Integer)
        .map(|(i, _)| names.vars[i].as_str())
        .collect();
    if !generals.is_empty() {
        out.push_str("Generals\n");
        for n in generals {
            let _ = writeln!(out, " {n}");
        }
    }
    let binaries: Vec<&str> = model
        .vars()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(i, _)| names.vars[i].as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for n in binaries {
            let _ = writeln!(out, " {n}");
        }
    }
    out.push_str("End\n");
    out
}

/// Renders the model in free MPS format.
pub fn write_mps(model: &MilpModel) -> String {
    let names = Names::build(model);
    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", sanitize(model.name()));
    out.push_str("ROWS\n N COST\n");
    for (i, c) in model.cons().iter().enumerate() {
        let tag = match c.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        let _ = writeln!(out, " {} {}", tag, names.cons[i]);
    }
    // Column-major entries; integer runs are wrapped in marker pairs.
    out.push_str("COLUMNS\n");
    let mut rows_of: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_vars()];
    for (ci, c) in model.cons().iter().enumerate() {
        for &(v, coef) in &c.terms {
            rows_of[v.index()].push((ci, coef));
        }
    }
    let mut in_int = false;
    let mut marker = 0usize;
    for (i, v) in model.vars().iter().enumerate() {
        let wants_int = v.kind != VarKind::Continuous;
        if wants_int != in_int {
            let kind = if wants_int { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    MARK{marker} 'MARKER' {kind}");
            marker += 1;
            in_int = wants_int;
        }
        let n = &names.vars[i];
        let obj = model.objective_coefs()[i];
        let mut wrote = false;
        if obj != 0.0 {
            let _ = writeln!(out, "    {n} COST {obj}");
            wrote = true;
        }
        for &(ci, coef) in &rows_of[i] {
            let _ = writeln!(out, "    {n} {} {}", names.cons[ci], coef);
            wrote = true;
        }
        if !wrote {
            // Keep otherwise-unreferenced variables visible to readers.
            let _ = writeln!(out, "    {n} COST 0");
        }
    }
    if in_int {
        let _ = writeln!(out, "    MARK{marker} 'MARKER' 'INTEND'");
    }
    // RHS entries default to 0 when omitted; the objective constant is the
    // negated COST entry.
    out.push_str("RHS\n");
    if model.objective_constant() != 0.0 {
        let _ = writeln!(out, "    RHS COST {}", -model.objective_constant());
    }
    for (i, c) in model.cons().iter().enumerate() {
        if c.rhs != 0.0 {
            let _ = writeln!(out, "    RHS {} {}", names.cons[i], c.rhs);
        }
    }
    out.push_str("BOUNDS\n");
    for (i, v) in model.vars().iter().enumerate() {
        let n = &names.vars[i];
        let (lo, hi) = (v.lower, v.upper);
        if v.kind == VarKind::Binary && lo == 0.0 && hi == 1.0 {
            let _ = writeln!(out, " BV BND {n}");
            continue;
        }
        if v.kind != VarKind::Continuous {
            // Integer bounds are always written out: MPS readers disagree
            // on the default integer upper bound.
            if lo == hi {
                let _ = writeln!(out, " FX BND {n} {lo}");
            } else {
                if lo.is_finite() {
                    let _ = writeln!(out, " LO BND {n} {lo}");
                } else {
                    let _ = writeln!(out, " MI BND {n}");
                }
                if hi.is_finite() {
                    let _ = writeln!(out, " UP BND {n} {hi}");
                } else {
                    let _ = writeln!(out, " PL BND {n}");
                }
            }
            continue;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " FR BND {n}");
            }
            (false, true) => {
                let _ = writeln!(out, " MI BND {n}");
                let _ = writeln!(out, " UP BND {n} {hi}");
            }
            (true, false) => {
                if lo != 0.0 {
                    let _ = writeln!(out, " LO BND {n} {lo}");
                }
            }
            (true, true) => {
                if lo == hi {
                    let _ = writeln!(out, " FX BND {n} {lo}");
                } else {
                    if lo != 0.0 {
                        let _ = writeln!(out, " LO BND {n} {lo}");
                    }
                    let _ = writeln!(out, " UP BND {n} {hi}");
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}
