//! Constraint audit of a candidate solution.

use std::collections::BTreeMap;
use std::fmt;

use crate::formulation::{Layout, MinlpModel, Solution, VarKind};

/// Largest violation per constraint family, plus bounds, integrality and the
/// un-linearized product identity `β = ξ·ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub by_family: BTreeMap<String, f64>,
    pub tol: f64,
}

impl ViolationReport {
    pub fn max(&self) -> f64 {
        self.by_family.values().fold(0.0, |m, &v| m.max(v))
    }

    pub fn passes(&self) -> bool {
        self.max() <= self.tol
    }

    pub fn get(&self, family: &str) -> f64 {
        self.by_family.get(family).copied().unwrap_or(0.0)
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, v) in &self.by_family {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{k}={v:.3e}")?;
        }
        Ok(())
    }
}

/// Evaluate every row, cone, bound and integrality requirement of `model`
/// at `sol`, and the product identity behind the linearized rows.
pub fn check_feasible(sol: &Solution, model: &MinlpModel, tol: f64) -> ViolationReport {
    let mut by_family: BTreeMap<String, f64> = BTreeMap::new();
    let x = &sol.values;
    let mut bump = |key: String, v: f64| {
        let e = by_family.entry(key).or_insert(0.0);
        *e = e.max(if v.is_nan() { f64::INFINITY } else { v });
    };
    if x.len() != model.num_vars() {
        bump("dimension".into(), f64::INFINITY);
        return ViolationReport { by_family, tol };
    }
    for row in &model.rows {
        bump(row.family.to_string(), row.violation(x));
    }
    for cone in &model.cones {
        bump(cone.family.to_string(), cone.violation(x));
    }
    let mut bounds = 0.0f64;
    let mut integrality = 0.0f64;
    for (v, &val) in model.vars.iter().zip(x) {
        bounds = bounds.max((v.lower - val).max(val - v.upper).max(0.0));
        if v.kind == VarKind::Binary {
            integrality = integrality.max((val - val.round()).abs());
        }
    }
    bump("bounds".into(), bounds);
    bump("integrality".into(), integrality);
    let mut bilinear = 0.0f64;
    match &model.layout {
        Layout::Octsvm(l) => {
            for i in 0..l.n {
                for t in 1..=l.node_count() {
                    for j in 0..=l.p {
                        let r = x[l.beta(i, t, j)] - x[l.xi(i, t)] * x[l.omega(t, j)];
                        bilinear = bilinear.max(r.abs());
                    }
                }
            }
        }
        Layout::Resvm(l) => {
            for i in 0..l.n {
                for j in 0..=l.p {
                    bilinear = bilinear.max((x[l.beta(i, j)] - x[l.xi(i)] * x[l.omega(j)]).abs());
                }
            }
        }
    }
    bump("bilinear".into(), bilinear);
    ViolationReport { by_family, tol }
}
