//! Exact solution of the mixed-integer models: branch-and-bound over conic
//! relaxations, a rounding heuristic, and an enumeration oracle for tiny
//! instances.
//!
//! Branching is restricted to the *decisive* binaries: split activations
//! `d`, node memberships `z`, and relabel flags `ξ` at positions the
//! observation actually visits. Once those are integral the remaining
//! binaries can be repaired without changing the objective:
//!
//! * a routing flag `θ_it` only matters when `i` passes through `t`, and
//!   setting it to `[ω_t·x_i + ω_t0 ≥ 0]` satisfies both routing rows;
//! * a relabel flag at a node the observation does not visit makes its
//!   hinge row slack, so `ξ = 0` is feasible and never costs more.
//!
//! The repaired point is then re-solved with every binary fixed, which can
//! only lower the objective.

mod audit;
mod bnb;
mod brute;
mod heuristic;
mod relax;

use std::collections::BTreeMap;

pub use audit::{check_feasible, ViolationReport};
pub use bnb::{
    branch_and_bound, branch_and_bound_with, select_branching, Budget, LogLine, SolveResult,
    SolveStatus,
};
pub use brute::{brute_force_solve, count_patterns, BRUTE_FORCE_LIMIT};
pub use heuristic::primal_heuristic;
pub use relax::{solve_relaxation, RelaxSolution, RelaxStatus, RELAX_FEAS_TOL};

use crate::formulation::{Layout, MinlpModel, Role, Solution};

/// Tolerance used when auditing incumbents.
pub const INCUMBENT_TOL: f64 = 1e-6;

fn is_one(v: f64) -> bool {
    v > 0.5
}

/// Binary fixing for the whole model from values whose decisive binaries
/// are (near) integral. `ω` values in `values` decide the free routing flags.
pub(crate) fn full_fixing(model: &MinlpModel, values: &[f64]) -> BTreeMap<usize, bool> {
    let mut fix = BTreeMap::new();
    match &model.layout {
        Layout::Octsvm(l) => {
            let t_count = l.node_count();
            for t in 1..=t_count {
                fix.insert(l.d(t), is_one(values[l.d(t)]));
            }
            for i in 0..l.n {
                let x = model.data.row(i);
                for t in 1..=t_count {
                    let z = is_one(values[l.z(i, t)]);
                    fix.insert(l.z(i, t), z);
                    fix.insert(l.xi(i, t), z && is_one(values[l.xi(i, t)]));
                    let theta = if z && l.topo.children(t).is_some() {
                        // The visited child decides the direction.
                        is_one(values[l.z(i, 2 * t + 1)])
                    } else {
                        l.node_value(values, t, x) >= 0.0
                    };
                    fix.insert(l.theta(i, t), theta);
                }
            }
        }
        Layout::Resvm(l) => {
            for i in 0..l.n {
                fix.insert(l.xi(i), is_one(values[l.xi(i)]));
            }
        }
    }
    fix
}

/// Solve the model with every binary fixed as in `fix`. Returns an audited
/// solution or `None`.
pub(crate) fn polish(model: &MinlpModel, fix: &BTreeMap<usize, bool>) -> Option<Solution> {
    let program = model.continuous_subproblem(fix).ok()?;
    let relax = solve_relaxation(&program);
    if relax.status != RelaxStatus::Optimal {
        return None;
    }
    let mut values = relax.values;
    for (&j, &b) in fix {
        values[j] = if b { 1.0 } else { 0.0 };
    }
    let sol = Solution {
        objective: model.linear_objective(&values),
        values,
    };
    check_feasible(&sol, model, INCUMBENT_TOL)
        .passes()
        .then_some(sol)
}

/// Turn a relaxation point with integral decisive binaries into an audited
/// integral solution of no larger objective (up to solver accuracy).
pub(crate) fn complete(model: &MinlpModel, values: &[f64]) -> Option<Solution> {
    let fix = full_fixing(model, values);
    if let Some(sol) = polish(model, &fix) {
        return Some(sol);
    }
    // A hyperplane value within solver noise of zero can make the routing
    // repair inconsistent; re-solve with only the forced flags fixed and
    // repair from the new hyperplanes.
    let l = model.octsvm_layout()?;
    let mut partial = fix.clone();
    for i in 0..l.n {
        for t in 1..=l.node_count() {
            let forced = fix[&l.z(i, t)] && l.topo.children(t).is_some();
            if !forced {
                partial.remove(&l.theta(i, t));
            }
        }
    }
    let relax = solve_relaxation(&model.continuous_subproblem(&partial).ok()?);
    if relax.status != RelaxStatus::Optimal {
        return None;
    }
    let mut values = relax.values;
    for (&j, &b) in &fix {
        if model.vars[j].role != Role::Theta {
            values[j] = if b { 1.0 } else { 0.0 };
        }
    }
    polish(model, &full_fixing(model, &values))
}

/// Class of a binary in the branching order, `None` for binaries that never
/// need branching.
pub(crate) fn decisive_class(model: &MinlpModel, values: &[f64], j: usize) -> Option<u8> {
    match model.vars[j].role {
        Role::D => Some(0),
        Role::Z => Some(1),
        Role::Xi => match &model.layout {
            Layout::Resvm(_) => Some(2),
            Layout::Octsvm(l) => {
                // ξ matters only where the observation is (partly) present.
                let k = j - l.xi(0, 1);
                let (i, t) = (k / l.node_count(), k % l.node_count() + 1);
                (values[l.z(i, t)] > model.config.int_tol).then_some(2)
            }
        },
        _ => None,
    }
}

/// True when every decisive binary of `values` is within `int_tol` of an
/// integer.
pub(crate) fn decisive_integral(model: &MinlpModel, values: &[f64]) -> bool {
    let tol = model.config.int_tol;
    model
        .binaries()
        .filter(|&j| decisive_class(model, values, j).is_some())
        .all(|j| (values[j] - values[j].round()).abs() <= tol)
}
