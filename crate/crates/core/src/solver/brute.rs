//! Enumeration oracle for tiny instances.
//!
//! Every assignment of the decisive binaries is enumerated: a
//! hierarchy-respecting set of active splits, one leaf per observation, and
//! a relabel flag at every node on each observation's route. Each
//! assignment leaves a convex problem in which the remaining routing flags
//! can be relaxed exactly; the best one is completed and re-solved with all
//! binaries fixed.

use std::collections::BTreeMap;
use std::time::Instant;

use super::{complete, solve_relaxation, RelaxStatus, SolveResult, SolveStatus};
use crate::formulation::{Layout, MinlpModel, OctLayout};
use crate::par::{map_range, Exec};
use crate::OctError;

/// Largest number of assignments the oracle will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

fn split_sets(l: &OctLayout) -> Vec<Vec<bool>> {
    let t_count = l.node_count();
    (0u32..1 << t_count)
        .filter_map(|mask| {
            let active: Vec<bool> = (0..t_count).map(|k| mask >> k & 1 == 1).collect();
            let ok = (2..=t_count).all(|t| !active[t - 1] || active[t / 2 - 1]);
            ok.then_some(active)
        })
        .collect()
}

/// Number of assignments [`brute_force_solve`] would enumerate.
pub fn count_patterns(model: &MinlpModel) -> u128 {
    match &model.layout {
        Layout::Octsvm(l) => {
            let depth = l.topo.depth() as u32;
            let per_obs = (1u128 << depth).checked_mul(1u128 << (depth + 1));
            let mut total = split_sets(l).len() as u128;
            for _ in 0..l.n {
                total = match per_obs.and_then(|p| total.checked_mul(p)) {
                    Some(v) => v,
                    None => return u128::MAX,
                };
            }
            total
        }
        Layout::Resvm(l) => 1u128.checked_shl(l.n as u32).unwrap_or(u128::MAX),
    }
}

fn octsvm_fixing(l: &OctLayout, sets: &[Vec<bool>], mut idx: u128) -> BTreeMap<usize, bool> {
    let depth = l.topo.depth();
    let leaves = 1u128 << depth;
    let xi_patterns = 1u128 << (depth + 1);
    let mut fix = BTreeMap::new();
    let set = &sets[(idx % sets.len() as u128) as usize];
    idx /= sets.len() as u128;
    for t in 1..=l.node_count() {
        fix.insert(l.d(t), set[t - 1]);
    }
    for i in 0..l.n {
        let leaf = *l.topo.leaves().start() + (idx % leaves) as usize;
        idx /= leaves;
        let mut bits = idx % xi_patterns;
        idx /= xi_patterns;
        let path = l.topo.path_to(leaf);
        for t in 1..=l.node_count() {
            fix.insert(l.z(i, t), false);
            fix.insert(l.xi(i, t), false);
        }
        for (k, &t) in path.iter().enumerate() {
            fix.insert(l.z(i, t), true);
            fix.insert(l.xi(i, t), bits & 1 == 1);
            bits >>= 1;
            if k + 1 < path.len() {
                fix.insert(l.theta(i, t), path[k + 1] == 2 * t + 1);
            }
        }
    }
    fix
}

/// Exact optimum by enumeration. Refuses instances with more than
/// [`BRUTE_FORCE_LIMIT`] assignments.
pub fn brute_force_solve(model: &MinlpModel, exec: Exec) -> Result<SolveResult, OctError> {
    let start = Instant::now();
    let count = count_patterns(model);
    if count > BRUTE_FORCE_LIMIT {
        return Err(OctError::Invalid(format!(
            "enumeration needs {count} assignments, more than the limit of {BRUTE_FORCE_LIMIT}"
        )));
    }
    let sets = match &model.layout {
        Layout::Octsvm(l) => split_sets(l),
        Layout::Resvm(_) => Vec::new(),
    };
    let fixing = |idx: usize| -> BTreeMap<usize, bool> {
        match &model.layout {
            Layout::Octsvm(l) => octsvm_fixing(l, &sets, idx as u128),
            Layout::Resvm(l) => (0..l.n).map(|i| (l.xi(i), idx >> i & 1 == 1)).collect(),
        }
    };
    let evaluate = |idx: usize| -> Option<f64> {
        let program = model.continuous_subproblem(&fixing(idx)).ok()?;
        let relax = solve_relaxation(&program);
        (relax.status == RelaxStatus::Optimal).then_some(relax.objective)
    };
    let objectives = map_range(exec, count as usize, evaluate);
    let mut best: Option<(f64, usize)> = None;
    for (idx, obj) in objectives.iter().enumerate() {
        if let Some(v) = *obj {
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, idx));
            }
        }
    }
    let failures = objectives.iter().filter(|o| o.is_none()).count() as u64;
    let incumbent = match best {
        Some((_, idx)) => {
            let program = model.continuous_subproblem(&fixing(idx))?;
            let relax = solve_relaxation(&program);
            let mut values = relax.values;
            for (j, b) in fixing(idx) {
                values[j] = if b { 1.0 } else { 0.0 };
            }
            complete(model, &values)
        }
        None => None,
    };
    let objective = incumbent.as_ref().map_or(f64::INFINITY, |s| s.objective);
    Ok(SolveResult {
        status: if incumbent.is_some() {
            SolveStatus::Optimal
        } else {
            SolveStatus::Infeasible
        },
        best_bound: objective,
        gap: if incumbent.is_some() {
            0.0
        } else {
            f64::INFINITY
        },
        incumbent,
        nodes_explored: count as u64,
        wall_time_secs: start.elapsed().as_secs_f64(),
        numerical_failures: failures,
        dropped_nodes: failures,
    })
}
