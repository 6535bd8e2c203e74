//! Rounding and greedy heuristics for incumbents.

use octsvm_conic::{Affine, Problem, Sense};

use super::{complete, polish, solve_relaxation, RelaxSolution, RelaxStatus};
use crate::formulation::{Layout, MinlpModel, OctLayout, ResvmLayout, Solution};

const PASSES: usize = 3;

/// Relabel when paying `c2` plus the hinge loss of the flipped label is
/// cheaper than the hinge loss of the original label.
fn relabel(c1: f64, c2: f64, y: f64, v: f64) -> bool {
    let keep = (1.0 - y * v).max(0.0);
    let flip = (1.0 + y * v).max(0.0);
    c2 + c1 * flip < c1 * keep
}

/// Decisive binaries implied by the hyperplanes in `values`: splits with
/// `d ≥ ½` (kept hierarchical), routes by hyperplane sign, and the cheaper
/// of keeping or flipping each label on the route. An inactive node routes
/// by the sign of its intercept alone, which is set to ±1 by the majority
/// label of the observations reaching it.
fn round_octsvm(model: &MinlpModel, l: &OctLayout, values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    let t_count = l.node_count();
    let mut active = vec![false; t_count + 1];
    for t in 1..=t_count {
        let parent_ok = t == 1 || active[t / 2];
        active[t] = parent_ok && values[l.d(t)] >= 0.5;
        out[l.d(t)] = if active[t] { 1.0 } else { 0.0 };
    }
    for i in 0..l.n {
        for t in 1..=t_count {
            out[l.z(i, t)] = 0.0;
            out[l.xi(i, t)] = 0.0;
        }
    }
    let (c1, c2) = (model.config.c1, model.config.c2);
    let mut sets: Vec<Vec<usize>> = vec![Vec::new(); t_count + 1];
    sets[1] = (0..l.n).collect();
    for t in 1..=t_count {
        let idx = std::mem::take(&mut sets[t]);
        if !active[t] {
            for j in 1..=l.p {
                out[l.omega(t, j)] = 0.0;
            }
            let pos = idx.iter().filter(|&&i| model.data.labels[i] > 0).count();
            out[l.omega(t, 0)] = if 2 * pos >= idx.len() { 1.0 } else { -1.0 };
        }
        for i in idx {
            let x = model.data.row(i);
            let y = model.data.labels[i] as f64;
            out[l.z(i, t)] = 1.0;
            let v = l.node_value(&out, t, x);
            if relabel(c1, c2, y, v) {
                out[l.xi(i, t)] = 1.0;
            }
            if let Some((left, right)) = l.topo.children(t) {
                sets[if v >= 0.0 { right } else { left }].push(i);
            }
        }
    }
    out
}

fn round_resvm(model: &MinlpModel, l: &ResvmLayout, values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    for i in 0..l.n {
        let x = model.data.row(i);
        let y = model.data.labels[i] as f64;
        let mut v = values[l.omega(0)];
        for (j, xj) in x.iter().enumerate() {
            v += values[l.omega(j + 1)] * xj;
        }
        out[l.xi(i)] = if relabel(model.config.c1, model.config.c2, y, v) {
            1.0
        } else {
            0.0
        };
    }
    out
}

/// Round a relaxation to an audited integral solution, then re-round from
/// the polished hyperplanes while that improves the objective.
pub fn primal_heuristic(relax: &RelaxSolution, model: &MinlpModel) -> Option<Solution> {
    if relax.status != RelaxStatus::Optimal {
        return None;
    }
    refine(model, relax.values.clone())
}

fn refine(model: &MinlpModel, mut values: Vec<f64>) -> Option<Solution> {
    let mut best: Option<Solution> = None;
    for _ in 0..PASSES {
        let rounded = match &model.layout {
            Layout::Octsvm(l) => round_octsvm(model, l, &values),
            Layout::Resvm(l) => round_resvm(model, l, &values),
        };
        let sol = match &model.layout {
            Layout::Octsvm(_) => complete(model, &rounded),
            Layout::Resvm(_) => polish(model, &super::full_fixing(model, &rounded)),
        };
        let Some(sol) = sol else { break };
        let improved = best
            .as_ref()
            .is_none_or(|b| sol.objective < b.objective - 1e-9);
        if !improved {
            break;
        }
        values = sol.values.clone();
        best = Some(sol);
    }
    best
}

/// Soft-margin SVM `min ½‖ω‖ + c1 Σ e` on the observations `idx`, with the
/// model's coefficient bound. Returns `(ω, ω0)`.
fn node_svm(model: &MinlpModel, idx: &[usize]) -> Option<(Vec<f64>, f64)> {
    let p = model.data.num_features();
    let w = model.config.coef_bound;
    let mut prob = Problem::new();
    let omega: Vec<usize> = (0..p).map(|_| prob.add_var(-w, w, 0.0)).collect();
    let omega0 = prob.add_var(-w, w, 0.0);
    let half_norm = prob.add_var(0.0, f64::INFINITY, 1.0);
    prob.add_soc(
        omega.iter().map(|&j| Affine::scaled(j, 0.5)).collect(),
        Affine::var(half_norm),
    );
    for &i in idx {
        let e = prob.add_var(0.0, f64::INFINITY, model.config.c1);
        let y = model.data.labels[i] as f64;
        let mut terms: Vec<(usize, f64)> = omega
            .iter()
            .zip(model.data.row(i))
            .map(|(&j, &x)| (j, y * x))
            .collect();
        terms.push((omega0, y));
        terms.push((e, 1.0));
        prob.add_linear(terms, Sense::Ge, 1.0);
    }
    let sol = solve_relaxation(&prob);
    (sol.status == RelaxStatus::Optimal).then(|| {
        (
            omega.iter().map(|&j| sol.values[j]).collect(),
            sol.values[omega0],
        )
    })
}

/// Greedy top-down tree: fit an SVM at each node that receives both
/// classes, route by its sign, and recurse. Trees truncated at every depth
/// are completed, refined, and the cheapest is returned.
pub(crate) fn greedy_svm_tree(model: &MinlpModel) -> Option<Solution> {
    let l = model.octsvm_layout()?;
    let mut values = vec![0.0; model.num_vars()];
    let mut sets: Vec<Vec<usize>> = vec![Vec::new(); l.node_count() + 1];
    sets[1] = (0..l.n).collect();
    for t in 1..=l.node_count() {
        let idx = std::mem::take(&mut sets[t]);
        let parent_active = t == 1 || values[l.d(t / 2)] > 0.5;
        let pos = idx.iter().filter(|&&i| model.data.labels[i] > 0).count();
        if !parent_active || pos == 0 || pos == idx.len() {
            continue;
        }
        let Some((omega, omega0)) = node_svm(model, &idx) else {
            continue;
        };
        values[l.d(t)] = 1.0;
        for (j, w) in omega.iter().enumerate() {
            values[l.omega(t, j + 1)] = *w;
        }
        values[l.omega(t, 0)] = omega0;
        if let Some((left, right)) = l.topo.children(t) {
            for i in idx {
                let side = if l.node_value(&values, t, model.data.row(i)) >= 0.0 {
                    right
                } else {
                    left
                };
                sets[side].push(i);
            }
        }
    }
    let mut best: Option<Solution> = None;
    for depth in 0..=l.topo.depth() {
        let mut truncated = values.clone();
        for t in 1..=l.node_count() {
            if l.topo.level_of(t) > depth {
                truncated[l.d(t)] = 0.0;
            }
        }
        if let Some(sol) = refine(model, truncated) {
            if best.as_ref().is_none_or(|b| sol.objective < b.objective) {
                best = Some(sol);
            }
        }
    }
    best
}
