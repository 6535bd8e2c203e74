//! Best-bound branch-and-bound with depth-first plunging.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    complete, decisive_class, decisive_integral, primal_heuristic, solve_relaxation, RelaxStatus,
};
use crate::formulation::{Layout, MinlpModel, Role, Solution};

/// Limits for one solve. The search stops with [`SolveStatus::Optimal`]
/// once the relative gap `(incumbent − bound) / max(1, |incumbent|)` is at
/// most `gap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub time_limit_secs: Option<f64>,
    pub node_limit: Option<u64>,
    pub gap: f64,
    /// Run the rounding heuristic every this many nodes (and at the root).
    pub heuristic_every: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            time_limit_secs: None,
            node_limit: None,
            gap: 1e-6,
            heuristic_every: 10,
        }
    }
}

impl Budget {
    pub fn exact() -> Budget {
        Budget::default()
    }

    pub fn with_time_limit(mut self, secs: f64) -> Budget {
        self.time_limit_secs = Some(secs);
        self
    }

    pub fn with_node_limit(mut self, nodes: u64) -> Budget {
        self.node_limit = Some(nodes);
        self
    }

    pub fn with_gap(mut self, gap: f64) -> Budget {
        self.gap = gap;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Proved optimal within the gap target.
    Optimal,
    /// Node limit reached before the gap target.
    GapLimit,
    TimeLimit,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub incumbent: Option<Solution>,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes_explored: u64,
    pub wall_time_secs: f64,
    /// Nodes whose relaxation failed numerically; they were branched on
    /// with the parent bound, or dropped when nothing was left to branch on.
    pub numerical_failures: u64,
    pub dropped_nodes: u64,
}

impl SolveResult {
    pub fn objective(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|s| s.objective)
    }
}

/// One progress record, emitted after every processed node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLine {
    pub nodes: u64,
    pub open: usize,
    pub incumbent: Option<f64>,
    pub bound: f64,
    pub gap: f64,
    pub elapsed_secs: f64,
}

struct Node {
    bound: f64,
    seq: u64,
    fixings: Vec<(usize, bool)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap order: smallest bound first, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(other.seq.cmp(&self.seq))
    }
}

fn rel_gap(incumbent: Option<f64>, bound: f64) -> f64 {
    match incumbent {
        Some(v) => ((v - bound) / v.abs().max(1.0)).max(0.0),
        None => f64::INFINITY,
    }
}

/// Fractional binary to branch on: decisive binaries first, in the order
/// `d`, `z`, `ξ`, then routing flags; within a class the most fractional,
/// then the lowest index.
pub fn select_branching(model: &MinlpModel, values: &[f64]) -> Option<usize> {
    let tol = model.config.int_tol;
    let mut best: Option<(u8, f64, usize)> = None;
    for j in model.binaries() {
        let frac = (values[j] - values[j].round()).abs();
        if frac <= tol {
            continue;
        }
        let class = match decisive_class(model, values, j) {
            Some(c) => c,
            None if model.vars[j].role == Role::Theta => 3,
            None => continue,
        };
        let better = match best {
            None => true,
            Some((c, f, _)) => class < c || (class == c && frac > f),
        };
        if better {
            best = Some((class, frac, j));
        }
    }
    best.map(|(_, _, j)| j)
}

/// First decisive binary not yet fixed, used when a node relaxation fails
/// and gives no values to guide the choice.
fn first_unfixed_decisive(model: &MinlpModel, lower: &[f64], upper: &[f64]) -> Option<usize> {
    let mut best: Option<(u8, usize)> = None;
    for j in model.binaries() {
        if lower[j] == upper[j] {
            continue;
        }
        let class = match model.vars[j].role {
            Role::D => 0,
            Role::Z => 1,
            Role::Xi => 2,
            _ => continue,
        };
        if best.is_none_or(|(c, _)| class < c) {
            best = Some((class, j));
        }
    }
    best.map(|(_, j)| j)
}

/// Node bounds from the root bounds and a list of fixings, with `ξ_it`
/// forced to zero wherever `z_it` is fixed to zero.
fn node_bounds(model: &MinlpModel, fixings: &[(usize, bool)]) -> (Vec<f64>, Vec<f64>) {
    let mut lower = model.lower_bounds();
    let mut upper = model.upper_bounds();
    for &(j, b) in fixings {
        let v = if b { 1.0 } else { 0.0 };
        lower[j] = v;
        upper[j] = v;
    }
    if let Layout::Octsvm(l) = &model.layout {
        for i in 0..l.n {
            for t in 1..=l.node_count() {
                if upper[l.z(i, t)] == 0.0 && lower[l.xi(i, t)] == 0.0 {
                    upper[l.xi(i, t)] = 0.0;
                }
            }
        }
    }
    (lower, upper)
}

/// Solve `model` to the budget's gap target. Deterministic for fixed input.
pub fn branch_and_bound(model: &MinlpModel, budget: &Budget) -> SolveResult {
    branch_and_bound_with(model, budget, &mut |_| {})
}

/// [`branch_and_bound`] reporting progress through `on_log`.
pub fn branch_and_bound_with(
    model: &MinlpModel,
    budget: &Budget,
    on_log: &mut dyn FnMut(&LogLine),
) -> SolveResult {
    let start = Instant::now();
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut next = Some(Node {
        bound: f64::NEG_INFINITY,
        seq,
        fixings: Vec::new(),
    });
    let mut incumbent: Option<Solution> = None;
    let mut nodes = 0u64;
    let mut failures = 0u64;
    let mut dropped = 0u64;
    // Smallest bound among nodes discarded within the pruning tolerance.
    let mut pruned_min = f64::INFINITY;
    let mut stop: Option<SolveStatus> = None;

    let offer = |sol: Solution, incumbent: &mut Option<Solution>| {
        if incumbent
            .as_ref()
            .is_none_or(|inc| sol.objective < inc.objective - 1e-12)
        {
            *incumbent = Some(sol);
        }
    };

    while let Some(node) = next.take().or_else(|| heap.pop()) {
        let inc_obj = incumbent.as_ref().map(|s| s.objective);
        let prune_tol = inc_obj.map_or(0.0, |v| budget.gap * v.abs().max(1.0));
        if let Some(v) = inc_obj {
            if node.bound >= v - prune_tol {
                pruned_min = pruned_min.min(node.bound);
                continue;
            }
        }
        let open_min = heap.peek().map_or(f64::INFINITY, |n| n.bound);
        let global = node.bound.min(open_min).min(pruned_min);
        if rel_gap(inc_obj, global) <= budget.gap {
            heap.push(node);
            stop = Some(SolveStatus::Optimal);
            break;
        }
        if budget.node_limit.is_some_and(|lim| nodes >= lim) {
            heap.push(node);
            stop = Some(SolveStatus::GapLimit);
            break;
        }
        if budget
            .time_limit_secs
            .is_some_and(|lim| start.elapsed().as_secs_f64() >= lim)
        {
            heap.push(node);
            stop = Some(SolveStatus::TimeLimit);
            break;
        }
        nodes += 1;

        let (lower, upper) = node_bounds(model, &node.fixings);
        let relax = solve_relaxation(&model.program_with_bounds(&lower, &upper));
        let mut children: Option<(usize, f64, bool)> = None;
        match relax.status {
            RelaxStatus::Infeasible => {}
            RelaxStatus::NumericalFailure => {
                failures += 1;
                match first_unfixed_decisive(model, &lower, &upper) {
                    Some(j) => children = Some((j, node.bound, true)),
                    None => dropped += 1,
                }
            }
            RelaxStatus::Optimal => {
                let bound = node.bound.max(relax.bound);
                if nodes == 1 {
                    if let Some(sol) = super::heuristic::greedy_svm_tree(model) {
                        offer(sol, &mut incumbent);
                    }
                }
                if nodes == 1
                    || (budget.heuristic_every > 0 && nodes.is_multiple_of(budget.heuristic_every))
                {
                    if let Some(sol) = primal_heuristic(&relax, model) {
                        offer(sol, &mut incumbent);
                    }
                }
                let inc_obj = incumbent.as_ref().map(|s| s.objective);
                let prune_tol = inc_obj.map_or(0.0, |v| budget.gap * v.abs().max(1.0));
                if inc_obj.is_some_and(|v| bound >= v - prune_tol) {
                    pruned_min = pruned_min.min(bound);
                } else if decisive_integral(model, &relax.values) {
                    match complete(model, &relax.values) {
                        Some(sol) => offer(sol, &mut incumbent),
                        None => match select_branching(model, &relax.values) {
                            Some(j) => children = Some((j, bound, relax.values[j] >= 0.5)),
                            None => {
                                failures += 1;
                                dropped += 1;
                            }
                        },
                    }
                } else if let Some(j) = select_branching(model, &relax.values) {
                    children = Some((j, bound, relax.values[j] >= 0.5));
                }
            }
        }

        if let Some((j, bound, up_first)) = children {
            let mut make = |b: bool| {
                seq += 1;
                let mut fixings = node.fixings.clone();
                fixings.push((j, b));
                Node {
                    bound,
                    seq,
                    fixings,
                }
            };
            let (first, second) = (make(up_first), make(!up_first));
            heap.push(second);
            next = Some(first);
        }

        let inc_obj = incumbent.as_ref().map(|s| s.objective);
        let open = heap.len() + usize::from(next.is_some());
        let bound = heap
            .peek()
            .map_or(f64::INFINITY, |n| n.bound)
            .min(next.as_ref().map_or(f64::INFINITY, |n| n.bound))
            .min(pruned_min)
            .min(inc_obj.unwrap_or(f64::INFINITY));
        on_log(&LogLine {
            nodes,
            open,
            incumbent: inc_obj,
            bound,
            gap: rel_gap(inc_obj, bound),
            elapsed_secs: start.elapsed().as_secs_f64(),
        });
    }

    let inc_obj = incumbent.as_ref().map(|s| s.objective);
    let open_min = heap.peek().map_or(f64::INFINITY, |n| n.bound);
    let best_bound = open_min
        .min(pruned_min)
        .min(inc_obj.unwrap_or(f64::INFINITY));
    let status = match stop {
        Some(s) => s,
        None if incumbent.is_some() => SolveStatus::Optimal,
        None => SolveStatus::Infeasible,
    };
    SolveResult {
        status,
        gap: rel_gap(inc_obj, best_bound),
        best_bound,
        incumbent,
        nodes_explored: nodes,
        wall_time_secs: start.elapsed().as_secs_f64(),
        numerical_failures: failures,
        dropped_nodes: dropped,
    }
}
