//! Continuous relaxations solved with the interior-point method.

use octsvm_conic::{solve, Problem, Settings, Status};
use serde::{Deserialize, Serialize};

/// Largest row violation accepted from an "optimal" relaxation.
pub const RELAX_FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelaxStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    /// Valid lower bound: the smaller of the primal and dual objectives.
    pub bound: f64,
    pub status: RelaxStatus,
    pub max_violation: f64,
    pub iterations: usize,
}

/// Solve a conic program to optimality or infeasibility. Deterministic for
/// fixed input.
pub fn solve_relaxation(program: &Problem) -> RelaxSolution {
    let failed = |iterations| RelaxSolution {
        values: Vec::new(),
        objective: f64::NAN,
        bound: f64::NEG_INFINITY,
        status: RelaxStatus::NumericalFailure,
        max_violation: f64::INFINITY,
        iterations,
    };
    let sol = match solve(program, &Settings::default()) {
        Ok(s) => s,
        Err(_) => return failed(0),
    };
    match sol.status {
        Status::PrimalInfeasible => RelaxSolution {
            values: sol.x,
            objective: f64::INFINITY,
            bound: f64::INFINITY,
            status: RelaxStatus::Infeasible,
            max_violation: sol.max_violation,
            iterations: sol.iterations,
        },
        Status::Optimal | Status::ReducedAccuracy if sol.max_violation <= RELAX_FEAS_TOL => {
            let bound = if sol.dual_objective.is_finite() {
                sol.objective.min(sol.dual_objective)
            } else {
                sol.objective
            };
            RelaxSolution {
                values: sol.x,
                objective: sol.objective,
                bound,
                status: RelaxStatus::Optimal,
                max_violation: sol.max_violation,
                iterations: sol.iterations,
            }
        }
        _ => failed(sol.iterations),
    }
}
