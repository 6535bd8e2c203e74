//! A primal-dual interior-point solver for second-order cone programs.
//!
//! Problems are stated with bounded variables, linear rows and cones of the
//! form `‖(e₁(x), …, e_k(x))‖₂ ≤ b(x)` with affine `eᵢ` and `b`. The solver
//! reduces trivially determined parts of the problem, runs a homogeneous
//! self-dual interior-point iteration on the rest and maps the result back.
//!
//! ```
//! use octsvm_conic::{solve, Affine, Problem, Sense, Settings, Status};
//!
//! // minimize t subject to ‖(x − 1, y + 2)‖ ≤ t
//! let mut p = Problem::new();
//! let x = p.add_var(-10.0, 10.0, 0.0);
//! let y = p.add_var(-10.0, 10.0, 0.0);
//! let t = p.add_var(0.0, 100.0, 1.0);
//! p.add_soc(vec![Affine::var(x).plus(-1.0), Affine::var(y).plus(2.0)], Affine::var(t));
//! p.add_linear(vec![(x, 1.0), (y, 1.0)], Sense::Eq, 0.0);
//! let sol = solve(&p, &Settings::default()).unwrap();
//! assert_eq!(sol.status, Status::Optimal);
//! assert!((sol.objective - 0.5f64.sqrt()).abs() < 1e-6);
//! ```

#![allow(clippy::needless_range_loop)]

mod cones;
mod ipm;
mod ldl;
mod problem;
mod reduce;

pub use problem::{Affine, LinearConstraint, Problem, Sense, SocConstraint};

use ipm::StdStatus;
use reduce::Reduction;

#[derive(Debug, thiserror::Error)]
pub enum ConicError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite data in {0}")]
    NonFinite(String),
    #[error("unknown variable {index} referenced in {context}")]
    UnknownVariable { index: usize, context: String },
}

/// Solver parameters.
#[derive(Debug, Clone)]
pub struct Settings {
    /// Target relative tolerance on residuals and duality gap.
    pub tol: f64,
    /// Tolerance accepted when the iteration stalls before reaching `tol`.
    pub reduced_tol: f64,
    pub max_iter: usize,
    pub static_reg: f64,
    pub dynamic_eps: f64,
    pub dynamic_delta: f64,
    pub refine_steps: usize,
    pub step_fraction: f64,
    /// Print one line per iteration to stderr.
    pub verbose: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tol: 1e-8,
            reduced_tol: 1e-6,
            max_iter: 200,
            static_reg: 1e-9,
            dynamic_eps: 1e-13,
            dynamic_delta: 1e-7,
            refine_steps: 8,
            step_fraction: 0.99,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    /// Converged only to `Settings::reduced_tol`.
    ReducedAccuracy,
    PrimalInfeasible,
    DualInfeasible,
    NumericalFailure,
}

impl Status {
    /// True when the returned point is usable as an optimum.
    pub fn is_optimal(self) -> bool {
        matches!(self, Status::Optimal | Status::ReducedAccuracy)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    /// Primal point in the original variable space, clipped to the bounds.
    /// Empty when the problem was found infeasible during reduction.
    pub x: Vec<f64>,
    /// Objective at `x`, including the constant term.
    pub objective: f64,
    /// Dual objective of the final iterate; a lower bound when converged.
    pub dual_objective: f64,
    pub iterations: usize,
    /// Largest violation of any bound, row or cone at `x`.
    pub max_violation: f64,
    /// Reason reported when reduction alone settled the status.
    pub detail: Option<String>,
}

impl Solution {
    fn empty(status: Status, objective: f64, detail: String) -> Solution {
        Solution {
            status,
            x: Vec::new(),
            objective,
            dual_objective: objective,
            iterations: 0,
            max_violation: f64::INFINITY,
            detail: Some(detail),
        }
    }
}

/// Solve `problem` to the accuracy requested in `settings`.
pub fn solve(problem: &Problem, settings: &Settings) -> Result<Solution, ConicError> {
    problem.validate()?;
    let sf = match reduce::reduce(problem, settings.reduced_tol) {
        Reduction::Standard(sf) => sf,
        Reduction::Infeasible(d) => {
            return Ok(Solution::empty(Status::PrimalInfeasible, f64::INFINITY, d))
        }
        Reduction::Unbounded(d) => {
            return Ok(Solution::empty(
                Status::DualInfeasible,
                f64::NEG_INFINITY,
                d,
            ))
        }
    };
    let fixed_cost: f64 = problem.objective_constant
        + sf.column
            .iter()
            .zip(&sf.fixed)
            .zip(&problem.objective)
            .filter(|((col, _), _)| col.is_none())
            .map(|((_, v), c)| v * c)
            .sum::<f64>();

    let (status, xr, dual, iterations) = if sf.num_free() == 0 {
        (Status::Optimal, Vec::new(), 0.0, 0)
    } else {
        let r = ipm::solve_standard(&sf, settings);
        let status = match r.status {
            StdStatus::Optimal => Status::Optimal,
            StdStatus::ReducedAccuracy => Status::ReducedAccuracy,
            StdStatus::PrimalInfeasible => Status::PrimalInfeasible,
            StdStatus::DualInfeasible => Status::DualInfeasible,
            StdStatus::Failure => Status::NumericalFailure,
        };
        (status, r.x, r.dual_cost, r.iterations)
    };
    let mut x = sf.expand(&xr);
    for (j, v) in x.iter_mut().enumerate() {
        *v = v.clamp(problem.lower[j], problem.upper[j]);
    }
    let objective = problem.evaluate(&x);
    let max_violation = problem.max_violation(&x);
    let dual_objective = if status.is_optimal() {
        dual + fixed_cost
    } else {
        f64::NAN
    };
    Ok(Solution {
        status,
        x,
        objective,
        dual_objective,
        iterations,
        max_violation,
        detail: None,
    })
}
