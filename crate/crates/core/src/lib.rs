//! Optimal classification trees with SVM splits and observation relabeling
//! (OCTSVM), solved exactly as mixed-integer second-order cone programs.
//!
//! Each branch node carries a soft-margin hyperplane. Observations are
//! routed by the sign of the hyperplane and may be relabeled at a cost
//! while travelling down the tree, which makes the trees tolerant of label
//! noise. The crate contains:
//!
//! * [`formulation`]: the mixed-integer model, plus the RE-SVM single
//!   hyperplane model used as a baseline;
//! * [`solver`]: branch-and-bound over conic relaxations and an
//!   enumeration oracle for tiny instances;
//! * [`baselines`]: CART with cost-complexity pruning;
//! * [`harness`]: label-noise experiments with cross-validation and grid
//!   search.
//!
//! ```
//! use octsvm::{build_octsvm_model, branch_and_bound, extract_tree, Budget, Dataset, ModelConfig, TreeTopology};
//!
//! let data = Dataset::from_normalized(
//!     &[vec![0.1, 0.2], vec![0.2, 0.1], vec![0.8, 0.9], vec![0.9, 0.7]],
//!     vec![-1, -1, 1, 1],
//! )
//! .unwrap();
//! let config = ModelConfig::with_costs(1.0, 1.0, 0.1, 0);
//! let model = build_octsvm_model(&data, &TreeTopology::new(0), &config).unwrap();
//! let result = branch_and_bound(&model, &Budget::exact());
//! let tree = extract_tree(&model, result.incumbent.as_ref().unwrap()).unwrap();
//! assert_eq!(tree.accuracy(&data).unwrap().correct, 4);
//! ```

pub mod baselines;
pub mod data;
pub mod formulation;
pub mod harness;
pub mod par;
pub mod solver;
pub mod tree;

pub use baselines::{cart_predict, cart_train, AxisTree, CartParams};
pub use data::{normalize_features, Dataset, Scaling};
pub use formulation::{
    big_m_values, build_octsvm_model, build_resvm_model, extract_tree, linearize_bilinear,
    objective_of, write_lp, MinlpModel, ModelConfig, Solution,
};
pub use par::Exec;
pub use solver::{
    branch_and_bound, branch_and_bound_with, brute_force_solve, check_feasible, primal_heuristic,
    select_branching, solve_relaxation, Budget, SolveResult, SolveStatus, ViolationReport,
};
pub use tree::{ConfusionSummary, TreeClassifier, TreeTopology};

/// Errors reported by model construction, solving and the harness.
#[derive(Debug, thiserror::Error)]
pub enum OctError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite value in feature column {column}")]
    NonFinite { column: usize },
    #[error("training data contains a single class")]
    SingleClass,
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}
