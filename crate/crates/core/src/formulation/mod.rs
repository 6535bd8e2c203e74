//! Mixed-integer second-order cone models for OCTSVM trees and RE-SVM.
//!
//! Models are stored in an abstract form (typed variables, tagged linear
//! rows, cone rows and a linear objective) and converted to
//! [`octsvm_conic::Problem`] for relaxations and fixed-binary subproblems.

mod lp;

use std::collections::BTreeMap;
use std::fmt;

pub use octsvm_conic::Sense;
use octsvm_conic::{Affine, Problem};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::tree::{TreeClassifier, TreeTopology};
use crate::OctError;

pub use lp::write_lp;

/// Costs, depth and numerical settings for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Unit cost of hinge error.
    pub c1: f64,
    /// Unit cost of relabeling an observation at a node.
    pub c2: f64,
    /// Unit cost of an active split.
    pub c3: f64,
    pub depth: usize,
    /// Bound `W` on every hyperplane coefficient and intercept.
    pub coef_bound: f64,
    pub feas_tol: f64,
    pub int_tol: f64,
    /// Require `ω_{1,1} ≥ 0` to remove the root sign symmetry.
    pub symmetry_cut: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            c1: 1.0,
            c2: 1.0,
            c3: 0.1,
            depth: 2,
            coef_bound: 10.0,
            feas_tol: 1e-6,
            int_tol: 1e-6,
            symmetry_cut: false,
        }
    }
}

impl ModelConfig {
    pub fn with_costs(c1: f64, c2: f64, c3: f64, depth: usize) -> ModelConfig {
        ModelConfig {
            c1,
            c2,
            c3,
            depth,
            ..ModelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), OctError> {
        let ok = self.c1 > 0.0
            && self.c2 >= 0.0
            && self.c3 >= 0.0
            && self.coef_bound > 0.0
            && self.c1.is_finite()
            && self.c2.is_finite()
            && self.c3.is_finite()
            && self.coef_bound.is_finite()
            && self.feas_tol > 0.0
            && self.feas_tol < 1.0
            && self.int_tol > 0.0
            && self.int_tol < 1.0;
        if ok {
            Ok(())
        } else {
            Err(OctError::Invalid(format!(
                "invalid model configuration {self:?}"
            )))
        }
    }
}

/// Big-M constants derived from the coefficient bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MConstants {
    /// Hinge rows: `1 + W(p + 1)`.
    pub m_err: f64,
    /// Routing rows: `W(p + 1)`.
    pub m_route: f64,
    /// Split activation: `W √p`.
    pub m_norm: f64,
}

/// With `x ∈ [0, 1]^p` and `|ω_tj|, |ω_t0| ≤ W`, every hyperplane value is
/// bounded by `W(p + 1)` in absolute value, which makes these constants valid.
pub fn big_m_values(p: usize, config: &ModelConfig) -> MConstants {
    let w = config.coef_bound;
    let m_route = w * (p as f64 + 1.0);
    MConstants {
        m_err: 1.0 + m_route,
        m_route,
        m_norm: w * (p as f64).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

/// What a variable stands for in the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Omega,
    Omega0,
    Delta,
    Error,
    Beta,
    Beta0,
    Xi,
    Z,
    Theta,
    D,
    /// Epigraph of `‖ω‖²` in RE-SVM.
    Epigraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub role: Role,
    pub cost: f64,
}

/// Constraint family a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    /// `octsvm_1` … `octsvm_11`.
    Octsvm(u8),
    Resvm,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Octsvm(k) => write!(f, "octsvm_{k}"),
            Family::Resvm => write!(f, "resvm"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub family: Family,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// `‖entries‖₂ ≤ bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeRow {
    pub entries: Vec<Affine>,
    pub bound: Affine,
    pub family: Family,
}

impl ConeRow {
    pub fn violation(&self, x: &[f64]) -> f64 {
        let norm = self
            .entries
            .iter()
            .map(|e| e.eval(x).powi(2))
            .sum::<f64>()
            .sqrt();
        (norm - self.bound.eval(x)).max(0.0)
    }
}

/// Variable index layout of an OCTSVM model. Node arguments are 1-based,
/// observation arguments 0-based, and coefficient index `j = 0` is the
/// intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct OctLayout {
    pub n: usize,
    pub p: usize,
    pub topo: TreeTopology,
    t_count: usize,
    omega: usize,
    omega0: usize,
    delta: usize,
    e: usize,
    beta: usize,
    beta0: usize,
    xi: usize,
    z: usize,
    theta: usize,
    d: usize,
    total: usize,
}

impl OctLayout {
    fn new(n: usize, p: usize, topo: TreeTopology) -> OctLayout {
        let t = topo.node_count();
        let omega = 0;
        let omega0 = omega + t * p;
        let delta = omega0 + t;
        let e = delta + 1;
        let beta = e + n * t;
        let beta0 = beta + n * t * p;
        let xi = beta0 + n * t;
        let z = xi + n * t;
        let theta = z + n * t;
        let d = theta + n * t;
        let total = d + t;
        OctLayout {
            n,
            p,
            topo,
            t_count: t,
            omega,
            omega0,
            delta,
            e,
            beta,
            beta0,
            xi,
            z,
            theta,
            d,
            total,
        }
    }

    pub fn node_count(&self) -> usize {
        self.t_count
    }

    pub fn num_vars(&self) -> usize {
        self.total
    }

    /// `ω_tj` for `j ≥ 1`, `ω_t0` for `j = 0`.
    pub fn omega(&self, t: usize, j: usize) -> usize {
        if j == 0 {
            self.omega0 + t - 1
        } else {
            self.omega + (t - 1) * self.p + j - 1
        }
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn e(&self, i: usize, t: usize) -> usize {
        self.e + i * self.t_count + t - 1
    }

    /// `β_itj` for `j ≥ 1`, `β_it0` for `j = 0`.
    pub fn beta(&self, i: usize, t: usize, j: usize) -> usize {
        if j == 0 {
            self.beta0 + i * self.t_count + t - 1
        } else {
            self.beta + (i * self.t_count + t - 1) * self.p + j - 1
        }
    }

    pub fn xi(&self, i: usize, t: usize) -> usize {
        self.xi + i * self.t_count + t - 1
    }

    pub fn z(&self, i: usize, t: usize) -> usize {
        self.z + i * self.t_count + t - 1
    }

    pub fn theta(&self, i: usize, t: usize) -> usize {
        self.theta + i * self.t_count + t - 1
    }

    pub fn d(&self, t: usize) -> usize {
        self.d + t - 1
    }

    /// `ω_t·x + ω_t0` at a point.
    pub fn node_value(&self, values: &[f64], t: usize, x: &[f64]) -> f64 {
        let mut v = values[self.omega(t, 0)];
        for (j, xj) in x.iter().enumerate() {
            v += values[self.omega(t, j + 1)] * xj;
        }
        v
    }
}

/// Variable index layout of an RE-SVM model.
#[derive(Debug, Clone, PartialEq)]
pub struct ResvmLayout {
    pub n: usize,
    pub p: usize,
    omega: usize,
    epigraph: usize,
    e: usize,
    beta: usize,
    xi: usize,
    total: usize,
}

impl ResvmLayout {
    fn new(n: usize, p: usize) -> ResvmLayout {
        let omega = 0;
        let epigraph = omega + p + 1;
        let e = epigraph + 1;
        let beta = e + n;
        let xi = beta + n * (p + 1);
        let total = xi + n;
        ResvmLayout {
            n,
            p,
            omega,
            epigraph,
            e,
            beta,
            xi,
            total,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.total
    }

    /// `ω_j` for `j ≥ 1`, `ω_0` for `j = 0`.
    pub fn omega(&self, j: usize) -> usize {
        if j == 0 {
            self.omega + self.p
        } else {
            self.omega + j - 1
        }
    }

    pub fn epigraph(&self) -> usize {
        self.epigraph
    }

    pub fn e(&self, i: usize) -> usize {
        self.e + i
    }

    pub fn beta(&self, i: usize, j: usize) -> usize {
        if j == 0 {
            self.beta + i * (self.p + 1) + self.p
        } else {
            self.beta + i * (self.p + 1) + j - 1
        }
    }

    pub fn xi(&self, i: usize) -> usize {
        self.xi + i
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Octsvm(OctLayout),
    Resvm(ResvmLayout),
}

/// A mixed-integer conic model together with the data it was built from.
#[derive(Debug, Clone)]
pub struct MinlpModel {
    pub vars: Vec<Variable>,
    pub rows: Vec<Row>,
    pub cones: Vec<ConeRow>,
    pub layout: Layout,
    pub config: ModelConfig,
    pub consts: MConstants,
    pub data: Dataset,
}

/// Values for every variable of a model plus the objective they attain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub values: Vec<f64>,
    pub objective: f64,
}

impl MinlpModel {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn binaries(&self) -> impl Iterator<Item = usize> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(j, _)| j)
    }

    pub fn num_binaries(&self) -> usize {
        self.binaries().count()
    }

    pub fn num_continuous(&self) -> usize {
        self.num_vars() - self.num_binaries()
    }

    /// Number of rows tagged with `family` (linear and cone rows together).
    pub fn family_count(&self, family: Family) -> usize {
        self.rows.iter().filter(|r| r.family == family).count()
            + self.cones.iter().filter(|c| c.family == family).count()
    }

    pub fn octsvm_layout(&self) -> Option<&OctLayout> {
        match &self.layout {
            Layout::Octsvm(l) => Some(l),
            Layout::Resvm(_) => None,
        }
    }

    /// Objective of the stored linear functional at `values`.
    pub fn linear_objective(&self, values: &[f64]) -> f64 {
        self.vars.iter().zip(values).map(|(v, x)| v.cost * x).sum()
    }

    /// Conic program with the given variable bounds and every binary relaxed
    /// to its interval.
    pub fn program_with_bounds(&self, lower: &[f64], upper: &[f64]) -> Problem {
        let mut p = Problem::new();
        for (j, v) in self.vars.iter().enumerate() {
            p.add_var(lower[j], upper[j], v.cost);
        }
        for r in &self.rows {
            p.add_linear(r.terms.clone(), r.sense, r.rhs);
        }
        for c in &self.cones {
            p.add_soc(c.entries.clone(), c.bound.clone());
        }
        p
    }

    pub fn lower_bounds(&self) -> Vec<f64> {
        self.vars.iter().map(|v| v.lower).collect()
    }

    pub fn upper_bounds(&self) -> Vec<f64> {
        self.vars.iter().map(|v| v.upper).collect()
    }

    /// The model with the binaries in `fixing` set to constants and every
    /// other binary relaxed to `[0, 1]`.
    pub fn continuous_subproblem(
        &self,
        fixing: &BTreeMap<usize, bool>,
    ) -> Result<Problem, OctError> {
        let mut lower = self.lower_bounds();
        let mut upper = self.upper_bounds();
        for (&j, &b) in fixing {
            let Some(v) = self.vars.get(j) else {
                return Err(OctError::Invalid(format!(
                    "fixing refers to unknown variable {j}"
                )));
            };
            if v.kind != VarKind::Binary {
                return Err(OctError::Invalid(format!(
                    "fixing refers to continuous variable {}",
                    v.name
                )));
            }
            let val = if b { 1.0 } else { 0.0 };
            lower[j] = val;
            upper[j] = val;
        }
        Ok(self.program_with_bounds(&lower, &upper))
    }
}

struct Builder {
    vars: Vec<Variable>,
    rows: Vec<Row>,
    cones: Vec<ConeRow>,
}

impl Builder {
    fn var(
        &mut self,
        name: String,
        kind: VarKind,
        lower: f64,
        upper: f64,
        role: Role,
        cost: f64,
    ) -> usize {
        self.vars.push(Variable {
            name,
            kind,
            lower,
            upper,
            role,
            cost,
        });
        self.vars.len() - 1
    }

    fn row(&mut self, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64, family: Family) {
        self.rows.push(Row {
            terms,
            sense,
            rhs,
            family,
        });
    }
}

/// The four McCormick rows for `β = ξ·ω` with `|ω| ≤ W` and binary `ξ`:
/// `β ≤ Wξ`, `β ≥ −Wξ`, `β ≤ ω + W(1 − ξ)`, `β ≥ ω − W(1 − ξ)`.
pub fn linearize_bilinear(
    beta: usize,
    xi: usize,
    omega: usize,
    w: f64,
    family: Family,
) -> [Row; 4] {
    [
        Row {
            terms: vec![(beta, 1.0), (xi, -w)],
            sense: Sense::Le,
            rhs: 0.0,
            family,
        },
        Row {
            terms: vec![(beta, 1.0), (xi, w)],
            sense: Sense::Ge,
            rhs: 0.0,
            family,
        },
        Row {
            terms: vec![(beta, 1.0), (omega, -1.0), (xi, w)],
            sense: Sense::Le,
            rhs: w,
            family,
        },
        Row {
            terms: vec![(beta, 1.0), (omega, -1.0), (xi, -w)],
            sense: Sense::Ge,
            rhs: -w,
            family,
        },
    ]
}

fn check_data(data: &Dataset) -> Result<(), OctError> {
    data.require_both_classes()?;
    if data.num_features() == 0 {
        return Err(OctError::Invalid("dataset has no features".into()));
    }
    Ok(())
}

/// Build the OCTSVM model of depth `topo.depth()` on `data`.
pub fn build_octsvm_model(
    data: &Dataset,
    topo: &TreeTopology,
    config: &ModelConfig,
) -> Result<MinlpModel, OctError> {
    config.validate()?;
    check_data(data)?;
    if topo.depth() != config.depth {
        return Err(OctError::Invalid(format!(
            "topology depth {} does not match configured depth {}",
            topo.depth(),
            config.depth
        )));
    }
    let (n, p) = (data.len(), data.num_features());
    let t_count = topo.node_count();
    let w = config.coef_bound;
    let consts = big_m_values(p, config);
    let layout = OctLayout::new(n, p, topo.clone());
    let mut b = Builder {
        vars: Vec::with_capacity(layout.num_vars()),
        rows: Vec::new(),
        cones: Vec::new(),
    };

    use Role::*;
    use VarKind::*;
    for t in 1..=t_count {
        for j in 1..=p {
            let lo = if config.symmetry_cut && t == 1 && j == 1 {
                0.0
            } else {
                -w
            };
            b.var(format!("w_{t}_{j}"), Continuous, lo, w, Omega, 0.0);
        }
    }
    for t in 1..=t_count {
        b.var(format!("w_{t}_0"), Continuous, -w, w, Omega0, 0.0);
    }
    b.var(
        "delta".into(),
        Continuous,
        0.0,
        consts.m_norm / 2.0,
        Delta,
        1.0,
    );
    for i in 1..=n {
        for t in 1..=t_count {
            b.var(
                format!("e_{i}_{t}"),
                Continuous,
                0.0,
                consts.m_err,
                Error,
                config.c1,
            );
        }
    }
    for i in 1..=n {
        for t in 1..=t_count {
            for j in 1..=p {
                b.var(format!("beta_{i}_{t}_{j}"), Continuous, -w, w, Beta, 0.0);
            }
        }
    }
    for i in 1..=n {
        for t in 1..=t_count {
            b.var(format!("beta_{i}_{t}_0"), Continuous, -w, w, Beta0, 0.0);
        }
    }
    for (prefix, role, cost) in [("xi", Xi, config.c2), ("z", Z, 0.0), ("th", Theta, 0.0)] {
        for i in 1..=n {
            for t in 1..=t_count {
                b.var(format!("{prefix}_{i}_{t}"), Binary, 0.0, 1.0, role, cost);
            }
        }
    }
    for t in 1..=t_count {
        b.var(format!("d_{t}"), Binary, 0.0, 1.0, D, config.c3);
    }
    debug_assert_eq!(b.vars.len(), layout.num_vars());

    let l = &layout;
    // octsvm_1: ½‖ω_t‖ ≤ δ
    for t in 1..=t_count {
        b.cones.push(ConeRow {
            entries: (1..=p)
                .map(|j| Affine::scaled(l.omega(t, j), 0.5))
                .collect(),
            bound: Affine::var(l.delta()),
            family: Family::Octsvm(1),
        });
    }
    // octsvm_2: y(ω_t·x + ω_t0) − 2y(β_it·x + β_it0) ≥ 1 − e_it − M(1 − z_it)
    for i in 0..n {
        let x = data.row(i);
        let y = data.labels[i] as f64;
        for t in 1..=t_count {
            let mut terms = vec![(l.omega(t, 0), y), (l.beta(i, t, 0), -2.0 * y)];
            for j in 1..=p {
                if x[j - 1] != 0.0 {
                    terms.push((l.omega(t, j), y * x[j - 1]));
                    terms.push((l.beta(i, t, j), -2.0 * y * x[j - 1]));
                }
            }
            terms.push((l.e(i, t), 1.0));
            terms.push((l.z(i, t), -consts.m_err));
            b.row(terms, Sense::Ge, 1.0 - consts.m_err, Family::Octsvm(2));
        }
    }
    // octsvm_3: β_itj = ξ_it ω_tj, j = 0..p
    for i in 0..n {
        for t in 1..=t_count {
            for j in 0..=p {
                let rows = linearize_bilinear(
                    l.beta(i, t, j),
                    l.xi(i, t),
                    l.omega(t, j),
                    w,
                    Family::Octsvm(3),
                );
                b.rows.extend(rows);
            }
        }
    }
    // octsvm_4: ‖ω_t‖ ≤ M d_t
    for t in 1..=t_count {
        b.cones.push(ConeRow {
            entries: (1..=p).map(|j| Affine::var(l.omega(t, j))).collect(),
            bound: Affine::scaled(l.d(t), consts.m_norm),
            family: Family::Octsvm(4),
        });
    }
    // octsvm_5: d_t ≤ d_p(t)
    for t in 2..=t_count {
        b.row(
            vec![(l.d(t), 1.0), (l.d(t / 2), -1.0)],
            Sense::Le,
            0.0,
            Family::Octsvm(5),
        );
    }
    // octsvm_6: Σ_{t ∈ u} z_it = 1
    for i in 0..n {
        for level in topo.levels() {
            b.row(
                level.iter().map(|&t| (l.z(i, t), 1.0)).collect(),
                Sense::Eq,
                1.0,
                Family::Octsvm(6),
            );
        }
    }
    // octsvm_7: z_it ≤ z_ip(t)
    for i in 0..n {
        for t in 2..=t_count {
            b.row(
                vec![(l.z(i, t), 1.0), (l.z(i, t / 2), -1.0)],
                Sense::Le,
                0.0,
                Family::Octsvm(7),
            );
        }
    }
    // octsvm_8 / octsvm_9: routing by the sign of the node hyperplane
    let hyperplane = |i: usize, t: usize| -> Vec<(usize, f64)> {
        let x = data.row(i);
        let mut terms = vec![(l.omega(t, 0), 1.0)];
        for j in 1..=p {
            if x[j - 1] != 0.0 {
                terms.push((l.omega(t, j), x[j - 1]));
            }
        }
        terms
    };
    for i in 0..n {
        for t in 1..=t_count {
            let mut terms = hyperplane(i, t);
            terms.push((l.theta(i, t), -consts.m_route));
            b.row(terms, Sense::Ge, -consts.m_route, Family::Octsvm(8));
        }
    }
    for i in 0..n {
        for t in 1..=t_count {
            let mut terms = hyperplane(i, t);
            terms.push((l.theta(i, t), -consts.m_route));
            b.row(terms, Sense::Le, 0.0, Family::Octsvm(9));
        }
    }
    // octsvm_10: z_ip(t) − z_it ≤ θ_ip(t) for left children
    for i in 0..n {
        for t in topo.left_branch_nodes() {
            let pt = t / 2;
            b.row(
                vec![(l.z(i, pt), 1.0), (l.z(i, t), -1.0), (l.theta(i, pt), -1.0)],
                Sense::Le,
                0.0,
                Family::Octsvm(10),
            );
        }
    }
    // octsvm_11: z_ip(t) − z_it ≤ 1 − θ_ip(t) for right children
    for i in 0..n {
        for t in topo.right_branch_nodes() {
            let pt = t / 2;
            b.row(
                vec![(l.z(i, pt), 1.0), (l.z(i, t), -1.0), (l.theta(i, pt), 1.0)],
                Sense::Le,
                1.0,
                Family::Octsvm(11),
            );
        }
    }

    Ok(MinlpModel {
        vars: b.vars,
        rows: b.rows,
        cones: b.cones,
        layout: Layout::Octsvm(layout),
        config: config.clone(),
        consts,
        data: data.clone(),
    })
}

/// Build the RE-SVM model: `½‖ω‖² + c1 Σ e_i + c2 Σ ξ_i` subject to
/// `(1 − 2ξ_i) y_i (ω·x_i + ω_0) ≥ 1 − e_i`, with the product linearized
/// through `β_i = ξ_i ω` and the square held by an epigraph cone.
pub fn build_resvm_model(
    data: &Dataset,
    c1: f64,
    c2: f64,
    coef_bound: f64,
) -> Result<MinlpModel, OctError> {
    let config = ModelConfig {
        c1,
        c2,
        c3: 0.0,
        depth: 0,
        coef_bound,
        ..ModelConfig::default()
    };
    config.validate()?;
    check_data(data)?;
    let (n, p) = (data.len(), data.num_features());
    let w = coef_bound;
    let consts = big_m_values(p, &config);
    let layout = ResvmLayout::new(n, p);
    let mut b = Builder {
        vars: Vec::with_capacity(layout.num_vars()),
        rows: Vec::new(),
        cones: Vec::new(),
    };
    use Role::*;
    use VarKind::*;
    for j in 1..=p {
        b.var(format!("w_{j}"), Continuous, -w, w, Omega, 0.0);
    }
    b.var("w_0".into(), Continuous, -w, w, Omega0, 0.0);
    b.var("r".into(), Continuous, 0.0, p as f64 * w * w, Epigraph, 0.5);
    for i in 1..=n {
        b.var(format!("e_{i}"), Continuous, 0.0, consts.m_err, Error, c1);
    }
    for i in 1..=n {
        for j in 1..=p {
            b.var(format!("beta_{i}_{j}"), Continuous, -w, w, Beta, 0.0);
        }
        b.var(format!("beta_{i}_0"), Continuous, -w, w, Beta0, 0.0);
    }
    for i in 1..=n {
        b.var(format!("xi_{i}"), Binary, 0.0, 1.0, Xi, c2);
    }
    debug_assert_eq!(b.vars.len(), layout.num_vars());
    let l = &layout;
    // ‖ω‖² ≤ r  ⇔  ‖(2ω, r − 1)‖ ≤ r + 1
    let mut entries: Vec<Affine> = (1..=p).map(|j| Affine::scaled(l.omega(j), 2.0)).collect();
    entries.push(Affine::var(l.epigraph()).plus(-1.0));
    b.cones.push(ConeRow {
        entries,
        bound: Affine::var(l.epigraph()).plus(1.0),
        family: Family::Resvm,
    });
    for i in 0..n {
        let x = data.row(i);
        let y = data.labels[i] as f64;
        let mut terms = vec![(l.omega(0), y), (l.beta(i, 0), -2.0 * y)];
        for j in 1..=p {
            if x[j - 1] != 0.0 {
                terms.push((l.omega(j), y * x[j - 1]));
                terms.push((l.beta(i, j), -2.0 * y * x[j - 1]));
            }
        }
        terms.push((l.e(i), 1.0));
        b.row(terms, Sense::Ge, 1.0, Family::Resvm);
    }
    for i in 0..n {
        for j in 0..=p {
            b.rows.extend(linearize_bilinear(
                l.beta(i, j),
                l.xi(i),
                l.omega(j),
                w,
                Family::Resvm,
            ));
        }
    }
    Ok(MinlpModel {
        vars: b.vars,
        rows: b.rows,
        cones: b.cones,
        layout: Layout::Resvm(layout),
        config,
        consts,
        data: data.clone(),
    })
}

/// Recompute the objective from the variable roles, independently of the
/// stored cost vector: `δ + c1 Σ e + c2 Σ ξ + c3 Σ d` for OCTSVM and
/// `½‖ω‖² + c1 Σ e + c2 Σ ξ` for RE-SVM.
pub fn objective_of(model: &MinlpModel, sol: &Solution) -> Result<f64, OctError> {
    if sol.values.len() != model.num_vars() {
        return Err(OctError::Dimension {
            expected: model.num_vars(),
            found: sol.values.len(),
        });
    }
    let c = &model.config;
    let sum_role = |role: Role| -> f64 {
        model
            .vars
            .iter()
            .zip(&sol.values)
            .filter(|(v, _)| v.role == role)
            .map(|(_, x)| x)
            .sum()
    };
    Ok(match &model.layout {
        Layout::Octsvm(_) => {
            sum_role(Role::Delta)
                + c.c1 * sum_role(Role::Error)
                + c.c2 * sum_role(Role::Xi)
                + c.c3 * sum_role(Role::D)
        }
        Layout::Resvm(l) => {
            let norm2: f64 = (1..=l.p).map(|j| sol.values[l.omega(j)].powi(2)).sum();
            0.5 * norm2 + c.c1 * sum_role(Role::Error) + c.c2 * sum_role(Role::Xi)
        }
    })
}

/// Turn an integral, feasible solution into a classifier.
pub fn extract_tree(model: &MinlpModel, sol: &Solution) -> Result<TreeClassifier, OctError> {
    let report = crate::solver::check_feasible(sol, model, model.config.feas_tol.max(1e-6));
    if !report.passes() {
        return Err(OctError::Infeasible(format!(
            "solution fails the audit: {report}"
        )));
    }
    let fallback = model.data.majority_label();
    match &model.layout {
        Layout::Octsvm(l) => {
            let mut tree = TreeClassifier::constant(l.topo.clone(), l.p, fallback);
            for t in 1..=l.node_count() {
                if sol.values[l.d(t)] > 0.5 {
                    tree.split_active[t - 1] = true;
                    tree.intercepts[t - 1] = sol.values[l.omega(t, 0)];
                    for j in 1..=l.p {
                        tree.weights[t - 1][j - 1] = sol.values[l.omega(t, j)];
                    }
                }
            }
            tree.validate()?;
            Ok(tree)
        }
        Layout::Resvm(l) => {
            let mut tree = TreeClassifier::constant(TreeTopology::new(0), l.p, fallback);
            tree.split_active[0] = true;
            tree.intercepts[0] = sol.values[l.omega(0)];
            for j in 1..=l.p {
                tree.weights[0][j - 1] = sol.values[l.omega(j)];
            }
            Ok(tree)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::from_normalized(&[vec![0.2], vec![0.8]], vec![-1, 1]).unwrap()
    }

    #[test]
    fn big_m_examples() {
        let c = ModelConfig::default();
        let m = big_m_values(1, &c);
        assert_eq!((m.m_route, m.m_err, m.m_norm), (20.0, 21.0, 10.0));
        let m = big_m_values(4, &c);
        assert_eq!((m.m_route, m.m_err, m.m_norm), (50.0, 51.0, 20.0));
        let c1 = ModelConfig {
            coef_bound: 1.0,
            ..c
        };
        assert!((big_m_values(2, &c1).m_norm - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mccormick_envelope_at_half() {
        // ω = 4, ξ = 0.5, W = 10 → β ∈ [−1, 5]
        let rows = linearize_bilinear(0, 1, 2, 10.0, Family::Octsvm(3));
        let feasible = |beta: f64| rows.iter().all(|r| r.violation(&[beta, 0.5, 4.0]) <= 1e-12);
        assert!(feasible(-1.0) && feasible(5.0) && feasible(2.0));
        assert!(!feasible(-1.001) && !feasible(5.001));
    }

    #[test]
    fn root_only_census() {
        let cfg = ModelConfig {
            depth: 0,
            ..ModelConfig::default()
        };
        let m = build_octsvm_model(&tiny(), &TreeTopology::new(0), &cfg).unwrap();
        assert_eq!(m.family_count(Family::Octsvm(5)), 0);
        assert_eq!(m.family_count(Family::Octsvm(7)), 0);
        assert_eq!(m.family_count(Family::Octsvm(6)), 2);
    }

    #[test]
    fn objective_arithmetic() {
        let cfg = ModelConfig {
            c1: 0.5,
            c2: 0.1,
            c3: 0.01,
            depth: 0,
            ..ModelConfig::default()
        };
        let m = build_octsvm_model(&tiny(), &TreeTopology::new(0), &cfg).unwrap();
        let l = m.octsvm_layout().unwrap().clone();
        let mut values = vec![0.0; m.num_vars()];
        assert_eq!(
            objective_of(
                &m,
                &Solution {
                    values: values.clone(),
                    objective: 0.0
                }
            )
            .unwrap(),
            0.0
        );
        values[l.delta()] = 1.0;
        values[l.e(0, 1)] = 2.0;
        values[l.xi(1, 1)] = 1.0;
        values[l.d(1)] = 1.0;
        let v = objective_of(
            &m,
            &Solution {
                values,
                objective: 0.0,
            },
        )
        .unwrap();
        assert!((v - 2.11).abs() < 1e-12);
    }

    #[test]
    fn rejects_fixing_of_continuous_variable() {
        let cfg = ModelConfig {
            depth: 0,
            ..ModelConfig::default()
        };
        let m = build_octsvm_model(&tiny(), &TreeTopology::new(0), &cfg).unwrap();
        let mut fixing = BTreeMap::new();
        fixing.insert(0, true);
        assert!(m.continuous_subproblem(&fixing).is_err());
    }

    #[test]
    fn single_class_rejected() {
        let d = Dataset::from_normalized(&[vec![0.2], vec![0.8]], vec![1, 1]).unwrap();
        let cfg = ModelConfig {
            depth: 0,
            ..ModelConfig::default()
        };
        assert!(matches!(
            build_octsvm_model(&d, &TreeTopology::new(0), &cfg),
            Err(OctError::SingleClass)
        ));
    }
}
