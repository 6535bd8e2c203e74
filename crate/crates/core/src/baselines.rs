//! CART baseline: greedy axis-parallel splits on Gini impurity followed by
//! weakest-link cost-complexity pruning.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::par::{map_range, Exec};
use crate::OctError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartParams {
    pub max_depth: usize,
    /// Minimum leaf size as a fraction of the training set (rounded up, at
    /// least one observation).
    pub min_leaf_fraction: f64,
    /// Cost-complexity constant: a subtree is collapsed while its impurity
    /// reduction per removed split is at most `alpha`.
    pub alpha: f64,
    #[serde(default)]
    pub exec: Exec,
}

impl Default for CartParams {
    fn default() -> Self {
        CartParams {
            max_depth: 3,
            min_leaf_fraction: 0.05,
            alpha: 0.0,
            exec: Exec::default(),
        }
    }
}

impl CartParams {
    pub fn validate(&self) -> Result<(), OctError> {
        if self.max_depth < 1 {
            return Err(OctError::Invalid(
                "CART max_depth must be at least 1".into(),
            ));
        }
        if !(self.min_leaf_fraction > 0.0 && self.min_leaf_fraction < 0.5) {
            return Err(OctError::Invalid(
                "CART min_leaf_fraction must lie in (0, 0.5)".into(),
            ));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(OctError::Invalid(
                "CART alpha must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Class counts `[negatives, positives]`.
pub type Counts = [usize; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AxisNode {
    Leaf {
        counts: Counts,
    },
    /// `x[feature] < threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        counts: Counts,
        left: Box<AxisNode>,
        right: Box<AxisNode>,
    },
}

fn majority(c: Counts) -> i8 {
    if c[1] >= c[0] {
        1
    } else {
        -1
    }
}

/// Gini impurity times node size: `n − (n₋² + n₊²)/n`.
fn gini_mass(c: Counts) -> f64 {
    let n = (c[0] + c[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    n - ((c[0] * c[0] + c[1] * c[1]) as f64) / n
}

impl AxisNode {
    pub fn counts(&self) -> Counts {
        match self {
            AxisNode::Leaf { counts } | AxisNode::Split { counts, .. } => *counts,
        }
    }

    pub fn label(&self) -> i8 {
        majority(self.counts())
    }

    pub fn leaves(&self) -> usize {
        match self {
            AxisNode::Leaf { .. } => 1,
            AxisNode::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            AxisNode::Leaf { .. } => 0,
            AxisNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Size-weighted Gini impurity summed over the leaves of this subtree.
    fn leaf_gini_mass(&self) -> f64 {
        match self {
            AxisNode::Leaf { counts } => gini_mass(*counts),
            AxisNode::Split { left, right, .. } => left.leaf_gini_mass() + right.leaf_gini_mass(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisTree {
    pub root: AxisNode,
    pub num_features: usize,
    pub max_depth: usize,
}

impl AxisTree {
    /// Training-sample weighted Gini impurity of the leaves, normalized by
    /// the root size.
    pub fn impurity(&self) -> f64 {
        let c = self.root.counts();
        self.root.leaf_gini_mass() / (c[0] + c[1]).max(1) as f64
    }

    /// Nested plain-text rendering, one node per line.
    pub fn to_text(&self) -> String {
        fn rec(node: &AxisNode, indent: usize, out: &mut String) {
            let pad = "  ".repeat(indent);
            match node {
                AxisNode::Leaf { counts } => {
                    let _ = writeln!(
                        out,
                        "{pad}leaf label={} counts={}/{}",
                        majority(*counts),
                        counts[0],
                        counts[1]
                    );
                }
                AxisNode::Split {
                    feature,
                    threshold,
                    counts,
                    left,
                    right,
                } => {
                    let _ = writeln!(
                        out,
                        "{pad}split x{} < {threshold:?} counts={}/{}",
                        feature + 1,
                        counts[0],
                        counts[1]
                    );
                    rec(left, indent + 1, out);
                    rec(right, indent + 1, out);
                }
            }
        }
        let mut out = String::new();
        rec(&self.root, 0, &mut out);
        out
    }

    pub fn accuracy(&self, data: &Dataset) -> Result<f64, OctError> {
        let mut correct = 0usize;
        for i in 0..data.len() {
            if cart_predict(self, data.row(i))? == data.labels[i] {
                correct += 1;
            }
        }
        Ok(100.0 * correct as f64 / data.len().max(1) as f64)
    }
}

/// Best split of a node found by the exhaustive scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    /// `Σ_children n_c · gini(c)`.
    pub gini_mass: f64,
}

fn better(a: &SplitChoice, b: &SplitChoice) -> bool {
    a.gini_mass < b.gini_mass
        || (a.gini_mass == b.gini_mass
            && (a.feature < b.feature || (a.feature == b.feature && a.threshold < b.threshold)))
}

fn scan_feature(data: &Dataset, idx: &[usize], j: usize, min_leaf: usize) -> Option<SplitChoice> {
    let mut order: Vec<(f64, i8)> = idx
        .iter()
        .map(|&i| (data.row(i)[j], data.labels[i]))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total: Counts = [0, 0];
    for &(_, y) in &order {
        total[usize::from(y > 0)] += 1;
    }
    let mut left: Counts = [0, 0];
    let mut best: Option<SplitChoice> = None;
    for k in 0..order.len() - 1 {
        left[usize::from(order[k].1 > 0)] += 1;
        if order[k].0 == order[k + 1].0 {
            continue;
        }
        let nl = k + 1;
        if nl < min_leaf || order.len() - nl < min_leaf {
            continue;
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let cand = SplitChoice {
            feature: j,
            threshold: 0.5 * (order[k].0 + order[k + 1].0),
            gini_mass: gini_mass(left) + gini_mass(right),
        };
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    best
}

/// Exhaustive scan of every feature and every midpoint between consecutive
/// distinct values, restricted to splits leaving `min_leaf` observations on
/// each side. Ties go to the lower feature, then the lower threshold.
pub fn best_split(
    data: &Dataset,
    idx: &[usize],
    min_leaf: usize,
    exec: Exec,
) -> Option<SplitChoice> {
    if idx.len() < 2 {
        return None;
    }
    let per_feature = map_range(exec, data.num_features(), |j| {
        scan_feature(data, idx, j, min_leaf)
    });
    let mut best: Option<SplitChoice> = None;
    for cand in per_feature.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    best
}

fn counts_of(data: &Dataset, idx: &[usize]) -> Counts {
    let mut c = [0, 0];
    for &i in idx {
        c[usize::from(data.labels[i] > 0)] += 1;
    }
    c
}

fn grow(
    data: &Dataset,
    idx: &[usize],
    depth: usize,
    params: &CartParams,
    min_leaf: usize,
) -> AxisNode {
    let counts = counts_of(data, idx);
    if depth >= params.max_depth || counts[0] == 0 || counts[1] == 0 {
        return AxisNode::Leaf { counts };
    }
    let Some(split) = best_split(data, idx, min_leaf, params.exec) else {
        return AxisNode::Leaf { counts };
    };
    // Splits that leave the impurity unchanged are kept for now; a deeper
    // split may still pay off, and pruning removes them otherwise.
    if split.gini_mass > gini_mass(counts) + 1e-12 {
        return AxisNode::Leaf { counts };
    }
    let (l, r): (Vec<usize>, Vec<usize>) = idx
        .iter()
        .partition(|&&i| data.row(i)[split.feature] < split.threshold);
    AxisNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        counts,
        left: Box::new(grow(data, &l, depth + 1, params, min_leaf)),
        right: Box::new(grow(data, &r, depth + 1, params, min_leaf)),
    }
}

/// Weakest link of a subtree: `(g, preorder position)` of the internal node
/// with the smallest impurity reduction per removed split.
fn weakest(node: &AxisNode, n_total: f64, pos: &mut usize, best: &mut Option<(f64, usize)>) {
    let here = *pos;
    *pos += 1;
    if let AxisNode::Split {
        left,
        right,
        counts,
        ..
    } = node
    {
        let g = (gini_mass(*counts) - node.leaf_gini_mass()) / n_total / (node.leaves() - 1) as f64;
        if best.is_none_or(|(bg, _)| g < bg) {
            *best = Some((g, here));
        }
        weakest(left, n_total, pos, best);
        weakest(right, n_total, pos, best);
    }
}

fn collapse(node: &mut AxisNode, target: usize, pos: &mut usize) -> bool {
    let here = *pos;
    *pos += 1;
    if here == target {
        *node = AxisNode::Leaf {
            counts: node.counts(),
        };
        return true;
    }
    if let AxisNode::Split { left, right, .. } = node {
        return collapse(left, target, pos) || collapse(right, target, pos);
    }
    false
}

/// Weakest-link pruning: repeatedly collapse the internal node whose
/// impurity reduction per removed split, measured as a fraction of the
/// training set, is smallest, while that value is at most `alpha`.
pub fn prune(tree: &mut AxisTree, alpha: f64) {
    let c = tree.root.counts();
    let n_total = (c[0] + c[1]).max(1) as f64;
    loop {
        let mut best = None;
        weakest(&tree.root, n_total, &mut 0, &mut best);
        match best {
            Some((g, at)) if g <= alpha + 1e-15 => {
                collapse(&mut tree.root, at, &mut 0);
            }
            _ => break,
        }
    }
}

/// Grow a CART tree on `data` and prune it with `params.alpha`. Single-class
/// data gives a single leaf.
pub fn cart_train(data: &Dataset, params: &CartParams) -> Result<AxisTree, OctError> {
    params.validate()?;
    if data.is_empty() {
        return Err(OctError::Invalid(
            "CART needs at least one observation".into(),
        ));
    }
    let min_leaf = ((params.min_leaf_fraction * data.len() as f64).ceil() as usize).max(1);
    let idx: Vec<usize> = (0..data.len()).collect();
    let root = grow(data, &idx, 0, params, min_leaf);
    let mut tree = AxisTree {
        root,
        num_features: data.num_features(),
        max_depth: params.max_depth,
    };
    prune(&mut tree, params.alpha);
    Ok(tree)
}

/// Route `x` by `x_j < b → left` and return the leaf majority (ties → +1).
pub fn cart_predict(tree: &AxisTree, x: &[f64]) -> Result<i8, OctError> {
    if x.len() != tree.num_features {
        return Err(OctError::Dimension {
            expected: tree.num_features,
            found: x.len(),
        });
    }
    let mut node = &tree.root;
    loop {
        match node {
            AxisNode::Leaf { counts } => return Ok(majority(*counts)),
            AxisNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                node = if x[*feature] < *threshold {
                    left
                } else {
                    right
                };
            }
        }
    }
}
