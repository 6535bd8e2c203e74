//! Complete binary tree topology and the deployable tree classifier.
//!
//! Nodes are numbered breadth-first from 1; the children of `t` are `2t`
//! (left) and `2t + 1` (right).

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::OctError;

/// Node structure of a complete binary tree of depth `D`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeTopology {
    depth: usize,
}

impl TreeTopology {
    pub fn new(depth: usize) -> TreeTopology {
        TreeTopology { depth }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `T = 2^(D+1) − 1`.
    pub fn node_count(&self) -> usize {
        (1usize << (self.depth + 1)) - 1
    }

    /// All nodes `1..=T`.
    pub fn nodes(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.node_count()
    }

    /// Parent of `t ≥ 2`; `None` for the root.
    pub fn parent(&self, t: usize) -> Option<usize> {
        (t >= 2 && t <= self.node_count()).then_some(t / 2)
    }

    pub fn children(&self, t: usize) -> Option<(usize, usize)> {
        (2 * t < self.node_count()).then_some((2 * t, 2 * t + 1))
    }

    /// Nodes reached through a left branch (even indices).
    pub fn left_branch_nodes(&self) -> Vec<usize> {
        (2..=self.node_count()).filter(|t| t % 2 == 0).collect()
    }

    /// Nodes reached through a right branch (odd indices ≥ 3).
    pub fn right_branch_nodes(&self) -> Vec<usize> {
        (3..=self.node_count()).filter(|t| t % 2 == 1).collect()
    }

    /// Level of node `t` (root is level 0).
    pub fn level_of(&self, t: usize) -> usize {
        (usize::BITS - 1 - t.leading_zeros()) as usize
    }

    /// Nodes of level `k`: `2^k ..= 2^(k+1) − 1`.
    pub fn level(&self, k: usize) -> std::ops::RangeInclusive<usize> {
        (1 << k)..=((1 << (k + 1)) - 1)
    }

    /// Partition of the nodes by level, `u_0, …, u_D`.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        (0..=self.depth).map(|k| self.level(k).collect()).collect()
    }

    /// Nodes without children, `⌊T/2⌋ + 1 ..= T`.
    pub fn leaves(&self) -> std::ops::RangeInclusive<usize> {
        self.level(self.depth)
    }

    /// Path from the root to `leaf`, inclusive.
    pub fn path_to(&self, leaf: usize) -> Vec<usize> {
        let mut path = Vec::with_capacity(self.depth + 1);
        let mut t = leaf;
        while t >= 1 {
            path.push(t);
            t /= 2;
        }
        path.reverse();
        path
    }
}

/// Label-flip tolerant classifier: one hyperplane per node plus split flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeClassifier {
    pub topology: TreeTopology,
    /// `weights[t − 1]` is `ω_t` (length `p`).
    pub weights: Vec<Vec<f64>>,
    /// `intercepts[t − 1]` is `ω_t0`.
    pub intercepts: Vec<f64>,
    /// `split_active[t − 1]` is `d_t`.
    pub split_active: Vec<bool>,
    pub fallback_label: i8,
}

impl TreeClassifier {
    /// A tree with every split inactive; predicts `fallback_label`.
    pub fn constant(topology: TreeTopology, p: usize, fallback_label: i8) -> TreeClassifier {
        let t = topology.node_count();
        TreeClassifier {
            topology,
            weights: vec![vec![0.0; p]; t],
            intercepts: vec![0.0; t],
            split_active: vec![false; t],
            fallback_label,
        }
    }

    pub fn num_features(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Checks hierarchy, zeroed inactive nodes and array lengths.
    pub fn validate(&self) -> Result<(), OctError> {
        let t = self.topology.node_count();
        if self.weights.len() != t || self.intercepts.len() != t || self.split_active.len() != t {
            return Err(OctError::Invalid(format!(
                "classifier arrays must have {t} nodes"
            )));
        }
        let p = self.num_features();
        if self.weights.iter().any(|w| w.len() != p) {
            return Err(OctError::Invalid("ragged weight vectors".into()));
        }
        if self.fallback_label != 1 && self.fallback_label != -1 {
            return Err(OctError::Invalid("fallback label must be -1 or +1".into()));
        }
        for node in 2..=t {
            if self.split_active[node - 1] && !self.split_active[node / 2 - 1] {
                return Err(OctError::Invalid(format!(
                    "node {node} splits below an inactive parent"
                )));
            }
        }
        for node in 1..=t {
            if !self.split_active[node - 1]
                && (self.intercepts[node - 1] != 0.0
                    || self.weights[node - 1].iter().any(|&w| w != 0.0))
            {
                return Err(OctError::Invalid(format!(
                    "inactive node {node} has nonzero hyperplane"
                )));
            }
        }
        Ok(())
    }

    /// `ω_t·x + ω_t0`.
    pub fn node_value(&self, t: usize, x: &[f64]) -> f64 {
        let w = &self.weights[t - 1];
        w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.intercepts[t - 1]
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), OctError> {
        if x.len() != self.num_features() {
            return Err(OctError::Dimension {
                expected: self.num_features(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Nodes visited by `x`: start at the root and follow active splits,
    /// going right when `ω_t·x + ω_t0 ≥ 0`.
    pub fn route(&self, x: &[f64]) -> Result<Vec<usize>, OctError> {
        self.check_dim(x)?;
        let mut path = vec![1];
        let mut t = 1;
        while self.split_active[t - 1] {
            let Some((l, r)) = self.topology.children(t) else {
                break;
            };
            let next = if self.node_value(t, x) >= 0.0 { r } else { l };
            if !self.split_active[next - 1] {
                break;
            }
            path.push(next);
            t = next;
        }
        Ok(path)
    }

    /// Sign of the last active hyperplane on the route, or the fallback
    /// label when the root does not split.
    pub fn predict(&self, x: &[f64]) -> Result<i8, OctError> {
        let path = self.route(x)?;
        let last = *path.last().expect("route is nonempty");
        if !self.split_active[last - 1] {
            return Ok(self.fallback_label);
        }
        Ok(if self.node_value(last, x) >= 0.0 {
            1
        } else {
            -1
        })
    }

    pub fn accuracy(&self, test: &Dataset) -> Result<ConfusionSummary, OctError> {
        let preds = (0..test.len())
            .map(|i| self.predict(test.row(i)))
            .collect::<Result<Vec<_>, _>>()?;
        ConfusionSummary::from_predictions(&preds, &test.labels)
    }
}

/// Correct-prediction count over a test set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionSummary {
    pub correct: usize,
    pub total: usize,
    pub accuracy_percent: f64,
}

impl ConfusionSummary {
    pub fn from_predictions(pred: &[i8], truth: &[i8]) -> Result<ConfusionSummary, OctError> {
        if truth.is_empty() {
            return Err(OctError::Invalid("accuracy of an empty test set".into()));
        }
        if pred.len() != truth.len() {
            return Err(OctError::Dimension {
                expected: truth.len(),
                found: pred.len(),
            });
        }
        let correct = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
        let total = truth.len();
        Ok(ConfusionSummary {
            correct,
            total,
            accuracy_percent: 100.0 * correct as f64 / total as f64,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_one_topology() {
        let t = TreeTopology::new(1);
        assert_eq!(t.node_count(), 3);
        assert_eq!(t.parent(2), Some(1));
        assert_eq!(t.parent(3), Some(1));
        assert_eq!(t.parent(1), None);
        assert_eq!(t.left_branch_nodes(), vec![2]);
        assert_eq!(t.right_branch_nodes(), vec![3]);
    }

    #[test]
    fn depth_two_levels() {
        let t = TreeTopology::new(2);
        assert_eq!(t.node_count(), 7);
        assert_eq!(t.left_branch_nodes(), vec![2, 4, 6]);
        assert_eq!(t.right_branch_nodes(), vec![3, 5, 7]);
        assert_eq!(t.levels(), vec![vec![1], vec![2, 3], vec![4, 5, 6, 7]]);
        assert_eq!(t.path_to(6), vec![1, 3, 6]);
        assert_eq!(t.level_of(5), 2);
    }

    #[test]
    fn root_only_topology() {
        let t = TreeTopology::new(0);
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.levels(), vec![vec![1]]);
        assert!(t.left_branch_nodes().is_empty());
        assert!(t.right_branch_nodes().is_empty());
        assert_eq!(t.children(1), None);
    }
}
