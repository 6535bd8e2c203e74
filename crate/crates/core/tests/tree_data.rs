use octsvm::{normalize_features, ConfusionSummary, Dataset, TreeClassifier, TreeTopology};
use proptest::prelude::*;

fn one_dim(depth: usize) -> TreeClassifier {
    TreeClassifier::constant(TreeTopology::new(depth), 1, 1)
}

#[test]
fn topology_shapes_up_to_depth_six() {
    for depth in 0..=6 {
        let topo = TreeTopology::new(depth);
        let t = topo.node_count();
        assert_eq!(t, (1 << (depth + 1)) - 1);
        assert_eq!(topo.parent(1), None);
        for node in 2..=t {
            assert_eq!(topo.parent(node), Some(node / 2));
            assert_eq!(topo.left_branch_nodes().contains(&node), node % 2 == 0);
            assert_eq!(topo.right_branch_nodes().contains(&node), node % 2 == 1);
        }
        let mut seen: Vec<usize> = Vec::new();
        for (k, level) in topo.levels().iter().enumerate() {
            assert_eq!(level.len(), 1 << k);
            seen.extend(level);
        }
        seen.sort_unstable();
        assert_eq!(seen, (1..=t).collect::<Vec<_>>());
        assert_eq!(topo.levels()[0], vec![1]);
        let mut branches = topo.left_branch_nodes();
        branches.extend(topo.right_branch_nodes());
        branches.sort_unstable();
        assert_eq!(branches, (2..=t).collect::<Vec<_>>());
    }
}

#[test]
fn routing_examples() {
    let mut tree = one_dim(1);
    tree.split_active = vec![true, true, true];
    tree.weights[0] = vec![1.0];
    tree.intercepts[0] = -0.5;
    assert_eq!(tree.route(&[0.1]).unwrap(), vec![1, 2]);
    assert_eq!(tree.route(&[0.5]).unwrap(), vec![1, 3]);

    tree.split_active = vec![true, false, false];
    tree.weights[1] = vec![0.0];
    tree.weights[2] = vec![0.0];
    assert_eq!(tree.route(&[0.9]).unwrap(), vec![1]);
    assert!(tree.route(&[0.1, 0.2]).is_err());
}

#[test]
fn prediction_examples() {
    let mut tree = one_dim(1);
    tree.split_active = vec![true, true, true];
    tree.weights = vec![vec![1.0], vec![1.0], vec![1.0]];
    tree.intercepts = vec![-0.5, -0.25, -0.75];
    tree.validate().unwrap();
    assert_eq!(tree.predict(&[0.1]).unwrap(), -1);
    assert_eq!(tree.predict(&[0.25]).unwrap(), 1);
    assert_eq!(tree.predict(&[0.75]).unwrap(), 1);
    assert_eq!(tree.predict(&[0.6]).unwrap(), -1);

    let constant = one_dim(2);
    for x in [0.0, 0.3, 1.0] {
        assert_eq!(constant.predict(&[x]).unwrap(), 1);
    }
}

#[test]
fn hierarchy_and_zeroing_enforced() {
    let mut tree = one_dim(1);
    tree.split_active = vec![false, true, false];
    tree.weights[1] = vec![1.0];
    assert!(tree.validate().is_err());

    let mut tree = one_dim(1);
    tree.weights[2] = vec![0.5];
    assert!(tree.validate().is_err());
}

#[test]
fn accuracy_examples() {
    let all = ConfusionSummary::from_predictions(&[1; 10], &[1; 10]).unwrap();
    assert_eq!(all.accuracy_percent, 100.0);
    let half =
        ConfusionSummary::from_predictions(&[1; 10], &[1, -1, 1, -1, 1, -1, 1, -1, 1, -1]).unwrap();
    assert_eq!((half.correct, half.accuracy_percent), (5, 50.0));
    assert!(ConfusionSummary::from_predictions(&[], &[]).is_err());
}

#[test]
fn normalization_examples() {
    let raw = vec![
        vec![0.0, 3.0, 0.0],
        vec![5.0, 3.0, 0.5],
        vec![10.0, 3.0, 1.0],
    ];
    let data = normalize_features(&raw, vec![-1, 1, 1]).unwrap();
    let cols: Vec<Vec<f64>> = (0..3)
        .map(|j| data.rows().map(|r| r[j]).collect())
        .collect();
    assert_eq!(cols[0], vec![0.0, 0.5, 1.0]);
    assert_eq!(cols[1], vec![0.0, 0.0, 0.0]);
    assert_eq!(cols[2], vec![0.0, 0.5, 1.0]);
}

#[test]
fn classifier_json_round_trip() {
    let mut tree = one_dim(1);
    tree.split_active = vec![true, false, false];
    tree.weights[0] = vec![-2.5];
    tree.intercepts[0] = 1.0;
    let text = serde_json::to_string(&tree).unwrap();
    let back: TreeClassifier = serde_json::from_str(&text).unwrap();
    assert_eq!(back, tree);
}

/// A tree of the given depth with random hyperplanes and a downward-closed
/// set of active nodes.
fn arb_tree(p: usize) -> impl Strategy<Value = TreeClassifier> {
    (0usize..=3).prop_flat_map(move |depth| {
        let t = (1usize << (depth + 1)) - 1;
        (
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, p), t),
            prop::collection::vec(-5.0f64..5.0, t),
            prop::collection::vec(any::<bool>(), t),
            prop_oneof![Just(-1i8), Just(1i8)],
        )
            .prop_map(move |(weights, intercepts, mut active, fallback)| {
                let topo = TreeTopology::new(depth);
                for node in 2..=t {
                    if !active[node / 2 - 1] {
                        active[node - 1] = false;
                    }
                }
                let mut tree = TreeClassifier::constant(topo, p, fallback);
                for node in 0..t {
                    if active[node] {
                        tree.weights[node] = weights[node].clone();
                        tree.intercepts[node] = intercepts[node];
                    }
                }
                tree.split_active = active;
                tree
            })
    })
}

proptest! {
    #[test]
    fn off_path_hyperplanes_do_not_matter(
        tree in arb_tree(3),
        x in prop::collection::vec(0.0f64..1.0, 3),
        noise in prop::collection::vec(-5.0f64..5.0, 4),
    ) {
        tree.validate().unwrap();
        let path = tree.route(&x).unwrap();
        let label = tree.predict(&x).unwrap();
        prop_assert_eq!(path[0], 1);
        for w in path.windows(2) {
            prop_assert_eq!(w[1] / 2, w[0]);
        }
        let mut other = tree.clone();
        for node in other.topology.nodes() {
            if !path.contains(&node) && other.split_active[node - 1] {
                other.weights[node - 1] = noise[..3].to_vec();
                other.intercepts[node - 1] = noise[3];
            }
        }
        prop_assert_eq!(other.route(&x).unwrap(), path);
        prop_assert_eq!(other.predict(&x).unwrap(), label);
        prop_assert_eq!(tree.predict(&x).unwrap(), label);
    }

    #[test]
    fn normalization_is_idempotent(
        rows in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 2..12),
    ) {
        let labels: Vec<i8> = (0..rows.len()).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let data = normalize_features(&rows, labels.clone()).unwrap();
        for r in data.rows() {
            prop_assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        for (i, raw) in rows.iter().enumerate() {
            let again = data.scaling.apply(raw).unwrap();
            for (a, b) in again.iter().zip(data.row(i)) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
        let normalized: Vec<Vec<f64>> = data.rows().map(<[f64]>::to_vec).collect();
        let twice = normalize_features(&normalized, labels).unwrap();
        for i in 0..data.len() {
            for (a, b) in twice.row(i).iter().zip(data.row(i)) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn constant_classifier_accuracy_is_prevalence(
        labels in prop::collection::vec(prop_oneof![Just(-1i8), Just(1i8)], 1..40),
        fallback in prop_oneof![Just(-1i8), Just(1i8)],
    ) {
        let rows = vec![vec![0.5, 0.5]; labels.len()];
        let data = Dataset::from_normalized(&rows, labels.clone()).unwrap();
        let tree = TreeClassifier::constant(TreeTopology::new(2), 2, fallback);
        let acc = tree.accuracy(&data).unwrap();
        let matching = labels.iter().filter(|&&y| y == fallback).count();
        prop_assert_eq!(acc.correct, matching);
        prop_assert!((acc.accuracy_percent - 100.0 * matching as f64 / labels.len() as f64).abs() < 1e-12);
        prop_assert!((0.0..=100.0).contains(&acc.accuracy_percent));
    }
}
