use octsvm::baselines::{best_split, AxisNode};
use octsvm::{cart_predict, cart_train, AxisTree, CartParams, Dataset, Exec};
use proptest::prelude::*;

fn dataset(rows: Vec<Vec<f64>>, labels: Vec<i8>) -> Dataset {
    Dataset::from_normalized(&rows, labels).unwrap()
}

/// Rows on a 0.1 grid (so ties between values are common) with labels.
fn arb_data(max_n: usize) -> impl Strategy<Value = Dataset> {
    (1usize..=3, 4usize..=max_n).prop_flat_map(|(p, n)| {
        (
            prop::collection::vec(prop::collection::vec(0u8..=10, p), n),
            prop::collection::vec(prop_oneof![Just(-1i8), Just(1i8)], n),
        )
            .prop_map(|(grid, labels)| {
                let rows = grid
                    .into_iter()
                    .map(|r| r.into_iter().map(|v| f64::from(v) / 10.0).collect())
                    .collect();
                dataset(rows, labels)
            })
    })
}

fn class_counts(data: &Dataset, idx: &[usize]) -> [usize; 2] {
    let pos = idx.iter().filter(|&&i| data.labels[i] > 0).count();
    [idx.len() - pos, pos]
}

/// Check counts and the partition of observations at every node.
fn check_node(node: &AxisNode, data: &Dataset, idx: &[usize]) {
    assert_eq!(node.counts(), class_counts(data, idx));
    if let AxisNode::Split {
        feature,
        threshold,
        left,
        right,
        ..
    } = node
    {
        assert!(threshold.is_finite());
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| data.row(i)[*feature] < *threshold);
        assert!(!l.is_empty() && !r.is_empty());
        check_node(left, data, &l);
        check_node(right, data, &r);
    }
}

fn is_subtree(small: &AxisNode, big: &AxisNode) -> bool {
    match (small, big) {
        (AxisNode::Leaf { counts }, other) => *counts == other.counts(),
        (
            AxisNode::Split {
                feature: f,
                threshold: t,
                left: l,
                right: r,
                ..
            },
            AxisNode::Split {
                feature: g,
                threshold: u,
                left: bl,
                right: br,
                ..
            },
        ) => f == g && t == u && is_subtree(l, bl) && is_subtree(r, br),
        _ => false,
    }
}

fn internal_nodes(node: &AxisNode) -> usize {
    match node {
        AxisNode::Leaf { .. } => 0,
        AxisNode::Split { left, right, .. } => 1 + internal_nodes(left) + internal_nodes(right),
    }
}

fn params(depth: usize, alpha: f64) -> CartParams {
    CartParams {
        max_depth: depth,
        min_leaf_fraction: 0.05,
        alpha,
        exec: Exec::Sequential,
    }
}

proptest! {
    #[test]
    fn nodes_partition_their_observations(data in arb_data(40), depth in 1usize..5) {
        let tree = cart_train(&data, &params(depth, 0.0)).unwrap();
        let idx: Vec<usize> = (0..data.len()).collect();
        check_node(&tree.root, &data, &idx);
        prop_assert!(tree.root.depth() <= depth);
    }

    #[test]
    fn parallel_scan_matches_sequential(data in arb_data(60), min_leaf in 1usize..4) {
        let idx: Vec<usize> = (0..data.len()).collect();
        prop_assert_eq!(
            best_split(&data, &idx, min_leaf, Exec::Sequential),
            best_split(&data, &idx, min_leaf, Exec::Parallel)
        );
    }

    #[test]
    fn pruning_keeps_a_subtree_within_budget(data in arb_data(40), alpha in 0.0f64..0.2) {
        let grown = cart_train(&data, &params(4, 0.0)).unwrap();
        let pruned = cart_train(&data, &params(4, alpha)).unwrap();
        prop_assert!(is_subtree(&pruned.root, &grown.root));
        let removed = (internal_nodes(&grown.root) - internal_nodes(&pruned.root)) as f64;
        prop_assert!(pruned.impurity() - grown.impurity() <= alpha * removed + 1e-12);
    }

    #[test]
    fn unlimited_tree_fits_distinct_points(
        points in prop::collection::btree_map((0u16..1000, 0u16..1000), any::<bool>(), 2..40),
    ) {
        let rows: Vec<Vec<f64>> = points.keys().map(|&(a, b)| vec![f64::from(a) / 1000.0, f64::from(b) / 1000.0]).collect();
        let labels: Vec<i8> = points.values().map(|&b| if b { 1 } else { -1 }).collect();
        let data = dataset(rows, labels);
        let tree = cart_train(&data, &CartParams {
            max_depth: 64,
            min_leaf_fraction: 1e-9,
            alpha: 0.0,
            exec: Exec::Sequential,
        })
        .unwrap();
        prop_assert_eq!(tree.accuracy(&data).unwrap(), 100.0);
    }
}

#[test]
fn threshold_ties_route_right() {
    let data = dataset(
        vec![vec![0.1], vec![0.2], vec![0.8], vec![0.9]],
        vec![-1, -1, 1, 1],
    );
    let tree = cart_train(&data, &params(3, 0.0)).unwrap();
    let AxisNode::Split { threshold, .. } = tree.root else {
        panic!("expected a split");
    };
    assert_eq!(threshold, 0.5);
    assert_eq!(cart_predict(&tree, &[0.5]).unwrap(), 1);
    assert_eq!(cart_predict(&tree, &[0.3]).unwrap(), -1);
    assert!(cart_predict(&tree, &[0.3, 0.1]).is_err());
}

#[test]
fn single_leaf_predicts_a_constant() {
    let data = dataset(vec![vec![0.2], vec![0.4], vec![0.6]], vec![1, 1, 1]);
    let tree = cart_train(&data, &params(3, 0.0)).unwrap();
    assert_eq!(tree.root.leaves(), 1);
    for x in [0.0, 0.5, 1.0] {
        assert_eq!(cart_predict(&tree, &[x]).unwrap(), 1);
    }
}

#[test]
fn xor_has_no_useful_single_split() {
    let data = dataset(
        vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
        ],
        vec![1, 1, -1, -1],
    );
    let tree = cart_train(&data, &params(1, 0.0)).unwrap();
    assert_eq!(tree.root.leaves(), 1);
    assert_eq!(tree.accuracy(&data).unwrap(), 50.0);
}

#[test]
fn tree_serializes_and_prints() {
    let data = dataset(
        vec![vec![0.1], vec![0.2], vec![0.8], vec![0.9]],
        vec![-1, -1, 1, 1],
    );
    let tree = cart_train(&data, &params(2, 0.0)).unwrap();
    let back: AxisTree = serde_json::from_str(&serde_json::to_string(&tree).unwrap()).unwrap();
    assert_eq!(back, tree);
    assert!(
        tree.to_text().contains("split x1 < 0.5"),
        "{}",
        tree.to_text()
    );
}
