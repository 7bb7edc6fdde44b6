//! Small standard graphs used throughout the test-suite and docs.

use crate::num::Real;
use crate::tree::{BoundaryPaymentGraph, RootRewardTree};

/// The line `0 - 1 - ... - n` rooted at `n` (reward at `n`).
pub fn line_tree(n: usize) -> RootRewardTree {
    assert!(n >= 2);
    let ids: Vec<String> = (0..=n).map(|i| i.to_string()).collect();
    let edges: Vec<(String, String)> = (0..n)
        .map(|i| (i.to_string(), (i + 1).to_string()))
        .collect();
    RootRewardTree::new(ids, &edges, &n.to_string()).unwrap()
}

/// The line `0 - 1 - ... - n` rooted at `0` (reward at `0`).
pub fn line_tree_rooted_at_zero(n: usize) -> RootRewardTree {
    assert!(n >= 2);
    let ids: Vec<String> = (0..=n).map(|i| i.to_string()).collect();
    let edges: Vec<(String, String)> = (0..n)
        .map(|i| (i.to_string(), (i + 1).to_string()))
        .collect();
    RootRewardTree::new(ids, &edges, "0").unwrap()
}

/// The line graph with arbitrary endpoint payments `p(0)` and `p(n)`.
pub fn line_graph<F: Real>(n: usize, p0: F, pn: F) -> BoundaryPaymentGraph<F> {
    let ids: Vec<String> = (0..=n).map(|i| i.to_string()).collect();
    let edges: Vec<(String, String)> = (0..n)
        .map(|i| (i.to_string(), (i + 1).to_string()))
        .collect();
    BoundaryPaymentGraph::new(
        ids,
        &edges,
        &["0".into(), n.to_string()],
        &[("0".into(), p0), (n.to_string(), pn)],
    )
    .unwrap()
}

/// The half-ladder: line `0 - 1 - ... - n` plus a pendant leaf `i*` at each
/// `i` in `1..=n`, rooted at `0`.
pub fn half_ladder(n: usize) -> RootRewardTree {
    assert!(n >= 1);
    let mut ids: Vec<String> = (0..=n).map(|i| i.to_string()).collect();
    let mut edges: Vec<(String, String)> = (0..n)
        .map(|i| (i.to_string(), (i + 1).to_string()))
        .collect();
    for i in 1..=n {
        ids.push(format!("{i}*"));
        edges.push((i.to_string(), format!("{i}*")));
    }
    RootRewardTree::new(ids, &edges, "0").unwrap()
}

/// The T graph: leaves `0`, `1`, `2`, open vertices `S` (south, adjacent
/// to `0`) and `N` (north, adjacent to `1`, `2` and `S`), with the identity
/// payment on leaf labels.
pub fn t_graph() -> BoundaryPaymentGraph<f64> {
    BoundaryPaymentGraph::new(
        vec!["0".into(), "1".into(), "2".into(), "N".into(), "S".into()],
        &[
            ("0".into(), "S".into()),
            ("S".into(), "N".into()),
            ("N".into(), "1".into()),
            ("N".into(), "2".into()),
        ],
        &["0".into(), "1".into(), "2".into()],
        &[("0".into(), 0.0), ("1".into(), 1.0), ("2".into(), 2.0)],
    )
    .unwrap()
}

/// The T-graph shape as a root-reward tree, rewarding the given leaf
/// (`"0"`, `"1"` or `"2"`).
pub fn t_tree(reward_leaf: &str) -> RootRewardTree {
    RootRewardTree::new(
        vec!["0".into(), "1".into(), "2".into(), "N".into(), "S".into()],
        &[
            ("0".into(), "S".into()),
            ("S".into(), "N".into()),
            ("N".into(), "1".into()),
            ("N".into(), "2".into()),
        ],
        reward_leaf,
    )
    .unwrap()
}

/// A three-subtree tree whose marked vertex has journey data
/// `{(3,1),(4,2),(3,1)}`; returns the tree and the marked vertex.
///
/// Shape: a span-3 trunk `r - a1 - a2 - a3`; a span-4 basic subtree rooted
/// at `a1` with two depth-4 leaves (`b4` and `c2`); and a span-3 chain
/// rooted at `b2`. The marked vertex `e1` sits one step into that chain.
pub fn figure_tree() -> (RootRewardTree, usize) {
    let ids: Vec<String> = [
        "r", "a1", "a2", "a3", "b1", "b2", "b3", "b4", "c1", "c2", "e1", "e2", "e3",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let edges: Vec<(String, String)> = [
        ("r", "a1"),
        ("a1", "a2"),
        ("a2", "a3"),
        ("a1", "b1"),
        ("b1", "b2"),
        ("b2", "b3"),
        ("b3", "b4"),
        ("b2", "c1"),
        ("c1", "c2"),
        ("b2", "e1"),
        ("e1", "e2"),
        ("e2", "e3"),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    let t = RootRewardTree::new(ids, &edges, "r").unwrap();
    let v = t.index("e1").unwrap();
    (t, v)
}
