//! Small hand-built instances used in tests, docs, and the CLI smoke checks.

use crate::assoc::{AggregateAssociation, LiftingSet, ViewLayout};

/// Six views observing two items; view 0 sees both, the others one each.
/// Vertex 2 (view 1) is wrongly matched to vertex 3 (view 2).
pub fn worked_example() -> AggregateAssociation {
    let layout = ViewLayout::new(vec![2, 1, 1, 1, 1, 1]);
    let mut pairs = vec![(0, 2), (2, 3)];
    let big = [1, 3, 4, 5, 6];
    for (x, &a) in big.iter().enumerate() {
        for &b in &big[x + 1..] {
            pairs.push((a, b));
        }
    }
    AggregateAssociation::from_vertex_pairs(layout, pairs).expect("static fixture")
}

/// Dense 7x7 aggregate of [`worked_example`], identity diagonal included.
pub fn worked_example_dense() -> Vec<Vec<u8>> {
    vec![
        vec![1, 0, 1, 0, 0, 0, 0],
        vec![0, 1, 0, 1, 1, 1, 1],
        vec![1, 0, 1, 1, 0, 0, 0],
        vec![0, 1, 1, 1, 1, 1, 1],
        vec![0, 1, 0, 1, 1, 1, 1],
        vec![0, 1, 0, 1, 1, 1, 1],
        vec![0, 1, 0, 1, 1, 1, 1],
    ]
}

/// Correct lifting for [`worked_example`]: clusters `{0, 2}` and `{1, 3, 4, 5, 6}`.
pub fn worked_example_truth() -> LiftingSet {
    LiftingSet::new(
        ViewLayout::new(vec![2, 1, 1, 1, 1, 1]),
        2,
        vec![vec![0, 1], vec![0], vec![1], vec![1], vec![1], vec![1]],
    )
    .expect("static fixture")
}

/// Consistent but wrong alternative: vertex 0 alone, everything else fused.
pub fn worked_example_baseline() -> AggregateAssociation {
    let layout = ViewLayout::new(vec![2, 1, 1, 1, 1, 1]);
    let lift = LiftingSet::new(
        layout,
        2,
        vec![vec![0, 1], vec![1], vec![1], vec![1], vec![1], vec![1]],
    )
    .expect("static fixture");
    crate::assoc::to_pairwise(&lift)
}

/// Two `k`-cliques over the same `k` views (two items per view) plus one
/// wrong edge joining them. Returns `(noisy, truth)`.
pub fn bridged_cliques(k: usize) -> (AggregateAssociation, AggregateAssociation) {
    assert!(k >= 2);
    let layout = ViewLayout::new(vec![2; k]);
    // item 0 of every view is clique A, item 1 clique B
    let mut truth_pairs = Vec::new();
    for vi in 0..k {
        for vj in vi + 1..k {
            truth_pairs.push((2 * vi, 2 * vj));
            truth_pairs.push((2 * vi + 1, 2 * vj + 1));
        }
    }
    let truth = AggregateAssociation::from_vertex_pairs(layout.clone(), truth_pairs.clone())
        .expect("static fixture");
    truth_pairs.push((0, 3));
    let noisy = AggregateAssociation::from_vertex_pairs(layout, truth_pairs).expect("static fixture");
    (noisy, truth)
}
