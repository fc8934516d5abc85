//! Multi-view association data model.
//!
//! Vertices are numbered globally: view `i` owns the contiguous block
//! `offsets[i]..offsets[i + 1]`. Edges are unordered cross-view vertex pairs;
//! the identity diagonal of the aggregate matrix is implicit and never stored.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::spectral::connected_components;

/// Per-view item counts and the derived vertex numbering.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ViewLayout {
    counts: Vec<usize>,
    offsets: Vec<usize>,
}

impl ViewLayout {
    pub fn new(counts: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(counts.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &c in &counts {
            acc += c;
            offsets.push(acc);
        }
        Self { counts, offsets }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Start index of every view's vertex block.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets[..self.counts.len()]
    }

    pub fn n_views(&self) -> usize {
        self.counts.len()
    }

    /// Total number of vertices `l`.
    pub fn total(&self) -> usize {
        self.offsets[self.counts.len()]
    }

    pub fn count(&self, view: usize) -> usize {
        self.counts[view]
    }

    pub fn max_count(&self) -> usize {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Vertex range owned by `view`.
    pub fn block(&self, view: usize) -> std::ops::Range<usize> {
        self.offsets[view]..self.offsets[view + 1]
    }

    /// Global vertex index of `(view, item)`.
    pub fn vertex(&self, view: usize, item: usize) -> Result<usize> {
        if view >= self.n_views() {
            return Err(Error::ViewOutOfRange {
                view,
                n_views: self.n_views(),
            });
        }
        if item >= self.counts[view] {
            return Err(Error::IndexOutOfRange {
                view,
                item,
                count: self.counts[view],
            });
        }
        Ok(self.offsets[view] + item)
    }

    /// The coloring map: which view a vertex belongs to.
    pub fn view_of(&self, vertex: usize) -> usize {
        debug_assert!(vertex < self.total());
        // first view whose block ends after `vertex`; skips empty views
        self.offsets[1..].partition_point(|&end| end <= vertex)
    }

    /// `(view, item)` of a global vertex index.
    pub fn locate(&self, vertex: usize) -> (usize, usize) {
        let view = self.view_of(vertex);
        (view, vertex - self.offsets[view])
    }

    /// View of every vertex, in vertex order.
    pub fn coloring(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.total());
        for (view, &c) in self.counts.iter().enumerate() {
            out.extend(std::iter::repeat_n(view, c));
        }
        out
    }

    fn ensure_same(&self, other: &ViewLayout) -> Result<()> {
        if self != other {
            return Err(Error::LayoutMismatch {
                left: self.counts.clone(),
                right: other.counts.clone(),
            });
        }
        Ok(())
    }
}

/// Symmetric block binary matrix of all pairwise matches, stored sparsely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateAssociation {
    layout: ViewLayout,
    /// Sorted, deduplicated pairs `(a, b)` with `a < b`.
    edges: Vec<(usize, usize)>,
}

impl AggregateAssociation {
    /// Aggregate with no matches; its dense form is the identity.
    pub fn empty(layout: ViewLayout) -> Self {
        Self {
            layout,
            edges: Vec::new(),
        }
    }

    /// Builds from `((view, item), (view, item))` pairs given in any order.
    pub fn build(
        layout: ViewLayout,
        pairs: impl IntoIterator<Item = ((usize, usize), (usize, usize))>,
    ) -> Result<Self> {
        let mut vertex_pairs = Vec::new();
        for ((vi, ii), (vj, ij)) in pairs {
            let a = layout.vertex(vi, ii)?;
            let b = layout.vertex(vj, ij)?;
            vertex_pairs.push((a, b));
        }
        Self::from_vertex_pairs(layout, vertex_pairs)
    }

    /// Builds from global vertex pairs, rejecting intra-view pairs.
    pub fn from_vertex_pairs(
        layout: ViewLayout,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let total = layout.total();
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            for v in [a, b] {
                if v >= total {
                    return Err(Error::VertexOutOfRange { vertex: v, total });
                }
            }
            let (va, vb) = (layout.view_of(a), layout.view_of(b));
            if va == vb {
                return Err(Error::SameViewEdge { a, b, view: va });
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self {
            layout,
            edges: set.into_iter().collect(),
        })
    }

    pub fn layout(&self) -> &ViewLayout {
        &self.layout
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    /// Sorted neighbour lists of the association graph.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.layout.total()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Vertex degrees `d_i` (the diagonal of `C` is `d_i + 1`).
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.layout.total()];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// Dense 0/1 aggregate matrix with identity diagonal.
    pub fn densify(&self) -> Vec<Vec<u8>> {
        let l = self.layout.total();
        let mut dense = vec![vec![0u8; l]; l];
        for (i, row) in dense.iter_mut().enumerate() {
            row[i] = 1;
        }
        for &(a, b) in &self.edges {
            dense[a][b] = 1;
            dense[b][a] = 1;
        }
        dense
    }

    /// Edges as `[view_a, item_a, view_b, item_b]` in canonical order.
    pub fn view_item_edges(&self) -> Vec<[usize; 4]> {
        self.edges
            .iter()
            .map(|&(a, b)| {
                let (va, ia) = self.layout.locate(a);
                let (vb, ib) = self.layout.locate(b);
                [va, ia, vb, ib]
            })
            .collect()
    }
}

/// Blocks of the aggregate that are not partial permutations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PermutationBlockReport {
    /// `(i, j)` with `i <= j`; `i == j` only for closure-induced intra-view pairs.
    pub violating_blocks: Vec<(usize, usize)>,
}

impl PermutationBlockReport {
    pub fn is_empty(&self) -> bool {
        self.violating_blocks.is_empty()
    }
}

/// Lists every block `P^i_j` that has a row or column with more than one match.
pub fn check_distinctness(agg: &AggregateAssociation) -> PermutationBlockReport {
    let layout = agg.layout();
    let n = layout.n_views();
    // partner count of each vertex inside every other view
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut bad: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &(a, b) in agg.edges() {
        let (va, vb) = (layout.view_of(a), layout.view_of(b));
        let fresh_a = seen.insert((a, vb));
        let fresh_b = seen.insert((b, va));
        if !(fresh_a && fresh_b) {
            bad.insert((va.min(vb), va.max(vb)));
        }
    }
    debug_assert!(bad.iter().all(|&(i, j)| i < n && j < n));
    PermutationBlockReport {
        violating_blocks: bad.into_iter().collect(),
    }
}

/// True iff the association graph is a cluster graph whose cliques each hold
/// at most one item per view.
pub fn check_cycle_consistency(agg: &AggregateAssociation) -> bool {
    let layout = agg.layout();
    let comps = connected_components(agg);
    let mut edges_in = vec![0usize; comps.components.len()];
    for &(a, _) in agg.edges() {
        edges_in[comps.component_of[a]] += 1;
    }
    let mut view_seen = vec![usize::MAX; layout.n_views()];
    for (cid, members) in comps.components.iter().enumerate() {
        let k = members.len();
        if edges_in[cid] != k * (k - 1) / 2 {
            return false;
        }
        for &v in members {
            let view = layout.view_of(v);
            if view_seen[view] == cid {
                return false;
            }
            view_seen[view] = cid;
        }
    }
    true
}

/// Result of completing every connected component into a clique.
#[derive(Debug, Clone, PartialEq)]
pub struct Closure {
    /// Cross-view pairs of the completed components.
    pub closed: AggregateAssociation,
    /// Same-view pairs forced by completion; excluded from `closed`.
    pub intra_view_pairs: Vec<(usize, usize)>,
    /// Distinctness violations of the completed graph, including `(i, i)`
    /// blocks for every view that receives an intra-view pair.
    pub report: PermutationBlockReport,
}

pub fn transitive_closure(agg: &AggregateAssociation) -> Closure {
    let layout = agg.layout();
    let comps = connected_components(agg);
    let mut cross = Vec::new();
    let mut intra = Vec::new();
    for members in &comps.components {
        for (x, &a) in members.iter().enumerate() {
            for &b in &members[x + 1..] {
                if layout.view_of(a) == layout.view_of(b) {
                    intra.push((a.min(b), a.max(b)));
                } else {
                    cross.push((a, b));
                }
            }
        }
    }
    intra.sort_unstable();
    let closed = AggregateAssociation::from_vertex_pairs(layout.clone(), cross)
        .expect("closure pairs are cross-view and in range");
    let mut blocks: BTreeSet<(usize, usize)> =
        check_distinctness(&closed).violating_blocks.into_iter().collect();
    for &(a, _) in &intra {
        let v = layout.view_of(a);
        blocks.insert((v, v));
    }
    Closure {
        closed,
        intra_view_pairs: intra,
        report: PermutationBlockReport {
            violating_blocks: blocks.into_iter().collect(),
        },
    }
}

/// Lifting permutations: each item's universe id, per view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftingSet {
    layout: ViewLayout,
    universe_size: usize,
    assignment: Vec<Vec<usize>>,
}

impl LiftingSet {
    pub fn new(layout: ViewLayout, universe_size: usize, assignment: Vec<Vec<usize>>) -> Result<Self> {
        if assignment.len() != layout.n_views() {
            return Err(Error::InvalidLifting(format!(
                "{} views in assignment, layout has {}",
                assignment.len(),
                layout.n_views()
            )));
        }
        let mut used = vec![usize::MAX; universe_size];
        for (view, ids) in assignment.iter().enumerate() {
            if ids.len() != layout.count(view) {
                return Err(Error::InvalidLifting(format!(
                    "view {view} lists {} ids for {} items",
                    ids.len(),
                    layout.count(view)
                )));
            }
            for &id in ids {
                if id >= universe_size {
                    return Err(Error::InvalidLifting(format!(
                        "view {view} uses id {id} outside universe of size {universe_size}"
                    )));
                }
                if used[id] == view {
                    return Err(Error::InvalidLifting(format!(
                        "view {view} maps two items to universe id {id}"
                    )));
                }
                used[id] = view;
            }
        }
        Ok(Self {
            layout,
            universe_size,
            assignment,
        })
    }

    pub fn layout(&self) -> &ViewLayout {
        &self.layout
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn assignment(&self) -> &[Vec<usize>] {
        &self.assignment
    }

    /// Universe id of every vertex, in vertex order.
    pub fn vertex_ids(&self) -> Vec<usize> {
        self.assignment.iter().flatten().copied().collect()
    }

    /// Non-empty clusters ordered by universe id.
    pub fn partition(&self) -> ClusterPartition {
        let ids = self.vertex_ids();
        let mut buckets = vec![Vec::new(); self.universe_size];
        for (v, &id) in ids.iter().enumerate() {
            buckets[id].push(v);
        }
        ClusterPartition::from_clusters(
            self.layout.total(),
            buckets.into_iter().filter(|c| !c.is_empty()).collect(),
        )
    }
}

/// Pairwise associations implied by a lifting: `P^i_j = P^i P^j^T`.
pub fn to_pairwise(lift: &LiftingSet) -> AggregateAssociation {
    let part = lift.partition();
    let mut pairs = Vec::new();
    for members in &part.clusters {
        for (x, &a) in members.iter().enumerate() {
            for &b in &members[x + 1..] {
                pairs.push((a, b));
            }
        }
    }
    AggregateAssociation::from_vertex_pairs(lift.layout().clone(), pairs)
        .expect("a valid lifting never associates two items of one view")
}

/// Disjoint vertex clusters `A_1..A_m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPartition {
    pub clusters: Vec<Vec<usize>>,
    pub vertex_to_cluster: Vec<Option<usize>>,
}

impl ClusterPartition {
    pub fn from_clusters(total: usize, clusters: Vec<Vec<usize>>) -> Self {
        let mut vertex_to_cluster = vec![None; total];
        for (cid, members) in clusters.iter().enumerate() {
            for &v in members {
                vertex_to_cluster[v] = Some(cid);
            }
        }
        Self {
            clusters,
            vertex_to_cluster,
        }
    }

    /// Canonical form: members sorted, clusters ordered by smallest member.
    pub fn canonical(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self
            .clusters
            .iter()
            .filter(|c| !c.is_empty())
            .map(|c| {
                let mut c = c.clone();
                c.sort_unstable();
                c
            })
            .collect();
        out.sort();
        out
    }
}

/// `C = D + I` diagonal of an aggregate, as floats.
pub(crate) fn c_diagonal(agg: &AggregateAssociation) -> Vec<f64> {
    agg.degrees().into_iter().map(|d| d as f64 + 1.0).collect()
}

/// `<P_nrm, P~_nrm>` with `P_nrm = C^{-1/2} P C^{-1/2}`, identity diagonals included.
pub fn normalized_objective(
    candidate: &AggregateAssociation,
    input: &AggregateAssociation,
) -> Result<f64> {
    candidate.layout().ensure_same(input.layout())?;
    let c = c_diagonal(candidate);
    let ct = c_diagonal(input);
    let mut total: f64 = c.iter().zip(&ct).map(|(a, b)| 1.0 / (a * b)).sum();
    // both edge lists are sorted; walk them together
    let (pe, qe) = (candidate.edges(), input.edges());
    let (mut i, mut j) = (0, 0);
    while i < pe.len() && j < qe.len() {
        match pe[i].cmp(&qe[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let (a, b) = pe[i];
                total += 2.0 / (c[a] * c[b] * ct[a] * ct[b]).sqrt();
                i += 1;
                j += 1;
            }
        }
    }
    Ok(total)
}

pub(crate) fn ensure_same_layout(a: &AggregateAssociation, b: &AggregateAssociation) -> Result<()> {
    a.layout().ensure_same(b.layout())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn layout_maps_vertices_to_views() {
        let layout = ViewLayout::new(vec![2, 0, 1, 3]);
        assert_eq!(layout.total(), 6);
        assert_eq!(layout.offsets(), &[0, 2, 2, 3]);
        assert_eq!(layout.coloring(), vec![0, 0, 2, 3, 3, 3]);
        for v in 0..6 {
            assert_eq!(layout.view_of(v), layout.coloring()[v]);
        }
        assert_eq!(layout.locate(4), (3, 1));
        assert_eq!(layout.vertex(3, 2).unwrap(), 5);
        assert!(matches!(
            layout.vertex(1, 0),
            Err(Error::IndexOutOfRange { view: 1, item: 0, count: 0 })
        ));
        assert!(matches!(layout.vertex(4, 0), Err(Error::ViewOutOfRange { .. })));
    }

    #[test]
    fn worked_example_densifies_to_reference_matrix() {
        let agg = fixtures::worked_example();
        assert_eq!(agg.densify(), fixtures::worked_example_dense());
        assert_eq!(agg.edge_count(), 12);
    }

    #[test]
    fn empty_pairs_give_identity() {
        let agg = AggregateAssociation::build(ViewLayout::new(vec![3, 3]), []).unwrap();
        let dense = agg.densify();
        for (i, row) in dense.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                assert_eq!(x, u8::from(i == j));
            }
        }
    }

    #[test]
    fn duplicate_pairs_collapse() {
        let agg = AggregateAssociation::build(
            ViewLayout::new(vec![1, 1]),
            [((0, 0), (1, 0)), ((1, 0), (0, 0)), ((0, 0), (1, 0))],
        )
        .unwrap();
        assert_eq!(agg.edge_count(), 1);
    }

    #[test]
    fn bad_pairs_are_rejected() {
        let layout = ViewLayout::new(vec![2, 1]);
        let err = AggregateAssociation::build(layout.clone(), [((0, 2), (1, 0))]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { view: 0, item: 2, .. }));
        let err = AggregateAssociation::build(layout, [((0, 0), (0, 1))]).unwrap_err();
        assert!(matches!(err, Error::SameViewEdge { view: 0, .. }));
    }

    #[test]
    fn distinctness_report() {
        assert!(check_distinctness(&fixtures::worked_example()).is_empty());
        let agg = AggregateAssociation::build(
            ViewLayout::new(vec![1, 2, 1]),
            [((0, 0), (1, 0)), ((0, 0), (1, 1)), ((0, 0), (2, 0))],
        )
        .unwrap();
        assert_eq!(check_distinctness(&agg).violating_blocks, vec![(0, 1)]);
    }

    #[test]
    fn cycle_consistency() {
        assert!(!check_cycle_consistency(&fixtures::worked_example()));
        let layout = ViewLayout::new(vec![1, 1, 1, 1]);
        let clique = AggregateAssociation::from_vertex_pairs(
            layout.clone(),
            [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
        )
        .unwrap();
        assert!(check_cycle_consistency(&clique));
        let path = AggregateAssociation::from_vertex_pairs(layout, [(0, 1), (1, 2)]).unwrap();
        assert!(!check_cycle_consistency(&path));
        // a triangle that reuses a view is a clique but not distinct
        let layout = ViewLayout::new(vec![2, 1]);
        let tri = AggregateAssociation::from_vertex_pairs(layout, [(0, 2), (1, 2)]).unwrap();
        assert!(!check_cycle_consistency(&tri));
    }

    #[test]
    fn closure_of_path_adds_chord() {
        let agg = AggregateAssociation::from_vertex_pairs(ViewLayout::new(vec![1, 1, 1]), [(0, 1), (1, 2)])
            .unwrap();
        let cl = transitive_closure(&agg);
        assert_eq!(cl.closed.edges(), &[(0, 1), (0, 2), (1, 2)]);
        assert!(cl.intra_view_pairs.is_empty());
        assert!(cl.report.is_empty());
    }

    #[test]
    fn closure_is_identity_on_cluster_graphs() {
        let lift = fixtures::worked_example_truth();
        let agg = to_pairwise(&lift);
        let cl = transitive_closure(&agg);
        assert_eq!(cl.closed, agg);
        assert!(cl.report.is_empty());
    }

    #[test]
    fn closure_of_worked_example_merges_everything() {
        let cl = transitive_closure(&fixtures::worked_example());
        // 7 vertices, one component: 21 pairs, one of them inside view 0
        assert_eq!(cl.intra_view_pairs, vec![(0, 1)]);
        assert_eq!(cl.closed.edge_count(), 20);
        assert!(cl.report.violating_blocks.contains(&(0, 0)));
        assert!(cl.report.violating_blocks.contains(&(0, 1)));
    }

    #[test]
    fn worked_example_lifting_gives_reference_clusters() {
        let agg = to_pairwise(&fixtures::worked_example_truth());
        assert_eq!(agg.layout().total(), 7);
        let comps = connected_components(&agg);
        assert_eq!(comps.components, vec![vec![0, 2], vec![1, 3, 4, 5, 6]]);
        assert!(check_cycle_consistency(&agg));
    }

    #[test]
    fn all_singletons_lift_to_no_edges() {
        let layout = ViewLayout::new(vec![2, 3]);
        let lift = LiftingSet::new(layout, 5, vec![vec![0, 1], vec![2, 3, 4]]).unwrap();
        assert_eq!(to_pairwise(&lift).edge_count(), 0);
    }

    #[test]
    fn lifting_validation() {
        let layout = ViewLayout::new(vec![2]);
        assert!(LiftingSet::new(layout.clone(), 2, vec![vec![1, 1]]).is_err());
        assert!(LiftingSet::new(layout.clone(), 2, vec![vec![0, 2]]).is_err());
        assert!(LiftingSet::new(layout.clone(), 2, vec![vec![0]]).is_err());
        assert!(LiftingSet::new(layout, 2, vec![vec![1, 0]]).is_ok());
    }

    #[test]
    fn objective_reference_values() {
        let input = fixtures::worked_example();
        let g3 = to_pairwise(&fixtures::worked_example_truth());
        let g2 = fixtures::worked_example_baseline();
        let v3 = normalized_objective(&g3, &input).unwrap();
        let v2 = normalized_objective(&g2, &input).unwrap();
        assert!((v3 - 1.79).abs() <= 0.01, "{v3}");
        assert!((v2 - 1.43).abs() <= 0.01, "{v2}");
    }

    #[test]
    fn objective_of_identity_is_vertex_count() {
        let agg = AggregateAssociation::empty(ViewLayout::new(vec![2, 3, 1]));
        assert_eq!(normalized_objective(&agg, &agg).unwrap(), 6.0);
    }

    #[test]
    fn objective_is_symmetric() {
        let a = fixtures::worked_example();
        let b = fixtures::worked_example_baseline();
        let ab = normalized_objective(&a, &b).unwrap();
        let ba = normalized_objective(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn objective_rejects_layout_mismatch() {
        let a = AggregateAssociation::empty(ViewLayout::new(vec![2]));
        let b = AggregateAssociation::empty(ViewLayout::new(vec![1, 1]));
        assert!(matches!(
            normalized_objective(&a, &b),
            Err(Error::LayoutMismatch { .. })
        ));
    }
}
