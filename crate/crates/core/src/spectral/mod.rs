//! Normalized graph Laplacian and its spectrum, assembled per connected component.

mod eig;

use std::collections::VecDeque;

use rayon::prelude::*;

pub use eig::{symmetric_eig, DenseSymmetric, SymmetricEigen};

use crate::assoc::AggregateAssociation;
use crate::error::{Error, Result};

/// Largest component handed to the dense eigensolver unless overridden.
pub const DEFAULT_MAX_DENSE_ORDER: usize = 4096;

/// Connected components of the association graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentDecomposition {
    /// Members of each component, sorted; components ordered by smallest member.
    pub components: Vec<Vec<usize>>,
    pub component_of: Vec<usize>,
}

/// Breadth-first search over the association graph.
pub fn connected_components(agg: &AggregateAssociation) -> ComponentDecomposition {
    let l = agg.layout().total();
    let adj = agg.adjacency();
    let mut component_of = vec![usize::MAX; l];
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..l {
        if component_of[start] != usize::MAX {
            continue;
        }
        let cid = components.len();
        let mut members = vec![start];
        component_of[start] = cid;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if component_of[w] == usize::MAX {
                    component_of[w] = cid;
                    members.push(w);
                    queue.push_back(w);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    ComponentDecomposition {
        components,
        component_of,
    }
}

/// `C^{-1/2} (D - A) C^{-1/2}` on the subgraph induced by `vertices`, with
/// `C = D + I`. Row `k` of the result is `vertices[k]`.
pub fn normalized_laplacian(agg: &AggregateAssociation, vertices: &[usize]) -> DenseSymmetric {
    let k = vertices.len();
    let mut local = vec![usize::MAX; agg.layout().total()];
    for (i, &v) in vertices.iter().enumerate() {
        local[v] = i;
    }
    let mut deg = vec![0usize; k];
    let mut inner = Vec::new();
    for &(a, b) in agg.edges() {
        let (la, lb) = (local[a], local[b]);
        if la != usize::MAX && lb != usize::MAX {
            deg[la] += 1;
            deg[lb] += 1;
            inner.push((la, lb));
        }
    }
    let c: Vec<f64> = deg.iter().map(|&d| d as f64 + 1.0).collect();
    let mut m = DenseSymmetric::zeros(k);
    for i in 0..k {
        m.set(i, i, deg[i] as f64 / c[i]);
    }
    for (a, b) in inner {
        m.set(a, b, -1.0 / (c[a] * c[b]).sqrt());
    }
    m
}

/// Eigendecomposition of the whole-graph normalized Laplacian in one dense solve.
pub fn full_spectrum_direct(agg: &AggregateAssociation) -> Result<SymmetricEigen> {
    let all: Vec<usize> = (0..agg.layout().total()).collect();
    symmetric_eig(&normalized_laplacian(agg, &all))
}

/// One eigenpair of the global spectrum, pointing into its component's solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenRef {
    pub value: f64,
    pub component: usize,
    /// Index within the component's ascending eigenpairs.
    pub local: usize,
}

/// Global spectrum of the normalized Laplacian: the union of component
/// spectra, eigenvectors zero-padded outside their component.
#[derive(Debug, Clone)]
pub struct Spectrum {
    l: usize,
    decomposition: ComponentDecomposition,
    solves: Vec<SymmetricEigen>,
    pairs: Vec<EigenRef>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.l
    }

    pub fn is_empty(&self) -> bool {
        self.l == 0
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn pairs(&self) -> &[EigenRef] {
        &self.pairs
    }

    pub fn decomposition(&self) -> &ComponentDecomposition {
        &self.decomposition
    }

    /// Size of the component each eigenpair came from.
    pub fn component_sizes(&self) -> Vec<usize> {
        self.pairs
            .iter()
            .map(|p| self.decomposition.components[p.component].len())
            .collect()
    }

    /// Entry `(vertex, k)` of the padded eigenvector matrix.
    pub fn entry(&self, vertex: usize, k: usize) -> f64 {
        let p = self.pairs[k];
        if self.decomposition.component_of[vertex] != p.component {
            return 0.0;
        }
        let members = &self.decomposition.components[p.component];
        let pos = members.binary_search(&vertex).expect("vertex listed in its component");
        self.solves[p.component].vector(p.local)[pos]
    }

    /// Padded eigenvector `k` as a dense length-`l` vector.
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        let p = self.pairs[k];
        let mut out = vec![0.0; self.l];
        let members = &self.decomposition.components[p.component];
        for (&v, &x) in members.iter().zip(self.solves[p.component].vector(p.local)) {
            out[v] = x;
        }
        out
    }
}

/// Spectrum via per-component decompositions, with the default dense limit.
pub fn component_spectrum(agg: &AggregateAssociation) -> Result<Spectrum> {
    component_spectrum_with_limit(agg, DEFAULT_MAX_DENSE_ORDER)
}

pub fn component_spectrum_with_limit(agg: &AggregateAssociation, max_dense_order: usize) -> Result<Spectrum> {
    let decomposition = connected_components(agg);
    if let Some((cid, members)) = decomposition
        .components
        .iter()
        .enumerate()
        .find(|(_, m)| m.len() > max_dense_order)
    {
        return Err(Error::ComponentTooLarge {
            component: cid,
            size: members.len(),
            limit: max_dense_order,
        });
    }
    let solves = decomposition
        .components
        .par_iter()
        .enumerate()
        .map(|(cid, members)| {
            symmetric_eig(&normalized_laplacian(agg, members)).map_err(|e| match e {
                Error::ConvergenceFailure { iterations, .. } => Error::ConvergenceFailure {
                    component: cid,
                    iterations,
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut pairs: Vec<EigenRef> = solves
        .iter()
        .enumerate()
        .flat_map(|(cid, s)| {
            s.values.iter().enumerate().map(move |(local, &value)| EigenRef {
                value,
                component: cid,
                local,
            })
        })
        .collect();
    pairs.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.component.cmp(&b.component))
            .then(a.local.cmp(&b.local))
    });
    Ok(Spectrum {
        l: agg.layout().total(),
        decomposition,
        solves,
        pairs,
    })
}

/// Ascending eigenvalues of `L_sym = D^{-1/2} (D - A) D^{-1/2}`; isolated
/// vertices use `d = 1` and contribute a zero eigenvalue.
pub fn symmetric_laplacian_eigenvalues(agg: &AggregateAssociation) -> Result<Vec<f64>> {
    let decomposition = connected_components(agg);
    let deg = agg.degrees();
    let mut values = Vec::with_capacity(agg.layout().total());
    for (cid, members) in decomposition.components.iter().enumerate() {
        let k = members.len();
        let pos = |v: usize| members.binary_search(&v).expect("member");
        let scale: Vec<f64> = members.iter().map(|&v| (deg[v].max(1) as f64).sqrt()).collect();
        let mut m = DenseSymmetric::zeros(k);
        for (i, &v) in members.iter().enumerate() {
            m.set(i, i, if deg[v] > 0 { 1.0 } else { 0.0 });
        }
        for &(a, b) in agg.edges() {
            if decomposition.component_of[a] == cid {
                let (i, j) = (pos(a), pos(b));
                m.set(i, j, -1.0 / (scale[i] * scale[j]));
            }
        }
        let eig = symmetric_eig(&m).map_err(|_| Error::ConvergenceFailure {
            component: cid,
            iterations: 0,
        })?;
        values.extend(eig.values);
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assoc::ViewLayout;
    use crate::fixtures;

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn components_of_worked_example() {
        let comps = connected_components(&fixtures::worked_example());
        assert_eq!(comps.components, vec![(0..7).collect::<Vec<_>>()]);
    }

    #[test]
    fn components_without_edges() {
        let agg = AggregateAssociation::empty(ViewLayout::new(vec![5]));
        let comps = connected_components(&agg);
        assert_eq!(comps.components.len(), 5);
        assert!(comps.components.iter().all(|c| c.len() == 1));
    }

    #[test]
    fn two_triangles() {
        let layout = ViewLayout::new(vec![2, 2, 2]);
        let agg = AggregateAssociation::from_vertex_pairs(layout, [(0, 2), (2, 4), (0, 4), (1, 3), (3, 5), (1, 5)])
            .unwrap();
        let comps = connected_components(&agg);
        assert_eq!(comps.components, vec![vec![0, 2, 4], vec![1, 3, 5]]);
        assert_eq!(comps.component_of, vec![0, 1, 0, 1, 0, 1]);
    }

    #[test]
    fn worked_example_laplacian() {
        let agg = fixtures::worked_example();
        let all: Vec<usize> = (0..7).collect();
        let m = normalized_laplacian(&agg, &all);
        // C = diag(2, 5, 3, 6, 5, 5, 5), so L_nrm(i, i) = (c_i - 1) / c_i
        let c = [2.0, 5.0, 3.0, 6.0, 5.0, 5.0, 5.0];
        for i in 0..7 {
            assert!((m.get(i, i) - (c[i] - 1.0) / c[i]).abs() < 1e-15);
        }
        let eig = symmetric_eig(&m).unwrap();
        let expected = [0.0, 0.17, 0.85, 1.0, 1.0, 1.0, 1.18];
        for (a, b) in eig.values.iter().zip(expected) {
            assert!((a - b).abs() <= 0.01, "{a} vs {b}");
        }
    }

    #[test]
    fn isolated_vertex_laplacian_is_zero() {
        let agg = AggregateAssociation::empty(ViewLayout::new(vec![1]));
        let m = normalized_laplacian(&agg, &[0]);
        assert_eq!(m.order(), 1);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn clique_spectrum_is_zero_then_ones() {
        for k in 1..=8 {
            let layout = ViewLayout::new(vec![1; k]);
            let pairs = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b)));
            let agg = AggregateAssociation::from_vertex_pairs(layout, pairs).unwrap();
            let eig = full_spectrum_direct(&agg).unwrap();
            assert!(eig.values[0].abs() < 1e-12);
            assert!(eig.values[1..].iter().all(|x| (x - 1.0).abs() < 1e-12));
            assert!(eig.orthogonality_error() < 1e-12);
        }
    }

    #[test]
    fn component_spectrum_matches_direct_on_worked_example() {
        let agg = fixtures::worked_example();
        let spec = component_spectrum(&agg).unwrap();
        let direct = full_spectrum_direct(&agg).unwrap();
        for (a, b) in spec.eigenvalues().iter().zip(&direct.values) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn disjoint_cliques_give_one_zero_per_clique() {
        let lift = crate::assoc::LiftingSet::new(
            ViewLayout::new(vec![3, 3, 2]),
            4,
            vec![vec![0, 1, 2], vec![2, 3, 0], vec![1, 3]],
        )
        .unwrap();
        let agg = crate::assoc::to_pairwise(&lift);
        let spec = component_spectrum(&agg).unwrap();
        let values = spec.eigenvalues();
        assert_eq!(values.iter().filter(|x| x.abs() < 1e-9).count(), 4);
        assert!(values.iter().all(|x| x.abs() < 1e-9 || (x - 1.0).abs() < 1e-9));
        assert_eq!(sorted(values.clone()), values);
    }

    #[test]
    fn padded_vectors_are_eigenvectors() {
        let agg = fixtures::worked_example();
        let spec = component_spectrum(&agg).unwrap();
        let all: Vec<usize> = (0..7).collect();
        let m = normalized_laplacian(&agg, &all);
        for k in 0..7 {
            let v = spec.eigenvector(k);
            let lambda = spec.eigenvalues()[k];
            for i in 0..7 {
                let mv: f64 = (0..7).map(|j| m.get(i, j) * v[j]).sum();
                assert!((mv - lambda * v[i]).abs() < 1e-10);
                assert_eq!(spec.entry(i, k), v[i]);
            }
        }
    }

    #[test]
    fn dense_limit_is_enforced() {
        let agg = fixtures::worked_example();
        assert!(matches!(
            component_spectrum_with_limit(&agg, 6),
            Err(Error::ComponentTooLarge { component: 0, size: 7, limit: 6 })
        ));
    }

    #[test]
    fn symmetric_laplacian_of_empty_graph_is_zero() {
        let agg = AggregateAssociation::empty(ViewLayout::new(vec![2, 2]));
        assert_eq!(symmetric_laplacian_eigenvalues(&agg).unwrap(), vec![0.0; 4]);
    }
}
