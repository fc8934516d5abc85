//! The rectification pipeline: spectrum, universe-size estimate, spectral
//! embedding, pivot selection, and per-view projection onto lifting permutations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::assignment::{greedy_sort_assign, hungarian, CostMatrix};
use crate::assoc::{normalized_objective, to_pairwise, AggregateAssociation, LiftingSet, ViewLayout};
use crate::error::{Error, Result};
use crate::spectral::{component_spectrum_with_limit, Spectrum, DEFAULT_MAX_DENSE_ORDER};

/// Eigenvalues strictly below this count toward the universe size.
pub const EIGENVALUE_THRESHOLD: f64 = 0.5;

/// Rows with pre-normalization norm at or below this are treated as zero.
pub const ZERO_ROW_NORM: f64 = 1e-12;

/// Pivot scores closer than this count as tied (smallest row index wins).
pub const PIVOT_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignMode {
    /// Hungarian method per view.
    #[default]
    Optimal,
    /// Sort-based greedy per view.
    Greedy,
}

impl fmt::Display for AssignMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssignMode::Optimal => "optimal",
            AssignMode::Greedy => "greedy",
        })
    }
}

impl FromStr for AssignMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" | "hungarian" => Ok(AssignMode::Optimal),
            "greedy" => Ok(AssignMode::Greedy),
            other => Err(Error::InvalidConfig(format!("unknown assignment mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClearOptions {
    pub mode: AssignMode,
    /// Use this universe size instead of the spectral estimate.
    pub override_m: Option<usize>,
    pub max_dense_order: usize,
}

impl Default for ClearOptions {
    fn default() -> Self {
        Self {
            mode: AssignMode::Optimal,
            override_m: None,
            max_dense_order: DEFAULT_MAX_DENSE_ORDER,
        }
    }
}

impl ClearOptions {
    pub fn with_mode(mode: AssignMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniverseEstimate {
    /// `max(m_tilde, m_1, ..., m_n)`.
    pub m_hat: usize,
    /// Number of eigenvalues below the threshold.
    pub m_tilde: usize,
}

pub fn estimate_universe_size(spectrum: &Spectrum, layout: &ViewLayout) -> UniverseEstimate {
    let m_tilde = spectrum
        .pairs()
        .iter()
        .filter(|p| p.value < EIGENVALUE_THRESHOLD)
        .count();
    UniverseEstimate {
        m_hat: m_tilde.max(layout.max_count()),
        m_tilde,
    }
}

/// Rows of the first `dim` eigenvectors, one row per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    dim: usize,
    data: Vec<f64>,
    normalized: bool,
    zero_rows: Vec<usize>,
}

impl Embedding {
    /// Builds from explicit rows and normalizes them.
    pub fn from_rows(dim: usize, rows: &[Vec<f64>]) -> Self {
        assert!(rows.iter().all(|r| r.len() == dim));
        let mut emb = Self {
            dim,
            data: rows.concat(),
            normalized: false,
            zero_rows: Vec::new(),
        };
        emb.normalize();
        emb
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn zero_rows(&self) -> &[usize] {
        &self.zero_rows
    }

    /// Multiplies every row by the `dim x dim` row-major matrix `q`.
    pub fn transformed(&self, q: &[f64]) -> Self {
        let d = self.dim;
        assert_eq!(q.len(), d * d);
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.len() {
            let row = self.row(i);
            for k in 0..d {
                data[i * d + k] = (0..d).map(|j| row[j] * q[j * d + k]).sum();
            }
        }
        Self {
            dim: d,
            data,
            normalized: self.normalized,
            zero_rows: self.zero_rows.clone(),
        }
    }

    fn normalize(&mut self) {
        let d = self.dim;
        self.zero_rows.clear();
        for i in 0..self.len() {
            let row = &mut self.data[i * d..(i + 1) * d];
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm <= ZERO_ROW_NORM {
                row.iter_mut().for_each(|x| *x = 0.0);
                self.zero_rows.push(i);
            } else {
                row.iter_mut().for_each(|x| *x /= norm);
            }
        }
        self.normalized = true;
    }
}

/// Row-normalized embedding from the eigenvectors of the `dim` smallest eigenvalues.
pub fn embed(spectrum: &Spectrum, dim: usize) -> Result<Embedding> {
    let l = spectrum.len();
    if dim > l {
        return Err(Error::InvalidUniverseSize {
            requested: dim,
            min: 0,
            max: l,
        });
    }
    let mut data = vec![0.0; l * dim];
    for k in 0..dim {
        let col = spectrum.eigenvector(k);
        for (v, x) in col.into_iter().enumerate() {
            data[v * dim + k] = x;
        }
    }
    let mut emb = Embedding {
        dim,
        data,
        normalized: false,
        zero_rows: Vec::new(),
    };
    emb.normalize();
    Ok(emb)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PivotSet {
    pub indices: Vec<usize>,
    pub vectors: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Greedy choice of `count` mutually near-orthogonal rows.
///
/// The first non-zero row (row 0 unless it is a zero row) seeds the set; each
/// next pivot minimizes the summed absolute inner product with the pivots so
/// far, ties (within [`PIVOT_TIE_TOLERANCE`]) to the smallest row index.
/// Zero rows are never pivots.
pub fn select_pivots(emb: &Embedding, count: usize) -> Result<PivotSet> {
    let l = emb.len();
    let mut usable = vec![true; l];
    for &z in emb.zero_rows() {
        usable[z] = false;
    }
    let available = usable.iter().filter(|&&u| u).count();
    if count > available {
        return Err(Error::InsufficientNonZeroRows {
            required: count,
            available,
        });
    }
    let mut indices = Vec::with_capacity(count);
    if count == 0 {
        return Ok(PivotSet {
            indices,
            vectors: Vec::new(),
        });
    }
    let first = usable.iter().position(|&u| u).expect("count <= available");
    indices.push(first);
    usable[first] = false;
    let mut score = vec![0.0; l];
    while indices.len() < count {
        let last = emb.row(*indices.last().expect("non-empty"));
        let mut best: Option<usize> = None;
        for v in 0..l {
            if !usable[v] {
                continue;
            }
            score[v] += dot(last, emb.row(v)).abs();
            if best.is_none_or(|b| score[v] < score[b] - PIVOT_TIE_TOLERANCE) {
                best = Some(v);
            }
        }
        let next = best.expect("count <= available");
        usable[next] = false;
        indices.push(next);
    }
    let vectors = indices.iter().map(|&i| emb.row(i).to_vec()).collect();
    Ok(PivotSet { indices, vectors })
}

/// `F^i(j, k) = ||u_j - u'_k||^2` for the items of `view`.
pub fn view_cost(emb: &Embedding, pivots: &PivotSet, layout: &ViewLayout, view: usize) -> Result<CostMatrix> {
    let block = layout.block(view);
    let m = pivots.vectors.len();
    let mut data = Vec::with_capacity(block.len() * m);
    for v in block.clone() {
        let row = emb.row(v);
        for p in &pivots.vectors {
            data.push(row.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum());
        }
    }
    CostMatrix::new(block.len(), m, data)
}

/// Assigns every item of every view to a distinct pivot (universe id).
pub fn project(emb: &Embedding, pivots: &PivotSet, layout: &ViewLayout, mode: AssignMode) -> Result<LiftingSet> {
    let m = pivots.indices.len();
    let mut assignment = Vec::with_capacity(layout.n_views());
    for view in 0..layout.n_views() {
        let cost = view_cost(emb, pivots, layout, view)?;
        let solved = match mode {
            AssignMode::Optimal => hungarian(&cost)?,
            AssignMode::Greedy => greedy_sort_assign(&cost)?,
        };
        assignment.push(solved.row_to_col);
    }
    LiftingSet::new(layout.clone(), m, assignment)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub eigenvalues: Vec<f64>,
    pub m_tilde: usize,
    pub pivots: Vec<usize>,
}

/// Cycle-consistent output of [`clear`].
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub universe_size: usize,
    pub lifting: LiftingSet,
    pub pairwise: AggregateAssociation,
    /// Normalized objective of `pairwise` against the input.
    pub objective: f64,
    pub diagnostics: Diagnostics,
}

/// Rectifies noisy pairwise associations into a cycle-consistent set.
pub fn clear(agg: &AggregateAssociation, opts: &ClearOptions) -> Result<Solution> {
    let layout = agg.layout();
    let spectrum = component_spectrum_with_limit(agg, opts.max_dense_order)?;
    let estimate = estimate_universe_size(&spectrum, layout);
    let m_hat = match opts.override_m {
        Some(m) => {
            let (min, max) = (layout.max_count(), layout.total());
            if m < min || m > max {
                return Err(Error::InvalidUniverseSize { requested: m, min, max });
            }
            m
        }
        None => estimate.m_hat,
    };
    let emb = embed(&spectrum, m_hat)?;
    let pivots = select_pivots(&emb, m_hat)?;
    let lifting = project(&emb, &pivots, layout, opts.mode)?;
    let pairwise = to_pairwise(&lifting);
    let objective = normalized_objective(&pairwise, agg)?;
    Ok(Solution {
        universe_size: m_hat,
        lifting,
        pairwise,
        objective,
        diagnostics: Diagnostics {
            eigenvalues: spectrum.eigenvalues(),
            m_tilde: estimate.m_tilde,
            pivots: pivots.indices,
        },
    })
}

/// Runs [`clear`] for every universe size in `range` and keeps the solution
/// with the largest objective (smallest size on ties). The default range is
/// `[max_i m_i, m_tilde + 5]`, clipped to the vertex count.
pub fn clear_sweep(
    agg: &AggregateAssociation,
    mode: AssignMode,
    range: Option<std::ops::RangeInclusive<usize>>,
) -> Result<Solution> {
    let layout = agg.layout();
    let range = match range {
        Some(r) => r,
        None => {
            let spectrum = component_spectrum_with_limit(agg, DEFAULT_MAX_DENSE_ORDER)?;
            let est = estimate_universe_size(&spectrum, layout);
            layout.max_count()..=(est.m_tilde + 5).min(layout.total())
        }
    };
    let mut best: Option<Solution> = None;
    for m in range {
        let opts = ClearOptions {
            mode,
            override_m: Some(m),
            ..ClearOptions::default()
        };
        let sol = clear(agg, &opts)?;
        if best.as_ref().is_none_or(|b| sol.objective > b.objective) {
            best = Some(sol);
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("empty universe-size sweep range".into()))
}

/// Dissolves clusters with fewer than `min_size` members into singletons.
///
/// Surviving clusters are renumbered `0..s` in order of their old ids; each
/// dissolved item gets a fresh id after them, in vertex order. The objective
/// is recomputed against `input`.
pub fn postprocess_min_cluster(sol: &Solution, input: &AggregateAssociation, min_size: usize) -> Result<Solution> {
    if min_size <= 1 {
        return Ok(sol.clone());
    }
    let layout = sol.lifting.layout();
    let ids = sol.lifting.vertex_ids();
    let mut sizes = vec![0usize; sol.universe_size];
    for &id in &ids {
        sizes[id] += 1;
    }
    let mut remap = vec![usize::MAX; sol.universe_size];
    let mut next = 0;
    for (id, &size) in sizes.iter().enumerate() {
        if size >= min_size {
            remap[id] = next;
            next += 1;
        }
    }
    let mut new_ids = Vec::with_capacity(ids.len());
    for &id in &ids {
        if remap[id] != usize::MAX {
            new_ids.push(remap[id]);
        } else {
            new_ids.push(next);
            next += 1;
        }
    }
    let assignment = (0..layout.n_views())
        .map(|v| new_ids[layout.block(v)].to_vec())
        .collect();
    let lifting = LiftingSet::new(layout.clone(), next, assignment)?;
    let pairwise = to_pairwise(&lifting);
    let objective = normalized_objective(&pairwise, input)?;
    Ok(Solution {
        universe_size: next,
        lifting,
        pairwise,
        objective,
        diagnostics: sol.diagnostics.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assoc::{check_cycle_consistency, check_distinctness, transitive_closure};
    use crate::fixtures;
    use crate::spectral::component_spectrum;

    #[test]
    fn worked_example_estimate() {
        let agg = fixtures::worked_example();
        let spec = component_spectrum(&agg).unwrap();
        let est = estimate_universe_size(&spec, agg.layout());
        assert_eq!(est, UniverseEstimate { m_hat: 2, m_tilde: 2 });
    }

    #[test]
    fn worked_example_embedding_matches_reference_up_to_sign() {
        let agg = fixtures::worked_example();
        let spec = component_spectrum(&agg).unwrap();
        let emb = embed(&spec, 2).unwrap();
        let reference = [
            [-0.94, 0.34],
            [0.47, 0.88],
            [-0.88, 0.48],
            [0.07, 0.99],
            [0.47, 0.88],
            [0.47, 0.88],
            [0.47, 0.88],
        ];
        // columns may differ by sign, and may also come out in either order
        let mut matched = false;
        for swap in [false, true] {
            for s0 in [1.0, -1.0] {
                for s1 in [1.0, -1.0] {
                    let ok = reference.iter().enumerate().all(|(i, r)| {
                        let row = emb.row(i);
                        let (a, b) = if swap { (row[1], row[0]) } else { (row[0], row[1]) };
                        (s0 * a - r[0]).abs() <= 0.01 && (s1 * b - r[1]).abs() <= 0.01
                    });
                    matched |= ok;
                }
            }
        }
        assert!(matched, "embedding rows differ from the reference beyond sign");
    }

    #[test]
    fn worked_example_pivots_and_costs() {
        let agg = fixtures::worked_example();
        let spec = component_spectrum(&agg).unwrap();
        let emb = embed(&spec, 2).unwrap();
        let pivots = select_pivots(&emb, 2).unwrap();
        assert_eq!(pivots.indices, vec![0, 1]);
        let expected: [&[[f64; 2]]; 6] = [
            &[[0.0, 2.28], [2.28, 0.0]],
            &[[0.02, 1.97]],
            &[[1.46, 0.17]],
            &[[2.28, 0.0]],
            &[[2.28, 0.0]],
            &[[2.28, 0.0]],
        ];
        for (view, rows) in expected.iter().enumerate() {
            let f = view_cost(&emb, &pivots, agg.layout(), view).unwrap();
            for (j, row) in rows.iter().enumerate() {
                for k in 0..2 {
                    assert!((f.get(j, k) - row[k]).abs() <= 0.01, "F{view}[{j},{k}] = {}", f.get(j, k));
                }
            }
        }
        let lift = project(&emb, &pivots, agg.layout(), AssignMode::Optimal).unwrap();
        assert_eq!(lift, fixtures::worked_example_truth());
    }

    #[test]
    fn worked_example_end_to_end() {
        let agg = fixtures::worked_example();
        for mode in [AssignMode::Optimal, AssignMode::Greedy] {
            let sol = clear(&agg, &ClearOptions::with_mode(mode)).unwrap();
            assert_eq!(sol.universe_size, 2);
            assert_eq!(sol.lifting.partition().canonical(), vec![vec![0, 2], vec![1, 3, 4, 5, 6]]);
            assert!((sol.objective - 1.79).abs() <= 0.01);
            assert!(check_cycle_consistency(&sol.pairwise));
        }
    }

    #[test]
    fn beats_closure_baseline_on_worked_example() {
        let agg = fixtures::worked_example();
        let sol = clear(&agg, &ClearOptions::default()).unwrap();
        let closure = transitive_closure(&agg).closed;
        let baseline = normalized_objective(&closure, &agg).unwrap();
        assert!(sol.objective >= baseline, "{} < {baseline}", sol.objective);
    }

    #[test]
    fn noiseless_cluster_graph_embeds_orthogonally() {
        let agg = to_pairwise(&fixtures::worked_example_truth());
        let spec = component_spectrum(&agg).unwrap();
        let emb = embed(&spec, 2).unwrap();
        let clusters = [[0usize, 2].as_slice(), [1, 3, 4, 5, 6].as_slice()];
        for c in clusters {
            for &v in c {
                assert_eq!(emb.row(v), emb.row(c[0]));
            }
        }
        assert!(dot(emb.row(0), emb.row(1)).abs() <= 1e-7);
        let pivots = select_pivots(&emb, 2).unwrap();
        assert!(dot(&pivots.vectors[0], &pivots.vectors[1]).abs() <= 1e-7);
    }

    #[test]
    fn full_dimension_embedding_has_unit_rows() {
        let agg = fixtures::worked_example();
        let spec = component_spectrum(&agg).unwrap();
        let emb = embed(&spec, 7).unwrap();
        for i in 0..7 {
            let n: f64 = emb.row(i).iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-9);
        }
        assert!(matches!(embed(&spec, 8), Err(Error::InvalidUniverseSize { .. })));
    }

    #[test]
    fn zero_rows_are_never_pivots() {
        let emb = Embedding::from_rows(2, &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 3.0]]);
        assert_eq!(emb.zero_rows(), &[0]);
        let p = select_pivots(&emb, 2).unwrap();
        assert_eq!(p.indices, vec![1, 2]);
        assert!(matches!(
            select_pivots(&emb, 3),
            Err(Error::InsufficientNonZeroRows { required: 3, available: 2 })
        ));
    }

    #[test]
    fn zero_rows_project_by_index() {
        // two zero rows in one view: uniform unit costs, resolved in index order
        let emb = Embedding::from_rows(2, &[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0]]);
        let pivots = select_pivots(&emb, 2).unwrap();
        let layout = ViewLayout::new(vec![1, 1, 2]);
        for mode in [AssignMode::Optimal, AssignMode::Greedy] {
            let lift = project(&emb, &pivots, &layout, mode).unwrap();
            assert_eq!(lift.assignment()[2], vec![0, 1]);
        }
    }

    #[test]
    fn override_is_validated() {
        let agg = fixtures::worked_example();
        let opts = ClearOptions {
            override_m: Some(1),
            ..ClearOptions::default()
        };
        assert!(matches!(clear(&agg, &opts), Err(Error::InvalidUniverseSize { .. })));
        let opts = ClearOptions {
            override_m: Some(3),
            ..ClearOptions::default()
        };
        let sol = clear(&agg, &opts).unwrap();
        assert_eq!(sol.universe_size, 3);
        assert!(check_cycle_consistency(&sol.pairwise));
    }

    #[test]
    fn sweep_keeps_the_best_objective() {
        let agg = fixtures::worked_example();
        let single = clear(&agg, &ClearOptions::default()).unwrap();
        let swept = clear_sweep(&agg, AssignMode::Optimal, None).unwrap();
        assert!(swept.objective >= single.objective);
        // all singletons score sum(1 / c~_i) = 1.8, just above the two-cluster answer
        assert_eq!(swept.universe_size, 7);
        assert!((swept.objective - 1.8).abs() < 1e-12);
        let narrow = clear_sweep(&agg, AssignMode::Optimal, Some(2..=3)).unwrap();
        assert_eq!(narrow.universe_size, 2);
    }

    #[test]
    fn empty_layout() {
        let agg = AggregateAssociation::empty(ViewLayout::new(vec![0, 0]));
        let sol = clear(&agg, &ClearOptions::default()).unwrap();
        assert_eq!(sol.universe_size, 0);
        assert_eq!(sol.pairwise.edge_count(), 0);
    }

    #[test]
    fn no_edges_gives_singletons() {
        let agg = AggregateAssociation::empty(ViewLayout::new(vec![2, 3]));
        let sol = clear(&agg, &ClearOptions::default()).unwrap();
        assert_eq!(sol.universe_size, 5);
        assert_eq!(sol.pairwise.edge_count(), 0);
        assert!(check_distinctness(&sol.pairwise).is_empty());
    }

    #[test]
    fn min_cluster_filter() {
        let agg = fixtures::worked_example();
        let sol = clear(&agg, &ClearOptions::default()).unwrap();
        assert_eq!(postprocess_min_cluster(&sol, &agg, 1).unwrap(), sol);
        let filtered = postprocess_min_cluster(&sol, &agg, 3).unwrap();
        assert_eq!(filtered.lifting.partition().canonical(), vec![vec![0], vec![1, 3, 4, 5, 6], vec![2]]);
        assert_eq!(filtered.universe_size, 3);
        assert!(check_cycle_consistency(&filtered.pairwise));
    }
}
