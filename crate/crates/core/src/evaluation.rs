//! Synthetic benchmarks: ground-truth generation, mismatch noise, metrics,
//! baselines, and a seeded Monte Carlo driver that writes CSV tables.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assoc::{
    check_cycle_consistency, check_distinctness, ensure_same_layout, to_pairwise, transitive_closure,
    AggregateAssociation, LiftingSet, ViewLayout,
};
use crate::clear::{clear, AssignMode, ClearOptions};
use crate::error::{Error, Result};
use crate::spectral::symmetric_laplacian_eigenvalues;

/// Offset between the truth and noise random streams of one trial.
pub const NOISE_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub universe_size: usize,
    pub n_views: usize,
    pub observation_ratio: f64,
    pub mismatch_rate: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.universe_size == 0 {
            return Err(Error::InvalidConfig("universe size must be at least 1".into()));
        }
        if self.n_views == 0 {
            return Err(Error::InvalidConfig("need at least one view".into()));
        }
        if !(self.observation_ratio > 0.0 && self.observation_ratio <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "observation ratio {} outside (0, 1]",
                self.observation_ratio
            )));
        }
        if !(0.0..=1.0).contains(&self.mismatch_rate) {
            return Err(Error::InvalidConfig(format!(
                "mismatch rate {} outside [0, 1]",
                self.mismatch_rate
            )));
        }
        Ok(())
    }

    /// Items observed per view, `ceil(ratio * m)`.
    pub fn items_per_view(&self) -> usize {
        let raw = self.observation_ratio * self.universe_size as f64;
        ((raw - 1e-9).ceil() as usize).clamp(1, self.universe_size)
    }
}

/// Each view samples `ceil(ratio * m)` distinct universe ids uniformly, in random order.
pub fn gen_ground_truth(cfg: &SynthConfig) -> Result<(LiftingSet, AggregateAssociation)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let k = cfg.items_per_view();
    let assignment: Vec<Vec<usize>> = (0..cfg.n_views)
        .map(|_| rand::seq::index::sample(&mut rng, cfg.universe_size, k).into_vec())
        .collect();
    let lifting = LiftingSet::new(ViewLayout::new(vec![k; cfg.n_views]), cfg.universe_size, assignment)?;
    let agg = to_pairwise(&lifting);
    Ok((lifting, agg))
}

/// Reassigns `floor(rate * |E|)` matches to wrong partners.
///
/// For a picked edge `a - b` (b in view j) a different item `b'` of view j
/// is drawn; `a` is matched to `b'` and, when `b'` had a partner `a'` in a's
/// view, `a'` takes over `b`. Blocks stay partial permutations and the edge
/// count is unchanged. With `degree_preserving`, `b'` is drawn only among
/// items that have such a partner, so every vertex keeps its degree.
pub fn inject_mismatch(
    agg: &AggregateAssociation,
    rate: f64,
    seed: u64,
    degree_preserving: bool,
) -> Result<AggregateAssociation> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidConfig(format!("mismatch rate {rate} outside [0, 1]")));
    }
    let report = check_distinctness(agg);
    if !report.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "mismatch injection needs partial-permutation blocks, violated at {:?}",
            report.violating_blocks
        )));
    }
    let layout = agg.layout();
    let target = (rate * agg.edge_count() as f64 + 1e-9).floor() as usize;
    if target == 0 {
        return Ok(agg.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: BTreeSet<(usize, usize)> = agg.edges().iter().copied().collect();
    // partner[(vertex, view)] = the vertex it is matched to in that view
    let mut partner: HashMap<(usize, usize), usize> = HashMap::new();
    for &(a, b) in agg.edges() {
        partner.insert((a, layout.view_of(b)), b);
        partner.insert((b, layout.view_of(a)), a);
    }

    let mut pool: Vec<(usize, usize)> = agg.edges().to_vec();
    pool.shuffle(&mut rng);
    let mut flipped = 0;
    for (a, b) in pool {
        if flipped == target {
            break;
        }
        if !edges.contains(&(a, b)) {
            continue;
        }
        let first = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
        let second = (first.1, first.0);
        for (keep, drop) in [first, second] {
            let view_i = layout.view_of(keep);
            let view_j = layout.view_of(drop);
            let candidates: Vec<usize> = layout
                .block(view_j)
                .filter(|&c| c != drop && (!degree_preserving || partner.contains_key(&(c, view_i))))
                .collect();
            let Some(&target_item) = candidates.choose(&mut rng) else {
                continue;
            };
            unlink(&mut edges, &mut partner, layout, keep, drop);
            if let Some(&other) = partner.get(&(target_item, view_i)) {
                unlink(&mut edges, &mut partner, layout, other, target_item);
                link(&mut edges, &mut partner, layout, other, drop);
            }
            link(&mut edges, &mut partner, layout, keep, target_item);
            flipped += 1;
            break;
        }
    }
    AggregateAssociation::from_vertex_pairs(layout.clone(), edges)
}

fn unlink(
    edges: &mut BTreeSet<(usize, usize)>,
    partner: &mut HashMap<(usize, usize), usize>,
    layout: &ViewLayout,
    a: usize,
    b: usize,
) {
    edges.remove(&(a.min(b), a.max(b)));
    partner.remove(&(a, layout.view_of(b)));
    partner.remove(&(b, layout.view_of(a)));
}

fn link(
    edges: &mut BTreeSet<(usize, usize)>,
    partner: &mut HashMap<(usize, usize), usize>,
    layout: &ViewLayout,
    a: usize,
    b: usize,
) {
    edges.insert((a.min(b), a.max(b)));
    partner.insert((a, layout.view_of(b)), b);
    partner.insert((b, layout.view_of(a)), a);
}

/// Realized noise between a ground truth and its perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseBudget {
    /// Largest number of flipped associations at any vertex.
    pub e_max: usize,
    /// Smallest diagonal entry of the ground truth's `C = D + I`.
    pub c_min: usize,
    /// Whether the perturbation kept every degree, i.e. `C~ = C`.
    pub degree_preserving: bool,
}

impl NoiseBudget {
    /// `e_max < 0.5 c_min`.
    pub fn within_bound(&self) -> bool {
        2 * self.e_max < self.c_min
    }
}

pub fn noise_budget(truth: &AggregateAssociation, noisy: &AggregateAssociation) -> Result<NoiseBudget> {
    ensure_same_layout(truth, noisy)?;
    let l = truth.layout().total();
    let mut e = vec![0usize; l];
    let t: BTreeSet<_> = truth.edges().iter().collect();
    let n: BTreeSet<_> = noisy.edges().iter().collect();
    for &&(a, b) in t.symmetric_difference(&n) {
        e[a] += 1;
        e[b] += 1;
    }
    let dt = truth.degrees();
    Ok(NoiseBudget {
        e_max: e.into_iter().max().unwrap_or(0),
        c_min: dt.iter().map(|d| d + 1).min().unwrap_or(0),
        degree_preserving: dt == noisy.degrees(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    fn from_counts(correct: usize, output: usize, truth: usize) -> Self {
        let precision = if output == 0 { 1.0 } else { correct as f64 / output as f64 };
        let recall = if truth == 0 { 1.0 } else { correct as f64 / truth as f64 };
        Self {
            precision,
            recall,
            f1: f1_score(precision, recall),
        }
    }
}

/// `2pr / (p + r)`, or 0 when both vanish.
pub fn f1_score(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

fn count_common(a: &[(usize, usize)], b: &[(usize, usize)]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Precision and recall over individual pairwise associations.
pub fn edge_metrics(output: &AggregateAssociation, truth: &AggregateAssociation) -> Result<Scores> {
    ensure_same_layout(output, truth)?;
    let correct = count_common(output.edges(), truth.edges());
    Ok(Scores::from_counts(correct, output.edge_count(), truth.edge_count()))
}

/// Edge metrics of the transitive closure of `output`; intra-view pairs the
/// closure forces are counted as wrong associations.
pub fn clique_metrics(output: &AggregateAssociation, truth: &AggregateAssociation) -> Result<Scores> {
    ensure_same_layout(output, truth)?;
    let closure = transitive_closure(output);
    let correct = count_common(closure.closed.edges(), truth.edges());
    let produced = closure.closed.edge_count() + closure.intra_view_pairs.len();
    Ok(Scores::from_counts(correct, produced, truth.edge_count()))
}

/// Cluster count maximizing the gap between consecutive sorted eigenvalues of
/// the symmetric Laplacian `D^{-1/2} L D^{-1/2}`; ties go to the smallest count.
pub fn eigengap_estimate(agg: &AggregateAssociation) -> Result<usize> {
    let values = symmetric_laplacian_eigenvalues(agg)?;
    if values.len() <= 1 {
        return Ok(values.len());
    }
    let mut best = 1;
    let mut best_gap = f64::NEG_INFINITY;
    for k in 1..values.len() {
        let gap = (values[k] - values[k - 1]).abs();
        if gap > best_gap {
            best_gap = gap;
            best = k;
        }
    }
    Ok(best)
}

/// Outcome of one rectification run against a known ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub edge: Scores,
    pub closure: Scores,
    pub consistent: bool,
    pub distinct: bool,
    pub m_hat: usize,
    pub m_tilde: usize,
    pub eigengap_m: usize,
    /// Number of non-empty ground-truth clusters.
    pub m_true: usize,
    /// Edge F1 of the noisy input itself.
    pub input_f1: f64,
    pub runtime_seconds: f64,
}

/// Generates, perturbs, rectifies, and scores a single instance.
pub fn run_trial(cfg: &SynthConfig, mode: AssignMode, degree_preserving: bool) -> Result<EvalReport> {
    let (lifting, truth) = gen_ground_truth(cfg)?;
    let noisy = inject_mismatch(&truth, cfg.mismatch_rate, cfg.seed ^ NOISE_STREAM, degree_preserving)?;
    let start = Instant::now();
    let sol = clear(&noisy, &ClearOptions::with_mode(mode))?;
    let runtime_seconds = start.elapsed().as_secs_f64();
    Ok(EvalReport {
        edge: edge_metrics(&sol.pairwise, &truth)?,
        closure: clique_metrics(&sol.pairwise, &truth)?,
        consistent: check_cycle_consistency(&sol.pairwise),
        distinct: check_distinctness(&sol.pairwise).is_empty(),
        m_hat: sol.universe_size,
        m_tilde: sol.diagnostics.m_tilde,
        eigengap_m: eigengap_estimate(&noisy)?,
        m_true: lifting.partition().clusters.len(),
        input_f1: edge_metrics(&noisy, &truth)?.f1,
        runtime_seconds,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloOptions {
    pub trials: usize,
    pub base_seed: u64,
    pub mode: AssignMode,
    /// Worker threads; 0 uses the global rayon pool.
    pub threads: usize,
    pub degree_preserving: bool,
    /// When false, runtimes are reported as 0 so tables are byte-reproducible.
    pub record_timing: bool,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        Self {
            trials: 10,
            base_seed: 0,
            mode: AssignMode::Optimal,
            threads: 0,
            degree_preserving: false,
            record_timing: true,
        }
    }
}

/// Seed of trial `trial` in grid cell `cell`.
pub fn trial_seed(base: u64, cell: usize, trial: usize) -> u64 {
    base ^ ((cell as u64) << 32) ^ trial as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub cell: usize,
    pub trial: usize,
    pub config: SynthConfig,
    pub outcome: std::result::Result<EvalReport, String>,
}

/// Means over the successful trials of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub views: usize,
    pub ratio: f64,
    pub rate: f64,
    pub trials: usize,
    pub failures: usize,
    pub p: f64,
    pub r: f64,
    pub f1: f64,
    pub closure_p: f64,
    pub closure_r: f64,
    pub closure_f1: f64,
    pub consistent: f64,
    pub distinct: f64,
    pub m_hat: f64,
    pub m_tilde: f64,
    pub eigengap_m: f64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloTable {
    pub records: Vec<TrialRecord>,
    pub cells: Vec<CellSummary>,
}

/// Runs `trials` independent trials per grid cell. The `seed` of each grid
/// entry is ignored; trial seeds derive from `opts.base_seed`.
pub fn monte_carlo(grid: &[SynthConfig], opts: &MonteCarloOptions) -> Result<MonteCarloTable> {
    if opts.trials == 0 {
        return Err(Error::InvalidConfig("need at least one trial per cell".into()));
    }
    for cfg in grid {
        cfg.validate()?;
    }
    let jobs: Vec<(usize, usize, SynthConfig)> = grid
        .iter()
        .enumerate()
        .flat_map(|(cell, cfg)| {
            (0..opts.trials).map(move |trial| {
                let mut cfg = *cfg;
                cfg.seed = trial_seed(opts.base_seed, cell, trial);
                (cell, trial, cfg)
            })
        })
        .collect();
    let run = || -> Vec<TrialRecord> {
        jobs.par_iter()
            .map(|&(cell, trial, cfg)| {
                let outcome = run_trial(&cfg, opts.mode, opts.degree_preserving)
                    .map(|mut r| {
                        if !opts.record_timing {
                            r.runtime_seconds = 0.0;
                        }
                        r
                    })
                    .map_err(|e| e.to_string());
                TrialRecord {
                    cell,
                    trial,
                    config: cfg,
                    outcome,
                }
            })
            .collect()
    };
    let records = if opts.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(run)
    } else {
        run()
    };
    let cells = grid
        .iter()
        .enumerate()
        .map(|(cell, cfg)| summarize(cfg, records.iter().filter(|r| r.cell == cell)))
        .collect();
    Ok(MonteCarloTable { records, cells })
}

fn summarize<'a>(cfg: &SynthConfig, records: impl Iterator<Item = &'a TrialRecord>) -> CellSummary {
    let mut trials = 0;
    let mut ok: Vec<&EvalReport> = Vec::new();
    for r in records {
        trials += 1;
        if let Ok(rep) = &r.outcome {
            ok.push(rep);
        }
    }
    let mean = |f: &dyn Fn(&EvalReport) -> f64| -> f64 {
        if ok.is_empty() {
            f64::NAN
        } else {
            ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
        }
    };
    CellSummary {
        views: cfg.n_views,
        ratio: cfg.observation_ratio,
        rate: cfg.mismatch_rate,
        trials,
        failures: trials - ok.len(),
        p: mean(&|r| r.edge.precision),
        r: mean(&|r| r.edge.recall),
        f1: mean(&|r| r.edge.f1),
        closure_p: mean(&|r| r.closure.precision),
        closure_r: mean(&|r| r.closure.recall),
        closure_f1: mean(&|r| r.closure.f1),
        consistent: mean(&|r| f64::from(u8::from(r.consistent))),
        distinct: mean(&|r| f64::from(u8::from(r.distinct))),
        m_hat: mean(&|r| r.m_hat as f64),
        m_tilde: mean(&|r| r.m_tilde as f64),
        eigengap_m: mean(&|r| r.eigengap_m as f64),
        runtime_s: mean(&|r| r.runtime_seconds),
    }
}

#[derive(Debug, Serialize)]
struct TrialRow {
    views: usize,
    ratio: f64,
    rate: f64,
    trial: usize,
    p: f64,
    r: f64,
    f1: f64,
    closure_p: f64,
    closure_r: f64,
    closure_f1: f64,
    consistent: bool,
    distinct: bool,
    m_hat: usize,
    m_tilde: usize,
    eigengap_m: usize,
    runtime_s: f64,
}

/// One row per successful trial; failed trials are skipped.
pub fn write_trials_csv<W: Write>(table: &MonteCarloTable, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in &table.records {
        let Ok(rep) = &rec.outcome else { continue };
        w.serialize(TrialRow {
            views: rec.config.n_views,
            ratio: rec.config.observation_ratio,
            rate: rec.config.mismatch_rate,
            trial: rec.trial,
            p: rep.edge.precision,
            r: rep.edge.recall,
            f1: rep.edge.f1,
            closure_p: rep.closure.precision,
            closure_r: rep.closure.recall,
            closure_f1: rep.closure.f1,
            consistent: rep.consistent,
            distinct: rep.distinct,
            m_hat: rep.m_hat,
            m_tilde: rep.m_tilde,
            eigengap_m: rep.eigengap_m,
            runtime_s: rep.runtime_seconds,
        })?;
    }
    w.flush()
}

pub fn write_means_csv<W: Write>(table: &MonteCarloTable, out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for cell in &table.cells {
        w.serialize(cell)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn cfg(m: usize, n: usize, ratio: f64, rate: f64, seed: u64) -> SynthConfig {
        SynthConfig {
            universe_size: m,
            n_views: n,
            observation_ratio: ratio,
            mismatch_rate: rate,
            seed,
        }
    }

    #[test]
    fn full_observation_gives_disjoint_cliques() {
        let (lift, agg) = gen_ground_truth(&cfg(6, 4, 1.0, 0.0, 1)).unwrap();
        assert!(lift.layout().counts().iter().all(|&c| c == 6));
        let part = lift.partition();
        assert_eq!(part.clusters.len(), 6);
        assert!(part.clusters.iter().all(|c| c.len() == 4));
        assert_eq!(agg.edge_count(), 6 * 6);
    }

    #[test]
    fn half_observation_layout() {
        let (lift, agg) = gen_ground_truth(&cfg(100, 10, 0.5, 0.0, 3)).unwrap();
        assert!(lift.layout().counts().iter().all(|&c| c == 50));
        assert!(check_distinctness(&agg).is_empty());
    }

    #[test]
    fn generation_is_seeded() {
        let a = gen_ground_truth(&cfg(30, 5, 0.5, 0.0, 9)).unwrap();
        let b = gen_ground_truth(&cfg(30, 5, 0.5, 0.0, 9)).unwrap();
        let c = gen_ground_truth(&cfg(30, 5, 0.5, 0.0, 10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn invalid_configs() {
        assert!(gen_ground_truth(&cfg(0, 3, 0.5, 0.0, 0)).is_err());
        assert!(gen_ground_truth(&cfg(5, 0, 0.5, 0.0, 0)).is_err());
        assert!(gen_ground_truth(&cfg(5, 3, 0.0, 0.0, 0)).is_err());
        assert!(gen_ground_truth(&cfg(5, 3, 1.5, 0.0, 0)).is_err());
        assert!(gen_ground_truth(&cfg(5, 3, 0.5, 1.5, 0)).is_err());
        assert_eq!(cfg(100, 1, 0.2, 0.0, 0).items_per_view(), 20);
        assert_eq!(cfg(7, 1, 0.5, 0.0, 0).items_per_view(), 4);
    }

    #[test]
    fn zero_rate_is_identity() {
        let (_, agg) = gen_ground_truth(&cfg(20, 5, 0.5, 0.0, 4)).unwrap();
        assert_eq!(inject_mismatch(&agg, 0.0, 1, false).unwrap(), agg);
    }

    #[test]
    fn full_rate_on_two_by_two_swaps() {
        let agg = AggregateAssociation::from_vertex_pairs(ViewLayout::new(vec![2, 2]), [(0, 2), (1, 3)]).unwrap();
        for seed in 0..10 {
            let noisy = inject_mismatch(&agg, 1.0, seed, false).unwrap();
            assert_eq!(noisy.edges(), &[(0, 3), (1, 2)]);
        }
    }

    #[test]
    fn singleton_views_cannot_flip() {
        let agg = AggregateAssociation::from_vertex_pairs(ViewLayout::new(vec![1, 1]), [(0, 1)]).unwrap();
        assert_eq!(inject_mismatch(&agg, 1.0, 0, false).unwrap(), agg);
    }

    #[test]
    fn degree_preserving_keeps_degrees() {
        let (_, agg) = gen_ground_truth(&cfg(15, 6, 0.6, 0.0, 2)).unwrap();
        for seed in 0..20 {
            let noisy = inject_mismatch(&agg, 0.2, seed, true).unwrap();
            let budget = noise_budget(&agg, &noisy).unwrap();
            assert!(budget.degree_preserving);
            assert!(check_distinctness(&noisy).is_empty());
        }
    }

    #[test]
    fn metrics_conventions() {
        let (_, truth) = gen_ground_truth(&cfg(10, 4, 0.5, 0.0, 5)).unwrap();
        let s = edge_metrics(&truth, &truth).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        let empty = AggregateAssociation::empty(truth.layout().clone());
        let s = edge_metrics(&empty, &truth).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 0.0, 0.0));
        let other = AggregateAssociation::empty(ViewLayout::new(vec![1]));
        assert!(matches!(edge_metrics(&other, &truth), Err(Error::LayoutMismatch { .. })));
    }

    #[test]
    fn spurious_edges_lower_precision_only() {
        let (noisy, truth) = fixtures::bridged_cliques(4);
        let s = edge_metrics(&noisy, &truth).unwrap();
        assert_eq!(s.recall, 1.0);
        assert_eq!(s.precision, 12.0 / 13.0);
    }

    #[test]
    fn clique_metrics_on_bridged_cliques() {
        let (noisy, truth) = fixtures::bridged_cliques(10);
        let edge = edge_metrics(&noisy, &truth).unwrap();
        let clique = clique_metrics(&noisy, &truth).unwrap();
        assert_eq!(edge.precision, 90.0 / 91.0);
        // 20 vertices fuse into one clique: 190 pairs, 90 correct
        assert_eq!(clique.precision, 90.0 / 190.0);
        assert_eq!(clique.recall, 1.0);
        assert_eq!(clique_metrics(&truth, &truth).unwrap(), edge_metrics(&truth, &truth).unwrap());
    }

    #[test]
    fn eigengap_conventions() {
        let (_, agg) = gen_ground_truth(&cfg(7, 5, 1.0, 0.0, 0)).unwrap();
        assert_eq!(eigengap_estimate(&agg).unwrap(), 7);
        let empty = AggregateAssociation::empty(ViewLayout::new(vec![3, 3]));
        assert_eq!(eigengap_estimate(&empty).unwrap(), 1);
    }

    #[test]
    fn noiseless_cell_recovers_truth() {
        let grid = [cfg(12, 5, 0.5, 0.0, 0)];
        let table = monte_carlo(
            &grid,
            &MonteCarloOptions {
                trials: 1,
                ..MonteCarloOptions::default()
            },
        )
        .unwrap();
        let cell = &table.cells[0];
        assert_eq!(cell.f1, 1.0);
        assert_eq!(cell.consistent, 1.0);
        let rep = table.records[0].outcome.as_ref().unwrap();
        assert_eq!(rep.m_hat, rep.m_true);
    }

    #[test]
    fn csv_headers_are_fixed() {
        let grid = [cfg(8, 3, 0.5, 0.1, 0)];
        let opts = MonteCarloOptions {
            trials: 2,
            record_timing: false,
            ..MonteCarloOptions::default()
        };
        let table = monte_carlo(&grid, &opts).unwrap();
        let mut buf = Vec::new();
        write_trials_csv(&table, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "views,ratio,rate,trial,p,r,f1,closure_p,closure_r,closure_f1,consistent,distinct,m_hat,m_tilde,eigengap_m,runtime_s"
        );
        assert_eq!(text.lines().count(), 3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn mismatch_preserves_structure(
            m in 2usize..15, n in 2usize..6, ratio in 0.2f64..1.0, rate in 0.0f64..1.0,
            seed in any::<u64>(), preserve in any::<bool>()
        ) {
            let (_, agg) = gen_ground_truth(&cfg(m, n, ratio, 0.0, seed)).unwrap();
            let noisy = inject_mismatch(&agg, rate, seed.wrapping_add(1), preserve).unwrap();
            prop_assert!(check_distinctness(&noisy).is_empty());
            prop_assert_eq!(noisy.edge_count(), agg.edge_count());
            if preserve {
                prop_assert_eq!(noisy.degrees(), agg.degrees());
            }
        }

        #[test]
        fn f1_is_a_rate(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
            let f = f1_score(p, r);
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }
}
