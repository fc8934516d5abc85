//! `clear`: solve, synthesize, evaluate and benchmark multi-view associations.
//!
//! Exit codes: 0 success, 2 unreadable or invalid input (including flag
//! ranges and layout mismatches), 3 pipeline or output failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use clear_core::evaluation::{
    clique_metrics, edge_metrics, gen_ground_truth, inject_mismatch, monte_carlo, write_means_csv,
    write_trials_csv, MonteCarloOptions, SynthConfig, NOISE_STREAM,
};
use clear_core::io::{AssociationFile, LiftingFile, SolutionFile};
use clear_core::{
    check_cycle_consistency, check_distinctness, clear, postprocess_min_cluster, AggregateAssociation, AssignMode,
    ClearOptions, Error,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "clear", version, about = "Cycle-consistent multi-view data association")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rectify a noisy association file into a cycle-consistent solution.
    Run(RunArgs),
    /// Generate a ground truth and a noisy copy of it.
    Synth(SynthArgs),
    /// Score an association or solution file against a ground truth.
    Eval(EvalArgs),
    /// Run a Monte Carlo grid and write per-trial and per-cell CSVs.
    Bench(BenchArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Association JSON: {"views": [...], "edges": [[vi, ii, vj, ij], ...]}
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = AssignMode::Optimal)]
    mode: AssignMode,
    /// Use this universe size instead of the spectral estimate.
    #[arg(long)]
    override_m: Option<usize>,
    /// Dissolve clusters with fewer members into singletons.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    min_cluster: Option<u64>,
    /// Include eigenvalues, m_tilde and pivots in the output.
    #[arg(long)]
    diagnostics: bool,
    /// Write runtime_s = 0 so outputs are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    views: usize,
    #[arg(long)]
    ratio: f64,
    #[arg(long)]
    rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Only swap matches so every vertex keeps its degree.
    #[arg(long)]
    degree_preserving: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    output: PathBuf,
    truth: PathBuf,
    /// Also score the transitive closure and report consistency flags.
    #[arg(long)]
    clique: bool,
    /// Append a result row to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 20)]
    m: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [4, 6, 8, 10, 12, 14])]
    views: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5])]
    ratios: Vec<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        default_values_t = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55]
    )]
    rates: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, default_value_t = AssignMode::Optimal)]
    mode: AssignMode,
    #[arg(long)]
    degree_preserving: bool,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    no_timing: bool,
}

enum Failure {
    Input(String),
    Pipeline(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Pipeline(_) => 3,
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

/// Library errors caused by the request itself count as input errors.
fn classify(err: Error) -> Failure {
    match err {
        Error::ViewOutOfRange { .. }
        | Error::IndexOutOfRange { .. }
        | Error::VertexOutOfRange { .. }
        | Error::SameViewEdge { .. }
        | Error::LayoutMismatch { .. }
        | Error::InvalidLifting(_)
        | Error::InvalidUniverseSize { .. }
        | Error::InvalidConfig(_) => Failure::Input(err.to_string()),
        _ => Failure::Pipeline(err.to_string()),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_association(path: &Path) -> CliResult<AggregateAssociation> {
    let file: AssociationFile = read_json(path)?;
    file.to_aggregate()
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Writes via a sibling temporary file so a failed run leaves nothing behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)
        .and_then(|()| fs::rename(&tmp, path))
        .map_err(|e| {
            let _ = fs::remove_file(&tmp);
            Failure::Pipeline(format!("{}: {e}", path.display()))
        })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Failure::Pipeline(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn cmd_run(args: RunArgs) -> CliResult {
    let input = read_association(&args.input)?;
    let opts = ClearOptions {
        override_m: args.override_m,
        ..ClearOptions::with_mode(args.mode)
    };
    let start = Instant::now();
    let mut sol = clear(&input, &opts).map_err(classify)?;
    if let Some(min) = args.min_cluster {
        sol = postprocess_min_cluster(&sol, &input, min as usize).map_err(classify)?;
    }
    let runtime = if args.no_timing { 0.0 } else { start.elapsed().as_secs_f64() };
    write_json(&args.output, &SolutionFile::from_solution(&sol, runtime, args.diagnostics))?;
    eprintln!(
        "universe size {}, {} associations, objective {:.6}",
        sol.universe_size,
        sol.pairwise.edge_count(),
        sol.objective
    );
    Ok(())
}

#[derive(Serialize)]
struct Manifest {
    m: usize,
    views: usize,
    ratio: f64,
    rate: f64,
    seed: u64,
    degree_preserving: bool,
    truth: &'static str,
    noisy: &'static str,
    lifting: &'static str,
}

fn cmd_synth(args: SynthArgs) -> CliResult {
    let cfg = SynthConfig {
        universe_size: args.m,
        n_views: args.views,
        observation_ratio: args.ratio,
        mismatch_rate: args.rate,
        seed: args.seed,
    };
    cfg.validate().map_err(classify)?;
    let (lifting, truth) = gen_ground_truth(&cfg).map_err(classify)?;
    let noisy = inject_mismatch(&truth, args.rate, args.seed ^ NOISE_STREAM, args.degree_preserving).map_err(classify)?;

    fs::create_dir_all(&args.out_dir).map_err(|e| Failure::Pipeline(format!("{}: {e}", args.out_dir.display())))?;
    let manifest = Manifest {
        m: args.m,
        views: args.views,
        ratio: args.ratio,
        rate: args.rate,
        seed: args.seed,
        degree_preserving: args.degree_preserving,
        truth: "truth.json",
        noisy: "noisy.json",
        lifting: "truth_lifting.json",
    };
    write_json(&args.out_dir.join(manifest.truth), &AssociationFile::from_aggregate(&truth))?;
    write_json(&args.out_dir.join(manifest.noisy), &AssociationFile::from_aggregate(&noisy))?;
    write_json(&args.out_dir.join(manifest.lifting), &LiftingFile::from_lifting(&lifting))?;
    write_json(&args.out_dir.join("manifest.json"), &manifest)?;
    eprintln!(
        "{} truth and {} noisy associations over {} items",
        truth.edge_count(),
        noisy.edge_count(),
        truth.layout().total()
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalRow {
    output: String,
    truth: String,
    p: f64,
    r: f64,
    f1: f64,
    closure_p: Option<f64>,
    closure_r: Option<f64>,
    closure_f1: Option<f64>,
    consistent: bool,
    distinct: bool,
}

fn cmd_eval(args: EvalArgs) -> CliResult {
    let output = read_association(&args.output)?;
    let truth = read_association(&args.truth)?;
    let edge = edge_metrics(&output, &truth).map_err(classify)?;
    let consistent = check_cycle_consistency(&output);
    let distinct = check_distinctness(&output).is_empty();
    println!("edge      p={} r={} f1={}", edge.precision, edge.recall, edge.f1);

    let closure = if args.clique {
        let c = clique_metrics(&output, &truth).map_err(classify)?;
        println!("closure   p={} r={} f1={}", c.precision, c.recall, c.f1);
        println!("consistent={consistent} distinct={distinct}");
        Some(c)
    } else {
        if !consistent {
            eprintln!(
                "warning: output is not cycle consistent; edge metrics may mislead clique-centric use (rerun with --clique)"
            );
        }
        None
    };

    if let Some(path) = &args.csv {
        let row = EvalRow {
            output: args.output.display().to_string(),
            truth: args.truth.display().to_string(),
            p: edge.precision,
            r: edge.recall,
            f1: edge.f1,
            closure_p: closure.map(|c| c.precision),
            closure_r: closure.map(|c| c.recall),
            closure_f1: closure.map(|c| c.f1),
            consistent,
            distinct,
        };
        append_csv(path, &row).map_err(|e| Failure::Pipeline(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn append_csv(path: &Path, row: &EvalRow) -> Result<(), Box<dyn std::error::Error>> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    w.serialize(row)?;
    w.flush()?;
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> CliResult {
    if args.views.is_empty() || args.ratios.is_empty() || args.rates.is_empty() {
        return Err(Failure::Input("views, ratios and rates must be non-empty".into()));
    }
    let mut grid = Vec::new();
    for &views in &args.views {
        for &ratio in &args.ratios {
            for &rate in &args.rates {
                grid.push(SynthConfig {
                    universe_size: args.m,
                    n_views: views,
                    observation_ratio: ratio,
                    mismatch_rate: rate,
                    seed: 0,
                });
            }
        }
    }
    let opts = MonteCarloOptions {
        trials: args.trials,
        base_seed: args.seed,
        mode: args.mode,
        threads: args.threads,
        degree_preserving: args.degree_preserving,
        record_timing: !args.no_timing,
    };
    let table = monte_carlo(&grid, &opts).map_err(classify)?;

    let io_err = |e: std::io::Error| Failure::Pipeline(format!("{}: {e}", args.out_dir.display()));
    fs::create_dir_all(&args.out_dir).map_err(io_err)?;
    let mut trials = Vec::new();
    write_trials_csv(&table, &mut trials).map_err(io_err)?;
    write_atomic(&args.out_dir.join("trials.csv"), &trials)?;
    let mut means = Vec::new();
    write_means_csv(&table, &mut means).map_err(io_err)?;
    write_atomic(&args.out_dir.join("means.csv"), &means)?;

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let _ = writeln!(
        out,
        "{:>5} {:>5} {:>5} {:>7} {:>7} {:>10} {:>10} {:>6} {:>6}",
        "views", "ratio", "rate", "f1", "p", "closure_f1", "consistent", "m_hat", "failed"
    );
    for c in &table.cells {
        let _ = writeln!(
            out,
            "{:>5} {:>5.2} {:>5.2} {:>7.4} {:>7.4} {:>10.4} {:>10.2} {:>6.1} {:>6}",
            c.views, c.ratio, c.rate, c.f1, c.p, c.closure_f1, c.consistent, c.m_hat, c.failures
        );
    }

    for rec in &table.records {
        if let Err(e) = &rec.outcome {
            eprintln!("cell {} trial {} failed: {e}", rec.cell, rec.trial);
        }
    }

    // mean F1 should not drop as views are added, per (ratio, rate)
    let (mut groups, mut monotone) = (0, 0);
    let mut drops = Vec::new();
    for &ratio in &args.ratios {
        for &rate in &args.rates {
            let cells: Vec<_> = table
                .cells
                .iter()
                .filter(|c| c.ratio == ratio && c.rate == rate && c.failures < c.trials)
                .collect();
            if cells.len() < 2 {
                continue;
            }
            groups += 1;
            let before = drops.len();
            for w in cells.windows(2) {
                if w[1].f1 < w[0].f1 {
                    drops.push(format!(
                        "ratio {ratio} rate {rate}: views {} -> {} f1 {:.4} -> {:.4}",
                        w[0].views, w[1].views, w[0].f1, w[1].f1
                    ));
                }
            }
            if drops.len() == before {
                monotone += 1;
            }
        }
    }
    let _ = writeln!(out, "trend: F1 monotone in views for {monotone}/{groups} (ratio, rate) groups");
    for d in &drops {
        let _ = writeln!(out, "  drop at {d}");
    }

    if table.cells.iter().all(|c| c.failures == c.trials) {
        return Err(Failure::Pipeline("every grid cell failed".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Input(msg) | Failure::Pipeline(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
