use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use vwos_core::harness::{self, validate::Suite, Histogram};
use vwos_core::{EvalPlane, MemoryMode, Method, RunReport, SceneSpec, SolverConfig};

#[derive(Parser)]
#[command(name = "vwos", version, about = "Walk-based Laplace solvers for media with random spherical particles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the solution on a grid of points and write CSV, PFM, PPM and JSON outputs.
    Solve(SolveArgs),
    /// Error metrics between two runs on the same grid.
    Compare {
        /// report.json, or a directory holding one
        a: PathBuf,
        b: PathBuf,
    },
    /// Run self-checks at pinned seeds and print JSON verdicts.
    Validate {
        #[arg(long)]
        scene: PathBuf,
        /// distributions, solvers, memory, or all
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Walk length and memory size statistics of a finished run.
    Stats { report: PathBuf },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    method: Method,
    /// "ox,oy,oz;ux,uy,uz;vx,vy,vz;nu,nv"
    #[arg(long, allow_hyphen_values = true)]
    plane: String,
    /// Walks per point; defaults to the scene's solver settings.
    #[arg(long)]
    walks: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// full, finite:KE,KP or memoryless
    #[arg(long)]
    memory: Option<MemoryMode>,
    #[arg(long)]
    max_steps: Option<u64>,
    /// Configurations for `ea`; the walk count must be a multiple of it.
    #[arg(long, default_value_t = 1)]
    configs: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads, 0 for one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn report_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("report.json")
    } else {
        p.to_path_buf()
    }
}

fn solve(args: SolveArgs) -> Result<()> {
    let scene = SceneSpec::load(&args.scene)?;
    let plane = EvalPlane::parse(&args.plane)?;
    let mut cfg: SolverConfig = scene.solver;
    cfg.n_walks = args.walks.unwrap_or(cfg.n_walks);
    cfg.eps = args.eps.unwrap_or(cfg.eps);
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.memory_mode = args.memory.unwrap_or(cfg.memory_mode);
    cfg.max_steps = args.max_steps.unwrap_or(cfg.max_steps);
    let report = harness::run(&scene, args.method, &plane, &cfg, args.configs, &args.out, args.threads)?;
    eprintln!(
        "{}: {} points, {} walks each, {} truncated, {:.2}s on {} threads -> {}",
        report.method,
        report.points.len(),
        cfg.n_walks,
        report.truncated_walks,
        report.wall_clock_seconds,
        report.threads,
        args.out.display()
    );
    Ok(())
}

fn histogram_json(h: &Histogram) -> serde_json::Value {
    let buckets: Vec<_> = h
        .counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(b, &c)| {
            let (lo, hi) = if b == 0 { (0u64, 0u64) } else { (1 << (b - 1), (1u64 << b) - 1) };
            serde_json::json!({ "from": lo, "to": hi, "count": c })
        })
        .collect();
    serde_json::json!({ "total": h.total(), "median_bucket_from": h.median_bucket_floor(), "buckets": buckets })
}

fn stats(path: &Path) -> Result<()> {
    let r = RunReport::load(&report_path(path))?;
    let n = r.points.len().max(1) as f64;
    let mean = |f: fn(&harness::PointRecord) -> f64| r.points.iter().map(f).sum::<f64>() / n;
    let out = serde_json::json!({
        "method": r.method,
        "points": r.points.len(),
        "walks": r.histograms.walk_length.total(),
        "truncated": r.truncated_walks,
        "wall_clock_seconds": r.wall_clock_seconds,
        "mean_walk_length": mean(|p| p.mean_walk_length),
        "mean_E": mean(|p| p.mean_empty_balls),
        "mean_P": mean(|p| p.mean_particles),
        "walk_length": histogram_json(&r.histograms.walk_length),
        "E": histogram_json(&r.histograms.empty_balls),
        "P": histogram_json(&r.histograms.particles),
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn run() -> Result<bool> {
    match Cli::parse().command {
        Command::Solve(args) => solve(args)?,
        Command::Compare { a, b } => {
            let ra = RunReport::load(&report_path(&a))?;
            let rb = RunReport::load(&report_path(&b))?;
            let c = harness::compare(&ra, &rb)?;
            println!("{}", serde_json::to_string_pretty(&c)?);
        }
        Command::Validate { scene, suite, seed, threads } => {
            let spec = SceneSpec::load(&scene)?;
            let suites = match suite.as_str() {
                "all" => Suite::ALL.to_vec(),
                s => vec![s.parse::<Suite>()?],
            };
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().context("thread pool")?;
            let reports = pool
                .install(|| suites.iter().map(|&s| harness::validate(&spec, s, seed)).collect::<Result<Vec<_>, _>>())?;
            println!("{}", serde_json::to_string_pretty(&reports)?);
            return Ok(reports.iter().all(|r| r.passed));
        }
        Command::Stats { report } => stats(&report)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
