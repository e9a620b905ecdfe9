//! Command-line interface: solve single scenarios, generate random ones,
//! run benchmark matrices, and inspect instances with the exact and
//! Monte-Carlo oracles.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use opsbd::bench::{
    self, compute_qrtd, default_time_grid, run_algorithm, run_benchmark, AlgorithmSpec,
    BenchConfig, QrtdCurve, TraceRecord,
};
use opsbd::instgen::{generate_instance, GenParams};
use opsbd::objective::{Instance, SolutionFile};
use opsbd::oracle::{exact_best, monte_carlo_estimate, DEFAULT_ENUMERATION_CAP};
use opsbd::scenario::{parse_scenario, validate_scenario, write_scenario, CellRef, Scenario};
use opsbd::solvers::SolverBudget;

#[derive(Parser)]
#[command(
    name = "opsbd",
    about = "Detector placement on grid scenarios: solvers, oracles, generator and benchmarks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one scenario.
    Solve(SolveArgs),
    /// Generate a random scenario file.
    Generate(GenerateArgs),
    /// Run a benchmark matrix from a config file.
    Bench(BenchArgs),
    /// Compute qualified-runtime distributions from trace files.
    Qrtd(QrtdArgs),
    /// Exhaustive optimum for small instances.
    Exact(ExactArgs),
    /// Monte-Carlo validation of a solution file.
    Simulate(SimulateArgs),
    /// Dump the dominance-count table as CSV.
    Dominance(DominanceArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario file.
    #[arg(long)]
    scenario: PathBuf,
    /// Algorithm: greedy | grasp | grasp-hc | hc | ea | umda.
    #[arg(long)]
    algo: String,
    /// Number of detectors to place.
    #[arg(long)]
    detectors: usize,
    /// Detector radius in meters (overrides the scenario file).
    #[arg(long)]
    radius: Option<f64>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    time: Option<f64>,
    /// Evaluation-count budget (reproducible runs).
    #[arg(long, conflicts_with = "time")]
    evals: Option<u64>,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Greediness parameter for grasp / grasp-hc / umda.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Population size for ea / umda.
    #[arg(long, default_value_t = 100)]
    pop_size: usize,
    /// Recombination probability for ea.
    #[arg(long, default_value_t = 0.9)]
    px: f64,
    /// Per-gene mutation probability for ea (default 1/detectors).
    #[arg(long)]
    pm: Option<f64>,
    /// Truncation-selection size for umda.
    #[arg(long, default_value_t = 50)]
    select_size: usize,
    /// Write the solution as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the improvement trace as CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    /// Cell side length in meters.
    #[arg(long)]
    cell: f64,
    #[arg(long)]
    entrances_per_side: usize,
    #[arg(long)]
    objectives: usize,
    /// Fraction of cells to block, e.g. 0.05.
    #[arg(long)]
    blocked: f64,
    /// Detector radius in meters.
    #[arg(long)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lethal-area constant (square meters) scaling casualty draws.
    #[arg(long, default_value_t = 100.0)]
    casualty_scale: f64,
    #[arg(long)]
    out: PathBuf,
    /// Restrict parameters to the benchmark grid values.
    #[arg(long)]
    paper_grid: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for results.csv, summary.json and traces/.
    #[arg(long)]
    out_dir: PathBuf,
    /// Worker threads; defaults to available cores minus one.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct QrtdArgs {
    /// Glob over trace CSV files named <instance>__<algo>__<seed>.csv.
    #[arg(long)]
    traces: String,
    #[arg(long)]
    out: PathBuf,
    /// Relative quality tolerance over best-known.
    #[arg(long, default_value_t = 0.0)]
    quality_eps: f64,
    /// Number of time-grid points.
    #[arg(long, default_value_t = 101)]
    grid_points: usize,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    detectors: usize,
    #[arg(long)]
    radius: Option<f64>,
    /// Enumerate over all unblocked cells instead of the pruned set.
    #[arg(long)]
    no_pruning: bool,
    /// Subset-count ceiling.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Solution JSON produced by `solve`.
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DominanceArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    detectors: usize,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve(args) => solve(args),
        Command::Generate(args) => generate(args),
        Command::Bench(args) => bench_cmd(args),
        Command::Qrtd(args) => qrtd(args),
        Command::Exact(args) => exact(args),
        Command::Simulate(args) => simulate(args),
        Command::Dominance(args) => dominance(args),
    }
}

fn load_scenario(path: &Path, radius: Option<f64>) -> Result<Scenario> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
    let mut scenario =
        parse_scenario(&text).with_context(|| format!("parsing scenario {}", path.display()))?;
    if let Some(r) = radius {
        scenario.set_radius(r);
    }
    let violations = validate_scenario(&scenario);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| format!("  - {v}")).collect();
        bail!(
            "scenario {} is invalid:\n{}",
            path.display(),
            lines.join("\n")
        );
    }
    Ok(scenario)
}

fn build_instance(path: &Path, radius: Option<f64>) -> Result<Instance> {
    let scenario = load_scenario(path, radius)?;
    Instance::build(scenario).map_err(|e| anyhow!("building instance: {e}"))
}

fn solve(args: SolveArgs) -> Result<()> {
    let algo_kind = bench::AlgoKind::parse(&args.algo)
        .ok_or_else(|| anyhow!("unknown algorithm {:?}", args.algo))?;
    let budget = match (args.time, args.evals) {
        (Some(t), None) => SolverBudget::WallClock(t),
        (None, Some(e)) => SolverBudget::EvalCount(e),
        (None, None) if algo_kind.is_deterministic() => SolverBudget::EvalCount(u64::MAX),
        _ => bail!("pass exactly one of --time or --evals"),
    };
    let instance = build_instance(&args.scenario, args.radius)?;
    let spec = AlgorithmSpec {
        name: args.algo.clone(),
        alpha: Some(args.alpha),
        pop_size: Some(args.pop_size),
        px: Some(args.px),
        pm: args.pm,
        select_size: Some(args.select_size),
    };
    let trace = run_algorithm(&instance, &spec, args.detectors, budget, args.seed)
        .map_err(|e| anyhow!("solver failed: {e}"))?;
    let sol = &trace.best;
    println!(
        "{} detectors={} value={} evals={} elapsed_to_final={}s",
        spec.label(),
        args.detectors,
        bench::sig12(sol.value()),
        trace.evaluations,
        bench::sig12(trace.elapsed_to_final())
    );
    for cell in sol.cells() {
        println!("  detector at {cell}");
    }
    if let Some(out) = &args.out {
        let file = SolutionFile::new(sol, instance.scenario().name(), &spec.label(), args.seed);
        fs::write(out, file.to_json())
            .with_context(|| format!("writing solution {}", out.display()))?;
    }
    if let Some(path) = &args.trace {
        fs::write(path, bench::trace_csv(&trace))
            .with_context(|| format!("writing trace {}", path.display()))?;
    }
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<()> {
    let params = GenParams {
        rows: args.rows,
        cols: args.cols,
        cell_size: args.cell,
        entrances_per_side: args.entrances_per_side,
        objectives: args.objectives,
        blocked_fraction: args.blocked,
        radius: args.radius,
        casualty_scale: args.casualty_scale,
        seed: args.seed,
        ..GenParams::default()
    };
    if args.paper_grid {
        params.check_paper_grid()?;
    }
    let scenario = generate_instance(&params)?;
    fs::write(&args.out, write_scenario(&scenario))
        .with_context(|| format!("writing scenario {}", args.out.display()))?;
    println!(
        "wrote {} ({}x{}, {} entrances, {} objectives)",
        args.out.display(),
        scenario.rows(),
        scenario.cols(),
        scenario.num_entrances(),
        scenario.num_objectives()
    );
    Ok(())
}

fn default_jobs() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get().saturating_sub(1).max(1))
        .unwrap_or(1)
}

fn bench_cmd(args: BenchArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    let cfg = BenchConfig::from_json(&text)?;
    let jobs = args.jobs.unwrap_or_else(default_jobs);
    let report = run_benchmark(&cfg, jobs)?;

    fs::create_dir_all(&args.out_dir)?;
    fs::write(
        args.out_dir.join("results.csv"),
        bench::results_csv(&report.rows),
    )?;
    fs::write(
        args.out_dir.join("summary.json"),
        bench::summary_json(&report),
    )?;
    if cfg.write_traces {
        let dir = args.out_dir.join("traces");
        fs::create_dir_all(&dir)?;
        for t in &report.traces {
            let name = format!("{}__{}__{}.csv", t.instance, t.algorithm, t.seed);
            fs::write(dir.join(name), bench::trace_csv(&t.trace))?;
        }
    }

    println!(
        "{} runs over {} blocks; outputs in {}",
        report.rows.len(),
        report.friedman.map_or(0, |f| f.blocks),
        args.out_dir.display()
    );
    println!("algorithm            mean_dev   median     q3     whisker  mean_rank");
    for s in &report.summaries {
        println!(
            "{:<20} {:>8.5} {:>8.5} {:>8.5} {:>8.5} {:>8.2}",
            s.algorithm, s.mean_deviation, s.median, s.q3, s.upper_whisker, s.mean_rank
        );
    }
    if let Some(f) = report.friedman {
        println!(
            "friedman chi2 = {} over {} algorithms x {} blocks",
            bench::sig12(f.chi_squared),
            f.algorithms,
            f.blocks
        );
    }
    for (instance, algo, seed, message) in &report.failures {
        eprintln!("failed: {instance} / {algo} / seed {seed}: {message}");
    }
    Ok(())
}

/// Trace filenames carry their matrix cell: `<instance>__<algo>__<seed>.csv`.
fn parse_trace_name(path: &Path) -> Option<(String, String, u64)> {
    let stem = path.file_stem()?.to_str()?;
    let parts: Vec<&str> = stem.split("__").collect();
    if parts.len() != 3 {
        return None;
    }
    let seed = parts[2].parse().ok()?;
    Some((parts[0].to_string(), parts[1].to_string(), seed))
}

fn read_trace_csv(path: &Path) -> Result<opsbd::RunTrace> {
    use opsbd::solvers::TraceEvent;
    let text = fs::read_to_string(path)?;
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            bail!("{}: malformed trace line {:?}", path.display(), line);
        }
        events.push(TraceEvent {
            elapsed_s: fields[0].trim().parse()?,
            evaluations: fields[1].trim().parse()?,
            best_value: fields[2].trim().parse()?,
        });
    }
    if events.is_empty() {
        bail!("{}: trace has no events", path.display());
    }
    let last = *events.last().expect("nonempty");
    Ok(opsbd::RunTrace {
        events,
        best: opsbd::Solution::new(Vec::new(), last.best_value),
        evaluations: last.evaluations,
    })
}

fn qrtd(args: QrtdArgs) -> Result<()> {
    let mut records: Vec<TraceRecord> = Vec::new();
    let mut max_t = 0.0f64;
    for entry in glob::glob(&args.traces).context("bad trace glob")? {
        let path = entry?;
        let Some((instance, algorithm, seed)) = parse_trace_name(&path) else {
            eprintln!(
                "skipping {} (want <instance>__<algo>__<seed>.csv)",
                path.display()
            );
            continue;
        };
        let trace = read_trace_csv(&path)?;
        max_t = max_t.max(trace.elapsed_to_final());
        records.push(TraceRecord {
            instance,
            algorithm,
            seed,
            trace,
        });
    }
    if records.is_empty() {
        bail!("no traces matched {:?}", args.traces);
    }
    let grid = default_time_grid(max_t.max(1e-6), args.grid_points);
    let curves: Vec<QrtdCurve> = compute_qrtd(&records, args.quality_eps, &grid);
    fs::write(&args.out, bench::qrtd_csv(&curves))?;
    println!(
        "wrote {} ({} algorithms, {} traces)",
        args.out.display(),
        curves.len(),
        records.len()
    );
    Ok(())
}

fn exact(args: ExactArgs) -> Result<()> {
    let instance = build_instance(&args.scenario, args.radius)?;
    let result = exact_best(&instance, args.detectors, !args.no_pruning, args.cap)
        .map_err(|e| anyhow!("{e}"))?;
    println!(
        "optimum value={} subsets_enumerated={} pruning={}",
        bench::sig12(result.best.value()),
        result.enumerated,
        if args.no_pruning { "off" } else { "on" }
    );
    for cell in result.best.cells() {
        println!("  detector at {cell}");
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let instance = build_instance(&args.scenario, None)?;
    let text = fs::read_to_string(&args.solution)
        .with_context(|| format!("reading solution {}", args.solution.display()))?;
    let file = SolutionFile::from_json(&text)?;
    let cells: Vec<CellRef> = file.detectors.clone();
    let est = monte_carlo_estimate(&instance, &cells, args.trials, args.seed)
        .map_err(|e| anyhow!("{e}"))?;
    let analytic = instance
        .evaluate(&cells)
        .map_err(|e| anyhow!("placement rejected: {e}"))?;
    let gap = (est.mean - analytic).abs();
    println!(
        "simulated={} std_err={} trials={}",
        bench::sig12(est.mean),
        bench::sig12(est.std_err),
        est.trials
    );
    println!(
        "analytic={} |gap|={} ({} standard errors)",
        bench::sig12(analytic),
        bench::sig12(gap),
        bench::sig12(if est.std_err > 0.0 {
            gap / est.std_err
        } else {
            f64::INFINITY
        })
    );
    Ok(())
}

fn dominance(args: DominanceArgs) -> Result<()> {
    let instance = build_instance(&args.scenario, args.radius)?;
    let cache = instance.cache();
    let s = instance.scenario();
    let mut out = String::new();
    for r in 1..=s.rows() as u32 {
        let row: Vec<String> = (1..=s.cols() as u32)
            .map(|c| {
                cache
                    .dominance_count(s.rm_index(CellRef::new(r, c)))
                    .to_string()
            })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(&args.out, out)?;
    let pruned = (0..s.rows() * s.cols())
        .filter(|&rm| {
            cache.is_unblocked(rm) && cache.dominance_count(rm) as usize >= args.detectors
        })
        .count();
    println!(
        "wrote {}; {} unblocked cells pruned at delta={}",
        args.out.display(),
        pruned,
        args.detectors
    );
    Ok(())
}
