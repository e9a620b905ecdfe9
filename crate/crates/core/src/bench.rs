//! Benchmark harness: runs algorithm x instance x seed matrices under
//! budgets, computes relative deviations to the per-instance best-known
//! value, mean ranks, the Friedman statistic and qualified-runtime
//! distribution curves, and renders the tabular exports.
//!
//! Matrix cells run in parallel, each on its own worker thread, so wall
//! clock budgets stay honest; nothing inside a timed run is parallel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instgen::{generate_instance, GenParams};
use crate::objective::Instance;
use crate::scenario::parse_scenario;
use crate::solvers::{
    ea_run, grasp_hc_run, grasp_run, greedy_run, hc_run, umda_run, EaParams, RunTrace,
    SolverBudget, UmdaParams,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("failed to read scenario {path}: {message}")]
    Scenario { path: String, message: String },
    #[error(transparent)]
    Generate(#[from] crate::instgen::GenError),
    #[error(transparent)]
    Build(#[from] crate::objective::BuildError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which algorithm a benchmark cell runs, with its parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub name: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub pop_size: Option<usize>,
    #[serde(default)]
    pub px: Option<f64>,
    #[serde(default)]
    pub pm: Option<f64>,
    #[serde(default)]
    pub select_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgoKind {
    Greedy,
    Grasp,
    GraspHc,
    Hc,
    Ea,
    Umda,
}

impl AlgoKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "greedy" => Some(Self::Greedy),
            "grasp" => Some(Self::Grasp),
            "grasp+hc" | "grasp-hc" => Some(Self::GraspHc),
            "hc" => Some(Self::Hc),
            "ea" => Some(Self::Ea),
            "umda" => Some(Self::Umda),
            _ => None,
        }
    }

    pub fn is_deterministic(self) -> bool {
        self == Self::Greedy
    }
}

impl AlgorithmSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            alpha: None,
            pop_size: None,
            px: None,
            pm: None,
            select_size: None,
        }
    }

    pub fn with_alpha(name: &str, alpha: f64) -> Self {
        Self {
            alpha: Some(alpha),
            ..Self::named(name)
        }
    }

    pub fn kind(&self) -> Result<AlgoKind, BenchError> {
        AlgoKind::parse(&self.name)
            .ok_or_else(|| BenchError::Config(format!("unknown algorithm {:?}", self.name)))
    }

    /// Display label: algorithm name plus its alpha when one applies.
    pub fn label(&self) -> String {
        match (AlgoKind::parse(&self.name), self.alpha) {
            (Some(AlgoKind::Grasp | AlgoKind::GraspHc | AlgoKind::Umda), Some(a)) => {
                format!("{}@{}", self.name, a)
            }
            _ => self.name.clone(),
        }
    }
}

/// Scenario sources: explicit files and/or generator grids.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScenarioSources {
    #[serde(default)]
    pub files: Vec<String>,
    #[serde(default)]
    pub generate: Vec<GenerateSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateSpec {
    pub rows: usize,
    pub cols: usize,
    pub cell_size_m: f64,
    pub entrances_per_side: usize,
    pub objectives: usize,
    pub blocked_fraction: f64,
    pub radius_m: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub paper_grid: bool,
    #[serde(default = "default_casualty_scale")]
    pub casualty_scale: f64,
}

fn default_replications() -> usize {
    1
}
fn default_casualty_scale() -> f64 {
    100.0
}

impl GenerateSpec {
    pub fn gen_params(&self, replication: usize) -> GenParams {
        GenParams {
            rows: self.rows,
            cols: self.cols,
            cell_size: self.cell_size_m,
            entrances_per_side: self.entrances_per_side,
            objectives: self.objectives,
            blocked_fraction: self.blocked_fraction,
            radius: self.radius_m,
            casualty_scale: self.casualty_scale,
            seed: self.base_seed + replication as u64,
            ..GenParams::default()
        }
    }
}

/// Budget: one global rule, optionally overridden by map size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BudgetSpec {
    #[serde(default)]
    pub time_s: Option<f64>,
    #[serde(default)]
    pub evals: Option<u64>,
    #[serde(default)]
    pub by_size: Vec<SizeBudget>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizeBudget {
    /// Applies to instances with `rows * cols <= max_cells`.
    pub max_cells: usize,
    #[serde(default)]
    pub time_s: Option<f64>,
    #[serde(default)]
    pub evals: Option<u64>,
}

impl BudgetSpec {
    pub fn wall_clock(seconds: f64) -> Self {
        Self {
            time_s: Some(seconds),
            evals: None,
            by_size: Vec::new(),
        }
    }

    pub fn eval_count(evals: u64) -> Self {
        Self {
            time_s: None,
            evals: Some(evals),
            by_size: Vec::new(),
        }
    }

    pub fn resolve(&self, cells: usize) -> Result<SolverBudget, BenchError> {
        let mut sized: Vec<&SizeBudget> = self
            .by_size
            .iter()
            .filter(|b| cells <= b.max_cells)
            .collect();
        sized.sort_by_key(|b| b.max_cells);
        if let Some(b) = sized.first() {
            if let Some(t) = b.time_s {
                return Ok(SolverBudget::WallClock(t));
            }
            if let Some(e) = b.evals {
                return Ok(SolverBudget::EvalCount(e));
            }
        }
        if let Some(t) = self.time_s {
            return Ok(SolverBudget::WallClock(t));
        }
        if let Some(e) = self.evals {
            return Ok(SolverBudget::EvalCount(e));
        }
        Err(BenchError::Config(
            "budget needs time_s or evals (globally or per size)".into(),
        ))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub scenarios: ScenarioSources,
    pub algorithms: Vec<AlgorithmSpec>,
    pub detectors: Vec<usize>,
    pub budget: BudgetSpec,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub quality_eps: f64,
    #[serde(default)]
    pub write_traces: bool,
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let cfg: BenchConfig =
            serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        if cfg.algorithms.is_empty() {
            return Err(BenchError::Config("no algorithms listed".into()));
        }
        for a in &cfg.algorithms {
            a.kind()?;
        }
        if cfg.detectors.is_empty() || cfg.detectors.contains(&0) {
            return Err(BenchError::Config("detectors must be positive".into()));
        }
        if cfg.seeds.is_empty() {
            return Err(BenchError::Config("need at least one seed".into()));
        }
        Ok(cfg)
    }
}

/// One benchmark run outcome.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub instance: String,
    pub algorithm: String,
    pub seed: u64,
    pub delta: usize,
    pub final_value: f64,
    pub best_known: f64,
    pub relative_deviation: f64,
    pub elapsed_to_final_s: f64,
    pub evaluations: u64,
}

#[derive(Debug, Clone)]
pub struct AlgoSummary {
    pub algorithm: String,
    pub runs: usize,
    pub mean_deviation: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Box-plot style upper whisker: `q3 + 1.5 * (q3 - q1)`.
    pub upper_whisker: f64,
    pub mean_rank: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FriedmanResult {
    pub chi_squared: f64,
    pub algorithms: usize,
    pub blocks: usize,
}

/// A completed trace tagged with its matrix cell.
pub struct TraceRecord {
    pub instance: String,
    pub algorithm: String,
    pub seed: u64,
    pub trace: RunTrace,
}

pub struct BenchReport {
    pub rows: Vec<ResultRow>,
    pub summaries: Vec<AlgoSummary>,
    pub friedman: Option<FriedmanResult>,
    pub traces: Vec<TraceRecord>,
    /// (instance, algorithm, seed, message) for cells whose solver failed.
    pub failures: Vec<(String, String, u64, String)>,
}

struct Cell {
    instance_idx: usize,
    algo_idx: usize,
    seed: u64,
    delta: usize,
}

/// Runs every (instance, algorithm, seed, delta) cell of the benchmark
/// matrix on `jobs` worker threads and aggregates the statistics.
/// Deterministic algorithms run once per instance regardless of the seed
/// list.
pub fn run_benchmark(cfg: &BenchConfig, jobs: usize) -> Result<BenchReport, BenchError> {
    let mut scenarios = Vec::new();
    for path in &cfg.scenarios.files {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Scenario {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let s = parse_scenario(&text).map_err(|e| BenchError::Scenario {
            path: path.clone(),
            message: e.to_string(),
        })?;
        scenarios.push(s);
    }
    for spec in &cfg.scenarios.generate {
        for rep in 0..spec.replications {
            let params = spec.gen_params(rep);
            if spec.paper_grid {
                params.check_paper_grid()?;
            }
            scenarios.push(generate_instance(&params)?);
        }
    }
    if scenarios.is_empty() {
        return Err(BenchError::Config("no scenarios to run".into()));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| BenchError::Config(e.to_string()))?;

    // Instance construction is the shared precomputation; do it once per
    // scenario, in parallel, before any timed run starts.
    let instances: Vec<Instance> = pool.install(|| {
        scenarios
            .into_par_iter()
            .map(Instance::build)
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut cells = Vec::new();
    for (instance_idx, _) in instances.iter().enumerate() {
        for &delta in &cfg.detectors {
            for (algo_idx, spec) in cfg.algorithms.iter().enumerate() {
                let kind = spec.kind()?;
                if kind.is_deterministic() {
                    cells.push(Cell {
                        instance_idx,
                        algo_idx,
                        seed: 0,
                        delta,
                    });
                } else {
                    for &seed in &cfg.seeds {
                        cells.push(Cell {
                            instance_idx,
                            algo_idx,
                            seed,
                            delta,
                        });
                    }
                }
            }
        }
    }

    type CellOutcome = (usize, usize, u64, usize, Result<RunTrace, String>);
    let outcomes: Vec<CellOutcome> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let inst = &instances[cell.instance_idx];
                let spec = &cfg.algorithms[cell.algo_idx];
                let budget = cfg
                    .budget
                    .resolve(inst.scenario().rows() * inst.scenario().cols())
                    .map_err(|e| e.to_string());
                let result = budget.and_then(|budget| {
                    run_algorithm(inst, spec, cell.delta, budget, cell.seed)
                        .map_err(|e| e.to_string())
                });
                (
                    cell.instance_idx,
                    cell.algo_idx,
                    cell.seed,
                    cell.delta,
                    result,
                )
            })
            .collect()
    });

    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for (instance_idx, algo_idx, seed, delta, result) in outcomes {
        let instance = instance_label(&instances[instance_idx], delta, cfg.detectors.len() > 1);
        let algorithm = cfg.algorithms[algo_idx].label();
        match result {
            Ok(trace) => traces.push(TraceRecord {
                instance,
                algorithm,
                seed,
                trace,
            }),
            Err(message) => failures.push((instance, algorithm, seed, message)),
        }
    }

    let rows = result_rows(&traces, &instances, cfg);
    let ranks = mean_ranks(&rows);
    let friedman = friedman_from_rows(&rows);
    let summaries = summarize(&rows, &ranks);
    Ok(BenchReport {
        rows,
        summaries,
        friedman,
        traces,
        failures,
    })
}

fn instance_label(inst: &Instance, delta: usize, multi_delta: bool) -> String {
    if multi_delta {
        format!("{}-d{}", inst.scenario().name(), delta)
    } else {
        inst.scenario().name().to_string()
    }
}

/// Dispatches one timed run.
pub fn run_algorithm(
    inst: &Instance,
    spec: &AlgorithmSpec,
    delta: usize,
    budget: SolverBudget,
    seed: u64,
) -> Result<RunTrace, crate::solvers::SolverError> {
    let kind = AlgoKind::parse(&spec.name).expect("validated algorithm name");
    let alpha = spec.alpha.unwrap_or(0.1);
    match kind {
        AlgoKind::Greedy => greedy_run(inst, delta),
        AlgoKind::Grasp => grasp_run(inst, delta, alpha, budget, seed),
        AlgoKind::GraspHc => grasp_hc_run(inst, delta, alpha, budget, seed),
        AlgoKind::Hc => hc_run(inst, delta, budget, seed),
        AlgoKind::Ea => ea_run(
            inst,
            delta,
            EaParams {
                pop_size: spec.pop_size.unwrap_or(100),
                crossover_prob: spec.px.unwrap_or(0.9),
                mutation_prob: spec.pm,
            },
            budget,
            seed,
        ),
        AlgoKind::Umda => umda_run(
            inst,
            delta,
            UmdaParams {
                pop_size: spec.pop_size.unwrap_or(100),
                select_size: spec.select_size.unwrap_or(50),
                alpha,
            },
            budget,
            seed,
        ),
    }
}

fn result_rows(
    traces: &[TraceRecord],
    _instances: &[Instance],
    _cfg: &BenchConfig,
) -> Vec<ResultRow> {
    let mut best_known: std::collections::BTreeMap<&str, f64> = std::collections::BTreeMap::new();
    for t in traces {
        let v = t.trace.best.value();
        best_known
            .entry(t.instance.as_str())
            .and_modify(|b| *b = b.min(v))
            .or_insert(v);
    }
    traces
        .iter()
        .map(|t| {
            let best = best_known[t.instance.as_str()];
            let value = t.trace.best.value();
            ResultRow {
                instance: t.instance.clone(),
                algorithm: t.algorithm.clone(),
                seed: t.seed,
                delta: t.trace.best.len(),
                final_value: value,
                best_known: best,
                relative_deviation: (value - best) / best,
                elapsed_to_final_s: t.trace.elapsed_to_final(),
                evaluations: t.trace.evaluations,
            }
        })
        .collect()
}

/// Mean rank per algorithm. Blocks are (instance, seed) pairs; an algorithm
/// with a single run on an instance (the deterministic case) enters every
/// seed block of that instance. Ties receive the average of the tied rank
/// range. Blocks missing any algorithm are skipped.
pub fn mean_ranks(rows: &[ResultRow]) -> Vec<(String, f64)> {
    rank_blocks(rows).0
}

fn rank_blocks(rows: &[ResultRow]) -> (Vec<(String, f64)>, usize) {
    use std::collections::{BTreeMap, BTreeSet};
    let algorithms: BTreeSet<&str> = rows.iter().map(|r| r.algorithm.as_str()).collect();
    let k = algorithms.len();
    if k == 0 {
        return (Vec::new(), 0);
    }
    let mut instances: BTreeSet<&str> = BTreeSet::new();
    let mut algo_seeds: BTreeMap<(&str, &str), BTreeSet<u64>> = BTreeMap::new();
    let mut values: BTreeMap<(&str, u64, &str), f64> = BTreeMap::new();
    for r in rows {
        instances.insert(r.instance.as_str());
        algo_seeds
            .entry((r.instance.as_str(), r.algorithm.as_str()))
            .or_default()
            .insert(r.seed);
        values.insert(
            (r.instance.as_str(), r.seed, r.algorithm.as_str()),
            r.final_value,
        );
    }

    let mut rank_sum: BTreeMap<&str, f64> = algorithms.iter().map(|&a| (a, 0.0)).collect();
    let mut blocks = 0usize;
    for &instance in &instances {
        // Blocks pair up runs by seed. Single-run algorithms (the
        // deterministic case) join every block of their instance; when every
        // algorithm ran once the instance forms one block.
        let mut block_seeds: BTreeSet<u64> = BTreeSet::new();
        for &a in &algorithms {
            if let Some(seeds) = algo_seeds.get(&(instance, a)) {
                if seeds.len() > 1 {
                    block_seeds.extend(seeds);
                }
            }
        }
        let singleton_blocks = block_seeds.is_empty();
        if singleton_blocks {
            block_seeds.insert(0);
        }
        for &seed in &block_seeds {
            let mut block: Vec<(&str, f64)> = Vec::with_capacity(k);
            let mut complete = true;
            for &a in &algorithms {
                let seeds = algo_seeds.get(&(instance, a));
                let v = match seeds {
                    Some(s) if s.len() == 1 => {
                        let only = *s.iter().next().expect("nonempty");
                        values.get(&(instance, only, a)).copied()
                    }
                    Some(_) if !singleton_blocks => values.get(&(instance, seed, a)).copied(),
                    _ => None,
                };
                match v {
                    Some(v) => block.push((a, v)),
                    None => {
                        complete = false;
                        break;
                    }
                }
            }
            if !complete {
                continue;
            }
            blocks += 1;
            block.sort_by(|x, y| x.1.total_cmp(&y.1));
            let mut i = 0;
            while i < block.len() {
                let mut j = i;
                while j + 1 < block.len() && block[j + 1].1 == block[i].1 {
                    j += 1;
                }
                let avg_rank = ((i + 1 + j + 1) as f64) / 2.0;
                for entry in &block[i..=j] {
                    *rank_sum.get_mut(entry.0).unwrap() += avg_rank;
                }
                i = j + 1;
            }
        }
    }
    if blocks == 0 {
        return (Vec::new(), 0);
    }
    let ranks = algorithms
        .iter()
        .map(|&a| (a.to_string(), rank_sum[a] / blocks as f64))
        .collect();
    (ranks, blocks)
}

/// Friedman statistic over rank blocks:
/// `chi2_F = 12n / (k (k+1)) * sum_j (Rbar_j - (k+1)/2)^2`.
pub fn friedman_statistic(mean_ranks: &[(String, f64)], blocks: usize) -> Option<FriedmanResult> {
    let k = mean_ranks.len();
    if k < 2 || blocks == 0 {
        return None;
    }
    let center = (k as f64 + 1.0) / 2.0;
    let sum_sq: f64 = mean_ranks.iter().map(|(_, r)| (r - center).powi(2)).sum();
    let chi = 12.0 * blocks as f64 / (k as f64 * (k as f64 + 1.0)) * sum_sq;
    Some(FriedmanResult {
        chi_squared: chi,
        algorithms: k,
        blocks,
    })
}

fn friedman_from_rows(rows: &[ResultRow]) -> Option<FriedmanResult> {
    let (ranks, blocks) = rank_blocks(rows);
    friedman_statistic(&ranks, blocks)
}

fn summarize(rows: &[ResultRow], ranks: &[(String, f64)]) -> Vec<AlgoSummary> {
    use std::collections::BTreeMap;
    let mut grouped: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in rows {
        grouped
            .entry(r.algorithm.as_str())
            .or_default()
            .push(r.relative_deviation);
    }
    let rank_of: BTreeMap<&str, f64> = ranks.iter().map(|(a, r)| (a.as_str(), *r)).collect();
    grouped
        .into_iter()
        .map(|(algorithm, mut devs)| {
            devs.sort_by(f64::total_cmp);
            let mean = devs.iter().sum::<f64>() / devs.len() as f64;
            let q1 = quantile(&devs, 0.25);
            let median = quantile(&devs, 0.5);
            let q3 = quantile(&devs, 0.75);
            AlgoSummary {
                algorithm: algorithm.to_string(),
                runs: devs.len(),
                mean_deviation: mean,
                q1,
                median,
                q3,
                upper_whisker: q3 + 1.5 * (q3 - q1),
                mean_rank: rank_of.get(algorithm).copied().unwrap_or(f64::NAN),
            }
        })
        .collect()
}

/// Linear-interpolation quantile of a sorted slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

// ---------------------------------------------------------------------------
// QRTD
// ---------------------------------------------------------------------------

/// One algorithm's qualified-runtime distribution: the fraction of runs that
/// reached the quality target by each grid time.
#[derive(Debug, Clone)]
pub struct QrtdCurve {
    pub algorithm: String,
    pub points: Vec<(f64, f64)>,
}

/// Computes QRTD curves over a common instance pool. A run qualifies at
/// time `t` when its trace reached `best_known * (1 + quality_eps)` by `t`,
/// where best-known is the per-instance minimum over all provided traces.
pub fn compute_qrtd(traces: &[TraceRecord], quality_eps: f64, time_grid: &[f64]) -> Vec<QrtdCurve> {
    use std::collections::{BTreeMap, BTreeSet};
    let mut best_known: BTreeMap<&str, f64> = BTreeMap::new();
    for t in traces {
        let v = t.trace.best.value();
        best_known
            .entry(t.instance.as_str())
            .and_modify(|b| *b = b.min(v))
            .or_insert(v);
    }
    let algorithms: BTreeSet<&str> = traces.iter().map(|t| t.algorithm.as_str()).collect();
    algorithms
        .into_iter()
        .map(|algo| {
            let runs: Vec<&TraceRecord> = traces.iter().filter(|t| t.algorithm == algo).collect();
            let points = time_grid
                .iter()
                .map(|&t| {
                    let hits = runs
                        .iter()
                        .filter(|run| {
                            let target = best_known[run.instance.as_str()] * (1.0 + quality_eps);
                            run.trace.best_by(t).is_some_and(|v| v <= target)
                        })
                        .count();
                    (t, hits as f64 / runs.len().max(1) as f64)
                })
                .collect();
            QrtdCurve {
                algorithm: algo.to_string(),
                points,
            }
        })
        .collect()
}

/// Evenly spaced time grid from 0 to `max_t`.
pub fn default_time_grid(max_t: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points)
        .map(|i| max_t * i as f64 / (points - 1) as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// Text export
// ---------------------------------------------------------------------------

/// Formats a float with 12 significant digits, trimming trailing zeros.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let mut s = if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        format!("{:.11e}", x)
    };
    if s.contains('.') && !s.contains('e') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// Trace CSV: `elapsed_s, evals, best_w`.
pub fn trace_csv(trace: &RunTrace) -> String {
    let mut out = String::from("elapsed_s,evals,best_w\n");
    for e in &trace.events {
        out.push_str(&format!(
            "{},{},{}\n",
            sig12(e.elapsed_s),
            e.evaluations,
            sig12(e.best_value)
        ));
    }
    out
}

/// Results CSV, one line per matrix cell.
pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(
        "instance,algorithm,seed,final_w,best_known_w,relative_deviation,elapsed_to_final_s,evaluations\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.instance,
            r.algorithm,
            r.seed,
            sig12(r.final_value),
            sig12(r.best_known),
            sig12(r.relative_deviation),
            sig12(r.elapsed_to_final_s),
            r.evaluations
        ));
    }
    out
}

/// QRTD CSV: one line per (algorithm, grid time).
pub fn qrtd_csv(curves: &[QrtdCurve]) -> String {
    let mut out = String::from("algorithm,time_s,fraction\n");
    for c in curves {
        for &(t, f) in &c.points {
            out.push_str(&format!("{},{},{}\n", c.algorithm, sig12(t), sig12(f)));
        }
    }
    out
}

/// Summary JSON with per-algorithm statistics and the Friedman test value.
pub fn summary_json(report: &BenchReport) -> String {
    let summaries: Vec<serde_json::Value> = report
        .summaries
        .iter()
        .map(|s| {
            serde_json::json!({
                "algorithm": s.algorithm,
                "runs": s.runs,
                "mean_deviation": s.mean_deviation,
                "q1": s.q1,
                "median": s.median,
                "q3": s.q3,
                "upper_whisker": s.upper_whisker,
                "mean_rank": s.mean_rank,
            })
        })
        .collect();
    let friedman = report.friedman.map(|f| {
        serde_json::json!({
            "chi_squared": f.chi_squared,
            "algorithms": f.algorithms,
            "blocks": f.blocks,
        })
    });
    let doc = serde_json::json!({
        "summaries": summaries,
        "friedman": friedman,
        "failures": report.failures.len(),
    });
    let mut out = serde_json::to_string_pretty(&doc).expect("summary serialization");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(algorithms: Vec<AlgorithmSpec>, seeds: Vec<u64>) -> BenchConfig {
        BenchConfig {
            scenarios: ScenarioSources {
                files: Vec::new(),
                generate: vec![GenerateSpec {
                    rows: 10,
                    cols: 10,
                    cell_size_m: 10.0,
                    entrances_per_side: 2,
                    objectives: 2,
                    blocked_fraction: 0.05,
                    radius_m: 20.0,
                    replications: 2,
                    base_seed: 60,
                    paper_grid: false,
                    casualty_scale: 100.0,
                }],
            },
            algorithms,
            detectors: vec![2],
            budget: BudgetSpec::eval_count(4000),
            seeds,
            quality_eps: 0.0,
            write_traces: false,
        }
    }

    #[test]
    fn greedy_only_yields_zero_deviation_rows() {
        let cfg = tiny_config(vec![AlgorithmSpec::named("greedy")], vec![1]);
        let report = run_benchmark(&cfg, 1).unwrap();
        assert_eq!(report.rows.len(), 2, "one row per instance");
        for r in &report.rows {
            assert_eq!(r.relative_deviation, 0.0, "self is best-known");
            assert_eq!(r.seed, 0);
        }
        assert!(report.friedman.is_none(), "one algorithm has no ranking");
    }

    #[test]
    fn eval_budget_benchmark_reproduces_exactly() {
        let cfg = tiny_config(
            vec![
                AlgorithmSpec::named("greedy"),
                AlgorithmSpec::named("hc"),
                AlgorithmSpec::with_alpha("grasp", 0.2),
            ],
            vec![1, 2],
        );
        let a = run_benchmark(&cfg, 2).unwrap();
        let b = run_benchmark(&cfg, 2).unwrap();
        // Wall-clock columns differ between runs; everything else is pinned.
        let key = |rows: &[ResultRow]| {
            let mut k: Vec<(String, String, u64, u64, u64)> = rows
                .iter()
                .map(|r| {
                    (
                        r.instance.clone(),
                        r.algorithm.clone(),
                        r.seed,
                        r.final_value.to_bits(),
                        r.evaluations,
                    )
                })
                .collect();
            k.sort();
            k
        };
        assert_eq!(key(&a.rows), key(&b.rows));
    }

    fn row(instance: &str, algorithm: &str, seed: u64, value: f64) -> ResultRow {
        ResultRow {
            instance: instance.into(),
            algorithm: algorithm.into(),
            seed,
            delta: 2,
            final_value: value,
            best_known: 0.0,
            relative_deviation: 0.0,
            elapsed_to_final_s: 0.0,
            evaluations: 0,
        }
    }

    #[test]
    fn dominating_algorithm_ranks_first() {
        let mut rows = Vec::new();
        for i in 0..4 {
            rows.push(row(&format!("i{i}"), "a", 1, 1.0));
            rows.push(row(&format!("i{i}"), "b", 1, 2.0));
        }
        let ranks = mean_ranks(&rows);
        assert_eq!(ranks.len(), 2);
        let get = |name: &str| ranks.iter().find(|(a, _)| a == name).unwrap().1;
        assert_eq!(get("a"), 1.0);
        assert_eq!(get("b"), 2.0);
    }

    #[test]
    fn ties_get_average_ranks() {
        let rows = vec![
            row("i0", "a", 1, 1.0),
            row("i0", "b", 1, 1.0),
            row("i0", "c", 1, 2.0),
        ];
        let ranks = mean_ranks(&rows);
        let get = |name: &str| ranks.iter().find(|(a, _)| a == name).unwrap().1;
        assert_eq!(get("a"), 1.5);
        assert_eq!(get("b"), 1.5);
        assert_eq!(get("c"), 3.0);
    }

    #[test]
    fn friedman_matches_hand_computation() {
        // Three algorithms, four instances. Values chosen so the ranks are:
        //   i0: a=1 b=2 c=3; i1: a=1 b=3 c=2; i2: a=2 b=1 c=3; i3: a=1 b=2 c=3
        // Rank sums: a=5, b=8, c=11 -> means 1.25, 2.0, 2.75.
        // chi2 = 12*4/(3*4) * ((1.25-2)^2 + 0 + (2.75-2)^2) = 4 * 1.125 = 4.5
        let rows = vec![
            row("i0", "a", 1, 1.0),
            row("i0", "b", 1, 2.0),
            row("i0", "c", 1, 3.0),
            row("i1", "a", 1, 1.0),
            row("i1", "b", 1, 3.0),
            row("i1", "c", 1, 2.0),
            row("i2", "a", 1, 2.0),
            row("i2", "b", 1, 1.0),
            row("i2", "c", 1, 3.0),
            row("i3", "a", 1, 1.0),
            row("i3", "b", 1, 2.0),
            row("i3", "c", 1, 3.0),
        ];
        let ranks = mean_ranks(&rows);
        let f = friedman_statistic(&ranks, 4).unwrap();
        assert!((f.chi_squared - 4.5).abs() < 1e-12, "{}", f.chi_squared);
    }

    #[test]
    fn qrtd_curves_are_monotone_and_flat_zero_for_losers() {
        use crate::objective::Solution;
        use crate::solvers::TraceEvent;
        let mk = |instance: &str, algo: &str, events: Vec<(f64, f64)>| TraceRecord {
            instance: instance.into(),
            algorithm: algo.into(),
            seed: 1,
            trace: RunTrace {
                events: events
                    .iter()
                    .map(|&(t, v)| TraceEvent {
                        elapsed_s: t,
                        evaluations: 1,
                        best_value: v,
                    })
                    .collect(),
                best: Solution::new(vec![], events.last().unwrap().1),
                evaluations: 1,
            },
        };
        let traces = vec![
            mk("i0", "winner", vec![(0.1, 5.0), (0.5, 3.0)]),
            mk("i0", "loser", vec![(0.1, 6.0)]),
        ];
        let grid = default_time_grid(1.0, 11);
        let curves = compute_qrtd(&traces, 0.0, &grid);
        let winner = curves.iter().find(|c| c.algorithm == "winner").unwrap();
        let loser = curves.iter().find(|c| c.algorithm == "loser").unwrap();
        for w in winner.points.windows(2) {
            assert!(w[1].1 >= w[0].1, "QRTD must be nondecreasing");
        }
        assert!(loser.points.iter().all(|&(_, f)| f == 0.0));
        assert_eq!(winner.points.last().unwrap().1, 1.0);
    }

    #[test]
    fn sig12_formats() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(2.5), "2.5");
        assert_eq!(sig12(0.1), "0.1");
        let long = sig12(std::f64::consts::PI);
        assert_eq!(long, "3.14159265359");
        assert!(sig12(1.0e20).contains('e'));
        assert_eq!(sig12(-2.0), "-2");
    }

    #[test]
    fn quantiles_interpolate() {
        let data = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&data, 0.0), 1.0);
        assert_eq!(quantile(&data, 1.0), 4.0);
        assert_eq!(quantile(&data, 0.5), 2.5);
    }
}
