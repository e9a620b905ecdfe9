//! The five placement algorithms behind a common anytime-solver contract.
//!
//! Every stochastic solver takes a 64-bit seed and draws from a ChaCha8
//! stream (`rand_chacha::ChaCha8Rng::seed_from_u64`), so runs under an
//! evaluation-count budget reproduce bit-for-bit across platforms. Budgets
//! are checked at operation boundaries; the wall clock starts when the
//! solver is entered, after instance construction.

mod ea;
mod grasp;
mod greedy;
mod hill_climb;
mod umda;

pub use ea::{ea_run, EaParams};
pub use grasp::{decode_decision_vector, grasp_construct, grasp_hc_run, grasp_run, DecisionVector};
pub use greedy::{greedy, greedy_run};
pub use hill_climb::{hc_run, hill_climb};
pub use umda::{umda_run, UmdaParams, UnivariateModel};

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::objective::{Instance, Solution};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("need at least one detector")]
    ZeroDetectors,
    #[error("{requested} detectors exceed the {available} candidate cells")]
    TooManyDetectors { requested: usize, available: usize },
    #[error("population of {requested} exceeds the number of distinct placements")]
    DegeneratePopulation { requested: usize },
    #[error("invalid parameter {name}: {value}")]
    BadParam { name: &'static str, value: f64 },
    #[error("infeasible start: {0}")]
    BadStart(String),
}

/// Stopping rule for an anytime solver run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverBudget {
    /// Wall-clock seconds.
    WallClock(f64),
    /// Maximum number of objective evaluations; gives bit-reproducible runs.
    EvalCount(u64),
}

/// One best-value improvement during a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub elapsed_s: f64,
    pub evaluations: u64,
    pub best_value: f64,
}

/// Timestamped sequence of improvements plus the final best solution.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub events: Vec<TraceEvent>,
    pub best: Solution,
    pub evaluations: u64,
}

impl RunTrace {
    /// Best value known by time `t` (seconds), if any solution existed yet.
    pub fn best_by(&self, t: f64) -> Option<f64> {
        self.events
            .iter()
            .take_while(|e| e.elapsed_s <= t)
            .last()
            .map(|e| e.best_value)
    }

    /// Time at which the final best value was first reached.
    pub fn elapsed_to_final(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.elapsed_s)
    }
}

/// Shared solver state: evaluation counting, budget checks and the
/// incumbent-improvement trace.
pub(crate) struct SearchCtx<'a> {
    pub inst: &'a Instance,
    start: Instant,
    deadline: Option<Instant>,
    max_evals: Option<u64>,
    pub evals: u64,
    events: Vec<TraceEvent>,
    best_value: f64,
    best_cells: Vec<usize>,
}

impl<'a> SearchCtx<'a> {
    pub fn new(inst: &'a Instance, budget: SolverBudget) -> Self {
        let start = Instant::now();
        let (deadline, max_evals) = match budget {
            SolverBudget::WallClock(secs) => {
                (Some(start + Duration::from_secs_f64(secs.max(0.0))), None)
            }
            SolverBudget::EvalCount(n) => (None, Some(n)),
        };
        Self {
            inst,
            start,
            deadline,
            max_evals,
            evals: 0,
            events: Vec::new(),
            best_value: f64::INFINITY,
            best_cells: Vec::new(),
        }
    }

    /// Context without a budget, for solvers that run to convergence.
    pub fn unbounded(inst: &'a Instance) -> Self {
        Self {
            inst,
            start: Instant::now(),
            deadline: None,
            max_evals: None,
            evals: 0,
            events: Vec::new(),
            best_value: f64::INFINITY,
            best_cells: Vec::new(),
        }
    }

    pub fn exhausted(&self) -> bool {
        if let Some(max) = self.max_evals {
            if self.evals >= max {
                return true;
            }
        }
        if let Some(deadline) = self.deadline {
            if Instant::now() >= deadline {
                return true;
            }
        }
        false
    }

    pub fn elapsed_s(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    pub fn eval_load(&mut self, load: &[f64]) -> f64 {
        self.evals += 1;
        self.inst.value_from_load(load)
    }

    pub fn eval_with_extra(&mut self, load: &[f64], cell_rm: usize) -> f64 {
        self.evals += 1;
        self.inst.value_with_extra(load, cell_rm)
    }

    pub fn eval_with_swap(&mut self, load: &[f64], out_rm: usize, in_rm: usize) -> f64 {
        self.evals += 1;
        self.inst.value_with_swap(load, out_rm, in_rm)
    }

    /// Fresh evaluation from cells, counted.
    pub fn eval_cells(&mut self, cells: &[usize]) -> f64 {
        self.evals += 1;
        self.inst.evaluate_rm(cells)
    }

    /// Records a candidate incumbent; keeps it when strictly better.
    pub fn offer(&mut self, value: f64, cells: &[usize]) {
        if value < self.best_value {
            self.best_value = value;
            self.best_cells = cells.to_vec();
            self.events.push(TraceEvent {
                elapsed_s: self.elapsed_s(),
                evaluations: self.evals,
                best_value: value,
            });
        }
    }

    pub fn best_value(&self) -> f64 {
        self.best_value
    }

    pub fn finish(self) -> RunTrace {
        debug_assert!(
            !self.best_cells.is_empty(),
            "solver must produce at least one solution"
        );
        let best = self
            .inst
            .solution_from_rm(&self.best_cells, self.best_value);
        RunTrace {
            events: self.events,
            best,
            evaluations: self.evals,
        }
    }
}

/// Uniform random `k`-subset of `pool` by partial Fisher-Yates; the result
/// keeps the sampled order.
pub(crate) fn random_subset<R: rand::Rng>(rng: &mut R, pool: &[usize], k: usize) -> Vec<usize> {
    debug_assert!(k <= pool.len());
    let mut scratch = pool.to_vec();
    for i in 0..k {
        let j = i + rng.random_range(0..scratch.len() - i);
        scratch.swap(i, j);
    }
    scratch.truncate(k);
    scratch
}

/// Checks `delta` against the candidate pool and returns the pool.
pub(crate) fn checked_candidates(inst: &Instance, delta: usize) -> Result<Vec<usize>, SolverError> {
    if delta == 0 {
        return Err(SolverError::ZeroDetectors);
    }
    let candidates = inst.candidate_cells(delta);
    if delta > candidates.len() {
        return Err(SolverError::TooManyDetectors {
            requested: delta,
            available: candidates.len(),
        });
    }
    Ok(candidates)
}

/// Does `C(n, k) >= threshold`? Evaluated without overflow.
pub(crate) fn subsets_at_least(n: usize, k: usize, threshold: u64) -> bool {
    if k > n {
        return threshold == 0;
    }
    let k = k.min(n - k);
    let mut value = 1u128;
    for i in 0..k {
        value = value * (n - i) as u128 / (i + 1) as u128;
        if value >= threshold as u128 {
            return true;
        }
    }
    value >= threshold as u128
}
