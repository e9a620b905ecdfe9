//! Ground-truth engines: exhaustive enumeration for small instances and a
//! Monte-Carlo simulation of the attack process that validates the analytic
//! objective.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::objective::{Instance, Solution};
use crate::scenario::CellRef;

/// Default ceiling on the number of subsets [`exact_best`] will enumerate.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("need at least one detector")]
    ZeroDetectors,
    #[error("{delta} detectors exceed the pool of {pool} cells")]
    TooManyDetectors { delta: usize, pool: usize },
    #[error("enumeration of C({pool}, {delta}) subsets exceeds the cap of {cap}")]
    CapExceeded { pool: usize, delta: usize, cap: u64 },
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("infeasible placement: {0}")]
    BadPlacement(String),
}

/// Result of an exhaustive search.
pub struct ExactResult {
    pub best: Solution,
    /// Number of complete subsets evaluated.
    pub enumerated: u64,
}

/// Exhaustive minimum of the objective over all `delta`-subsets of the
/// candidate pool (pruned by dominance unless `use_pruning` is false, in
/// which case every unblocked cell is considered). Ties resolve to the
/// lexicographically smallest cell tuple.
pub fn exact_best(
    inst: &Instance,
    delta: usize,
    use_pruning: bool,
    cap: u64,
) -> Result<ExactResult, OracleError> {
    if delta == 0 {
        return Err(OracleError::ZeroDetectors);
    }
    let pool: Vec<usize> = if use_pruning {
        inst.candidate_cells(delta)
    } else {
        inst.scenario().unblocked_cells()
    };
    if delta > pool.len() {
        return Err(OracleError::TooManyDetectors {
            delta,
            pool: pool.len(),
        });
    }
    if subset_count_exceeds(pool.len(), delta, cap) {
        return Err(OracleError::CapExceeded {
            pool: pool.len(),
            delta,
            cap,
        });
    }

    struct Enumerator<'a> {
        inst: &'a Instance,
        pool: &'a [usize],
        delta: usize,
        load: Vec<f64>,
        chosen: Vec<usize>,
        best_value: f64,
        best_cells: Vec<usize>,
        enumerated: u64,
    }

    impl Enumerator<'_> {
        fn recurse(&mut self, start: usize) {
            if self.chosen.len() == self.delta {
                self.enumerated += 1;
                let value = self.inst.value_from_load(&self.load);
                if value < self.best_value {
                    self.best_value = value;
                    self.best_cells = self.chosen.clone();
                }
                return;
            }
            let needed = self.delta - self.chosen.len();
            for i in start..=self.pool.len() - needed {
                let cell = self.pool[i];
                self.inst.add_cell(&mut self.load, cell);
                self.chosen.push(cell);
                self.recurse(i + 1);
                self.chosen.pop();
                self.inst.remove_cell(&mut self.load, cell);
            }
        }
    }

    let mut e = Enumerator {
        inst,
        pool: &pool,
        delta,
        load: inst.empty_load(),
        chosen: Vec::with_capacity(delta),
        best_value: f64::INFINITY,
        best_cells: Vec::new(),
        enumerated: 0,
    };
    e.recurse(0);
    // Recompute the winner from scratch: the running totals accumulate
    // add/remove round-off over the enumeration.
    let value = inst.evaluate_rm(&e.best_cells);
    Ok(ExactResult {
        best: inst.solution_from_rm(&e.best_cells, value),
        enumerated: e.enumerated,
    })
}

fn subset_count_exceeds(n: usize, k: usize, cap: u64) -> bool {
    let k = k.min(n - k);
    let mut value = 1u128;
    for i in 0..k {
        value = value * (n - i) as u128 / (i + 1) as u128;
        if value > cap as u128 {
            return true;
        }
    }
    false
}

/// Monte-Carlo estimate of the expected casualties for a placement.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: u64,
}

/// Simulates the attack process: sample a path by its probability, let each
/// detector independently fire with `1 - exp(-eta * covered_length)`, and on
/// any detection neutralize with the scenario's success probability. Returns
/// the sample mean of casualties and its standard error.
pub fn monte_carlo_estimate(
    inst: &Instance,
    placement: &[CellRef],
    trials: u64,
    seed: u64,
) -> Result<McEstimate, OracleError> {
    if trials == 0 {
        return Err(OracleError::NoTrials);
    }
    let cells = inst
        .check_cells(placement)
        .map_err(|e| OracleError::BadPlacement(e.to_string()))?;
    let r = inst.num_paths();
    let eta = inst.scenario().params().detection_rate;
    let theta = inst.scenario().params().neutralize_prob;

    // Per-path detection probabilities, one entry per detector that covers
    // anything: 1 - exp(-eta * covered_length).
    let detection: Vec<Vec<f64>> = (0..r)
        .map(|p| {
            cells
                .iter()
                .filter_map(|&c| {
                    let lam = inst.cache().detectable_length(c, p);
                    (lam > 0.0).then(|| 1.0 - (-eta * lam).exp())
                })
                .collect()
        })
        .collect();
    let casualties: Vec<f64> = (0..r).map(|p| inst.path_casualties(p)).collect();

    // Path sampler: uniform gamma draws an index directly, explicit gamma
    // inverts the cumulative distribution.
    let uniform_gamma = matches!(
        inst.scenario().path_probs(),
        crate::scenario::PathProbabilities::Uniform
    );
    let cumulative: Vec<f64> = if uniform_gamma {
        Vec::new()
    } else {
        let mut acc = 0.0;
        (0..r)
            .map(|p| {
                acc += inst.path_probability(p);
                acc
            })
            .collect()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for _ in 0..trials {
        let p = if uniform_gamma {
            rng.random_range(0..r)
        } else {
            let u = rng.random::<f64>();
            cumulative.partition_point(|&c| c <= u).min(r - 1)
        };
        let mut detected = false;
        for &prob in &detection[p] {
            if rng.random::<f64>() < prob {
                detected = true;
            }
        }
        let neutralized = detected && rng.random::<f64>() < theta;
        let loss = if neutralized { 0.0 } else { casualties[p] };
        sum += loss;
        sum_sq += loss * loss;
    }
    let n = trials as f64;
    let mean = sum / n;
    let variance = if trials > 1 {
        ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_err: (variance / n).sqrt(),
        trials,
    })
}
