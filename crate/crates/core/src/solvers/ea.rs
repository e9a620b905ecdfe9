//! Steady-state evolutionary algorithm over detector placements.
//!
//! The population holds pairwise-distinct placements (distinct as cell
//! sets). Each iteration produces one offspring, either by recombining two
//! binary-tournament parents (sampling `delta` distinct cells from the union
//! of their placements) or by cloning a random individual, mutates each gene
//! with probability `pm` into a random unused candidate, and replaces the
//! worst individual unless the offspring duplicates an existing one.

use std::collections::HashSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::objective::Instance;

use super::{
    checked_candidates, random_subset, subsets_at_least, RunTrace, SearchCtx, SolverBudget,
    SolverError,
};

#[derive(Debug, Clone, Copy)]
pub struct EaParams {
    pub pop_size: usize,
    /// Probability of recombination; otherwise the offspring is a clone.
    pub crossover_prob: f64,
    /// Per-gene mutation probability; defaults to `1 / delta`.
    pub mutation_prob: Option<f64>,
}

impl Default for EaParams {
    fn default() -> Self {
        Self {
            pop_size: 100,
            crossover_prob: 0.9,
            mutation_prob: None,
        }
    }
}

struct Individual {
    genes: Vec<usize>,
    key: Vec<usize>,
    value: f64,
}

fn set_key(genes: &[usize]) -> Vec<usize> {
    let mut k = genes.to_vec();
    k.sort_unstable();
    k
}

pub fn ea_run(
    inst: &Instance,
    delta: usize,
    params: EaParams,
    budget: SolverBudget,
    seed: u64,
) -> Result<RunTrace, SolverError> {
    if params.pop_size < 2 {
        return Err(SolverError::BadParam {
            name: "pop_size",
            value: params.pop_size as f64,
        });
    }
    if !(0.0..=1.0).contains(&params.crossover_prob) {
        return Err(SolverError::BadParam {
            name: "px",
            value: params.crossover_prob,
        });
    }
    let pm = params.mutation_prob.unwrap_or(1.0 / delta as f64);
    if !(0.0..=1.0).contains(&pm) {
        return Err(SolverError::BadParam {
            name: "pm",
            value: pm,
        });
    }
    let candidates = checked_candidates(inst, delta)?;
    if !subsets_at_least(candidates.len(), delta, params.pop_size as u64) {
        return Err(SolverError::DegeneratePopulation {
            requested: params.pop_size,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ctx = SearchCtx::new(inst, budget);
    let mut pop: Vec<Individual> = Vec::with_capacity(params.pop_size);
    let mut keys: HashSet<Vec<usize>> = HashSet::with_capacity(params.pop_size);

    // Initialization: distinct uniform random placements.
    while pop.len() < params.pop_size {
        let genes = random_subset(&mut rng, &candidates, delta);
        let key = set_key(&genes);
        if keys.contains(&key) {
            continue;
        }
        let value = ctx.eval_cells(&genes);
        ctx.offer(value, &genes);
        keys.insert(key.clone());
        pop.push(Individual { genes, key, value });
        if ctx.exhausted() {
            return Ok(ctx.finish());
        }
    }

    let mut in_offspring = vec![false; inst.cache().num_cells()];
    loop {
        if ctx.exhausted() {
            return Ok(ctx.finish());
        }
        let mut genes = if rng.random::<f64>() < params.crossover_prob {
            let p1 = tournament(&mut rng, &pop);
            let p2 = tournament(&mut rng, &pop);
            let mut union = pop[p1].key.clone();
            for &g in &pop[p2].key {
                union.push(g);
            }
            union.sort_unstable();
            union.dedup();
            random_subset(&mut rng, &union, delta)
        } else {
            pop[rng.random_range(0..pop.len())].genes.clone()
        };

        for &g in &genes {
            in_offspring[g] = true;
        }
        for i in 0..genes.len() {
            if rng.random::<f64>() < pm {
                // Replace with a candidate not already in the offspring. The
                // degenerate-population check guarantees spare candidates.
                loop {
                    let d = candidates[rng.random_range(0..candidates.len())];
                    if !in_offspring[d] {
                        in_offspring[genes[i]] = false;
                        in_offspring[d] = true;
                        genes[i] = d;
                        break;
                    }
                }
            }
        }
        for &g in &genes {
            in_offspring[g] = false;
        }

        let key = set_key(&genes);
        let value = ctx.eval_cells(&genes);
        ctx.offer(value, &genes);
        if !keys.contains(&key) {
            let worst = worst_index(&pop);
            keys.remove(&pop[worst].key);
            keys.insert(key.clone());
            pop[worst] = Individual { genes, key, value };
        }
    }
}

/// Binary tournament: two uniform draws, the better one wins (the first on
/// a tie).
fn tournament<R: Rng>(rng: &mut R, pop: &[Individual]) -> usize {
    let a = rng.random_range(0..pop.len());
    let b = rng.random_range(0..pop.len());
    if pop[b].value < pop[a].value {
        b
    } else {
        a
    }
}

fn worst_index(pop: &[Individual]) -> usize {
    let mut worst = 0;
    for (i, ind) in pop.iter().enumerate().skip(1) {
        if ind.value > pop[worst].value {
            worst = i;
        }
    }
    worst
}
