//! Greedy randomized adaptive construction, its anytime restart loop, and
//! the rank-vector decoding shared with the distribution-estimation solver.
//!
//! Each construction step scores every remaining candidate, keeps the ones
//! within `alpha` of the best score in a restricted candidate list (RCL)
//! sorted by ascending value (ties by row-major index), and picks one at
//! random. The last detector is always the rank-0 (locally optimal) choice,
//! so a construction is fully described by the `delta - 1` RCL ranks it
//! picked along the way; replaying the all-zero vector reproduces the plain
//! greedy solution.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::objective::{Instance, Solution};

use super::hill_climb::descend;
use super::{checked_candidates, RunTrace, SearchCtx, SolverBudget, SolverError};

/// RCL ranks replaying a construction; length is `delta - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionVector(pub Vec<u32>);

pub(crate) enum StepChoice<'a> {
    Randomized(&'a mut ChaCha8Rng),
    Ranks(&'a [u32]),
}

/// One full construction. Returns placement order, per-path totals, final
/// value and the recorded ranks.
pub(crate) fn construct(
    ctx: &mut SearchCtx<'_>,
    candidates: &[usize],
    delta: usize,
    alpha: f64,
    mut choice: StepChoice<'_>,
) -> (Vec<usize>, Vec<f64>, f64, Vec<u32>) {
    let mut in_sol = vec![false; ctx.inst.cache().num_cells()];
    let mut load = ctx.inst.empty_load();
    let mut chosen = Vec::with_capacity(delta);
    let mut ranks = Vec::with_capacity(delta.saturating_sub(1));
    let mut value = f64::INFINITY;
    let mut rcl: Vec<(f64, usize)> = Vec::with_capacity(candidates.len());

    for step in 0..delta {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        rcl.clear();
        let mut scored: Vec<(f64, usize)> = Vec::with_capacity(candidates.len() - step);
        for &cell in candidates {
            if in_sol[cell] {
                continue;
            }
            let v = ctx.eval_with_extra(&load, cell);
            lo = lo.min(v);
            hi = hi.max(v);
            scored.push((v, cell));
        }
        debug_assert!(!scored.is_empty());
        let threshold = if alpha <= 0.0 {
            lo
        } else if alpha >= 1.0 {
            f64::INFINITY
        } else {
            lo + alpha * (hi - lo)
        };
        for &(v, cell) in &scored {
            if v <= threshold {
                rcl.push((v, cell));
            }
        }
        rcl.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let last_step = step + 1 == delta;
        let rank = if last_step {
            0
        } else {
            match &mut choice {
                StepChoice::Randomized(rng) => rng.random_range(0..rcl.len()),
                StepChoice::Ranks(x) => (x[step] as usize).min(rcl.len() - 1),
            }
        };
        let (v, cell) = rcl[rank];
        if !last_step {
            ranks.push(rank as u32);
        }
        ctx.inst.add_cell(&mut load, cell);
        in_sol[cell] = true;
        chosen.push(cell);
        value = v;
    }
    (chosen, load, value, ranks)
}

/// A single randomized construction with its decision vector.
pub fn grasp_construct(
    inst: &Instance,
    delta: usize,
    alpha: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Solution, DecisionVector), SolverError> {
    check_alpha(alpha)?;
    let candidates = checked_candidates(inst, delta)?;
    let mut ctx = SearchCtx::new(inst, SolverBudget::EvalCount(u64::MAX));
    let (cells, _, value, ranks) = construct(
        &mut ctx,
        &candidates,
        delta,
        alpha,
        StepChoice::Randomized(rng),
    );
    Ok((inst.solution_from_rm(&cells, value), DecisionVector(ranks)))
}

/// Deterministically replays a decision vector; out-of-range ranks clamp to
/// the worst RCL member at that step.
pub fn decode_decision_vector(
    inst: &Instance,
    delta: usize,
    alpha: f64,
    x: &DecisionVector,
) -> Result<Solution, SolverError> {
    check_alpha(alpha)?;
    if x.0.len() + 1 != delta {
        return Err(SolverError::BadParam {
            name: "decision_vector_len",
            value: x.0.len() as f64,
        });
    }
    let candidates = checked_candidates(inst, delta)?;
    let mut ctx = SearchCtx::new(inst, SolverBudget::EvalCount(u64::MAX));
    let (cells, _, value, _) =
        construct(&mut ctx, &candidates, delta, alpha, StepChoice::Ranks(&x.0));
    Ok(inst.solution_from_rm(&cells, value))
}

/// Restarted construction until the budget runs out, keeping the best.
pub fn grasp_run(
    inst: &Instance,
    delta: usize,
    alpha: f64,
    budget: SolverBudget,
    seed: u64,
) -> Result<RunTrace, SolverError> {
    check_alpha(alpha)?;
    let candidates = checked_candidates(inst, delta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ctx = SearchCtx::new(inst, budget);
    loop {
        let (cells, _, value, _) = construct(
            &mut ctx,
            &candidates,
            delta,
            alpha,
            StepChoice::Randomized(&mut rng),
        );
        ctx.offer(value, &cells);
        if ctx.exhausted() {
            return Ok(ctx.finish());
        }
    }
}

/// GRASP hybrid: each constructed solution is refined by the swap descent
/// before the next restart.
pub fn grasp_hc_run(
    inst: &Instance,
    delta: usize,
    alpha: f64,
    budget: SolverBudget,
    seed: u64,
) -> Result<RunTrace, SolverError> {
    check_alpha(alpha)?;
    let candidates = checked_candidates(inst, delta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ctx = SearchCtx::new(inst, budget);
    loop {
        let (mut cells, mut load, value, _) = construct(
            &mut ctx,
            &candidates,
            delta,
            alpha,
            StepChoice::Randomized(&mut rng),
        );
        ctx.offer(value, &cells);
        if ctx.exhausted() {
            return Ok(ctx.finish());
        }
        let mut current = value;
        let completed = descend(&mut ctx, &candidates, &mut cells, &mut load, &mut current);
        if !completed || ctx.exhausted() {
            return Ok(ctx.finish());
        }
    }
}

fn check_alpha(alpha: f64) -> Result<(), SolverError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(SolverError::BadParam {
            name: "alpha",
            value: alpha,
        });
    }
    Ok(())
}
