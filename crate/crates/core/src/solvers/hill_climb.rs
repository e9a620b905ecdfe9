//! Swap-neighborhood hill climbing with random restarts.
//!
//! The descent repeatedly sweeps over (position, candidate) pairs and
//! accepts any replacement that strictly lowers the objective, continuing
//! the sweep from the updated solution (first improvement with
//! continuation). A full sweep without an accepted move proves the solution
//! is a local optimum of the single-swap neighborhood.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::objective::{Instance, Solution};

use super::{checked_candidates, random_subset, RunTrace, SearchCtx, SolverBudget, SolverError};

/// One descent over the swap neighborhood. `cells`, `load` and `current`
/// are updated in place; global improvements are offered to the trace with
/// a freshly recomputed value. Returns false when the budget truncated the
/// sweep.
pub(crate) fn descend(
    ctx: &mut SearchCtx<'_>,
    candidates: &[usize],
    cells: &mut [usize],
    load: &mut [f64],
    current: &mut f64,
) -> bool {
    let mut in_sol = vec![false; ctx.inst.cache().num_cells()];
    for &c in cells.iter() {
        in_sol[c] = true;
    }
    let mut improvement = true;
    while improvement {
        improvement = false;
        for i in 0..cells.len() {
            for &d in candidates {
                if ctx.exhausted() {
                    return false;
                }
                if in_sol[d] {
                    continue;
                }
                let out = cells[i];
                let v = ctx.eval_with_swap(load, out, d);
                if v < *current {
                    let committed = ctx.inst.evaluate_swap(load, out, d);
                    debug_assert_eq!(committed.to_bits(), v.to_bits());
                    in_sol[out] = false;
                    in_sol[d] = true;
                    cells[i] = d;
                    *current = v;
                    improvement = true;
                    if v < ctx.best_value() {
                        let fresh = ctx.eval_cells(cells);
                        ctx.offer(fresh, cells);
                    }
                }
            }
        }
    }
    true
}

/// Descends from `start` to a local optimum of the single-swap
/// neighborhood. No budget: runs until a full sweep yields no improvement.
pub fn hill_climb(inst: &Instance, start: &Solution) -> Result<Solution, SolverError> {
    let delta = start.len();
    let candidates = checked_candidates(inst, delta)?;
    let mut cells = inst
        .check_cells(start.cells())
        .map_err(|e| SolverError::BadStart(e.to_string()))?;
    for &c in &cells {
        if !candidates.binary_search(&c).is_ok() {
            return Err(SolverError::BadStart(format!(
                "cell {} is not in the candidate set",
                inst.cell_at(c)
            )));
        }
    }
    let mut ctx = SearchCtx::unbounded(inst);
    let mut load = inst.empty_load();
    for &c in &cells {
        inst.add_cell(&mut load, c);
    }
    let mut current = ctx.eval_load(&load);
    ctx.offer(current, &cells);
    descend(&mut ctx, &candidates, &mut cells, &mut load, &mut current);
    let fresh = inst.evaluate_rm(&cells);
    Ok(inst.solution_from_rm(&cells, fresh))
}

/// Random-restart hill climbing: uniform random placements descended one
/// after another until the budget runs out. The final descent may be cut
/// mid-sweep.
pub fn hc_run(
    inst: &Instance,
    delta: usize,
    budget: SolverBudget,
    seed: u64,
) -> Result<RunTrace, SolverError> {
    let candidates = checked_candidates(inst, delta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ctx = SearchCtx::new(inst, budget);
    loop {
        let mut cells = random_subset(&mut rng, &candidates, delta);
        let mut load = inst.empty_load();
        for &c in &cells {
            inst.add_cell(&mut load, c);
        }
        let mut current = ctx.eval_load(&load);
        ctx.offer(current, &cells);
        if ctx.exhausted() {
            return Ok(ctx.finish());
        }
        let completed = descend(&mut ctx, &candidates, &mut cells, &mut load, &mut current);
        if !completed || ctx.exhausted() {
            return Ok(ctx.finish());
        }
    }
}
