//! The constructive greedy baseline: place detectors one at a time, each
//! time picking the candidate whose addition lowers the objective the most.
//! Deterministic; ties go to the smaller row-major cell index.

use crate::objective::{Instance, Solution};

use super::{checked_candidates, RunTrace, SearchCtx, SolverBudget, SolverError};

/// Greedy construction of a `delta`-detector placement.
pub fn greedy(inst: &Instance, delta: usize) -> Result<Solution, SolverError> {
    let trace = greedy_run(inst, delta)?;
    Ok(trace.best)
}

/// Greedy with its (single-event) run trace, for benchmark harness use.
pub fn greedy_run(inst: &Instance, delta: usize) -> Result<RunTrace, SolverError> {
    let candidates = checked_candidates(inst, delta)?;
    let mut ctx = SearchCtx::new(inst, SolverBudget::EvalCount(u64::MAX));
    let (cells, value) = construct(&mut ctx, &candidates, delta);
    ctx.offer(value, &cells);
    Ok(ctx.finish())
}

/// Shared greedy construction over an explicit candidate pool (ascending
/// row-major). Returns the chosen cells in placement order and the final
/// value.
pub(crate) fn construct(
    ctx: &mut SearchCtx<'_>,
    candidates: &[usize],
    delta: usize,
) -> (Vec<usize>, f64) {
    let mut in_sol = vec![false; ctx.inst.cache().num_cells()];
    let mut load = ctx.inst.empty_load();
    let mut chosen = Vec::with_capacity(delta);
    let mut value = f64::INFINITY;
    for _ in 0..delta {
        let mut best: Option<(f64, usize)> = None;
        for &cell in candidates {
            if in_sol[cell] {
                continue;
            }
            let v = ctx.eval_with_extra(&load, cell);
            if best.is_none_or(|(bv, _)| v < bv) {
                best = Some((v, cell));
            }
        }
        let (v, cell) = best.expect("candidate pool exhausted before delta detectors");
        ctx.inst.add_cell(&mut load, cell);
        in_sol[cell] = true;
        chosen.push(cell);
        value = v;
    }
    (chosen, value)
}
