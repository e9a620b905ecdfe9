//! The expected-casualty objective and the evaluation context shared by all
//! solvers.
//!
//! For a placement `D` of detectors, write `L_p` for the total detectable
//! length of path `p` over all detectors in `D`. The expected casualties are
//!
//! ```text
//! W(D) = (1 - theta) * B + theta * sum_p gamma_p * C_p * exp(-eta * L_p)
//! ```
//!
//! where `B = sum_p gamma_p * C_p` is the no-detector baseline. Detectors act
//! independently, so overlapping disks still sum their covered lengths.
//! Solvers keep the per-path totals `L_p` as running sums, making a greedy
//! extension or a swap an `O(paths)` operation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::{CoverageCache, CoverageError};
use crate::paths::{enumerate_paths_with_graph, PathError, PathSet, VisibilityGraph};
use crate::scenario::{validate_scenario, CellRef, Scenario, Violation};

/// Baseline expected casualties with no detectors placed:
/// `B = sum_ij gamma_ij * C_j`.
pub fn baseline_casualties(s: &Scenario) -> f64 {
    let mut total = 0.0;
    for i in 0..s.num_entrances() {
        for (j, obj) in s.objectives().iter().enumerate() {
            total += s.gamma(i, j) * obj.casualties;
        }
    }
    total
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("scenario is invalid: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Paths(#[from] PathError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cell {0} is outside the grid")]
    OutOfBounds(CellRef),
    #[error("cell {0} is blocked")]
    Blocked(CellRef),
    #[error("duplicate cell {0} in placement")]
    Duplicate(CellRef),
}

/// A solvable problem instance: a validated scenario with its paths and
/// coverage cache. Immutable and shareable across solver runs.
pub struct Instance {
    scenario: Scenario,
    path_set: PathSet,
    cache: CoverageCache,
    /// `gamma_p * C_p` per path.
    path_weights: Vec<f64>,
    baseline: f64,
    detection_rate: f64,
    neutralize_prob: f64,
}

impl Instance {
    /// Validates the scenario, enumerates its paths and builds the coverage
    /// cache. This is the precomputation phase; solver budgets start after
    /// it completes.
    pub fn build(scenario: Scenario) -> Result<Self, BuildError> {
        let violations = validate_scenario(&scenario);
        if !violations.is_empty() {
            return Err(BuildError::Invalid(violations));
        }
        let graph = VisibilityGraph::build(&scenario);
        let path_set = enumerate_paths_with_graph(&scenario, &graph)?;
        Self::from_parts(scenario, path_set)
    }

    /// Assembles an instance from an already-computed path set.
    pub fn from_parts(scenario: Scenario, path_set: PathSet) -> Result<Self, BuildError> {
        let cache = CoverageCache::build(&scenario, &path_set)?;
        let objectives = scenario.num_objectives();
        let mut path_weights = Vec::with_capacity(path_set.len());
        for p in 0..path_set.len() {
            let (i, j) = (p / objectives, p % objectives);
            path_weights.push(scenario.gamma(i, j) * scenario.objectives()[j].casualties);
        }
        let baseline = baseline_casualties(&scenario);
        let detection_rate = scenario.params().detection_rate;
        let neutralize_prob = scenario.params().neutralize_prob;
        Ok(Self {
            scenario,
            path_set,
            cache,
            path_weights,
            baseline,
            detection_rate,
            neutralize_prob,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn path_set(&self) -> &PathSet {
        &self.path_set
    }

    pub fn cache(&self) -> &CoverageCache {
        &self.cache
    }

    pub fn num_paths(&self) -> usize {
        self.path_set.len()
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    /// Casualties of the objective that path `p` leads to.
    pub fn path_casualties(&self, p: usize) -> f64 {
        let j = p % self.scenario.num_objectives();
        self.scenario.objectives()[j].casualties
    }

    /// Probability that the attacker takes path `p`.
    pub fn path_probability(&self, p: usize) -> f64 {
        let objectives = self.scenario.num_objectives();
        self.scenario.gamma(p / objectives, p % objectives)
    }

    pub fn candidate_cells(&self, delta: usize) -> Vec<usize> {
        self.cache.candidate_cells(delta)
    }

    /// Fresh all-zero per-path coverage totals.
    pub fn empty_load(&self) -> Vec<f64> {
        vec![0.0; self.path_set.len()]
    }

    pub fn add_cell(&self, load: &mut [f64], cell_rm: usize) {
        for (l, lam) in load.iter_mut().zip(self.cache.cell_row(cell_rm)) {
            *l += lam;
        }
    }

    pub fn remove_cell(&self, load: &mut [f64], cell_rm: usize) {
        for (l, lam) in load.iter_mut().zip(self.cache.cell_row(cell_rm)) {
            *l -= lam;
        }
    }

    /// Objective value for the given per-path coverage totals.
    pub fn value_from_load(&self, load: &[f64]) -> f64 {
        let mut covered = 0.0;
        for (w, l) in self.path_weights.iter().zip(load) {
            covered += w * (-self.detection_rate * l).exp();
        }
        (1.0 - self.neutralize_prob) * self.baseline + self.neutralize_prob * covered
    }

    /// Value of the placement extended by one more cell, without mutating
    /// the totals.
    pub fn value_with_extra(&self, load: &[f64], cell_rm: usize) -> f64 {
        let row = self.cache.cell_row(cell_rm);
        let mut covered = 0.0;
        for p in 0..load.len() {
            covered += self.path_weights[p] * (-self.detection_rate * (load[p] + row[p])).exp();
        }
        (1.0 - self.neutralize_prob) * self.baseline + self.neutralize_prob * covered
    }

    /// Value after swapping `out_rm` for `in_rm`, without mutating the
    /// totals. Matches [`Instance::evaluate_swap`] bit-for-bit.
    pub fn value_with_swap(&self, load: &[f64], out_rm: usize, in_rm: usize) -> f64 {
        let out_row = self.cache.cell_row(out_rm);
        let in_row = self.cache.cell_row(in_rm);
        let mut covered = 0.0;
        for p in 0..load.len() {
            let l = (load[p] - out_row[p]) + in_row[p];
            covered += self.path_weights[p] * (-self.detection_rate * l).exp();
        }
        (1.0 - self.neutralize_prob) * self.baseline + self.neutralize_prob * covered
    }

    /// Applies a swap to the running totals and returns the new value.
    pub fn evaluate_swap(&self, load: &mut [f64], out_rm: usize, in_rm: usize) -> f64 {
        let out_row = self.cache.cell_row(out_rm);
        let in_row = self.cache.cell_row(in_rm);
        for p in 0..load.len() {
            load[p] = (load[p] - out_row[p]) + in_row[p];
        }
        self.value_from_load(load)
    }

    /// Evaluates a placement from scratch. Cells are accumulated in
    /// row-major order so the result does not depend on the input order.
    pub fn evaluate_rm(&self, cells: &[usize]) -> f64 {
        let mut sorted: Vec<usize> = cells.to_vec();
        sorted.sort_unstable();
        let mut load = self.empty_load();
        for rm in sorted {
            self.add_cell(&mut load, rm);
        }
        self.value_from_load(&load)
    }

    /// Evaluates a placement given as cell references, checking feasibility.
    pub fn evaluate(&self, cells: &[CellRef]) -> Result<f64, EvalError> {
        let rm = self.check_cells(cells)?;
        Ok(self.evaluate_rm(&rm))
    }

    /// Validates that cells are in bounds, unblocked and distinct; returns
    /// their row-major indices.
    pub fn check_cells(&self, cells: &[CellRef]) -> Result<Vec<usize>, EvalError> {
        let mut rm = Vec::with_capacity(cells.len());
        for &cell in cells {
            if !self.scenario.in_bounds(cell) {
                return Err(EvalError::OutOfBounds(cell));
            }
            if !self.scenario.is_unblocked(cell) {
                return Err(EvalError::Blocked(cell));
            }
            rm.push(self.scenario.rm_index(cell));
        }
        let mut seen = rm.clone();
        seen.sort_unstable();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(EvalError::Duplicate(self.scenario.cell_at(w[0])));
            }
        }
        Ok(rm)
    }

    pub fn cell_at(&self, rm: usize) -> CellRef {
        self.scenario.cell_at(rm)
    }

    pub fn rm_index(&self, cell: CellRef) -> usize {
        self.scenario.rm_index(cell)
    }

    /// Builds a canonical [`Solution`] (cells sorted row-major) from
    /// row-major indices and a value.
    pub fn solution_from_rm(&self, cells: &[usize], value: f64) -> Solution {
        let mut sorted: Vec<usize> = cells.to_vec();
        sorted.sort_unstable();
        Solution {
            cells: sorted.iter().map(|&rm| self.cell_at(rm)).collect(),
            value,
        }
    }
}

/// A placement of detectors with its objective value. Cells are stored in
/// row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    cells: Vec<CellRef>,
    value: f64,
}

impl Solution {
    pub fn new(mut cells: Vec<CellRef>, value: f64) -> Self {
        cells.sort();
        Self { cells, value }
    }

    pub fn cells(&self) -> &[CellRef] {
        &self.cells
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// On-disk form of a solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub detectors: Vec<CellRef>,
    pub value: f64,
    pub delta: usize,
    pub scenario_name: String,
    pub algorithm: String,
    pub seed: u64,
}

impl SolutionFile {
    pub fn new(sol: &Solution, scenario_name: &str, algorithm: &str, seed: u64) -> Self {
        Self {
            detectors: sol.cells().to_vec(),
            value: sol.value(),
            delta: sol.len(),
            scenario_name: scenario_name.to_string(),
            algorithm: algorithm.to_string(),
            seed,
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("solution serialization");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
