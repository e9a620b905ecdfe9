//! Seeded random scenario generator.
//!
//! Entrances are drawn per border side, objectives on interior cells, and
//! obstacles anywhere else; obstacle draws are repeated from scratch until
//! every entrance can reach every objective. Casualty figures come from a
//! lethal-area constant times a population density drawn from
//! `Normal(0.4, 0.1)` persons per square meter, truncated below so they stay
//! positive. Everything is a pure function of the seed.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::scenario::{
    validate_scenario, CellRef, Objective, PathProbabilities, PhysicsParams, Scenario,
};

/// Lower truncation for the density draw, in persons per square meter.
pub const MIN_DENSITY: f64 = 0.05;

/// Attempts at a connected obstacle layout before giving up.
const BLOCKED_RETRIES: usize = 200;

#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    pub rows: usize,
    pub cols: usize,
    /// Cell side length in meters.
    pub cell_size: f64,
    /// Entrances drawn on each of the four sides.
    pub entrances_per_side: usize,
    /// Number of objective cells.
    pub objectives: usize,
    /// Fraction of cells to block.
    pub blocked_fraction: f64,
    /// Detector radius in meters.
    pub radius: f64,
    /// Lethal-area constant in square meters; casualties are
    /// `casualty_scale * density`.
    pub casualty_scale: f64,
    pub density_mean: f64,
    pub density_sd: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            rows: 32,
            cols: 32,
            cell_size: 10.0,
            entrances_per_side: 2,
            objectives: 4,
            blocked_fraction: 0.05,
            radius: 20.0,
            casualty_scale: 100.0,
            density_mean: 0.4,
            density_sd: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("parameter {name} = {value} outside the benchmark grid {allowed}")]
    OutsideGrid {
        name: &'static str,
        value: f64,
        allowed: &'static str,
    },
    #[error("invalid parameter {name}: {value}")]
    BadParam { name: &'static str, value: f64 },
    #[error("could not place {what}: grid too constrained")]
    Overconstrained { what: &'static str },
    #[error("no connected obstacle layout found in {0} attempts")]
    RetriesExhausted(usize),
}

impl GenParams {
    /// Restricts parameters to the benchmark grid: square maps of side 32,
    /// 64 or 128; cell sizes {5, 10, 20} m; 2-4 entrances per side; 2, 4, 6
    /// or 8 objectives; 2.5 / 5 / 10 percent obstacles; radii {10, 20, 40} m.
    pub fn check_paper_grid(&self) -> Result<(), GenError> {
        fn along(value: f64, allowed: &[f64]) -> bool {
            allowed.iter().any(|&a| (a - value).abs() < 1e-12)
        }
        if self.rows != self.cols || ![32, 64, 128].contains(&self.rows) {
            return Err(GenError::OutsideGrid {
                name: "rows/cols",
                value: self.rows as f64,
                allowed: "{32, 64, 128} square",
            });
        }
        if !along(self.cell_size, &[5.0, 10.0, 20.0]) {
            return Err(GenError::OutsideGrid {
                name: "cell_size",
                value: self.cell_size,
                allowed: "{5, 10, 20}",
            });
        }
        if !(2..=4).contains(&self.entrances_per_side) {
            return Err(GenError::OutsideGrid {
                name: "entrances_per_side",
                value: self.entrances_per_side as f64,
                allowed: "{2, 3, 4}",
            });
        }
        if ![2, 4, 6, 8].contains(&self.objectives) {
            return Err(GenError::OutsideGrid {
                name: "objectives",
                value: self.objectives as f64,
                allowed: "{2, 4, 6, 8}",
            });
        }
        if !along(self.blocked_fraction, &[0.025, 0.05, 0.10]) {
            return Err(GenError::OutsideGrid {
                name: "blocked_fraction",
                value: self.blocked_fraction,
                allowed: "{0.025, 0.05, 0.10}",
            });
        }
        if !along(self.radius, &[10.0, 20.0, 40.0]) {
            return Err(GenError::OutsideGrid {
                name: "radius",
                value: self.radius,
                allowed: "{10, 20, 40}",
            });
        }
        Ok(())
    }

    fn check_free(&self) -> Result<(), GenError> {
        let positive = [
            ("cell_size", self.cell_size),
            ("radius", self.radius),
            ("casualty_scale", self.casualty_scale),
            ("density_mean", self.density_mean),
            ("density_sd", self.density_sd),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(GenError::BadParam { name, value });
            }
        }
        if self.rows < 3 || self.cols < 3 {
            return Err(GenError::BadParam {
                name: "rows/cols",
                value: self.rows.min(self.cols) as f64,
            });
        }
        if self.entrances_per_side == 0 || self.objectives == 0 {
            return Err(GenError::BadParam {
                name: "entrances_per_side/objectives",
                value: 0.0,
            });
        }
        if !(0.0..1.0).contains(&self.blocked_fraction) {
            return Err(GenError::BadParam {
                name: "blocked_fraction",
                value: self.blocked_fraction,
            });
        }
        Ok(())
    }

    fn name(&self) -> String {
        format!(
            "rand-{}x{}-z{}-k{}-o{}-w{}-t{}-s{}",
            self.rows,
            self.cols,
            self.cell_size,
            self.entrances_per_side,
            self.objectives,
            self.blocked_fraction,
            self.radius,
            self.seed
        )
    }
}

/// Generates a random scenario. Deterministic per seed; the returned
/// scenario always passes validation.
pub fn generate_instance(p: &GenParams) -> Result<Scenario, GenError> {
    p.check_free()?;
    let (m, n) = (p.rows, p.cols);
    if p.entrances_per_side > m.saturating_sub(2) || p.entrances_per_side > n.saturating_sub(2) {
        return Err(GenError::Overconstrained { what: "entrances" });
    }
    let interior = (m - 2) * (n - 2);
    if p.objectives > interior {
        return Err(GenError::Overconstrained { what: "objectives" });
    }
    let blocked_count = (p.blocked_fraction * (m * n) as f64).floor() as usize;
    if blocked_count + 4 * p.entrances_per_side + p.objectives >= m * n {
        return Err(GenError::Overconstrained { what: "obstacles" });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut reserved = vec![false; m * n];
    let rm = |row: usize, col: usize| (row - 1) * n + (col - 1);

    // Entrances: per side, distinct unused border cells. Corners belong to
    // both adjacent sides; used cells are rejected and redrawn.
    let sides: [Vec<(usize, usize)>; 4] = [
        (1..=n).map(|c| (1, c)).collect(),
        (1..=m).map(|r| (r, n)).collect(),
        (1..=n).map(|c| (m, c)).collect(),
        (1..=m).map(|r| (r, 1)).collect(),
    ];
    let mut entrances = Vec::with_capacity(4 * p.entrances_per_side);
    for side in &sides {
        let mut placed = 0;
        let mut attempts = 0;
        while placed < p.entrances_per_side {
            attempts += 1;
            if attempts > 100 * side.len() {
                return Err(GenError::Overconstrained { what: "entrances" });
            }
            let (r, c) = side[rng.random_range(0..side.len())];
            if !reserved[rm(r, c)] {
                reserved[rm(r, c)] = true;
                entrances.push((r, c));
                placed += 1;
            }
        }
    }

    // Objectives: distinct interior cells with their casualty figures.
    let density = Normal::new(p.density_mean, p.density_sd).map_err(|_| GenError::BadParam {
        name: "density_sd",
        value: p.density_sd,
    })?;
    let mut objective_cells = Vec::with_capacity(p.objectives);
    while objective_cells.len() < p.objectives {
        let r = 2 + rng.random_range(0..m - 2);
        let c = 2 + rng.random_range(0..n - 2);
        if !reserved[rm(r, c)] {
            reserved[rm(r, c)] = true;
            let rho = loop {
                let x = density.sample(&mut rng);
                if x >= MIN_DENSITY {
                    break x;
                }
            };
            objective_cells.push((r, c, p.casualty_scale * rho));
        }
    }

    // Obstacles: fresh uniform draws until the layout keeps every entrance
    // connected to every objective.
    for _attempt in 0..BLOCKED_RETRIES {
        let mut blocked = vec![false; m * n];
        let mut placed = 0;
        while placed < blocked_count {
            let idx = rng.random_range(0..m * n);
            if !reserved[idx] && !blocked[idx] {
                blocked[idx] = true;
                placed += 1;
            }
        }
        if !connected(m, n, &blocked, &entrances, &objective_cells) {
            continue;
        }

        let mut lines: Vec<Vec<char>> = (0..m)
            .map(|r| {
                (0..n)
                    .map(|c| if blocked[r * n + c] { '#' } else { '.' })
                    .collect()
            })
            .collect();
        for &(r, c) in &entrances {
            lines[r - 1][c - 1] = 'E';
        }
        for &(r, c, _) in &objective_cells {
            lines[r - 1][c - 1] = 'O';
        }
        let grid: Vec<String> = lines.into_iter().map(|l| l.into_iter().collect()).collect();
        let objectives = objective_cells
            .iter()
            .map(|&(r, c, casualties)| Objective {
                cell: CellRef::new(r as u32, c as u32),
                casualties,
            })
            .collect();
        let params = PhysicsParams {
            radius: Some(p.radius),
            ..PhysicsParams::default()
        };
        let scenario = Scenario::from_parts(
            p.name(),
            m,
            n,
            p.cell_size,
            &grid,
            objectives,
            PathProbabilities::Uniform,
            params,
        )
        .expect("generated grid is structurally consistent");
        debug_assert!(validate_scenario(&scenario).is_empty());
        return Ok(scenario);
    }
    Err(GenError::RetriesExhausted(BLOCKED_RETRIES))
}

/// 8-connectivity flood fill from the first entrance set: every entrance and
/// every objective must live in one connected component of open cells.
fn connected(
    m: usize,
    n: usize,
    blocked: &[bool],
    entrances: &[(usize, usize)],
    objectives: &[(usize, usize, f64)],
) -> bool {
    let start = entrances[0];
    let mut seen = vec![false; m * n];
    let mut stack = vec![start];
    seen[(start.0 - 1) * n + (start.1 - 1)] = true;
    while let Some((r, c)) = stack.pop() {
        for dr in -1..=1i64 {
            for dc in -1..=1i64 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr < 1 || nc < 1 || nr > m as i64 || nc > n as i64 {
                    continue;
                }
                let idx = (nr as usize - 1) * n + (nc as usize - 1);
                if !seen[idx] && !blocked[idx] {
                    seen[idx] = true;
                    stack.push((nr as usize, nc as usize));
                }
            }
        }
    }
    entrances.iter().all(|&(r, c)| seen[(r - 1) * n + (c - 1)])
        && objectives
            .iter()
            .all(|&(r, c, _)| seen[(r - 1) * n + (c - 1)])
}
