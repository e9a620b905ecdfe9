//! Scenario data model: the grid world, its validation rules and its JSON
//! file format.
//!
//! A scenario is an `m x n` grid of square cells. Cells are either freely
//! traversable, blocked by an obstacle, an entrance (where an attacker may
//! enter) or an objective (a crowded cell worth protecting). Grid
//! coordinates are 1-based `(row, col)` with row 1 at the top of the text
//! representation.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

/// Tolerance used when checking that path-choice probabilities sum to one.
pub const GAMMA_SUM_TOL: f64 = 1e-9;

/// A 1-based grid cell reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellRef {
    pub row: u32,
    pub col: u32,
}

impl CellRef {
    pub fn new(row: u32, col: u32) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for CellRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// What occupies a grid cell. Entrances and objectives are traversable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Unblocked,
    Blocked,
    Entrance,
    Objective,
}

impl CellKind {
    pub fn is_blocked(self) -> bool {
        self == CellKind::Blocked
    }

    fn to_char(self) -> char {
        match self {
            CellKind::Unblocked => '.',
            CellKind::Blocked => '#',
            CellKind::Entrance => 'E',
            CellKind::Objective => 'O',
        }
    }

    fn from_char(c: char) -> Option<Self> {
        match c {
            '.' => Some(CellKind::Unblocked),
            '#' => Some(CellKind::Blocked),
            'E' => Some(CellKind::Entrance),
            'O' => Some(CellKind::Objective),
            _ => None,
        }
    }
}

/// Probability that the attacker picks each (entrance, objective) pair.
#[derive(Debug, Clone, PartialEq)]
pub enum PathProbabilities {
    /// Every pair equally likely: `1 / (entrances * objectives)`.
    Uniform,
    /// Explicit `entrances x objectives` matrix, rows in entrance order.
    Matrix(Vec<Vec<f64>>),
}

/// An objective cell together with the casualties an unopposed attack on it
/// would cause.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub cell: CellRef,
    pub casualties: f64,
}

/// Physical parameters of the detection model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsParams {
    /// Instantaneous detection rate per meter of covered path.
    pub detection_rate: f64,
    /// Probability that a detected attacker is successfully neutralized.
    pub neutralize_prob: f64,
    /// Detector effectiveness radius in meters. Has no default: it must be
    /// supplied by the scenario file or set explicitly before solving.
    pub radius: Option<f64>,
    /// Attacker speed in m/s.
    pub speed: f64,
    /// Time required to neutralize a detected attacker, in seconds.
    pub neutralize_time: f64,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self {
            detection_rate: 0.06,
            neutralize_prob: 0.6,
            radius: None,
            speed: 1.0,
            neutralize_time: 10.0,
        }
    }
}

/// An immutable grid scenario. Construct through [`Scenario::from_parts`],
/// [`parse_scenario`] or the instance generator; after construction it is
/// safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    name: String,
    rows: usize,
    cols: usize,
    cell_size: f64,
    grid: Vec<CellKind>,
    entrances: Vec<CellRef>,
    objectives: Vec<Objective>,
    path_probs: PathProbabilities,
    params: PhysicsParams,
}

/// Structural errors raised while assembling or parsing a scenario.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("rows must be >= 1 and cols must be >= 1")]
    EmptyGrid,
    #[error("cell size must be positive, got {0}")]
    NonPositiveCellSize(f64),
    #[error("grid has {got} rows but `rows` declares {expected}")]
    RowCountMismatch { expected: usize, got: usize },
    #[error("grid row {row} has length {got}, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("unknown cell character {ch:?} at {cell}")]
    UnknownCellChar { cell: CellRef, ch: char },
    #[error("objective marked at {0} in the grid but missing from the objectives list")]
    MissingCasualty(CellRef),
    #[error("objectives list entry {0} does not match an objective cell in the grid")]
    ObjectiveMismatch(CellRef),
    #[error("duplicate coordinate {0} in objectives list")]
    DuplicateCoordinate(CellRef),
    #[error("scenario has no objectives")]
    NoObjectives,
    #[error("scenario has no entrances")]
    NoEntrances,
    #[error("gamma matrix has wrong shape: expected {expected_rows}x{expected_cols}")]
    GammaShape {
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("gamma entry ({row}, {col}) is negative: {value}")]
    GammaNegative { row: usize, col: usize, value: f64 },
    #[error("gamma not normalized: entries sum to {0}")]
    GammaNotNormalized(f64),
    #[error("gamma must be \"uniform\" or a nested list, got {0:?}")]
    GammaKeyword(String),
}

impl Scenario {
    /// Assembles a scenario from raw pieces, deriving the entrance list from
    /// the grid and checking structural consistency (grid shape, objective
    /// list vs grid marks, gamma shape and normalization).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        name: String,
        rows: usize,
        cols: usize,
        cell_size: f64,
        grid_rows: &[String],
        objectives: Vec<Objective>,
        path_probs: PathProbabilities,
        params: PhysicsParams,
    ) -> Result<Self, ScenarioError> {
        if rows == 0 || cols == 0 {
            return Err(ScenarioError::EmptyGrid);
        }
        if !cell_size.is_finite() || cell_size <= 0.0 {
            return Err(ScenarioError::NonPositiveCellSize(cell_size));
        }
        if grid_rows.len() != rows {
            return Err(ScenarioError::RowCountMismatch {
                expected: rows,
                got: grid_rows.len(),
            });
        }
        let mut grid = Vec::with_capacity(rows * cols);
        let mut entrances = Vec::new();
        let mut marked_objectives = Vec::new();
        for (r, line) in grid_rows.iter().enumerate() {
            let chars: Vec<char> = line.chars().collect();
            if chars.len() != cols {
                return Err(ScenarioError::RaggedRow {
                    row: r + 1,
                    expected: cols,
                    got: chars.len(),
                });
            }
            for (c, ch) in chars.into_iter().enumerate() {
                let cell = CellRef::new(r as u32 + 1, c as u32 + 1);
                let kind =
                    CellKind::from_char(ch).ok_or(ScenarioError::UnknownCellChar { cell, ch })?;
                match kind {
                    CellKind::Entrance => entrances.push(cell),
                    CellKind::Objective => marked_objectives.push(cell),
                    _ => {}
                }
                grid.push(kind);
            }
        }
        if marked_objectives.is_empty() {
            return Err(ScenarioError::NoObjectives);
        }
        if entrances.is_empty() {
            return Err(ScenarioError::NoEntrances);
        }
        // The objectives list must name exactly the marked cells, in
        // row-major order, with no duplicates.
        let mut seen = std::collections::HashSet::new();
        for obj in &objectives {
            if !seen.insert(obj.cell) {
                return Err(ScenarioError::DuplicateCoordinate(obj.cell));
            }
        }
        for marked in &marked_objectives {
            if !objectives.iter().any(|o| o.cell == *marked) {
                return Err(ScenarioError::MissingCasualty(*marked));
            }
        }
        if objectives.len() != marked_objectives.len() {
            let extra = objectives
                .iter()
                .find(|o| !marked_objectives.contains(&o.cell))
                .expect("length mismatch implies an unmatched entry");
            return Err(ScenarioError::ObjectiveMismatch(extra.cell));
        }
        let mut objectives = objectives;
        objectives.sort_by_key(|o| o.cell);

        if let PathProbabilities::Matrix(matrix) = &path_probs {
            check_gamma(matrix, entrances.len(), objectives.len())?;
        }

        Ok(Self {
            name,
            rows,
            cols,
            cell_size,
            grid,
            entrances,
            objectives,
            path_probs,
            params,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Side length of each grid cell, in meters.
    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn params(&self) -> &PhysicsParams {
        &self.params
    }

    /// Overrides the detector radius (typically from a CLI flag).
    pub fn set_radius(&mut self, radius: f64) {
        self.params.radius = Some(radius);
    }

    pub fn entrances(&self) -> &[CellRef] {
        &self.entrances
    }

    pub fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    pub fn path_probs(&self) -> &PathProbabilities {
        &self.path_probs
    }

    pub fn num_entrances(&self) -> usize {
        self.entrances.len()
    }

    pub fn num_objectives(&self) -> usize {
        self.objectives.len()
    }

    /// Number of entrance-objective paths.
    pub fn num_paths(&self) -> usize {
        self.entrances.len() * self.objectives.len()
    }

    pub fn kind(&self, cell: CellRef) -> CellKind {
        self.grid[self.rm_index(cell)]
    }

    pub fn in_bounds(&self, cell: CellRef) -> bool {
        cell.row >= 1
            && cell.col >= 1
            && (cell.row as usize) <= self.rows
            && (cell.col as usize) <= self.cols
    }

    pub fn is_unblocked(&self, cell: CellRef) -> bool {
        !self.kind(cell).is_blocked()
    }

    /// Row-major index of a cell, used throughout the solvers as the
    /// canonical deterministic cell ordering.
    pub fn rm_index(&self, cell: CellRef) -> usize {
        debug_assert!(self.in_bounds(cell));
        (cell.row as usize - 1) * self.cols + (cell.col as usize - 1)
    }

    pub fn cell_at(&self, rm_index: usize) -> CellRef {
        debug_assert!(rm_index < self.rows * self.cols);
        CellRef::new(
            (rm_index / self.cols) as u32 + 1,
            (rm_index % self.cols) as u32 + 1,
        )
    }

    pub fn kind_at(&self, rm_index: usize) -> CellKind {
        self.grid[rm_index]
    }

    /// Row-major indices of all unblocked cells, ascending.
    pub fn unblocked_cells(&self) -> Vec<usize> {
        (0..self.grid.len())
            .filter(|&i| !self.grid[i].is_blocked())
            .collect()
    }

    /// Center of a cell in meters: cell `(i, j)` maps to
    /// `((j - 0.5) * cell_size, (i - 0.5) * cell_size)`.
    pub fn center_of(&self, cell: CellRef) -> Point {
        Point {
            x: (cell.col as f64 - 0.5) * self.cell_size,
            y: (cell.row as f64 - 0.5) * self.cell_size,
        }
    }

    /// Probability that the attacker picks the path from entrance `i` to
    /// objective `j` (both 0-based).
    pub fn gamma(&self, entrance: usize, objective: usize) -> f64 {
        match &self.path_probs {
            PathProbabilities::Uniform => 1.0 / (self.num_paths() as f64),
            PathProbabilities::Matrix(m) => m[entrance][objective],
        }
    }

    /// Length of the dead zone at the end of each path, in meters: the
    /// distance the attacker covers during the neutralization response.
    pub fn dead_zone_length(&self) -> f64 {
        self.params.speed * self.params.neutralize_time
    }

    fn grid_strings(&self) -> Vec<String> {
        (0..self.rows)
            .map(|r| {
                (0..self.cols)
                    .map(|c| self.grid[r * self.cols + c].to_char())
                    .collect()
            })
            .collect()
    }
}

fn check_gamma(
    matrix: &[Vec<f64>],
    entrances: usize,
    objectives: usize,
) -> Result<(), ScenarioError> {
    if matrix.len() != entrances || matrix.iter().any(|row| row.len() != objectives) {
        return Err(ScenarioError::GammaShape {
            expected_rows: entrances,
            expected_cols: objectives,
        });
    }
    let mut sum = 0.0;
    for (i, row) in matrix.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v < 0.0 {
                return Err(ScenarioError::GammaNegative {
                    row: i,
                    col: j,
                    value: v,
                });
            }
            sum += v;
        }
    }
    if (sum - 1.0).abs() > GAMMA_SUM_TOL {
        return Err(ScenarioError::GammaNotNormalized(sum));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ScenarioDoc {
    name: String,
    rows: usize,
    cols: usize,
    cell_size_m: f64,
    grid: Vec<String>,
    objectives: Vec<ObjectiveDoc>,
    #[serde(default = "default_gamma")]
    gamma: GammaDoc,
    #[serde(default)]
    params: ParamsDoc,
}

#[derive(Serialize, Deserialize)]
struct ObjectiveDoc {
    row: u32,
    col: u32,
    casualties: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GammaDoc {
    Keyword(String),
    Matrix(Vec<Vec<f64>>),
}

fn default_gamma() -> GammaDoc {
    GammaDoc::Keyword("uniform".to_string())
}

#[derive(Serialize, Deserialize)]
struct ParamsDoc {
    #[serde(default = "default_eta")]
    eta: f64,
    #[serde(default = "default_theta")]
    theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius_m: Option<f64>,
    #[serde(default = "default_speed")]
    speed_mps: f64,
    #[serde(default = "default_neutralize")]
    neutralize_s: f64,
}

fn default_eta() -> f64 {
    0.06
}
fn default_theta() -> f64 {
    0.6
}
fn default_speed() -> f64 {
    1.0
}
fn default_neutralize() -> f64 {
    10.0
}

impl Default for ParamsDoc {
    fn default() -> Self {
        Self {
            eta: default_eta(),
            theta: default_theta(),
            radius_m: None,
            speed_mps: default_speed(),
            neutralize_s: default_neutralize(),
        }
    }
}

/// Parses a scenario document (JSON text). See the README for the format.
pub fn parse_scenario(document: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = serde_json::from_str(document)?;
    let path_probs = match doc.gamma {
        GammaDoc::Keyword(ref k) if k == "uniform" => PathProbabilities::Uniform,
        GammaDoc::Keyword(k) => return Err(ScenarioError::GammaKeyword(k)),
        GammaDoc::Matrix(m) => PathProbabilities::Matrix(m),
    };
    let objectives = doc
        .objectives
        .iter()
        .map(|o| Objective {
            cell: CellRef::new(o.row, o.col),
            casualties: o.casualties,
        })
        .collect();
    let params = PhysicsParams {
        detection_rate: doc.params.eta,
        neutralize_prob: doc.params.theta,
        radius: doc.params.radius_m,
        speed: doc.params.speed_mps,
        neutralize_time: doc.params.neutralize_s,
    };
    Scenario::from_parts(
        doc.name,
        doc.rows,
        doc.cols,
        doc.cell_size_m,
        &doc.grid,
        objectives,
        path_probs,
        params,
    )
}

/// Serializes a scenario back to its document form. Parsing the result
/// yields a scenario equal to the input field-for-field.
pub fn write_scenario(s: &Scenario) -> String {
    let doc = ScenarioDoc {
        name: s.name.clone(),
        rows: s.rows,
        cols: s.cols,
        cell_size_m: s.cell_size,
        grid: s.grid_strings(),
        objectives: s
            .objectives
            .iter()
            .map(|o| ObjectiveDoc {
                row: o.cell.row,
                col: o.cell.col,
                casualties: o.casualties,
            })
            .collect(),
        gamma: match &s.path_probs {
            PathProbabilities::Uniform => GammaDoc::Keyword("uniform".to_string()),
            PathProbabilities::Matrix(m) => GammaDoc::Matrix(m.clone()),
        },
        params: ParamsDoc {
            eta: s.params.detection_rate,
            theta: s.params.neutralize_prob,
            radius_m: s.params.radius,
            speed_mps: s.params.speed,
            neutralize_s: s.params.neutralize_time,
        },
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("scenario serialization");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// A single invariant violation found by [`validate_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveCasualties {
        cell: CellRef,
        value: f64,
    },
    GammaShape,
    GammaNegative {
        entrance: usize,
        objective: usize,
    },
    GammaNotNormalized {
        sum: f64,
    },
    BadParam {
        name: &'static str,
        value: f64,
    },
    MissingRadius,
    UnreachablePair {
        entrance: CellRef,
        objective: CellRef,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveCasualties { cell, value } => {
                write!(f, "nonpositive casualties {value} at objective {cell}")
            }
            Violation::GammaShape => write!(f, "gamma matrix has wrong shape"),
            Violation::GammaNegative {
                entrance,
                objective,
            } => write!(f, "negative gamma entry at ({entrance}, {objective})"),
            Violation::GammaNotNormalized { sum } => {
                write!(f, "gamma not normalized: sum = {sum}")
            }
            Violation::BadParam { name, value } => {
                write!(f, "parameter {name} out of range: {value}")
            }
            Violation::MissingRadius => write!(f, "detector radius missing or nonpositive"),
            Violation::UnreachablePair {
                entrance,
                objective,
            } => write!(
                f,
                "unreachable pair: entrance {entrance} -> objective {objective}"
            ),
        }
    }
}

/// Checks every scenario invariant, returning all violations found. An empty
/// list means the scenario is solvable: parameters are in range and every
/// entrance reaches every objective.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    for obj in s.objectives() {
        if !obj.casualties.is_finite() || obj.casualties <= 0.0 {
            out.push(Violation::NonPositiveCasualties {
                cell: obj.cell,
                value: obj.casualties,
            });
        }
    }
    if let PathProbabilities::Matrix(m) = s.path_probs() {
        match check_gamma(m, s.num_entrances(), s.num_objectives()) {
            Ok(()) => {}
            Err(ScenarioError::GammaShape { .. }) => out.push(Violation::GammaShape),
            Err(ScenarioError::GammaNegative { row, col, .. }) => {
                out.push(Violation::GammaNegative {
                    entrance: row,
                    objective: col,
                })
            }
            Err(ScenarioError::GammaNotNormalized(sum)) => {
                out.push(Violation::GammaNotNormalized { sum })
            }
            Err(_) => unreachable!("check_gamma only raises gamma errors"),
        }
    }
    let p = s.params();
    if !p.detection_rate.is_finite() || p.detection_rate <= 0.0 {
        out.push(Violation::BadParam {
            name: "eta",
            value: p.detection_rate,
        });
    }
    if !(0.0..=1.0).contains(&p.neutralize_prob) {
        out.push(Violation::BadParam {
            name: "theta",
            value: p.neutralize_prob,
        });
    }
    if !p.speed.is_finite() || p.speed <= 0.0 {
        out.push(Violation::BadParam {
            name: "speed_mps",
            value: p.speed,
        });
    }
    if p.neutralize_time < 0.0 {
        out.push(Violation::BadParam {
            name: "neutralize_s",
            value: p.neutralize_time,
        });
    }
    match p.radius {
        Some(r) if r > 0.0 => {}
        _ => out.push(Violation::MissingRadius),
    }

    // Reachability. A pair is connected in the visibility model exactly when
    // it is 8-connected over unblocked cells: a straight sight line crosses a
    // chain of edge- or corner-adjacent open cells, and conversely each 8-step
    // between unblocked cells is itself an unobstructed sight line (diagonal
    // moves squeeze through corner pinches, which the open-interior rule
    // allows).
    for &entrance in s.entrances() {
        let reach = reachable_from(s, entrance);
        for obj in s.objectives() {
            if !reach[s.rm_index(obj.cell)] {
                out.push(Violation::UnreachablePair {
                    entrance,
                    objective: obj.cell,
                });
            }
        }
    }
    out
}

fn reachable_from(s: &Scenario, start: CellRef) -> Vec<bool> {
    let (rows, cols) = (s.rows() as i64, s.cols() as i64);
    let mut seen = vec![false; s.rows() * s.cols()];
    let mut queue = VecDeque::new();
    seen[s.rm_index(start)] = true;
    queue.push_back(start);
    while let Some(cell) = queue.pop_front() {
        for dr in -1..=1i64 {
            for dc in -1..=1i64 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (nr, nc) = (cell.row as i64 + dr, cell.col as i64 + dc);
                if nr < 1 || nc < 1 || nr > rows || nc > cols {
                    continue;
                }
                let next = CellRef::new(nr as u32, nc as u32);
                let idx = s.rm_index(next);
                if !seen[idx] && s.is_unblocked(next) {
                    seen[idx] = true;
                    queue.push_back(next);
                }
            }
        }
    }
    seen
}
