//! Planar geometry over the grid: cell centers, sight lines against blocked
//! cells, circle-segment chord lengths and dead-zone truncation of polylines.
//!
//! Blocking uses the open interior of blocked squares: a ray that grazes a
//! wall face or passes exactly through a corner is not obstructed. All
//! predicates use a 1e-9 m tolerance.

use crate::scenario::{CellRef, Scenario};

/// Tolerance in meters for geometric predicates.
pub const GEOM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        (dx * dx + dy * dy).sqrt()
    }
}

/// An open polygonal chain with a cached arc length. A single-point polyline
/// has length zero and stands for an empty path segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Point>,
    length: f64,
}

impl Polyline {
    /// Builds a polyline from at least one point. Consecutive points must be
    /// distinct.
    pub fn new(points: Vec<Point>) -> Self {
        assert!(!points.is_empty(), "polyline needs at least one point");
        debug_assert!(
            points.windows(2).all(|w| w[0] != w[1]),
            "consecutive polyline points must be distinct"
        );
        let length = points.windows(2).map(|w| w[0].dist(w[1])).sum();
        Self { points, length }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// True when the polyline has no extent (single point).
    pub fn is_empty(&self) -> bool {
        self.points.len() < 2
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }
}

/// True when the open segment between the centers of `a` and `b` avoids the
/// open interior of every blocked cell.
pub fn line_of_sight(a: CellRef, b: CellRef, s: &Scenario) -> bool {
    if a == b {
        return true;
    }
    let p = s.center_of(a);
    let q = s.center_of(b);
    let zeta = s.cell_size();
    let mut clear = true;
    visit_candidate_cells(p, q, zeta, s.rows(), s.cols(), |row, col| {
        let cell = CellRef::new(row, col);
        if s.kind(cell).is_blocked() && segment_crosses_cell(p, q, cell, zeta) {
            clear = false;
            false // stop traversal
        } else {
            true
        }
    });
    clear
}

/// Reference implementation of [`line_of_sight`] that tests every blocked
/// cell. Used as an oracle in tests.
pub fn line_of_sight_exhaustive(a: CellRef, b: CellRef, s: &Scenario) -> bool {
    if a == b {
        return true;
    }
    let p = s.center_of(a);
    let q = s.center_of(b);
    let zeta = s.cell_size();
    for r in 1..=s.rows() as u32 {
        for c in 1..=s.cols() as u32 {
            let cell = CellRef::new(r, c);
            if s.kind(cell).is_blocked() && segment_crosses_cell(p, q, cell, zeta) {
                return false;
            }
        }
    }
    true
}

/// Does segment `pq` cross the open interior of the given cell's square?
/// The square is shrunk by [`GEOM_TOL`] so grazing contacts do not count.
pub(crate) fn segment_crosses_cell(p: Point, q: Point, cell: CellRef, zeta: f64) -> bool {
    let xmin = (cell.col as f64 - 1.0) * zeta + GEOM_TOL;
    let xmax = cell.col as f64 * zeta - GEOM_TOL;
    let ymin = (cell.row as f64 - 1.0) * zeta + GEOM_TOL;
    let ymax = cell.row as f64 * zeta - GEOM_TOL;
    segment_intersects_rect(p, q, xmin, xmax, ymin, ymax)
}

/// Liang-Barsky clip: does the segment have a positive-length overlap with
/// the axis-aligned rectangle?
fn segment_intersects_rect(p: Point, q: Point, xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> bool {
    let dx = q.x - p.x;
    let dy = q.y - p.y;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p0, d, lo, hi) in [(p.x, dx, xmin, xmax), (p.y, dy, ymin, ymax)] {
        if d == 0.0 {
            if p0 <= lo || p0 >= hi {
                return false;
            }
        } else {
            let ta = (lo - p0) / d;
            let tb = (hi - p0) / d;
            let (ta, tb) = if ta <= tb { (ta, tb) } else { (tb, ta) };
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 >= t1 {
                return false;
            }
        }
    }
    t1 > t0
}

/// Walks the grid cells the segment may pass through (a conservative
/// supercover: near-corner crossings enqueue both side cells) and calls
/// `visit` on each, stopping early when it returns false.
fn visit_candidate_cells<F: FnMut(u32, u32) -> bool>(
    p: Point,
    q: Point,
    zeta: f64,
    rows: usize,
    cols: usize,
    mut visit: F,
) {
    // Cell containing a point; centers are strictly inside cells.
    let cell_of = |pt: Point| -> (i64, i64) {
        let col = (pt.x / zeta).floor() as i64; // 0-based
        let row = (pt.y / zeta).floor() as i64;
        (row, col)
    };
    let (r0, c0) = cell_of(p);
    let (r1, c1) = cell_of(q);
    let dx = q.x - p.x;
    let dy = q.y - p.y;
    let seg_len = (dx * dx + dy * dy).sqrt();
    let eps_t = if seg_len > 0.0 {
        1e-7 * zeta / seg_len
    } else {
        0.0
    };

    let emit = |row: i64, col: i64, visit: &mut F| -> bool {
        if row < 0 || col < 0 || row >= rows as i64 || col >= cols as i64 {
            return true;
        }
        visit(row as u32 + 1, col as u32 + 1)
    };

    if !emit(r0, c0, &mut visit) {
        return;
    }
    if (r0, c0) == (r1, c1) {
        return;
    }

    let step_c: i64 = if dx > 0.0 {
        1
    } else if dx < 0.0 {
        -1
    } else {
        0
    };
    let step_r: i64 = if dy > 0.0 {
        1
    } else if dy < 0.0 {
        -1
    } else {
        0
    };
    // Parameter t of the next vertical / horizontal grid-line crossing.
    let mut t_max_x = if step_c != 0 {
        let next = if step_c > 0 {
            (c0 + 1) as f64 * zeta
        } else {
            c0 as f64 * zeta
        };
        (next - p.x) / dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if step_r != 0 {
        let next = if step_r > 0 {
            (r0 + 1) as f64 * zeta
        } else {
            r0 as f64 * zeta
        };
        (next - p.y) / dy
    } else {
        f64::INFINITY
    };
    let t_delta_x = if step_c != 0 {
        zeta / dx.abs()
    } else {
        f64::INFINITY
    };
    let t_delta_y = if step_r != 0 {
        zeta / dy.abs()
    } else {
        f64::INFINITY
    };

    let (mut r, mut c) = (r0, c0);
    let max_steps = (r0 - r1).unsigned_abs() + (c0 - c1).unsigned_abs() + 4;
    for _ in 0..max_steps {
        if (t_max_x - t_max_y).abs() <= eps_t {
            // Near-corner crossing: include both side cells conservatively
            // before stepping diagonally.
            if !emit(r, c + step_c, &mut visit) || !emit(r + step_r, c, &mut visit) {
                return;
            }
            c += step_c;
            r += step_r;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        } else if t_max_x < t_max_y {
            c += step_c;
            t_max_x += t_delta_x;
        } else {
            r += step_r;
            t_max_y += t_delta_y;
        }
        if !emit(r, c, &mut visit) {
            return;
        }
        if (r, c) == (r1, c1) {
            return;
        }
    }
}

/// Length of the intersection of segment `pq` with the closed disk of the
/// given radius. Tangency contributes zero length.
pub fn chord_length(p: Point, q: Point, center: Point, radius: f64) -> f64 {
    let dx = q.x - p.x;
    let dy = q.y - p.y;
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return 0.0;
    }
    let fx = p.x - center.x;
    let fy = p.y - center.y;
    // |p + t d - c|^2 = r^2, quadratic in t.
    let a = len2;
    let b = 2.0 * (fx * dx + fy * dy);
    let c0 = fx * fx + fy * fy - radius * radius;
    let disc = b * b - 4.0 * a * c0;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let t_enter = (-b - sq) / (2.0 * a);
    let t_exit = (-b + sq) / (2.0 * a);
    let lo = t_enter.max(0.0);
    let hi = t_exit.min(1.0);
    if hi <= lo {
        return 0.0;
    }
    (hi - lo) * len2.sqrt()
}

/// Keeps the prefix of the path whose arc length is
/// `max(0, length - dead_length)`, cutting the final segment at the exact
/// interpolated point. Returns a single-point polyline when the whole path
/// lies inside the dead zone.
pub fn truncate_dead_zone(path: &Polyline, dead_length: f64) -> Polyline {
    assert!(dead_length >= 0.0, "dead zone length must be nonnegative");
    if dead_length == 0.0 {
        return path.clone();
    }
    let keep = path.length() - dead_length;
    if keep <= 0.0 {
        return Polyline::new(vec![path.points()[0]]);
    }
    let mut out = vec![path.points()[0]];
    let mut remaining = keep;
    for (a, b) in path.segments() {
        let seg = a.dist(b);
        if seg < remaining {
            out.push(b);
            remaining -= seg;
        } else {
            let t = remaining / seg;
            let cut = if t >= 1.0 {
                b
            } else {
                Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
            };
            // A cut landing exactly on the previous vertex adds nothing.
            if cut != *out.last().expect("nonempty") {
                out.push(cut);
            }
            break;
        }
    }
    Polyline::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid_scenario(rows: usize, cols: usize, blocked: &[(u32, u32)]) -> Scenario {
        let mut lines: Vec<String> = (0..rows).map(|_| ".".repeat(cols)).collect();
        for &(r, c) in blocked {
            let line = &mut lines[r as usize - 1];
            let mut chars: Vec<char> = line.chars().collect();
            chars[c as usize - 1] = '#';
            *line = chars.into_iter().collect();
        }
        // Entrance and objective markers just to satisfy structure; keep them
        // away from test geometry by overwriting corner cells when free.
        let set = |lines: &mut Vec<String>, r: usize, c: usize, ch: char| {
            let mut chars: Vec<char> = lines[r].chars().collect();
            if chars[c] == '.' {
                chars[c] = ch;
            }
            lines[r] = chars.iter().collect();
        };
        set(&mut lines, 0, 0, 'E');
        set(&mut lines, rows - 1, cols - 1, 'O');
        let obj_cell = lines
            .iter()
            .enumerate()
            .flat_map(|(r, l)| {
                l.chars()
                    .enumerate()
                    .filter(|(_, ch)| *ch == 'O')
                    .map(move |(c, _)| (r as u32 + 1, c as u32 + 1))
            })
            .next()
            .expect("objective placed");
        let doc = serde_json::json!({
            "name": "geom",
            "rows": rows,
            "cols": cols,
            "cell_size_m": 10.0,
            "grid": lines,
            "objectives": [{"row": obj_cell.0, "col": obj_cell.1, "casualties": 5.0}],
            "params": {"radius_m": 10.0}
        });
        parse_scenario(&doc.to_string()).unwrap()
    }

    #[test]
    fn los_between_neighbors() {
        let s = grid_scenario(3, 3, &[]);
        assert!(line_of_sight(CellRef::new(2, 1), CellRef::new(2, 2), &s));
    }

    #[test]
    fn los_blocked_by_middle_cell() {
        let s = grid_scenario(3, 3, &[(2, 2)]);
        assert!(!line_of_sight(CellRef::new(2, 1), CellRef::new(2, 3), &s));
        // Symmetric.
        assert!(!line_of_sight(CellRef::new(2, 3), CellRef::new(2, 1), &s));
    }

    #[test]
    fn los_grazing_corner_passes() {
        // Diagonal from (1,1) to (3,3) passes exactly through the corners of
        // (2,1) and (1,2); touching is not crossing.
        let s = grid_scenario(3, 3, &[(2, 1), (1, 2)]);
        assert!(line_of_sight(CellRef::new(1, 1), CellRef::new(3, 3), &s));
        assert!(line_of_sight_exhaustive(
            CellRef::new(1, 1),
            CellRef::new(3, 3),
            &s
        ));
    }

    #[test]
    fn los_diagonal_pinch_passes() {
        let s = grid_scenario(2, 2, &[(1, 2), (2, 1)]);
        assert!(line_of_sight(CellRef::new(1, 1), CellRef::new(2, 2), &s));
    }

    #[test]
    fn chord_full_diameter() {
        let c = chord_length(
            Point::new(-100.0, 0.0),
            Point::new(100.0, 0.0),
            Point::new(0.0, 0.0),
            20.0,
        );
        assert_relative_eq!(c, 40.0, max_relative = 1e-12);
    }

    #[test]
    fn chord_offset_line() {
        let c = chord_length(
            Point::new(-100.0, 10.0),
            Point::new(100.0, 10.0),
            Point::new(0.0, 0.0),
            20.0,
        );
        assert_relative_eq!(c, 2.0 * (400.0f64 - 100.0).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn chord_outside_disk() {
        let c = chord_length(
            Point::new(-100.0, 30.0),
            Point::new(100.0, 30.0),
            Point::new(0.0, 0.0),
            20.0,
        );
        assert_eq!(c, 0.0);
    }

    #[test]
    fn truncate_examples() {
        let path = Polyline::new(vec![
            Point::new(0.0, 0.0),
            Point::new(30.0, 0.0),
            Point::new(30.0, 20.0),
        ]);
        assert_relative_eq!(path.length(), 50.0);
        let cut = truncate_dead_zone(&path, 10.0);
        assert_relative_eq!(cut.length(), 40.0, epsilon = 1e-9);
        assert_eq!(cut.points().last().unwrap(), &Point::new(30.0, 10.0));

        let short = Polyline::new(vec![Point::new(0.0, 0.0), Point::new(8.0, 0.0)]);
        let empty = truncate_dead_zone(&short, 10.0);
        assert!(empty.is_empty());
        assert_eq!(empty.length(), 0.0);

        let same = truncate_dead_zone(&path, 0.0);
        assert_eq!(same, path);
    }

    #[test]
    fn truncate_cut_at_vertex() {
        let path = Polyline::new(vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(10.0, 10.0),
        ]);
        let cut = truncate_dead_zone(&path, 10.0);
        assert_eq!(cut.points(), &[Point::new(0.0, 0.0), Point::new(10.0, 0.0)]);
    }

    proptest! {
        #[test]
        fn chord_symmetry_and_bounds(
            px in -50.0..50.0f64, py in -50.0..50.0f64,
            qx in -50.0..50.0f64, qy in -50.0..50.0f64,
            cx in -50.0..50.0f64, cy in -50.0..50.0f64,
            radius in 0.1..40.0f64,
        ) {
            let (p, q, c) = (Point::new(px, py), Point::new(qx, qy), Point::new(cx, cy));
            let fwd = chord_length(p, q, c, radius);
            let bwd = chord_length(q, p, c, radius);
            prop_assert!((fwd - bwd).abs() <= 1e-9);
            prop_assert!(fwd >= 0.0);
            prop_assert!(fwd <= p.dist(q) + 1e-9);
            prop_assert!(fwd <= 2.0 * radius + 1e-9);
            // Monotone in the radius.
            let bigger = chord_length(p, q, c, radius * 1.5);
            prop_assert!(bigger + 1e-9 >= fwd);
        }

        #[test]
        fn chord_additivity(
            px in -50.0..50.0f64, py in -50.0..50.0f64,
            qx in -50.0..50.0f64, qy in -50.0..50.0f64,
            cx in -20.0..20.0f64, cy in -20.0..20.0f64,
            radius in 0.5..30.0f64,
            t in 0.01..0.99f64,
        ) {
            let (p, q, c) = (Point::new(px, py), Point::new(qx, qy), Point::new(cx, cy));
            let mid = Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y));
            let whole = chord_length(p, q, c, radius);
            let parts = chord_length(p, mid, c, radius) + chord_length(mid, q, c, radius);
            prop_assert!((whole - parts).abs() <= 1e-9,
                "whole={whole} parts={parts}");
        }

        #[test]
        fn truncate_length_law(
            xs in proptest::collection::vec(-100.0..100.0f64, 2..8),
            ys in proptest::collection::vec(-100.0..100.0f64, 2..8),
            dead in 0.0..80.0f64,
        ) {
            let n = xs.len().min(ys.len());
            let mut pts: Vec<Point> = (0..n).map(|i| Point::new(xs[i], ys[i])).collect();
            pts.dedup_by(|a, b| a == b);
            prop_assume!(pts.len() >= 2);
            let path = Polyline::new(pts);
            let cut = truncate_dead_zone(&path, dead);
            let expected = (path.length() - dead).max(0.0);
            prop_assert!((cut.length() - expected).abs() <= 1e-9);
        }

        #[test]
        fn los_matches_exhaustive_oracle(
            seed_cells in proptest::collection::vec((1u32..=6, 1u32..=6), 0..8),
            a in (1u32..=6, 1u32..=6),
            b in (1u32..=6, 1u32..=6),
        ) {
            let blocked: Vec<(u32, u32)> = seed_cells
                .into_iter()
                .filter(|&cell| cell != a && cell != b && cell != (1, 1) && cell != (6, 6))
                .collect();
            let s = grid_scenario(6, 6, &blocked);
            let ca = CellRef::new(a.0, a.1);
            let cb = CellRef::new(b.0, b.1);
            prop_assume!(s.is_unblocked(ca) && s.is_unblocked(cb));
            prop_assert_eq!(
                line_of_sight(ca, cb, &s),
                line_of_sight_exhaustive(ca, cb, &s)
            );
            // Symmetry.
            prop_assert_eq!(
                line_of_sight(ca, cb, &s),
                line_of_sight(cb, ca, &s)
            );
        }
    }
}
