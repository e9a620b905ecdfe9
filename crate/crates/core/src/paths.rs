//! Visibility graph over unblocked cells and the entrance-to-objective
//! shortest paths.
//!
//! The attacker moves in straight lines between cell centers whenever the
//! sight line is clear, so the movement graph is dense: every mutually
//! visible pair of unblocked cells is an edge weighted by the Euclidean
//! center distance. Shortest paths are computed with Dijkstra's algorithm
//! under a deterministic tie-break (smaller row-major predecessor), which
//! makes path shapes reproducible bit-for-bit.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{line_of_sight, truncate_dead_zone, Point, Polyline};
use crate::scenario::{CellRef, Scenario};

#[derive(Debug, Error)]
pub enum PathError {
    #[error("no path from entrance {entrance} to objective {objective}")]
    Unreachable {
        entrance: CellRef,
        objective: CellRef,
    },
    #[error("cell {0} is blocked or out of bounds")]
    BadCell(CellRef),
}

/// Dense visibility graph. Vertices are unblocked cells in row-major order;
/// adjacency is stored as a bit matrix.
pub struct VisibilityGraph {
    cols: usize,
    cell_size: f64,
    /// Vertex index per row-major cell index, `u32::MAX` for blocked cells.
    vertex_of_cell: Vec<u32>,
    /// Row-major cell index per vertex; ascending, so vertex order is the
    /// row-major cell order.
    cell_of_vertex: Vec<u32>,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl VisibilityGraph {
    pub fn build(s: &Scenario) -> Self {
        let cells = s.rows() * s.cols();
        let mut vertex_of_cell = vec![u32::MAX; cells];
        let mut cell_of_vertex = Vec::new();
        for (rm, vertex) in vertex_of_cell.iter_mut().enumerate() {
            if !s.kind_at(rm).is_blocked() {
                *vertex = cell_of_vertex.len() as u32;
                cell_of_vertex.push(rm as u32);
            }
        }
        let n = cell_of_vertex.len();
        let words_per_row = n.div_ceil(64);
        let mut bits = vec![0u64; n * words_per_row];
        bits.par_chunks_mut(words_per_row)
            .enumerate()
            .for_each(|(va, row)| {
                let a = cell_ref(cell_of_vertex[va] as usize, s.cols());
                for (vb, &rm_b) in cell_of_vertex.iter().enumerate() {
                    if vb == va {
                        continue;
                    }
                    let b = cell_ref(rm_b as usize, s.cols());
                    if line_of_sight(a, b, s) {
                        row[vb / 64] |= 1u64 << (vb % 64);
                    }
                }
            });
        Self {
            cols: s.cols(),
            cell_size: s.cell_size(),
            vertex_of_cell,
            cell_of_vertex,
            words_per_row,
            bits,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.cell_of_vertex.len()
    }

    fn vertex(&self, cell: CellRef) -> Option<u32> {
        let rm = (cell.row as usize - 1) * self.cols + (cell.col as usize - 1);
        match self.vertex_of_cell.get(rm) {
            Some(&v) if v != u32::MAX => Some(v),
            _ => None,
        }
    }

    fn row_bits(&self, v: usize) -> &[u64] {
        &self.bits[v * self.words_per_row..(v + 1) * self.words_per_row]
    }

    /// Edge weight between two unblocked cells: `cell_size * sqrt(dr^2 + dc^2)`
    /// when the sight line is clear, `None` otherwise.
    pub fn weight(&self, a: CellRef, b: CellRef) -> Option<f64> {
        let va = self.vertex(a)?;
        let vb = self.vertex(b)?;
        if va == vb {
            return Some(0.0);
        }
        let word = self.row_bits(va as usize)[vb as usize / 64];
        if word & (1u64 << (vb as usize % 64)) != 0 {
            Some(self.edge_weight(va, vb))
        } else {
            None
        }
    }

    fn edge_weight(&self, va: u32, vb: u32) -> f64 {
        let a = self.cell_of_vertex[va as usize] as i64;
        let b = self.cell_of_vertex[vb as usize] as i64;
        let (ra, ca) = (a / self.cols as i64, a % self.cols as i64);
        let (rb, cb) = (b / self.cols as i64, b % self.cols as i64);
        let dr = ra - rb;
        let dc = ca - cb;
        self.cell_size * ((dr * dr + dc * dc) as f64).sqrt()
    }
}

fn cell_ref(rm: usize, cols: usize) -> CellRef {
    CellRef::new((rm / cols) as u32 + 1, (rm % cols) as u32 + 1)
}

struct HeapItem {
    dist: f64,
    vertex: u32,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    // Reversed so the max-heap pops the smallest (dist, vertex) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

struct Dijkstra {
    dist: Vec<f64>,
    pred: Vec<u32>,
}

/// Runs Dijkstra from `source`, stopping once every target has settled.
/// Ties are broken toward the predecessor with the smaller row-major index,
/// which yields a unique predecessor chain.
fn dijkstra(g: &VisibilityGraph, source: u32, targets: &[u32]) -> Dijkstra {
    let n = g.num_vertices();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![u32::MAX; n];
    let mut settled = vec![false; n];
    let mut pending: Vec<bool> = vec![false; n];
    let mut remaining = 0usize;
    for &t in targets {
        if !pending[t as usize] {
            pending[t as usize] = true;
            remaining += 1;
        }
    }
    let mut heap = BinaryHeap::new();
    dist[source as usize] = 0.0;
    heap.push(HeapItem {
        dist: 0.0,
        vertex: source,
    });
    while let Some(item) = heap.pop() {
        let u = item.vertex as usize;
        if settled[u] || item.dist != dist[u] {
            continue;
        }
        settled[u] = true;
        if pending[u] {
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
        let du = dist[u];
        let row = g.row_bits(u);
        for (w, &word) in row.iter().enumerate() {
            let mut bitset = word;
            while bitset != 0 {
                let bit = bitset.trailing_zeros() as usize;
                bitset &= bitset - 1;
                let v = w * 64 + bit;
                if settled[v] {
                    continue;
                }
                let nd = du + g.edge_weight(item.vertex, v as u32);
                if nd < dist[v] {
                    dist[v] = nd;
                    pred[v] = item.vertex;
                    heap.push(HeapItem {
                        dist: nd,
                        vertex: v as u32,
                    });
                } else if nd == dist[v] && item.vertex < pred[v] {
                    pred[v] = item.vertex;
                }
            }
        }
    }
    Dijkstra { dist, pred }
}

/// Extracts the polyline for `target`, merging exactly collinear interior
/// vertices so straight runs come out as single segments.
fn extract_polyline(
    g: &VisibilityGraph,
    run: &Dijkstra,
    source: u32,
    target: u32,
    s: &Scenario,
) -> Option<Polyline> {
    if run.dist[target as usize].is_infinite() {
        return None;
    }
    let mut chain = vec![target];
    let mut v = target;
    while v != source {
        v = run.pred[v as usize];
        debug_assert!(v != u32::MAX);
        chain.push(v);
    }
    chain.reverse();
    let coords: Vec<(i64, i64)> = chain
        .iter()
        .map(|&v| {
            let rm = g.cell_of_vertex[v as usize] as i64;
            (rm / g.cols as i64, rm % g.cols as i64)
        })
        .collect();
    let mut kept: Vec<usize> = vec![0];
    for i in 1..coords.len() {
        while kept.len() >= 2 {
            let a = coords[kept[kept.len() - 2]];
            let b = coords[*kept.last().unwrap()];
            let c = coords[i];
            let (d1r, d1c) = (b.0 - a.0, b.1 - a.1);
            let (d2r, d2c) = (c.0 - b.0, c.1 - b.1);
            let cross = d1r * d2c - d1c * d2r;
            let dot = d1r * d2r + d1c * d2c;
            if cross == 0 && dot > 0 {
                kept.pop();
            } else {
                break;
            }
        }
        kept.push(i);
    }
    let points: Vec<Point> = kept
        .into_iter()
        .map(|i| {
            let v = chain[i];
            s.center_of(cell_ref(g.cell_of_vertex[v as usize] as usize, g.cols))
        })
        .collect();
    Some(Polyline::new(points))
}

/// Shortest path between two unblocked cells as a polyline of cell centers,
/// or `None` when the target is unreachable.
pub fn shortest_path(
    g: &VisibilityGraph,
    from: CellRef,
    to: CellRef,
    s: &Scenario,
) -> Option<Polyline> {
    let source = g.vertex(from)?;
    let target = g.vertex(to)?;
    if source == target {
        return Some(Polyline::new(vec![s.center_of(from)]));
    }
    let run = dijkstra(g, source, &[target]);
    extract_polyline(g, &run, source, target, s)
}

/// One entrance-to-objective path with its dead-zone truncation.
#[derive(Debug, Clone)]
pub struct PathRecord {
    pub entrance_index: usize,
    pub objective_index: usize,
    pub polyline: Polyline,
    /// The detectable portion: everything but the final dead-zone meters.
    pub truncated: Polyline,
}

/// All `entrances x objectives` shortest paths in canonical order: path `p`
/// joins entrance `p / objectives` to objective `p % objectives`.
#[derive(Debug, Clone)]
pub struct PathSet {
    records: Vec<PathRecord>,
    num_objectives: usize,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, path: usize) -> &PathRecord {
        &self.records[path]
    }

    pub fn iter(&self) -> impl Iterator<Item = &PathRecord> {
        self.records.iter()
    }

    pub fn num_objectives(&self) -> usize {
        self.num_objectives
    }
}

/// Computes every entrance-to-objective shortest path and truncates each by
/// the scenario's dead zone.
pub fn enumerate_paths(s: &Scenario) -> Result<PathSet, PathError> {
    let g = VisibilityGraph::build(s);
    enumerate_paths_with_graph(s, &g)
}

pub fn enumerate_paths_with_graph(s: &Scenario, g: &VisibilityGraph) -> Result<PathSet, PathError> {
    let dead = s.dead_zone_length();
    let targets: Vec<u32> = s
        .objectives()
        .iter()
        .map(|o| g.vertex(o.cell).ok_or(PathError::BadCell(o.cell)))
        .collect::<Result<_, _>>()?;
    let per_entrance: Vec<Result<Vec<PathRecord>, PathError>> = s
        .entrances()
        .par_iter()
        .enumerate()
        .map(|(i, &entrance)| {
            let source = g.vertex(entrance).ok_or(PathError::BadCell(entrance))?;
            let run = dijkstra(g, source, &targets);
            s.objectives()
                .iter()
                .enumerate()
                .map(|(j, obj)| {
                    let target = targets[j];
                    let polyline = if source == target {
                        Some(Polyline::new(vec![s.center_of(entrance)]))
                    } else {
                        extract_polyline(g, &run, source, target, s)
                    };
                    let polyline = polyline.ok_or(PathError::Unreachable {
                        entrance,
                        objective: obj.cell,
                    })?;
                    let truncated = truncate_dead_zone(&polyline, dead);
                    Ok(PathRecord {
                        entrance_index: i,
                        objective_index: j,
                        polyline,
                        truncated,
                    })
                })
                .collect()
        })
        .collect();
    let mut records = Vec::with_capacity(s.num_paths());
    for group in per_entrance {
        records.extend(group?);
    }
    Ok(PathSet {
        records,
        num_objectives: s.num_objectives(),
    })
}

/// Debug export: polyline vertices of every path as CSV.
pub fn paths_csv(ps: &PathSet) -> String {
    let mut out = String::from("path_index,seq,x_m,y_m\n");
    for (p, rec) in ps.iter().enumerate() {
        for (seq, pt) in rec.polyline.points().iter().enumerate() {
            out.push_str(&format!(
                "{p},{seq},{},{}\n",
                crate::bench::sig12(pt.x),
                crate::bench::sig12(pt.y)
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;
    use approx::assert_relative_eq;

    fn open_grid(rows: usize, cols: usize, blocked: &[(u32, u32)]) -> Scenario {
        let mut lines: Vec<String> = (0..rows).map(|_| ".".repeat(cols)).collect();
        let set = |lines: &mut Vec<String>, r: usize, c: usize, ch: char| {
            let mut chars: Vec<char> = lines[r].chars().collect();
            chars[c] = ch;
            lines[r] = chars.iter().collect();
        };
        for &(r, c) in blocked {
            set(&mut lines, r as usize - 1, c as usize - 1, '#');
        }
        set(&mut lines, 0, 0, 'E');
        set(&mut lines, rows - 1, cols - 1, 'O');
        let doc = serde_json::json!({
            "name": "paths-test",
            "rows": rows,
            "cols": cols,
            "cell_size_m": 10.0,
            "grid": lines,
            "objectives": [{"row": rows, "col": cols, "casualties": 5.0}],
            "params": {"radius_m": 10.0}
        });
        parse_scenario(&doc.to_string()).unwrap()
    }

    #[test]
    fn neighbor_weight_is_cell_size() {
        let s = open_grid(4, 4, &[]);
        let g = VisibilityGraph::build(&s);
        let w = g.weight(CellRef::new(2, 2), CellRef::new(2, 3)).unwrap();
        assert_relative_eq!(w, 10.0);
    }

    #[test]
    fn three_four_five_weight() {
        let s = open_grid(6, 6, &[]);
        let g = VisibilityGraph::build(&s);
        let w = g.weight(CellRef::new(1, 1), CellRef::new(4, 5)).unwrap();
        assert_relative_eq!(w, 50.0, max_relative = 1e-12);
    }

    #[test]
    fn blocked_cell_removes_edge() {
        let s = open_grid(3, 3, &[(2, 2)]);
        let g = VisibilityGraph::build(&s);
        assert_eq!(g.weight(CellRef::new(2, 1), CellRef::new(2, 3)), None);
    }

    #[test]
    fn same_cell_single_point() {
        let s = open_grid(3, 3, &[]);
        let g = VisibilityGraph::build(&s);
        let p = shortest_path(&g, CellRef::new(2, 2), CellRef::new(2, 2), &s).unwrap();
        assert_eq!(p.points().len(), 1);
        assert_eq!(p.length(), 0.0);
    }

    #[test]
    fn empty_grid_gives_straight_segment() {
        let s = open_grid(8, 8, &[]);
        let g = VisibilityGraph::build(&s);
        let p = shortest_path(&g, CellRef::new(1, 1), CellRef::new(8, 8), &s).unwrap();
        assert_eq!(p.points().len(), 2, "straight two-point polyline");
        assert_relative_eq!(p.length(), 10.0 * (98.0f64).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn detour_around_wall() {
        // Vertical wall with a gap forces a detour; path length must beat the
        // naive lower bound but stay finite and start/end at the centers.
        let s = open_grid(5, 5, &[(1, 3), (2, 3), (3, 3), (4, 3)]);
        let g = VisibilityGraph::build(&s);
        let p = shortest_path(&g, CellRef::new(2, 1), CellRef::new(2, 5), &s).unwrap();
        assert!(p.points().len() > 2);
        let direct = 40.0;
        assert!(p.length() > direct);
        assert_eq!(p.points()[0], s.center_of(CellRef::new(2, 1)));
        assert_eq!(*p.points().last().unwrap(), s.center_of(CellRef::new(2, 5)));
    }

    #[test]
    fn graph_distance_lower_bound() {
        let s = open_grid(6, 6, &[(3, 3), (3, 4), (4, 3)]);
        let g = VisibilityGraph::build(&s);
        for r in 1..=6u32 {
            for c in 1..=6u32 {
                let to = CellRef::new(r, c);
                if !s.is_unblocked(to) {
                    continue;
                }
                if let Some(p) = shortest_path(&g, CellRef::new(1, 1), to, &s) {
                    let dr = r as f64 - 1.0;
                    let dc = c as f64 - 1.0;
                    let bound = 10.0 * (dr * dr + dc * dc).sqrt();
                    assert!(p.length() + 1e-9 >= bound);
                }
            }
        }
    }

    #[test]
    fn enumerate_paths_counts_and_truncation() {
        let s = parse_scenario(&crate::scenario::tests::demo_8x8_doc()).unwrap();
        let ps = enumerate_paths(&s).unwrap();
        assert_eq!(ps.len(), 16);
        for rec in ps.iter() {
            let full = rec.polyline.length();
            let cut = rec.truncated.length();
            if full > 10.0 {
                assert_relative_eq!(cut, full - 10.0, epsilon = 1e-9);
            } else {
                assert_eq!(cut, 0.0);
            }
            assert_eq!(
                rec.polyline.points()[0],
                s.center_of(s.entrances()[rec.entrance_index])
            );
            assert_eq!(
                *rec.polyline.points().last().unwrap(),
                s.center_of(s.objectives()[rec.objective_index].cell)
            );
        }
    }

    #[test]
    fn csv_export_lists_every_vertex() {
        let s = open_grid(5, 5, &[(2, 3), (3, 3)]);
        let ps = enumerate_paths(&s).unwrap();
        let csv = paths_csv(&ps);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("path_index,seq,x_m,y_m"));
        let vertex_count: usize = ps.iter().map(|r| r.polyline.points().len()).sum();
        assert_eq!(csv.lines().count(), vertex_count + 1);
        // First vertex of path 0 is the first entrance center.
        let first = csv.lines().nth(1).unwrap();
        assert!(first.starts_with("0,0,"));
    }

    #[test]
    fn single_pair_scenario_has_one_path() {
        let doc = r#"{"name":"one","rows":1,"cols":3,"cell_size_m":10.0,
            "grid":["E.O"],
            "objectives":[{"row":1,"col":3,"casualties":5.0}],
            "params":{"radius_m":10.0}}"#;
        let s = parse_scenario(doc).unwrap();
        let ps = enumerate_paths(&s).unwrap();
        assert_eq!(ps.len(), 1);
        assert_relative_eq!(ps.get(0).polyline.length(), 20.0);
    }

    #[test]
    fn enumeration_is_deterministic() {
        let s = parse_scenario(&crate::scenario::tests::demo_8x8_doc()).unwrap();
        let a = enumerate_paths(&s).unwrap();
        let b = enumerate_paths(&s).unwrap();
        for (ra, rb) in a.iter().zip(b.iter()) {
            assert_eq!(ra.polyline.points(), rb.polyline.points());
            assert_eq!(
                ra.polyline.length().to_bits(),
                rb.polyline.length().to_bits()
            );
        }
    }

    #[test]
    fn removing_obstacle_never_lengthens_paths() {
        let blocked = [(2u32, 3u32), (3, 3), (4, 2)];
        let with_all = open_grid(5, 5, &blocked);
        let relaxed = open_grid(5, 5, &blocked[..2]);
        let ga = VisibilityGraph::build(&with_all);
        let gb = VisibilityGraph::build(&relaxed);
        for r in 1..=5u32 {
            for c in 1..=5u32 {
                let to = CellRef::new(r, c);
                if !with_all.is_unblocked(to) || !relaxed.is_unblocked(to) {
                    continue;
                }
                let pa = shortest_path(&ga, CellRef::new(1, 1), to, &with_all);
                let pb = shortest_path(&gb, CellRef::new(1, 1), to, &relaxed);
                if let (Some(pa), Some(pb)) = (pa, pb) {
                    assert!(pb.length() <= pa.length() + 1e-9);
                }
            }
        }
    }
}
