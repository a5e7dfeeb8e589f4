use std::fmt;

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::geometry::Point2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    /// Column, 0 at the left.
    pub x: usize,
    /// Row, 0 at the top line of the map.
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    /// Cells are unit squares; the center of `(x, y)` is `(x + 0.5, y + 0.5)`.
    pub fn center(self) -> Point2 {
        Point2::new(self.x as f64 + 0.5, self.y as f64 + 0.5)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    blocked: Vec<bool>,
}

impl GridMap {
    /// A map with no obstacles.
    pub fn open(width: usize, height: usize) -> Self {
        assert!(width >= 1 && height >= 1, "grid needs at least one cell");
        Self {
            width,
            height,
            blocked: vec![false; width * height],
        }
    }

    pub fn from_blocked(width: usize, height: usize, blocked: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || blocked.len() != width * height {
            return Err(Error::Input(format!(
                "blocked mask of {} cells does not fit {width}x{height}",
                blocked.len()
            )));
        }
        Ok(Self {
            width,
            height,
            blocked,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn is_blocked(&self, cell: Cell) -> bool {
        self.blocked[cell.y * self.width + cell.x]
    }

    pub fn set_blocked(&mut self, cell: Cell, blocked: bool) {
        self.blocked[cell.y * self.width + cell.x] = blocked;
    }

    pub fn blocked_count(&self) -> usize {
        self.blocked.iter().filter(|b| **b).count()
    }

    pub fn passable_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height)
            .flat_map(move |y| (0..self.width).map(move |x| Cell::new(x, y)))
            .filter(|c| !self.is_blocked(*c))
    }

    /// Serializes in movingai `.map` form with `.` and `@`.
    pub fn to_movingai(&self) -> String {
        let mut out = format!(
            "type octile\nheight {}\nwidth {}\nmap\n",
            self.height, self.width
        );
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if self.is_blocked(Cell::new(x, y)) { '@' } else { '.' });
            }
            out.push('\n');
        }
        out
    }
}

fn cell_is_blocked(c: char) -> Option<bool> {
    match c {
        '.' | 'G' | 'S' => Some(false),
        '@' | 'O' | 'T' | 'W' => Some(true),
        _ => None,
    }
}

/// Parses a movingai `.map` file.
pub fn parse_map(text: &str) -> Result<GridMap> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let mut width = None;
    let mut height = None;
    let mut header_end = 0;
    for (line_no, line) in lines.by_ref() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            None => continue,
            Some("type") => {}
            Some(key @ ("height" | "width")) => {
                let value: usize = parts
                    .next()
                    .and_then(|v| v.parse().ok())
                    .filter(|v| *v > 0)
                    .ok_or_else(|| Error::parse(line_no, format!("bad {key} value")))?;
                if key == "height" {
                    height = Some(value);
                } else {
                    width = Some(value);
                }
            }
            Some("map") => {
                header_end = line_no;
                break;
            }
            Some(other) => {
                return Err(Error::parse(line_no, format!("unexpected header field `{other}`")))
            }
        }
    }
    if header_end == 0 {
        return Err(Error::parse(text.lines().count().max(1), "missing `map` line"));
    }
    let width = width.ok_or_else(|| Error::parse(header_end, "missing width"))?;
    let height = height.ok_or_else(|| Error::parse(header_end, "missing height"))?;

    let mut blocked = Vec::with_capacity(width * height);
    let mut rows = 0;
    for (line_no, line) in lines {
        if rows == height {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::parse(line_no, format!("more than {height} rows")));
        }
        let chars: Vec<char> = line.chars().collect();
        if chars.len() != width {
            return Err(Error::parse(
                line_no,
                format!("row has {} cells, expected {width}", chars.len()),
            ));
        }
        for (col, c) in chars.into_iter().enumerate() {
            let b = cell_is_blocked(c).ok_or_else(|| {
                Error::parse(line_no, format!("unknown terrain `{c}` in column {}", col + 1))
            })?;
            blocked.push(b);
        }
        rows += 1;
    }
    if rows != height {
        return Err(Error::parse(
            header_end + rows + 1,
            format!("found {rows} rows, expected {height}"),
        ));
    }
    GridMap::from_blocked(width, height, blocked)
}

/// Move offsets of the `2^k` neighborhood: `k = 2` is the four cardinal
/// moves, and each further level inserts the mediant between every pair of
/// angularly adjacent offsets, doubling the count.
pub fn neighborhood_offsets(k: u32) -> Result<Vec<(i64, i64)>> {
    if !(2..=5).contains(&k) {
        return Err(Error::Config(format!("neighborhood level k must be in 2..=5, got {k}")));
    }
    let mut quadrant = vec![(1i64, 0i64), (0, 1)];
    for _ in 2..k {
        let mut refined = Vec::with_capacity(quadrant.len() * 2 - 1);
        for w in quadrant.windows(2) {
            refined.push(w[0]);
            refined.push((w[0].0 + w[1].0, w[0].1 + w[1].1));
        }
        refined.push(*quadrant.last().unwrap());
        quadrant = refined;
    }
    quadrant.pop();
    let mut all = Vec::with_capacity(quadrant.len() * 4);
    let mut current = quadrant;
    for _ in 0..4 {
        all.extend(current.iter().copied());
        current = current.into_iter().map(|(x, y)| (-y, x)).collect();
    }
    Ok(all)
}

fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn point_box_distance(p: Point2, lo: Point2, hi: Point2) -> f64 {
    let dx = (lo.x - p.x).max(0.0).max(p.x - hi.x);
    let dy = (lo.y - p.y).max(0.0).max(p.y - hi.y);
    (dx * dx + dy * dy).sqrt()
}

/// Liang-Barsky clip of segment `ab` against the closed box.
fn segment_hits_box(a: Point2, b: Point2, lo: Point2, hi: Point2) -> bool {
    let d = b - a;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [
        (-d.x, a.x - lo.x),
        (d.x, hi.x - a.x),
        (-d.y, a.y - lo.y),
        (d.y, hi.y - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

pub(crate) fn segment_box_distance(a: Point2, b: Point2, lo: Point2, hi: Point2) -> f64 {
    if segment_hits_box(a, b, lo, hi) {
        return 0.0;
    }
    let corners = [lo, Point2::new(hi.x, lo.y), hi, Point2::new(lo.x, hi.y)];
    let from_endpoints = point_box_distance(a, lo, hi).min(point_box_distance(b, lo, hi));
    corners
        .iter()
        .map(|c| point_segment_distance(*c, a, b))
        .fold(from_endpoints, f64::min)
}

/// True if a disk of `radius` can sweep from `a` to `b` without touching a
/// blocked cell or the map border.
pub fn edge_valid(grid: &GridMap, a: Point2, b: Point2, radius: f64) -> bool {
    let (w, h) = (grid.width() as f64, grid.height() as f64);
    let (min_x, max_x) = (a.x.min(b.x), a.x.max(b.x));
    let (min_y, max_y) = (a.y.min(b.y), a.y.max(b.y));
    if min_x <= radius || min_y <= radius || max_x >= w - radius || max_y >= h - radius {
        return false;
    }
    let x0 = (min_x - radius).floor().max(0.0) as usize;
    let y0 = (min_y - radius).floor().max(0.0) as usize;
    let x1 = ((max_x + radius).floor() as usize).min(grid.width() - 1);
    let y1 = ((max_y + radius).floor() as usize).min(grid.height() - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            if !grid.is_blocked(Cell::new(x, y)) {
                continue;
            }
            let lo = Point2::new(x as f64, y as f64);
            let hi = Point2::new(x as f64 + 1.0, y as f64 + 1.0);
            if segment_box_distance(a, b, lo, hi) <= radius {
                return false;
            }
        }
    }
    true
}

/// Builds the `2^k`-neighborhood graph of a grid. Every passable cell
/// becomes a vertex (row-major order); an edge is kept only when a disk of
/// `radius` can traverse it.
pub fn build_graph(grid: &GridMap, k: u32, radius: f64) -> Result<Graph> {
    let offsets = neighborhood_offsets(k)?;
    if !(radius > 0.0 && radius < 0.5) {
        return Err(Error::Config(format!("grid agent radius must be in (0, 0.5), got {radius}")));
    }
    let mut graph = Graph::new();
    for cell in grid.passable_cells() {
        graph.add_cell_vertex(cell, cell.center());
    }
    for u in graph.vertices().collect::<Vec<_>>() {
        let cell = graph.cell_of(u).expect("grid vertex");
        for &(dx, dy) in &offsets {
            let (nx, ny) = (cell.x as i64 + dx, cell.y as i64 + dy);
            if !grid.in_bounds(nx, ny) {
                continue;
            }
            let target = Cell::new(nx as usize, ny as usize);
            let Some(v) = graph.vertex_at(target) else {
                continue;
            };
            if v < u {
                // Already considered from the other side.
                continue;
            }
            if edge_valid(grid, cell.center(), target.center(), radius) {
                graph.add_edge(u, v)?;
            }
        }
    }
    Ok(graph)
}
