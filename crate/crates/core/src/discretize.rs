//! Area discretization: polygons with no-fly holes become a lattice of square
//! cells of width `W_k = 2 h tan(F / 2)`, each carrying evenly spaced
//! perimeter samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::CartPoint;

/// FAA-derived operating bounds used for mission validation.
pub const MIN_HEIGHT_M: f64 = 25.0;
pub const MAX_HEIGHT_M: f64 = 100.0;
pub const MIN_VELOCITY_MPS: f64 = 2.0;
pub const MAX_VELOCITY_MPS: f64 = 10.0;
/// Legal ceiling for small unmanned aircraft (400 ft).
pub const FAA_ALTITUDE_CAP_M: f64 = 121.92;

pub const DEFAULT_POINTS_PER_EDGE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavParams {
    pub height_m: f64,
    pub fov_deg: f64,
    pub velocity_mps: f64,
}

impl UavParams {
    /// Checks the hard constraints and returns a warning for every soft
    /// operating bound that is violated. With `strict`, soft violations are
    /// errors instead.
    pub fn validate(&self, strict: bool) -> Result<Vec<String>> {
        if !(self.fov_deg.is_finite() && self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::InvalidInput(format!(
                "field of view {} deg must be in (0, 180)",
                self.fov_deg
            )));
        }
        if !(self.height_m.is_finite() && self.height_m >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "height {} m must be >= 0",
                self.height_m
            )));
        }
        if !(self.velocity_mps.is_finite() && self.velocity_mps > 0.0) {
            return Err(Error::InvalidInput(format!(
                "velocity {} m/s must be > 0",
                self.velocity_mps
            )));
        }
        let mut warnings = Vec::new();
        if !(MIN_HEIGHT_M..=MAX_HEIGHT_M).contains(&self.height_m) {
            let cap = if self.height_m > FAA_ALTITUDE_CAP_M {
                format!(" (above the {FAA_ALTITUDE_CAP_M} m legal ceiling)")
            } else {
                String::new()
            };
            warnings.push(format!(
                "height {} m outside operating bounds [{MIN_HEIGHT_M}, {MAX_HEIGHT_M}]{cap}",
                self.height_m
            ));
        }
        if !(MIN_VELOCITY_MPS..=MAX_VELOCITY_MPS).contains(&self.velocity_mps) {
            warnings.push(format!(
                "velocity {} m/s outside operating bounds [{MIN_VELOCITY_MPS}, {MAX_VELOCITY_MPS}]",
                self.velocity_mps
            ));
        }
        if strict && !warnings.is_empty() {
            return Err(Error::Validation(warnings.join("; ")));
        }
        Ok(warnings)
    }
}

/// Footprint width seen from height `h` with downward field of view `F`.
pub fn cell_width(params: &UavParams) -> Result<f64> {
    let UavParams {
        height_m, fov_deg, ..
    } = *params;
    if !(fov_deg.is_finite() && fov_deg > 0.0 && fov_deg < 180.0) {
        return Err(Error::InvalidInput(format!(
            "field of view {fov_deg} deg must be in (0, 180)"
        )));
    }
    if !(height_m.is_finite() && height_m >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "height {height_m} m must be >= 0"
        )));
    }
    Ok(2.0 * height_m * (fov_deg.to_radians() / 2.0).tan())
}

/// Signed area of a ring (positive for counter-clockwise).
pub fn signed_area(ring: &[CartPoint]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let (p, q) = (ring[i], ring[(i + 1) % n]);
            p.x * q.y - q.x * p.y
        })
        .sum::<f64>()
        / 2.0
}

fn orient(a: CartPoint, b: CartPoint, c: CartPoint) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_cross(a: CartPoint, b: CartPoint, c: CartPoint, d: CartPoint) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d))
        || (d2 == 0.0 && on_segment(b, c, d))
        || (d3 == 0.0 && on_segment(c, a, b))
        || (d4 == 0.0 && on_segment(d, a, b))
}

fn on_segment(p: CartPoint, a: CartPoint, b: CartPoint) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn is_simple(ring: &[CartPoint]) -> bool {
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 1)..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

fn clean_ring(mut ring: Vec<CartPoint>, what: &str) -> Result<Vec<CartPoint>> {
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    if ring.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "{what} has {} vertices, need at least 3",
            ring.len()
        )));
    }
    if ring.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "{what} has a non-finite vertex"
        )));
    }
    if !is_simple(&ring) {
        return Err(Error::InvalidInput(format!("{what} is self-intersecting")));
    }
    Ok(ring)
}

/// Boundary ring plus no-fly holes, all in the local plane. Rings are stored
/// open (the closing vertex is implied); the boundary is counter-clockwise and
/// holes clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonSet {
    boundary: Vec<CartPoint>,
    holes: Vec<Vec<CartPoint>>,
}

impl PolygonSet {
    pub fn new(boundary: Vec<CartPoint>, holes: Vec<Vec<CartPoint>>) -> Result<Self> {
        let mut boundary = clean_ring(boundary, "boundary")?;
        if signed_area(&boundary) < 0.0 {
            boundary.reverse();
        }
        let holes = holes
            .into_iter()
            .enumerate()
            .map(|(i, h)| {
                let mut h = clean_ring(h, &format!("no-fly zone {i}"))?;
                if signed_area(&h) > 0.0 {
                    h.reverse();
                }
                Ok(h)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PolygonSet { boundary, holes })
    }

    pub fn boundary(&self) -> &[CartPoint] {
        &self.boundary
    }

    pub fn holes(&self) -> &[Vec<CartPoint>] {
        &self.holes
    }

    /// Area enclosed by the boundary, holes included.
    pub fn area(&self) -> f64 {
        signed_area(&self.boundary).abs()
    }

    /// Boundary area minus the no-fly holes.
    pub fn net_area(&self) -> f64 {
        self.area() - self.holes.iter().map(|h| signed_area(h).abs()).sum::<f64>()
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.boundary.len();
        (0..n)
            .map(|i| self.boundary[i].dist(&self.boundary[(i + 1) % n]))
            .sum()
    }

    /// `(min, max)` corners of the boundary's bounding box.
    pub fn bounds(&self) -> (CartPoint, CartPoint) {
        let mut lo = CartPoint::new(f64::INFINITY, f64::INFINITY);
        let mut hi = CartPoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.boundary {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// True when `pt` is strictly inside the boundary and strictly outside
    /// every hole.
    pub fn is_free(&self, pt: CartPoint) -> bool {
        !on_ring_edge(pt, &self.boundary)
            && crossing_test(pt, &self.boundary)
            && self
                .holes
                .iter()
                .all(|h| !on_ring_edge(pt, h) && !crossing_test(pt, h))
    }
}

const EDGE_EPS_M: f64 = 1e-9;

fn on_ring_edge(pt: CartPoint, ring: &[CartPoint]) -> bool {
    let n = ring.len();
    (0..n).any(|i| {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        let (abx, aby) = (b.x - a.x, b.y - a.y);
        let len_sq = abx * abx + aby * aby;
        let t = if len_sq == 0.0 {
            0.0
        } else {
            (((pt.x - a.x) * abx + (pt.y - a.y) * aby) / len_sq).clamp(0.0, 1.0)
        };
        let proj = CartPoint::new(a.x + t * abx, a.y + t * aby);
        proj.dist(&pt) <= EDGE_EPS_M
    })
}

fn crossing_test(pt: CartPoint, ring: &[CartPoint]) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > pt.y) != (b.y > pt.y) {
            let x_cross = a.x + (pt.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if pt.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Even-odd point-in-polygon test. Points on an edge count as inside.
pub fn point_in_polygon(pt: CartPoint, ring: &[CartPoint]) -> Result<bool> {
    if ring.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "ring has {} vertices, need at least 3",
            ring.len()
        )));
    }
    Ok(on_ring_edge(pt, ring) || crossing_test(pt, ring))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Free,
    Blocked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Row-major lattice index, `row * cols + col`.
    pub id: usize,
    pub row: usize,
    pub col: usize,
    pub center: CartPoint,
    pub perimeter_points: Vec<CartPoint>,
    pub status: CellStatus,
}

impl Cell {
    pub fn is_free(&self) -> bool {
        self.status == CellStatus::Free
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub cells: Vec<Cell>,
    pub cell_width_m: f64,
    /// Lower-left corner of the lattice.
    pub origin: CartPoint,
    pub rows: usize,
    pub cols: usize,
    pub points_per_edge: usize,
}

impl Grid {
    pub fn free_cells(&self) -> impl Iterator<Item = &Cell> + '_ {
        self.cells.iter().filter(|c| c.is_free())
    }

    pub fn n_free(&self) -> usize {
        self.free_cells().count()
    }

    pub fn cell(&self, id: usize) -> Option<&Cell> {
        self.cells.get(id)
    }

    pub fn free_area(&self) -> f64 {
        self.n_free() as f64 * self.cell_width_m * self.cell_width_m
    }

    /// Perimeter samples of every free cell, flattened in cell-id order, with
    /// the owning cell id alongside each point.
    pub fn perimeter_samples(&self) -> (Vec<CartPoint>, Vec<usize>) {
        let mut points = Vec::new();
        let mut owners = Vec::new();
        for c in self.free_cells() {
            points.extend_from_slice(&c.perimeter_points);
            owners.extend(std::iter::repeat_n(c.id, c.perimeter_points.len()));
        }
        (points, owners)
    }
}

/// `4 * per_edge` points spaced evenly around the square of width `width`
/// centred on `center`, counter-clockwise from the lower-left corner.
pub fn square_perimeter(center: CartPoint, width: f64, per_edge: usize) -> Vec<CartPoint> {
    let h = width / 2.0;
    let corners = [
        CartPoint::new(center.x - h, center.y - h),
        CartPoint::new(center.x + h, center.y - h),
        CartPoint::new(center.x + h, center.y + h),
        CartPoint::new(center.x - h, center.y + h),
    ];
    let mut out = Vec::with_capacity(4 * per_edge);
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        for k in 0..per_edge {
            let t = k as f64 / per_edge as f64;
            out.push(CartPoint::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
        }
    }
    out
}

pub fn build_grid(area: &PolygonSet, params: &UavParams, points_per_edge: usize) -> Result<Grid> {
    build_grid_with_width(area, cell_width(params)?, points_per_edge)
}

/// Same as [`build_grid`] with an explicit cell width.
pub fn build_grid_with_width(
    area: &PolygonSet,
    width: f64,
    points_per_edge: usize,
) -> Result<Grid> {
    if points_per_edge < 2 {
        return Err(Error::InvalidInput(format!(
            "points_per_edge = {points_per_edge}, need at least 2"
        )));
    }
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::EmptyGrid(format!("cell width {width} m")));
    }
    if area.area() < width * width {
        return Err(Error::EmptyGrid(format!(
            "polygon area {:.3} m^2 is smaller than one {width:.3} m cell",
            area.area()
        )));
    }
    let (lo, hi) = area.bounds();
    let cols = (((hi.x - lo.x) / width) - 1e-9).ceil().max(1.0) as usize;
    let rows = (((hi.y - lo.y) / width) - 1e-9).ceil().max(1.0) as usize;

    let mut cells = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        for col in 0..cols {
            let center = CartPoint::new(
                lo.x + (col as f64 + 0.5) * width,
                lo.y + (row as f64 + 0.5) * width,
            );
            let free = area.is_free(center);
            cells.push(Cell {
                id: row * cols + col,
                row,
                col,
                center,
                perimeter_points: if free {
                    square_perimeter(center, width, points_per_edge)
                } else {
                    Vec::new()
                },
                status: if free {
                    CellStatus::Free
                } else {
                    CellStatus::Blocked
                },
            });
        }
    }
    let grid = Grid {
        cells,
        cell_width_m: width,
        origin: lo,
        rows,
        cols,
        points_per_edge,
    };
    if grid.n_free() == 0 {
        return Err(Error::EmptyGrid(
            "no cell center falls inside the area".into(),
        ));
    }
    Ok(grid)
}
