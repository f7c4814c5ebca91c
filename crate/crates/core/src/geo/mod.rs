//! The atomized city: a uniform cell grid clipped to the boundary, with the
//! adjacency graph between surviving cells.

pub mod geojson;
pub mod polygon;
pub mod projection;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use polygon::{BBox, Point, Polygon, Region};
pub use projection::Projection;

/// Cells whose clipped area falls below this fraction of a full cell are
/// dropped as slivers.
pub const INCLUSION_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    #[default]
    SquareRook,
    SquareQueen,
    Hex,
}

impl GridKind {
    pub fn is_square(self) -> bool {
        matches!(self, GridKind::SquareRook | GridKind::SquareQueen)
    }
}

impl std::str::FromStr for GridKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square-rook" => Ok(GridKind::SquareRook),
            "square-queen" => Ok(GridKind::SquareQueen),
            "hex" => Ok(GridKind::Hex),
            other => Err(Error::InvalidInput(format!("unknown grid kind {other:?}"))),
        }
    }
}

/// Position of an atom in its lattice: (row, col) for square grids, axial
/// (r, q) stored as (row, col) for hex grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridCoord {
    pub row: i64,
    pub col: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub id: usize,
    pub cell: Vec<Polygon>,
    pub centroid: Point,
    pub area: f64,
    pub grid_coord: GridCoord,
}

impl Atom {
    pub fn region(&self) -> Region {
        Region::from_polygons(&self.cell)
    }
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

const ROOK: [(i64, i64); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];
const DIAG: [(i64, i64); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];
// axial (dr, dq)
const HEX: [(i64, i64); 6] = [(0, 1), (0, -1), (1, 0), (-1, 0), (-1, 1), (1, -1)];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomGrid {
    pub atoms: Vec<Atom>,
    pub side_length: f64,
    pub grid_kind: GridKind,
    /// Undirected edges (i, j) with i < j, sorted.
    pub adjacency: Vec<(usize, usize)>,
    pub projection: Projection,
    /// Lattice origin in projected miles.
    pub origin: Point,
    /// Total boundary area and the part lost to dropped slivers.
    pub boundary_area: f64,
    pub dropped_area: f64,
    #[serde(skip)]
    neighbors: Vec<Vec<usize>>,
    #[serde(skip)]
    index: HashMap<GridCoord, usize>,
}

impl AtomGrid {
    /// Assembles a grid from parts, rebuilding the lookup tables.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        atoms: Vec<Atom>,
        side_length: f64,
        grid_kind: GridKind,
        adjacency: Vec<(usize, usize)>,
        projection: Projection,
        origin: Point,
        boundary_area: f64,
        dropped_area: f64,
    ) -> Self {
        let mut g = AtomGrid {
            atoms,
            side_length,
            grid_kind,
            adjacency,
            projection,
            origin,
            boundary_area,
            dropped_area,
            neighbors: Vec::new(),
            index: HashMap::new(),
        };
        g.rebuild();
        g
    }

    fn rebuild(&mut self) {
        let mut nb = vec![Vec::new(); self.atoms.len()];
        for &(i, j) in &self.adjacency {
            nb[i].push(j);
            nb[j].push(i);
        }
        for l in &mut nb {
            l.sort_unstable();
        }
        self.neighbors = nb;
        self.index = self
            .atoms
            .iter()
            .map(|a| (a.grid_coord, a.id))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn atom_at(&self, coord: GridCoord) -> Option<usize> {
        self.index.get(&coord).copied()
    }

    pub fn check_id(&self, i: usize) -> Result<()> {
        if i < self.atoms.len() {
            Ok(())
        } else {
            Err(Error::AtomOutOfRange {
                id: i,
                len: self.atoms.len(),
            })
        }
    }

    /// Squared centroid distance l_ij, computed on demand.
    pub fn centroid_dist_sq(&self, i: usize, j: usize) -> Result<f64> {
        self.check_id(i)?;
        self.check_id(j)?;
        Ok(self.atoms[i].centroid.dist_sq(self.atoms[j].centroid))
    }

    pub fn total_area(&self) -> f64 {
        self.atoms.iter().map(|a| a.area).sum()
    }

    /// Connected-component label per atom, labels dense in order of the
    /// smallest member id.
    pub fn components(&self) -> Vec<usize> {
        let n = self.len();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &v in &self.neighbors[u] {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Full (unclipped) cell outline for a lattice coordinate.
    pub fn cell_outline(&self, coord: GridCoord) -> Vec<Point> {
        cell_outline(self.grid_kind, self.origin, self.side_length, coord)
    }

    pub fn cell_center(&self, coord: GridCoord) -> Point {
        cell_center(self.grid_kind, self.origin, self.side_length, coord)
    }

    /// Atoms whose full cell box intersects `bb`, in id order.
    pub fn atoms_in_bbox(&self, bb: &BBox) -> Vec<usize> {
        let s = self.side_length;
        let o = self.origin;
        let mut out = Vec::new();
        if self.grid_kind.is_square() {
            let c0 = ((bb.min.x - o.x) / s).floor() as i64 - 1;
            let c1 = ((bb.max.x - o.x) / s).floor() as i64 + 1;
            let r0 = ((bb.min.y - o.y) / s).floor() as i64 - 1;
            let r1 = ((bb.max.y - o.y) / s).floor() as i64 + 1;
            if (c1 - c0).saturating_mul(r1 - r0) > 4 * self.atoms.len() as i64 {
                out.extend(0..self.atoms.len());
            } else {
                for row in r0..=r1 {
                    for col in c0..=c1 {
                        if let Some(id) = self.atom_at(GridCoord { row, col }) {
                            out.push(id);
                        }
                    }
                }
            }
        } else {
            out.extend(0..self.atoms.len());
        }
        out.retain(|&id| {
            let cell = BBox::of_points(&self.cell_outline(self.atoms[id].grid_coord));
            cell.intersects(bb)
        });
        out.sort_unstable();
        out
    }

    /// The atom containing `p` (projected miles). Points on a shared edge go
    /// to the atom with the smallest id.
    pub fn locate(&self, p: Point) -> Option<usize> {
        let s = self.side_length;
        let eps = 1e-12 * s.max(1.0);
        let candidates: Vec<GridCoord> = if self.grid_kind.is_square() {
            let c = ((p.x - self.origin.x) / s).floor() as i64;
            let r = ((p.y - self.origin.y) / s).floor() as i64;
            let mut v = Vec::with_capacity(9);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    v.push(GridCoord {
                        row: r + dr,
                        col: c + dc,
                    });
                }
            }
            v
        } else {
            let base = hex_round(self.origin, s, p);
            std::iter::once(base)
                .chain(HEX.iter().map(|&(dr, dq)| GridCoord {
                    row: base.row + dr,
                    col: base.col + dq,
                }))
                .collect()
        };
        candidates
            .into_iter()
            .filter_map(|c| self.atom_at(c))
            .filter(|&id| {
                let a = &self.atoms[id];
                let outline = self.cell_outline(a.grid_coord);
                let bb = BBox::of_points(&outline);
                bb.contains(p) && a.region().contains(p, eps)
            })
            .min()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(f), self)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let mut g: AtomGrid = serde_json::from_str(text)?;
        for (k, a) in g.atoms.iter().enumerate() {
            if a.id != k {
                return Err(Error::InvalidInput(format!(
                    "atom ids must be dense; found {} at position {k}",
                    a.id
                )));
            }
        }
        for &(i, j) in &g.adjacency {
            if i >= j || j >= g.atoms.len() {
                return Err(Error::InvalidInput(format!("bad adjacency edge ({i}, {j})")));
            }
        }
        g.rebuild();
        Ok(g)
    }
}

fn cell_center(kind: GridKind, origin: Point, s: f64, c: GridCoord) -> Point {
    if kind.is_square() {
        Point::new(
            origin.x + (c.col as f64 + 0.5) * s,
            origin.y + (c.row as f64 + 0.5) * s,
        )
    } else {
        Point::new(
            origin.x + s * SQRT3 * (c.col as f64 + c.row as f64 / 2.0),
            origin.y + s * 1.5 * c.row as f64,
        )
    }
}

/// Counter-clockwise open outline of a lattice cell.
fn cell_outline(kind: GridKind, origin: Point, s: f64, c: GridCoord) -> Vec<Point> {
    if kind.is_square() {
        let x0 = origin.x + c.col as f64 * s;
        let y0 = origin.y + c.row as f64 * s;
        vec![
            Point::new(x0, y0),
            Point::new(x0 + s, y0),
            Point::new(x0 + s, y0 + s),
            Point::new(x0, y0 + s),
        ]
    } else {
        // pointy-top hexagon, vertices at 30° + 60°k
        let ctr = cell_center(kind, origin, s, c);
        let half = s * SQRT3 / 2.0;
        vec![
            Point::new(ctr.x + half, ctr.y - s / 2.0),
            Point::new(ctr.x + half, ctr.y + s / 2.0),
            Point::new(ctr.x, ctr.y + s),
            Point::new(ctr.x - half, ctr.y + s / 2.0),
            Point::new(ctr.x - half, ctr.y - s / 2.0),
            Point::new(ctr.x, ctr.y - s),
        ]
    }
}

fn hex_round(origin: Point, s: f64, p: Point) -> GridCoord {
    let x = (p.x - origin.x) / s;
    let y = (p.y - origin.y) / s;
    let r = y / 1.5;
    let q = x / SQRT3 - r / 2.0;
    // cube rounding
    let (cx, cz) = (q, r);
    let cy = -cx - cz;
    let (mut rx, ry, mut rz) = (cx.round(), cy.round(), cz.round());
    let (dx, dy, dz) = ((rx - cx).abs(), (ry - cy).abs(), (rz - cz).abs());
    if dx > dy && dx > dz {
        rx = -ry - rz;
    } else if dy <= dz {
        rz = -rx - ry;
    }
    GridCoord {
        row: rz as i64,
        col: rx as i64,
    }
}

/// Grids the boundary (already in projected miles) and clips every cell to it.
pub fn atomize(
    boundary: &[Polygon],
    side_length: f64,
    grid_kind: GridKind,
    projection: Projection,
) -> Result<AtomGrid> {
    if boundary.is_empty() {
        return Err(Error::InvalidInput("boundary has no polygons".into()));
    }
    if !(side_length > 0.0 && side_length.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "side length must be positive, got {side_length}"
        )));
    }
    let region = Region::from_polygons(boundary);
    let boundary_area = region.area();
    if boundary_area.abs() <= 0.0 {
        return Err(Error::DegenerateBoundary);
    }
    let bb = region.bbox();
    if side_length > bb.width() && side_length > bb.height() {
        return Err(Error::NoAtoms(format!(
            "side length {side_length} exceeds boundary extent {:.6} x {:.6}",
            bb.width(),
            bb.height()
        )));
    }
    let s = side_length;
    // hex lattices put the origin cell's bottom vertex on the bbox floor
    let origin = if grid_kind.is_square() {
        bb.min
    } else {
        Point::new(bb.min.x, bb.min.y + s)
    };
    let coords: Vec<GridCoord> = if grid_kind.is_square() {
        let ncols = ((bb.width() / s) - 1e-9).ceil().max(1.0) as i64;
        let nrows = ((bb.height() / s) - 1e-9).ceil().max(1.0) as i64;
        (0..nrows)
            .flat_map(|row| (0..ncols).map(move |col| GridCoord { row, col }))
            .collect()
    } else {
        let rmin = (-1.0f64 / 1.5).floor() as i64 - 1;
        let rmax = ((bb.height() + s) / (1.5 * s)).ceil() as i64 + 1;
        let mut v = Vec::new();
        for row in rmin..=rmax {
            let half = row as f64 / 2.0;
            let q0 = (-1.0 - half).floor() as i64 - 1;
            let q1 = (bb.width() / (SQRT3 * s) + 1.0 - half).ceil() as i64 + 1;
            for col in q0..=q1 {
                v.push(GridCoord { row, col });
            }
        }
        v
    };

    let full_cell_area = if grid_kind.is_square() {
        s * s
    } else {
        1.5 * SQRT3 * s * s
    };
    let poly_boxes: Vec<BBox> = boundary.iter().map(|p| p.bbox()).collect();
    let mut atoms = Vec::new();
    let mut dropped_area = 0.0;
    for coord in coords {
        let window = cell_outline(grid_kind, origin, s, coord);
        let wbox = BBox::of_points(&window);
        let mut pieces = Vec::new();
        let mut area = 0.0;
        for (poly, pbox) in boundary.iter().zip(&poly_boxes) {
            if !pbox.intersects(&wbox) {
                continue;
            }
            let ext = polygon::clip_ring_convex(&poly.exterior, &window);
            if ext.len() < 3 || polygon::ring_signed_area(&ext) == 0.0 {
                continue;
            }
            let holes: Vec<Vec<Point>> = poly
                .holes
                .iter()
                .map(|h| polygon::clip_ring_convex(h, &window))
                .filter(|h| h.len() >= 3 && polygon::ring_signed_area(h) != 0.0)
                .collect();
            let piece = Polygon::from_rings_unchecked(ext, holes);
            let a = piece.area();
            if a > 0.0 {
                area += a;
                pieces.push(piece);
            }
        }
        if area <= 0.0 {
            continue;
        }
        if area < INCLUSION_THRESHOLD * full_cell_area {
            dropped_area += area;
            continue;
        }
        let centroid = Region::from_polygons(&pieces).centroid();
        atoms.push(Atom {
            id: 0,
            cell: pieces,
            centroid,
            area,
            grid_coord: coord,
        });
    }
    if atoms.is_empty() {
        return Err(Error::NoAtoms("no cell intersects the boundary".into()));
    }
    // row-major scan order
    atoms.sort_by_key(|a| (a.grid_coord.row, a.grid_coord.col));
    for (k, a) in atoms.iter_mut().enumerate() {
        a.id = k;
    }
    let adjacency = build_adjacency_at(&atoms, grid_kind, origin, s);
    Ok(AtomGrid::from_parts(
        atoms,
        side_length,
        grid_kind,
        adjacency,
        projection,
        origin,
        boundary_area,
        dropped_area,
    ))
}

/// Rebuilds the edge set for atoms produced by one [`atomize`] call.
pub fn build_adjacency(grid: &AtomGrid) -> Vec<(usize, usize)> {
    build_adjacency_at(&grid.atoms, grid.grid_kind, grid.origin, grid.side_length)
}

fn build_adjacency_at(
    atoms: &[Atom],
    kind: GridKind,
    origin: Point,
    s: f64,
) -> Vec<(usize, usize)> {
    let index: HashMap<GridCoord, usize> = atoms.iter().map(|a| (a.grid_coord, a.id)).collect();
    let regions: Vec<Region> = atoms.iter().map(|a| a.region()).collect();
    let offsets: Vec<((i64, i64), bool)> = match kind {
        GridKind::SquareRook => ROOK.iter().map(|&o| (o, false)).collect(),
        GridKind::SquareQueen => ROOK
            .iter()
            .map(|&o| (o, false))
            .chain(DIAG.iter().map(|&o| (o, true)))
            .collect(),
        GridKind::Hex => HEX.iter().map(|&o| (o, false)).collect(),
    };
    let mut edges = Vec::new();
    for a in atoms {
        for &((dr, dc), corner) in &offsets {
            let nc = GridCoord {
                row: a.grid_coord.row + dr,
                col: a.grid_coord.col + dc,
            };
            let Some(&b) = index.get(&nc) else { continue };
            if b <= a.id {
                continue;
            }
            let ca = cell_center(kind, origin, s, a.grid_coord);
            let cb = cell_center(kind, origin, s, nc);
            let touching = if corner {
                share_corner(&regions[a.id], &regions[b], ca, cb, s)
            } else {
                share_side(&regions[a.id], &regions[b], ca, cb, s)
            };
            if touching {
                edges.push((a.id, b));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Offset used to probe just inside each cell next to a shared side.
const PROBE: f64 = 1e-7;

/// Whether two clipped cells share a side segment of positive length. The
/// side is split at every ring vertex lying on it and each piece is probed
/// from both sides.
fn share_side(ra: &Region, rb: &Region, ca: Point, cb: Point, s: f64) -> bool {
    let mid = Point::new((ca.x + cb.x) / 2.0, (ca.y + cb.y) / 2.0);
    let (dx, dy) = (cb.x - ca.x, cb.y - ca.y);
    let len = (dx * dx + dy * dy).sqrt();
    let (nx, ny) = (dx / len, dy / len);
    let (px, py) = (-ny, nx);
    let p0 = Point::new(mid.x - px * s / 2.0, mid.y - py * s / 2.0);
    let eps = 1e-9 * s;
    let mut ts = vec![0.0, 1.0];
    for r in ra.rings.iter().chain(rb.rings.iter()) {
        for v in r {
            let (vx, vy) = (v.x - p0.x, v.y - p0.y);
            let along = (vx * px + vy * py) / s;
            let off = vx * nx + vy * ny;
            if off.abs() <= eps && along > 0.0 && along < 1.0 {
                ts.push(along);
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let delta = PROBE * s;
    let tol = 1e-14 * s.max(1.0);
    ts.windows(2).any(|w| {
        if w[1] - w[0] < 1e-9 {
            return false;
        }
        let t = (w[0] + w[1]) / 2.0 * s;
        let m = Point::new(p0.x + px * t, p0.y + py * t);
        let in_a = Point::new(m.x - nx * delta, m.y - ny * delta);
        let in_b = Point::new(m.x + nx * delta, m.y + ny * delta);
        ra.contains(in_a, tol) && rb.contains(in_b, tol)
    })
}

fn share_corner(ra: &Region, rb: &Region, ca: Point, cb: Point, s: f64) -> bool {
    let corner = Point::new((ca.x + cb.x) / 2.0, (ca.y + cb.y) / 2.0);
    let delta = PROBE * s;
    let tol = 1e-14 * s.max(1.0);
    let toward = |c: Point| {
        let (dx, dy) = (c.x - corner.x, c.y - corner.y);
        let l = (dx * dx + dy * dy).sqrt();
        Point::new(corner.x + dx / l * delta, corner.y + dy / l * delta)
    };
    ra.contains(toward(ca), tol) && rb.contains(toward(cb), tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_grid(n: usize, kind: GridKind) -> AtomGrid {
        let b = Polygon::rect(0.0, 0.0, n as f64, n as f64);
        atomize(&[b], 1.0, kind, Projection::PlanarMiles).unwrap()
    }

    #[test]
    fn unit_square_half_mile_gives_four_quarter_atoms() {
        let b = Polygon::rect(0.0, 0.0, 1.0, 1.0);
        let g = atomize(&[b], 0.5, GridKind::SquareRook, Projection::PlanarMiles).unwrap();
        assert_eq!(g.len(), 4);
        for a in &g.atoms {
            assert!((a.area - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn l_shape_gives_path() {
        let l = Polygon::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(2.0, 0.0),
                Point::new(2.0, 1.0),
                Point::new(1.0, 1.0),
                Point::new(1.0, 2.0),
                Point::new(0.0, 2.0),
            ],
            vec![],
        )
        .unwrap();
        let g = atomize(&[l], 1.0, GridKind::SquareRook, Projection::PlanarMiles).unwrap();
        assert_eq!(g.len(), 3);
        // ids row-major: (0,0)=0, (0,1)=1, (1,0)=2
        assert_eq!(g.adjacency, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn rook_and_queen_edge_counts() {
        assert_eq!(unit_square_grid(2, GridKind::SquareRook).adjacency.len(), 4);
        assert_eq!(unit_square_grid(2, GridKind::SquareQueen).adjacency.len(), 6);
    }

    #[test]
    fn seven_hex_flower_has_twelve_edges() {
        let s = 1.0;
        let origin = Point::new(0.0, 0.0);
        let center = GridCoord { row: 0, col: 0 };
        let cells: Vec<Polygon> = std::iter::once(center)
            .chain(HEX.iter().map(|&(dr, dq)| GridCoord { row: dr, col: dq }))
            .map(|c| Polygon::from_rings_unchecked(cell_outline(GridKind::Hex, origin, s, c), vec![]))
            .collect();
        let g = atomize(&cells, s, GridKind::Hex, Projection::PlanarMiles).unwrap();
        assert_eq!(g.len(), 7);
        assert_eq!(g.adjacency.len(), 12);
        let hex_area = 1.5 * SQRT3;
        assert!((g.total_area() - 7.0 * hex_area).abs() < 1e-9);
    }

    #[test]
    fn degenerate_and_oversized_inputs() {
        let b = Polygon::rect(0.0, 0.0, 1.0, 1.0);
        let err = atomize(&[b], 5.0, GridKind::SquareRook, Projection::PlanarMiles);
        assert!(matches!(err, Err(Error::NoAtoms(_))));
        let flat = Polygon::from_rings_unchecked(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)],
            vec![],
        );
        let err = atomize(&[flat], 0.5, GridKind::SquareRook, Projection::PlanarMiles);
        assert!(matches!(err, Err(Error::DegenerateBoundary)));
    }

    #[test]
    fn centroid_distances() {
        let g = unit_square_grid(5, GridKind::SquareRook);
        assert_eq!(g.centroid_dist_sq(3, 3).unwrap(), 0.0);
        assert!((g.centroid_dist_sq(0, 1).unwrap() - 1.0).abs() < 1e-12);
        let a = g.atom_at(GridCoord { row: 0, col: 0 }).unwrap();
        let b = g.atom_at(GridCoord { row: 4, col: 3 }).unwrap();
        assert!((g.centroid_dist_sq(a, b).unwrap() - 25.0).abs() < 1e-12);
        assert!(matches!(g.centroid_dist_sq(0, 99), Err(Error::AtomOutOfRange { .. })));
    }

    #[test]
    fn notch_separates_grid_neighbours() {
        // a slit along x = 1 from y = 0 up to y = 1 cuts the rook edge
        // between (0,0) and (0,1) but not between (1,0) and (1,1)
        let b = Polygon::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(0.999_99, 0.0),
                Point::new(0.999_99, 1.0),
                Point::new(1.000_01, 1.0),
                Point::new(1.000_01, 0.0),
                Point::new(2.0, 0.0),
                Point::new(2.0, 2.0),
                Point::new(0.0, 2.0),
            ],
            vec![],
        )
        .unwrap();
        let g = atomize(&[b], 1.0, GridKind::SquareRook, Projection::PlanarMiles).unwrap();
        assert_eq!(g.len(), 4);
        assert!(!g.adjacency.contains(&(0, 1)));
        assert!(g.adjacency.contains(&(2, 3)));
    }

    #[test]
    fn locate_tie_break_prefers_smaller_id() {
        let g = unit_square_grid(2, GridKind::SquareRook);
        assert_eq!(g.locate(Point::new(1.0, 0.5)), Some(0));
        assert_eq!(g.locate(Point::new(1.0, 1.0)), Some(0));
        assert_eq!(g.locate(Point::new(1.5, 1.5)), Some(3));
        assert_eq!(g.locate(Point::new(2.5, 1.5)), None);
    }

    #[test]
    fn locate_on_hex_grid() {
        let b = Polygon::rect(0.0, 0.0, 4.0, 4.0);
        let g = atomize(&[b], 0.5, GridKind::Hex, Projection::PlanarMiles).unwrap();
        for a in &g.atoms {
            assert_eq!(g.locate(a.centroid), Some(a.id));
        }
        assert!((g.total_area() + g.dropped_area - 16.0).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip_rebuilds_index() {
        let g = unit_square_grid(3, GridKind::SquareQueen);
        let text = serde_json::to_string(&g).unwrap();
        let h = AtomGrid::from_json_str(&text).unwrap();
        assert_eq!(h.adjacency, g.adjacency);
        assert_eq!(h.neighbors(4), g.neighbors(4));
        assert_eq!(h.atom_at(GridCoord { row: 2, col: 2 }), Some(8));
    }
}
