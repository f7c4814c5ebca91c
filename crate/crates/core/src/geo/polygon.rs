//! Planar polygon primitives: rings, areas, convex clipping and exact
//! intersection areas between arbitrary (possibly non-convex, holed) regions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn empty() -> Self {
        BBox {
            min: Point::new(f64::INFINITY, f64::INFINITY),
            max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn of_points<'a>(pts: impl IntoIterator<Item = &'a Point>) -> Self {
        let mut b = BBox::empty();
        for p in pts {
            b.expand(*p);
        }
        b
    }

    pub fn expand(&mut self, p: Point) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn union(&self, other: &BBox) -> BBox {
        let mut b = *self;
        b.expand(other.min);
        b.expand(other.max);
        b
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x || self.min.y > self.max.y
    }
}

/// Shoelace signed area; positive for counter-clockwise rings. Accepts open
/// or closed rings.
pub fn ring_signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for k in 0..n {
        let a = ring[k];
        let b = ring[(k + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

/// Area-weighted first moments (Σ A·cx, Σ A·cy) of a ring, signed like its area.
fn ring_moments(ring: &[Point]) -> (f64, f64) {
    let n = ring.len();
    let (mut mx, mut my) = (0.0, 0.0);
    for k in 0..n {
        let a = ring[k];
        let b = ring[(k + 1) % n];
        let cross = a.x * b.y - b.x * a.y;
        mx += (a.x + b.x) * cross;
        my += (a.y + b.y) * cross;
    }
    (mx / 6.0, my / 6.0)
}

fn open(ring: &[Point]) -> &[Point] {
    if ring.len() > 1 && ring[0] == ring[ring.len() - 1] {
        &ring[..ring.len() - 1]
    } else {
        ring
    }
}

fn close(mut ring: Vec<Point>) -> Vec<Point> {
    if let (Some(first), Some(last)) = (ring.first().copied(), ring.last().copied()) {
        if first != last {
            ring.push(first);
        }
    }
    ring
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(p: Point, a: Point, b: Point, eps: f64) -> bool {
    let len_sq = a.dist_sq(b);
    if len_sq == 0.0 {
        return p.dist_sq(a) <= eps * eps;
    }
    let c = cross(a, b, p);
    if c * c > eps * eps * len_sq {
        return false;
    }
    let t = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / len_sq;
    let tol = eps / len_sq.sqrt();
    (-tol..=1.0 + tol).contains(&t)
}

/// Winding number of `ring` around `p`, or `None` if `p` lies on the ring
/// (within `eps`).
fn winding(ring: &[Point], p: Point, eps: f64) -> Option<i32> {
    let ring = open(ring);
    let n = ring.len();
    let mut w = 0;
    for k in 0..n {
        let a = ring[k];
        let b = ring[(k + 1) % n];
        if on_segment(p, a, b, eps) {
            return None;
        }
        if a.y <= p.y {
            if b.y > p.y && cross(a, b, p) > 0.0 {
                w += 1;
            }
        } else if b.y <= p.y && cross(a, b, p) < 0.0 {
            w -= 1;
        }
    }
    Some(w)
}

/// Closed containment test for a region given as signed rings: points on any
/// ring count as inside.
pub fn rings_contain(rings: &[Vec<Point>], p: Point, eps: f64) -> bool {
    let mut total = 0;
    for r in rings {
        match winding(r, p, eps) {
            None => return true,
            Some(w) => total += w,
        }
    }
    total != 0
}

/// A simple polygon with holes, stored with closed rings; the exterior is
/// counter-clockwise and holes are clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub exterior: Vec<Point>,
    pub holes: Vec<Vec<Point>>,
}

impl Polygon {
    /// Validates and normalizes the rings (closure and orientation).
    pub fn new(exterior: Vec<Point>, holes: Vec<Vec<Point>>) -> Result<Self> {
        let exterior = normalize_ring(exterior, true)?;
        let holes = holes
            .into_iter()
            .map(|h| normalize_ring(h, false))
            .collect::<Result<Vec<_>>>()?;
        if ring_self_intersects(&exterior) {
            return Err(Error::InvalidPolygon("exterior ring self-intersects".into()));
        }
        let eps = 1e-12 * BBox::of_points(&exterior).width().max(1.0);
        for (k, h) in holes.iter().enumerate() {
            let inside = open(h).iter().all(|p| match winding(&exterior, *p, eps) {
                Some(w) => w != 0,
                None => false,
            });
            if !inside {
                return Err(Error::InvalidPolygon(format!(
                    "hole {k} is not strictly inside the exterior ring"
                )));
            }
        }
        Ok(Polygon { exterior, holes })
    }

    /// Builds without validation; rings are still closed and oriented.
    pub fn from_rings_unchecked(exterior: Vec<Point>, holes: Vec<Vec<Point>>) -> Self {
        let mut exterior = close(exterior);
        if ring_signed_area(open(&exterior)) < 0.0 {
            exterior.reverse();
        }
        let holes = holes
            .into_iter()
            .map(|h| {
                let mut h = close(h);
                if ring_signed_area(open(&h)) > 0.0 {
                    h.reverse();
                }
                h
            })
            .collect();
        Polygon { exterior, holes }
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Polygon::from_rings_unchecked(
            vec![
                Point::new(x0, y0),
                Point::new(x1, y0),
                Point::new(x1, y1),
                Point::new(x0, y1),
            ],
            vec![],
        )
    }

    pub fn rings(&self) -> impl Iterator<Item = &Vec<Point>> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }

    pub fn area(&self) -> f64 {
        self.rings().map(|r| ring_signed_area(open(r))).sum()
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(&self.exterior)
    }

    pub fn contains(&self, p: Point) -> bool {
        let eps = 1e-12 * self.bbox().width().max(1.0);
        rings_contain(&self.rings().cloned().collect::<Vec<_>>(), p, eps)
    }

    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Polygon {
        Polygon {
            exterior: self.exterior.iter().map(|p| f(*p)).collect(),
            holes: self
                .holes
                .iter()
                .map(|h| h.iter().map(|p| f(*p)).collect())
                .collect(),
        }
    }
}

fn normalize_ring(ring: Vec<Point>, ccw: bool) -> Result<Vec<Point>> {
    if ring.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::InvalidPolygon("non-finite coordinate".into()));
    }
    let mut ring = close(ring);
    if ring.len() < 4 {
        return Err(Error::InvalidPolygon(format!(
            "ring has {} points; at least 3 distinct are required",
            ring.len()
        )));
    }
    let a = ring_signed_area(open(&ring));
    if a == 0.0 {
        return Err(Error::InvalidPolygon("ring has zero area".into()));
    }
    if (a > 0.0) != ccw {
        ring.reverse();
    }
    Ok(ring)
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    // collinear overlap or touching at an interior point
    let touch = |p: Point, s0: Point, s1: Point, o: f64| {
        o == 0.0
            && p.x >= s0.x.min(s1.x)
            && p.x <= s0.x.max(s1.x)
            && p.y >= s0.y.min(s1.y)
            && p.y <= s0.y.max(s1.y)
    };
    touch(a, c, d, d1) || touch(b, c, d, d2) || touch(c, a, b, d3) || touch(d, a, b, d4)
}

/// True if any two non-adjacent edges of the closed ring intersect. Edges are
/// swept in x order so only overlapping spans are compared.
pub fn ring_self_intersects(ring: &[Point]) -> bool {
    let pts = open(ring);
    let n = pts.len();
    if n < 4 {
        return false;
    }
    let mut edges: Vec<(f64, f64, usize)> = (0..n)
        .map(|k| {
            let a = pts[k];
            let b = pts[(k + 1) % n];
            (a.x.min(b.x), a.x.max(b.x), k)
        })
        .collect();
    edges.sort_by(|u, v| u.0.total_cmp(&v.0));
    for (ia, &(_, amax, ka)) in edges.iter().enumerate() {
        for &(bmin, _, kb) in &edges[ia + 1..] {
            if bmin > amax {
                break;
            }
            let diff = ka.abs_diff(kb);
            if diff == 1 || diff == n - 1 {
                continue;
            }
            if segments_cross(pts[ka], pts[(ka + 1) % n], pts[kb], pts[(kb + 1) % n]) {
                return true;
            }
        }
    }
    false
}

/// Sutherland–Hodgman clip of an arbitrary ring against a convex,
/// counter-clockwise clip ring. Degenerate bridge edges may appear in the
/// output, but its winding function equals the subject's restricted to the
/// clip window, so signed areas and containment remain exact.
pub fn clip_ring_convex(subject: &[Point], clip: &[Point]) -> Vec<Point> {
    let clip = open(clip);
    let mut output: Vec<Point> = open(subject).to_vec();
    let m = clip.len();
    for k in 0..m {
        if output.is_empty() {
            break;
        }
        let a = clip[k];
        let b = clip[(k + 1) % m];
        let input = std::mem::take(&mut output);
        let n = input.len();
        for j in 0..n {
            let cur = input[j];
            let prev = input[(j + n - 1) % n];
            let cur_in = cross(a, b, cur) >= 0.0;
            let prev_in = cross(a, b, prev) >= 0.0;
            if cur_in {
                if !prev_in {
                    output.push(line_intersection(prev, cur, a, b));
                }
                output.push(cur);
            } else if prev_in {
                output.push(line_intersection(prev, cur, a, b));
            }
        }
    }
    output
}

fn line_intersection(p: Point, q: Point, a: Point, b: Point) -> Point {
    let cp = cross(a, b, p);
    let cq = cross(a, b, q);
    let t = cp / (cp - cq);
    Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y))
}

/// Signed-ring region. Summing each ring's winding number reproduces the
/// region's indicator function almost everywhere.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub rings: Vec<Vec<Point>>,
}

impl Region {
    pub fn from_polygons(polys: &[Polygon]) -> Self {
        Region {
            rings: polys.iter().flat_map(|p| p.rings().cloned()).collect(),
        }
    }

    pub fn area(&self) -> f64 {
        self.rings.iter().map(|r| ring_signed_area(open(r))).sum()
    }

    /// Area centroid; falls back to the vertex mean for zero-area input.
    pub fn centroid(&self) -> Point {
        let a = self.area();
        if a.abs() > 0.0 {
            let (mut mx, mut my) = (0.0, 0.0);
            for r in &self.rings {
                let (x, y) = ring_moments(open(r));
                mx += x;
                my += y;
            }
            Point::new(mx / a, my / a)
        } else {
            let pts: Vec<&Point> = self.rings.iter().flat_map(|r| open(r).iter()).collect();
            let n = pts.len().max(1) as f64;
            Point::new(
                pts.iter().map(|p| p.x).sum::<f64>() / n,
                pts.iter().map(|p| p.y).sum::<f64>() / n,
            )
        }
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(self.rings.iter().flat_map(|r| r.iter()))
    }

    pub fn clip_convex(&self, window: &[Point]) -> Region {
        Region {
            rings: self
                .rings
                .iter()
                .map(|r| clip_ring_convex(r, window))
                .filter(|r| r.len() >= 3)
                .map(close)
                .collect(),
        }
    }

    pub fn contains(&self, p: Point, eps: f64) -> bool {
        rings_contain(&self.rings, p, eps)
    }
}

fn fan_triangles(ring: &[Point]) -> impl Iterator<Item = [Point; 3]> + '_ {
    let r = open(ring);
    let n = r.len();
    (1..n.saturating_sub(1)).map(move |k| [r[0], r[k], r[k + 1]])
}

fn triangle_overlap_area(t: &[Point; 3], u: &[Point; 3]) -> f64 {
    let mut clip = u.to_vec();
    if ring_signed_area(&clip) < 0.0 {
        clip.reverse();
    }
    let mut subj = t.to_vec();
    if ring_signed_area(&subj) < 0.0 {
        subj.reverse();
    }
    ring_signed_area(&clip_ring_convex(&subj, &clip))
}

/// Exact area of the intersection of two signed-ring regions.
///
/// Each ring is decomposed into a signed triangle fan; the indicator of a
/// region equals the signed sum of its fan triangles' indicators, so the
/// overlap integral splits into pairwise convex triangle intersections.
pub fn intersection_area(a: &Region, b: &Region) -> f64 {
    let bb = b.bbox();
    let mut total = 0.0;
    for ra in &a.rings {
        for ta in fan_triangles(ra) {
            let sa = ring_signed_area(&ta);
            if sa == 0.0 {
                continue;
            }
            let tb_box = BBox::of_points(&ta);
            if !tb_box.intersects(&bb) {
                continue;
            }
            for rb in &b.rings {
                for tb in fan_triangles(rb) {
                    let sb = ring_signed_area(&tb);
                    if sb == 0.0 || !BBox::of_points(&tb).intersects(&tb_box) {
                        continue;
                    }
                    total += sa.signum() * sb.signum() * triangle_overlap_area(&ta, &tb);
                }
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x0: f64, y0: f64, s: f64) -> Polygon {
        Polygon::rect(x0, y0, x0 + s, y0 + s)
    }

    #[test]
    fn ring_closure_and_orientation_normalized() {
        let p = Polygon::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(0.0, 1.0),
                Point::new(1.0, 1.0),
                Point::new(1.0, 0.0),
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(p.exterior.first(), p.exterior.last());
        assert!(ring_signed_area(&p.exterior) > 0.0);
        assert!((p.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bowtie_rejected() {
        let err = Polygon::new(
            vec![
                Point::new(0.0, 0.0),
                Point::new(1.0, 1.0),
                Point::new(1.0, 0.0),
                Point::new(0.0, 1.0),
            ],
            vec![],
        );
        assert!(matches!(err, Err(Error::InvalidPolygon(_))));
    }

    #[test]
    fn hole_outside_rejected() {
        let err = Polygon::new(
            sq(0.0, 0.0, 1.0).exterior,
            vec![sq(2.0, 2.0, 0.5).exterior],
        );
        assert!(matches!(err, Err(Error::InvalidPolygon(_))));
    }

    #[test]
    fn holed_area_and_containment() {
        let p = Polygon::new(sq(0.0, 0.0, 4.0).exterior, vec![sq(1.0, 1.0, 2.0).exterior]).unwrap();
        assert!((p.area() - 12.0).abs() < 1e-12);
        assert!(p.contains(Point::new(0.5, 0.5)));
        assert!(!p.contains(Point::new(2.0, 2.0)));
        // boundary points are inside
        assert!(p.contains(Point::new(1.0, 2.0)));
    }

    #[test]
    fn clip_concave_against_square() {
        // L shape covering [0,2]x[0,1] ∪ [0,1]x[1,2]
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
        let window = sq(0.5, 0.5, 1.0).exterior;
        let clipped = Region::from_polygons(&[l]).clip_convex(&window);
        assert!((clipped.area() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn intersection_area_of_overlapping_squares() {
        let a = Region::from_polygons(&[sq(0.0, 0.0, 2.0)]);
        let b = Region::from_polygons(&[sq(1.0, 1.0, 2.0)]);
        assert!((intersection_area(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn intersection_area_with_holes_and_concavity() {
        let holed = Polygon::new(sq(0.0, 0.0, 4.0).exterior, vec![sq(1.0, 1.0, 2.0).exterior]).unwrap();
        let strip = Polygon::rect(0.0, 1.5, 4.0, 2.5);
        let got = intersection_area(&Region::from_polygons(&[holed]), &Region::from_polygons(&[strip]));
        // strip area 4, minus the 2x1 part over the hole
        assert!((got - 2.0).abs() < 1e-12, "{got}");
    }

    #[test]
    fn centroid_of_rect() {
        let r = Region::from_polygons(&[Polygon::rect(1.0, 2.0, 3.0, 6.0)]);
        let c = r.centroid();
        assert!((c.x - 2.0).abs() < 1e-12 && (c.y - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_matches_bruteforce_on_star() {
        // a five-point star drawn with crossing strokes must be flagged
        let pts: Vec<Point> = (0..5)
            .map(|k| {
                let t = std::f64::consts::PI * 2.0 * (2 * k) as f64 / 5.0;
                Point::new(t.cos(), t.sin())
            })
            .collect();
        assert!(ring_self_intersects(&close(pts)));
    }
}
