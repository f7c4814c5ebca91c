//! Beat designs: the assignment of atoms to beats, the balance objective,
//! and the contiguity and compactness checks.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geo::geojson;
use crate::geo::{AtomGrid, Point};

/// Dense assignment a_i ∈ 0..K with every beat non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BeatDesign {
    assignment: Vec<usize>,
    k: usize,
}

impl BeatDesign {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        let mut seen = vec![false; k];
        for (atom, &beat) in assignment.iter().enumerate() {
            if beat >= k {
                return Err(Error::BeatOutOfRange { atom, beat, k });
            }
            seen[beat] = true;
        }
        if let Some(empty) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!("beat {empty} has no atoms")));
        }
        Ok(BeatDesign { assignment, k })
    }

    /// K inferred as max + 1.
    pub fn from_assignment(assignment: Vec<usize>) -> Result<Self> {
        let k = assignment.iter().max().map_or(0, |m| m + 1);
        Self::new(assignment, k)
    }

    pub fn single(n_atoms: usize) -> Self {
        BeatDesign {
            assignment: vec![0; n_atoms],
            k: 1,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_atoms(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn beat_of(&self, atom: usize) -> usize {
        self.assignment[atom]
    }

    /// Member atoms of each beat, ascending.
    pub fn beats(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &b) in self.assignment.iter().enumerate() {
            out[b].push(i);
        }
        out
    }

    pub fn members(&self, beat: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == beat).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &b in &self.assignment {
            s[b] += 1;
        }
        s
    }

    pub fn check_dims(&self, n_atoms: usize) -> Result<()> {
        if self.assignment.len() == n_atoms {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "design covers {} atoms, expected {n_atoms}",
                self.assignment.len()
            )))
        }
    }

    /// Copy with one atom reassigned. The source beat must keep a member.
    pub fn with_move(&self, atom: usize, to: usize) -> BeatDesign {
        let mut a = self.assignment.clone();
        a[atom] = to;
        BeatDesign { assignment: a, k: self.k }
    }

    pub(crate) fn set(&mut self, atom: usize, beat: usize) {
        self.assignment[atom] = beat;
    }

    pub(crate) fn push_beat(&mut self, atoms: &[usize]) -> usize {
        let id = self.k;
        self.k += 1;
        for &i in atoms {
            self.assignment[i] = id;
        }
        id
    }

    /// Relabels beats in order of their smallest atom id.
    pub fn canonical(&self) -> BeatDesign {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let assignment = self
            .assignment
            .iter()
            .map(|&b| {
                if map[b] == usize::MAX {
                    map[b] = next;
                    next += 1;
                }
                map[b]
            })
            .collect();
        BeatDesign { assignment, k: self.k }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["atom_id", "beat_id"])?;
        for (i, b) in self.assignment.iter().enumerate() {
            wtr.write_record([i.to_string(), b.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("<design csv>", e))?;
        Ok(())
    }

    /// Reads `atom_id,beat_id`; atom ids must be exactly 0..I in any order.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let bad = |m: String| Error::Parse {
            path: "<design csv>".into(),
            message: m,
        };
        let headers = rdr.headers()?.clone();
        let ia = headers.iter().position(|h| h == "atom_id").ok_or_else(|| bad("missing atom_id".into()))?;
        let ib = headers.iter().position(|h| h == "beat_id").ok_or_else(|| bad("missing beat_id".into()))?;
        let mut pairs = BTreeMap::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |c: usize, what: &str| -> Result<usize> {
                rec.get(c)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(format!("line {}: bad {what}", k + 2)))
            };
            let (a, b) = (parse(ia, "atom_id")?, parse(ib, "beat_id")?);
            if pairs.insert(a, b).is_some() {
                return Err(bad(format!("atom {a} listed twice")));
            }
        }
        let n = pairs.len();
        if pairs.keys().next_back().is_some_and(|&m| m != n - 1) {
            return Err(bad("atom ids are not 0..I".into()));
        }
        Self::from_assignment(pairs.into_values().collect())
    }
}

/// Per-beat sums of one workload row.
pub fn beat_loads(design: &BeatDesign, w: &[f64]) -> Result<Vec<f64>> {
    design.check_dims(w.len())?;
    let mut out = vec![0.0; design.k()];
    for (i, &b) in design.assignment().iter().enumerate() {
        out[b] += w[i];
    }
    Ok(out)
}

/// Sum of squared deviations from the mean.
pub fn z_of_loads(loads: &[f64]) -> f64 {
    if loads.is_empty() {
        return 0.0;
    }
    let mean = loads.iter().sum::<f64>() / loads.len() as f64;
    loads.iter().map(|x| (x - mean) * (x - mean)).sum()
}

/// Z / K, the reported "variance".
pub fn variance_of_loads(loads: &[f64]) -> f64 {
    if loads.is_empty() {
        0.0
    } else {
        z_of_loads(loads) / loads.len() as f64
    }
}

pub fn objective_z(design: &BeatDesign, w: &[f64]) -> Result<f64> {
    Ok(z_of_loads(&beat_loads(design, w)?))
}

/// Z averaged over several workload rows (e.g. a forecast horizon).
pub fn objective_z_rows(design: &BeatDesign, rows: &[Vec<f64>]) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::InvalidInput("no workload rows".into()));
    }
    let mut total = 0.0;
    for r in rows {
        total += objective_z(design, r)?;
    }
    Ok(total / rows.len() as f64)
}

/// Whether `members` induce a connected subgraph. Empty sets count as
/// connected.
pub fn is_connected_set(grid: &AtomGrid, members: &[usize], in_set: impl Fn(usize) -> bool) -> bool {
    let Some(&start) = members.first() else { return true };
    let mut seen: HashMap<usize, ()> = HashMap::with_capacity(members.len());
    seen.insert(start, ());
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &v in grid.neighbors(u) {
            if in_set(v) && !seen.contains_key(&v) {
                seen.insert(v, ());
                queue.push_back(v);
            }
        }
    }
    seen.len() == members.len()
}

/// First beat whose atoms are not connected, if any.
pub fn first_disconnected_beat(design: &BeatDesign, grid: &AtomGrid) -> Option<usize> {
    let a = design.assignment();
    design
        .beats()
        .iter()
        .enumerate()
        .find(|(k, m)| !is_connected_set(grid, m, |v| a[v] == *k))
        .map(|(k, _)| k)
}

pub fn is_contiguous(design: &BeatDesign, grid: &AtomGrid) -> bool {
    first_disconnected_beat(design, grid).is_none()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompactnessParams {
    /// Cap on squared diameter (sq mi).
    pub c1: f64,
    pub c1_enabled: bool,
    /// Cap on squared diameter over area.
    pub c2: f64,
    pub c2_enabled: bool,
}

impl Default for CompactnessParams {
    fn default() -> Self {
        CompactnessParams {
            c1: f64::INFINITY,
            c1_enabled: false,
            c2: 64.0,
            c2_enabled: true,
        }
    }
}

impl CompactnessParams {
    pub fn disabled() -> Self {
        CompactnessParams {
            c1_enabled: false,
            c2_enabled: false,
            ..Default::default()
        }
    }

    pub fn any_enabled(&self) -> bool {
        self.c1_enabled || self.c2_enabled
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.c1_enabled && !(self.c1 > 0.0) {
            v.push(format!("compactness c1 must be > 0, got {}", self.c1));
        }
        if self.c2_enabled && !(self.c2 > 0.0) {
            v.push(format!("compactness c2 must be > 0, got {}", self.c2));
        }
        v
    }

    pub fn feasible(&self, diam_sq: f64, area: f64) -> bool {
        (!self.c1_enabled || diam_sq <= self.c1) && (!self.c2_enabled || diam_sq <= self.c2 * area)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatCompactness {
    pub diam_sq: f64,
    pub area: f64,
    pub feasible: bool,
}

pub fn diam_sq(grid: &AtomGrid, members: &[usize]) -> f64 {
    let mut best = 0.0f64;
    for (a, &i) in members.iter().enumerate() {
        let ci = grid.atoms[i].centroid;
        for &j in &members[a + 1..] {
            best = best.max(ci.dist_sq(grid.atoms[j].centroid));
        }
    }
    best
}

pub fn compactness(design: &BeatDesign, grid: &AtomGrid, params: &CompactnessParams) -> Vec<BeatCompactness> {
    design
        .beats()
        .iter()
        .map(|m| {
            let d = diam_sq(grid, m);
            let area: f64 = m.iter().map(|&i| grid.atoms[i].area).sum();
            BeatCompactness {
                diam_sq: d,
                area,
                feasible: params.feasible(d, area),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MoveProposal {
    pub atom: usize,
    pub from: usize,
    pub to: usize,
}

/// Whether atom `i` may leave its beat: the beat keeps at least `min_size`
/// atoms and stays connected.
pub fn can_leave(design: &BeatDesign, grid: &AtomGrid, i: usize, size_of_from: usize, min_size: usize) -> bool {
    if size_of_from <= min_size.max(1) {
        return false;
    }
    let a = design.assignment();
    let from = a[i];
    let same: Vec<usize> = grid.neighbors(i).iter().copied().filter(|&v| a[v] == from).collect();
    if same.len() <= 1 {
        return !same.is_empty() || size_of_from == 1;
    }
    // BFS inside the beat without i must reach every member.
    let mut seen = HashMap::with_capacity(size_of_from);
    seen.insert(same[0], ());
    let mut queue = VecDeque::from([same[0]]);
    while let Some(u) = queue.pop_front() {
        for &v in grid.neighbors(u) {
            if v != i && a[v] == from && !seen.contains_key(&v) {
                seen.insert(v, ());
                queue.push_back(v);
            }
        }
    }
    seen.len() == size_of_from - 1
}

/// Target beats reachable from atom `i` by a single boundary move.
pub fn move_targets(design: &BeatDesign, grid: &AtomGrid, i: usize) -> Vec<usize> {
    let a = design.assignment();
    let mut t: Vec<usize> = grid.neighbors(i).iter().map(|&v| a[v]).filter(|&b| b != a[i]).collect();
    t.sort_unstable();
    t.dedup();
    t
}

/// All single-atom moves that keep every beat connected and at least
/// `min_beat_size` large, ordered by (atom, to).
pub fn boundary_moves(design: &BeatDesign, grid: &AtomGrid, min_beat_size: usize) -> Vec<MoveProposal> {
    let sizes = design.sizes();
    let mut out = Vec::new();
    for i in 0..design.n_atoms() {
        let targets = move_targets(design, grid, i);
        if targets.is_empty() {
            continue;
        }
        let from = design.beat_of(i);
        if !can_leave(design, grid, i, sizes[from], min_beat_size) {
            continue;
        }
        out.extend(targets.into_iter().map(|to| MoveProposal { atom: i, from, to }));
    }
    out
}

/// GeoJSON of the design: one feature per atom with `beat_id`, then one
/// dissolved outline per beat with `kind: "beat"`.
pub fn design_geojson(design: &BeatDesign, grid: &AtomGrid) -> Result<Value> {
    design.check_dims(grid.len())?;
    let mut features = match geojson::atoms_collection(grid, |i, props| {
        props.insert("beat_id".into(), json!(design.beat_of(i)));
    }) {
        Value::Object(mut o) => match o.remove("features") {
            Some(Value::Array(f)) => f,
            _ => Vec::new(),
        },
        _ => Vec::new(),
    };
    for (k, members) in design.beats().iter().enumerate() {
        let polys = dissolve(grid, members);
        let mut props = Map::new();
        props.insert("kind".into(), json!("beat"));
        props.insert("beat_id".into(), json!(k));
        props.insert("n_atoms".into(), json!(members.len()));
        features.push(geojson::feature(geojson::multipolygon_json(&polys, &grid.projection), props));
    }
    Ok(geojson::feature_collection(features, &grid.projection))
}

/// Union of atom cells as polygons, by cancelling shared edges.
pub fn dissolve(grid: &AtomGrid, members: &[usize]) -> Vec<crate::geo::Polygon> {
    let q = 1e-9 * grid.side_length;
    let key = |p: Point| ((p.x / q).round() as i64, (p.y / q).round() as i64);
    let mut pts: HashMap<(i64, i64), Point> = HashMap::new();
    let mut edges: Vec<((i64, i64), (i64, i64))> = Vec::new();
    for &i in members {
        for poly in &grid.atoms[i].cell {
            for ring in poly.rings() {
                let n = ring.len() - 1;
                for e in 0..n {
                    let (a, b) = (key(ring[e]), key(ring[e + 1]));
                    if a != b {
                        pts.entry(a).or_insert(ring[e]);
                        pts.entry(b).or_insert(ring[e + 1]);
                        edges.push((a, b));
                    }
                }
            }
        }
    }
    // Split edges at vertices lying on them so partial overlaps cancel.
    let verts: Vec<(i64, i64)> = pts.keys().copied().collect();
    let mut split: Vec<((i64, i64), (i64, i64))> = Vec::with_capacity(edges.len());
    for (a, b) in edges {
        let (pa, pb) = (pts[&a], pts[&b]);
        let (dx, dy) = (pb.x - pa.x, pb.y - pa.y);
        let len2 = dx * dx + dy * dy;
        let mut on: Vec<(f64, (i64, i64))> = verts
            .iter()
            .filter(|&&v| v != a && v != b)
            .filter_map(|&v| {
                let p = pts[&v];
                let t = ((p.x - pa.x) * dx + (p.y - pa.y) * dy) / len2;
                let cross = (p.x - pa.x) * dy - (p.y - pa.y) * dx;
                (t > 0.0 && t < 1.0 && cross.abs() <= 4.0 * q * len2.sqrt()).then_some((t, v))
            })
            .collect();
        on.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut prev = a;
        for (_, v) in on {
            split.push((prev, v));
            prev = v;
        }
        split.push((prev, b));
    }
    let mut count: HashMap<((i64, i64), (i64, i64)), i64> = HashMap::new();
    for &(a, b) in &split {
        *count.entry((a, b)).or_default() += 1;
    }
    let mut remaining: Vec<((i64, i64), (i64, i64))> = Vec::new();
    for (&(a, b), &c) in &count {
        let back = count.get(&(b, a)).copied().unwrap_or(0);
        for _ in 0..(c - back).max(0) {
            remaining.push((a, b));
        }
    }
    remaining.sort_unstable();
    let mut out_edges: BTreeMap<(i64, i64), Vec<(i64, i64)>> = BTreeMap::new();
    for (a, b) in remaining {
        out_edges.entry(a).or_default().push(b);
    }
    let mut rings: Vec<Vec<Point>> = Vec::new();
    while let Some((&start, _)) = out_edges.iter().find(|(_, v)| !v.is_empty()) {
        let mut ring = vec![pts[&start]];
        let mut cur = start;
        loop {
            let Some(next) = out_edges.get_mut(&cur).and_then(|v| v.pop()) else { break };
            ring.push(pts[&next]);
            cur = next;
            if cur == start {
                break;
            }
        }
        if ring.len() >= 4 && cur == start {
            let ring = drop_collinear(ring);
            if ring.len() >= 4 {
                rings.push(ring);
            }
        }
        out_edges.retain(|_, v| !v.is_empty());
    }
    let (mut shells, holes): (Vec<_>, Vec<_>) = rings
        .into_iter()
        .partition(|r| crate::geo::polygon::ring_signed_area(r) > 0.0);
    shells.sort_by(|a, b| {
        crate::geo::polygon::ring_signed_area(a).total_cmp(&crate::geo::polygon::ring_signed_area(b))
    });
    let mut polys: Vec<(Vec<Point>, Vec<Vec<Point>>)> = shells.into_iter().map(|s| (s, Vec::new())).collect();
    for h in holes {
        let probe = Point::new((h[0].x + h[1].x) / 2.0, (h[0].y + h[1].y) / 2.0);
        // smallest enclosing shell
        if let Some(p) = polys
            .iter_mut()
            .find(|(s, _)| crate::geo::polygon::rings_contain(std::slice::from_ref(s), probe, 0.0))
        {
            p.1.push(h);
        }
    }
    polys
        .into_iter()
        .map(|(s, h)| crate::geo::Polygon::from_rings_unchecked(s, h))
        .collect()
}

/// Removes vertices lying on the line through their neighbours; input and
/// output rings are closed.
fn drop_collinear(ring: Vec<Point>) -> Vec<Point> {
    let mut pts: Vec<Point> = ring[..ring.len() - 1].to_vec();
    let scale = pts.iter().fold(0.0f64, |m, p| m.max(p.x.abs()).max(p.y.abs())).max(1.0);
    loop {
        let n = pts.len();
        if n < 3 {
            break;
        }
        let redundant = (0..n).find(|&k| {
            let (a, b, c) = (pts[(k + n - 1) % n], pts[k], pts[(k + 1) % n]);
            ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs() <= 1e-12 * scale * scale
        });
        match redundant {
            Some(k) => {
                pts.remove(k);
            }
            None => break,
        }
    }
    if let Some(&first) = pts.first() {
        pts.push(first);
    }
    pts
}
