//! Heuristic beat search: greedy splitting of the heaviest beat and
//! simulated annealing over single-atom boundary moves.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{AtomGrid, Point};
use crate::partition::{
    beat_loads, boundary_moves, can_leave, compactness, diam_sq, first_disconnected_beat, objective_z_rows,
    variance_of_loads, BeatDesign, CompactnessParams, MoveProposal,
};

/// Beats above this size seed k-means from a two-sweep approximation of
/// the farthest pair instead of the exact O(n²) scan.
pub const EXACT_FARTHEST_PAIR_LIMIT: usize = 4000;

fn farthest_pair(pts: &[Point]) -> (usize, usize) {
    let n = pts.len();
    if n <= EXACT_FARTHEST_PAIR_LIMIT {
        let mut best = (0, 1, -1.0);
        for a in 0..n {
            for b in a + 1..n {
                let d = pts[a].dist_sq(pts[b]);
                if d > best.2 {
                    best = (a, b, d);
                }
            }
        }
        (best.0, best.1)
    } else {
        let far = |from: usize| {
            (0..n)
                .max_by(|&x, &y| pts[from].dist_sq(pts[x]).total_cmp(&pts[from].dist_sq(pts[y])).then(y.cmp(&x)))
                .expect("non-empty")
        };
        let a = far(0);
        let b = far(a);
        (a.min(b), a.max(b))
    }
}

/// Connected components of `set` (a subset of atoms) in the grid graph;
/// each component sorted, components ordered by smallest member.
fn components_within(grid: &AtomGrid, set: &[usize], mark: &mut [u32], tag: u32) -> Vec<Vec<usize>> {
    for &i in set {
        mark[i] = tag;
    }
    let mut out = Vec::new();
    for &s in set {
        if mark[s] != tag {
            continue;
        }
        mark[s] = tag + 1;
        let mut comp = vec![s];
        let mut k = 0;
        while k < comp.len() {
            let u = comp[k];
            k += 1;
            for &v in grid.neighbors(u) {
                if mark[v] == tag {
                    mark[v] = tag + 1;
                    comp.push(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    for &i in set {
        mark[i] = 0;
    }
    out.sort_by_key(|c| c[0]);
    out
}

/// Splits one beat in two with 2-means on atom centroids, then repairs
/// contiguity by moving stray fragments to the other half. The first
/// returned half contains the beat's smallest atom id.
pub fn kmeans_split(
    grid: &AtomGrid,
    beat: usize,
    members: &[usize],
    weights: Option<&[f64]>,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if members.len() < 2 {
        return Err(Error::Unsplittable(beat));
    }
    let mut members = members.to_vec();
    members.sort_unstable();
    let pts: Vec<Point> = members.iter().map(|&i| grid.atoms[i].centroid).collect();
    let wt = |k: usize| weights.map_or(1.0, |w| w[members[k]].max(0.0));
    let (a, b) = farthest_pair(&pts);
    let mut centers = [pts[a], pts[b]];
    let mut label = vec![usize::MAX; pts.len()];
    for _ in 0..100 {
        let mut next = vec![0usize; pts.len()];
        let mut count = [0usize; 2];
        let mut tied = Vec::new();
        for (k, p) in pts.iter().enumerate() {
            let d0 = p.dist_sq(centers[0]);
            let d1 = p.dist_sq(centers[1]);
            if d0 == d1 {
                tied.push(k);
            } else {
                next[k] = usize::from(d1 < d0);
                count[next[k]] += 1;
            }
        }
        // ties: the smaller cluster, then the one seeded by the smaller id
        for k in tied {
            next[k] = usize::from(count[1] < count[0]);
            count[next[k]] += 1;
        }
        let changed = next != label;
        label = next;
        if !changed {
            break;
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
            for (k, p) in pts.iter().enumerate() {
                if label[k] == c {
                    let w = wt(k);
                    sx += w * p.x;
                    sy += w * p.y;
                    sw += w;
                }
            }
            if sw > 0.0 {
                *center = Point::new(sx / sw, sy / sw);
            }
        }
    }
    if label.iter().all(|&l| l == label[0]) {
        // degenerate (zero weights or coincident points): split at the seeds
        label.iter_mut().for_each(|l| *l = 0);
        label[b] = 1;
    }

    let mut sides: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (k, &l) in label.iter().enumerate() {
        sides[l].push(members[k]);
    }
    let mut mark = vec![0u32; grid.len()];
    loop {
        let comps = [
            components_within(grid, &sides[0], &mut mark, 1),
            components_within(grid, &sides[1], &mut mark, 1),
        ];
        if comps[0].len() <= 1 && comps[1].len() <= 1 {
            break;
        }
        // main component: largest, ties to the smallest member id
        let main = |cs: &Vec<Vec<usize>>| {
            (0..cs.len())
                .max_by(|&x, &y| cs[x].len().cmp(&cs[y].len()).then(cs[y][0].cmp(&cs[x][0])))
                .expect("non-empty side")
        };
        let mains = [main(&comps[0]), main(&comps[1])];
        let (side, frag) = (0..2)
            .flat_map(|s| (0..comps[s].len()).filter(move |&c| c != mains[s]).map(move |c| (s, c)))
            .min_by_key(|&(s, c)| (comps[s][c].len(), comps[s][c][0]))
            .expect("some side has a fragment");
        let moving = &comps[side][frag];
        sides[side].retain(|i| moving.binary_search(i).is_err());
        sides[1 - side].extend_from_slice(moving);
        sides[1 - side].sort_unstable();
    }
    let [mut x, mut y] = sides;
    if y.first() < x.first() {
        std::mem::swap(&mut x, &mut y);
    }
    Ok((x, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GreedyOptions {
    /// Weight k-means centres by atom workload.
    pub workload_weighted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyResult {
    /// Starting design followed by one design per split.
    pub designs: Vec<BeatDesign>,
    /// (K, Z/K) for every design in the sequence.
    pub elbow: Vec<(usize, f64)>,
    /// Set when the heaviest beat could not be split.
    pub stopped: Option<String>,
}

impl GreedyResult {
    pub fn last(&self) -> &BeatDesign {
        self.designs.last().expect("at least the starting design")
    }
}

/// Splits the heaviest beat until there are `k_target` beats. The new half
/// (the one without the beat's smallest atom) becomes beat K.
pub fn greedy_expand(
    design: &BeatDesign,
    grid: &AtomGrid,
    w: &[f64],
    k_target: usize,
    opts: &GreedyOptions,
) -> Result<GreedyResult> {
    design.check_dims(grid.len())?;
    if k_target < design.k() {
        return Err(Error::InvalidInput(format!(
            "target K = {k_target} is below the current K = {}",
            design.k()
        )));
    }
    if k_target > grid.len() {
        return Err(Error::InvalidInput(format!(
            "target K = {k_target} exceeds the number of atoms {}",
            grid.len()
        )));
    }
    let mut cur = design.clone();
    let loads = beat_loads(&cur, w)?;
    let mut out = GreedyResult {
        elbow: vec![(cur.k(), variance_of_loads(&loads))],
        designs: vec![cur.clone()],
        stopped: None,
    };
    while cur.k() < k_target {
        let loads = beat_loads(&cur, w)?;
        let worst = (0..loads.len())
            .max_by(|&a, &b| loads[a].total_cmp(&loads[b]).then(b.cmp(&a)))
            .expect("K >= 1");
        let members = cur.members(worst);
        let weights = opts.workload_weighted.then_some(w);
        let (_, moved) = match kmeans_split(grid, worst, &members, weights) {
            Ok(halves) => halves,
            Err(e) => {
                out.stopped = Some(format!("stopped at K = {}: {e}", cur.k()));
                break;
            }
        };
        cur.push_beat(&moved);
        let loads = beat_loads(&cur, w)?;
        out.elbow.push((cur.k(), variance_of_loads(&loads)));
        out.designs.push(cur.clone());
    }
    Ok(out)
}

/// Metropolis acceptance: 1 for improvements, exp(−ΔZ/T) otherwise.
pub fn accept_prob(z_new: f64, z_old: f64, t: f64) -> f64 {
    if z_new < z_old {
        1.0
    } else {
        (-(z_new - z_old) / t).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealConfig {
    /// Initial temperature, in units of Z.
    pub t0: f64,
    /// Geometric cooling factor; 1 keeps the temperature fixed.
    pub gamma: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Ignore `gamma` and hold T at `t0`.
    pub fixed_t: bool,
    pub compactness: CompactnessParams,
    pub min_beat_size: usize,
    /// Independent chains; chain c uses RNG stream c of `seed`.
    pub chains: usize,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            t0: 1.0,
            gamma: 0.999,
            iterations: 10_000,
            seed: 0,
            fixed_t: false,
            compactness: CompactnessParams::default(),
            min_beat_size: 1,
            chains: 1,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut v = self.compactness.validate();
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            v.push(format!("anneal t0 must be > 0, got {}", self.t0));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            v.push(format!("anneal gamma must be in (0, 1], got {}", self.gamma));
        }
        if self.chains == 0 {
            v.push("anneal chains must be >= 1".into());
        }
        if self.min_beat_size == 0 {
            v.push("min_beat_size must be >= 1".into());
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub z_current: f64,
    pub z_best: f64,
    pub accepted: bool,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub chain: usize,
    pub records: Vec<TraceRecord>,
    pub best: BeatDesign,
    pub best_z: f64,
    /// Set when the chain ran out of feasible moves.
    pub exhausted_at: Option<usize>,
}

impl SearchTrace {
    pub fn acceptance_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.accepted).count() as f64 / self.records.len() as f64
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["chain", "iteration", "z_current", "z_best", "accepted", "temperature"])?;
        for r in &self.records {
            wtr.write_record([
                self.chain.to_string(),
                r.iteration.to_string(),
                r.z_current.to_string(),
                r.z_best.to_string(),
                u8::from(r.accepted).to_string(),
                r.temperature.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<trace csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealResult {
    pub best: BeatDesign,
    pub best_z: f64,
    pub best_chain: usize,
    pub traces: Vec<SearchTrace>,
}

/// Mutable chain state with incremental beat loads.
struct Chain<'a> {
    grid: &'a AtomGrid,
    rows: &'a [Vec<f64>],
    cfg: &'a AnnealConfig,
    design: BeatDesign,
    members: Vec<Vec<usize>>,
    loads: Vec<Vec<f64>>,
    diam: Vec<f64>,
    area: Vec<f64>,
}

impl<'a> Chain<'a> {
    fn new(design: BeatDesign, grid: &'a AtomGrid, rows: &'a [Vec<f64>], cfg: &'a AnnealConfig) -> Result<Self> {
        let members = design.beats();
        let loads = rows.iter().map(|r| beat_loads(&design, r)).collect::<Result<Vec<_>>>()?;
        let comp = compactness(&design, grid, &cfg.compactness);
        Ok(Chain {
            grid,
            rows,
            cfg,
            members,
            loads,
            diam: comp.iter().map(|c| c.diam_sq).collect(),
            area: comp.iter().map(|c| c.area).collect(),
            design,
        })
    }

    fn z(&self) -> f64 {
        self.loads.iter().map(|l| crate::partition::z_of_loads(l)).sum::<f64>() / self.rows.len() as f64
    }

    /// Change in Z if `atom` moves to beat `to`; Z = Σ_k w_k² − T²/K with
    /// T fixed, so only the two touched squares change.
    fn delta(&self, atom: usize, to: usize) -> f64 {
        let from = self.design.beat_of(atom);
        let mut d = 0.0;
        for (r, row) in self.rows.iter().enumerate() {
            let x = row[atom];
            d += 2.0 * x * (self.loads[r][to] - self.loads[r][from] + x);
        }
        d / self.rows.len() as f64
    }

    fn adjacent_to(&self, atom: usize, beat: usize) -> bool {
        let a = self.design.assignment();
        a[atom] != beat && self.grid.neighbors(atom).iter().any(|&v| a[v] == beat)
    }

    /// Compactness after the move, as (diam_from, diam_to) when feasible.
    fn compact_after(&self, atom: usize, to: usize) -> Option<(f64, f64)> {
        let p = &self.cfg.compactness;
        if !p.any_enabled() {
            return Some((0.0, 0.0));
        }
        let from = self.design.beat_of(atom);
        let a = self.grid.atoms[atom].area;
        let c = self.grid.atoms[atom].centroid;
        let d_to = self.members[to]
            .iter()
            .map(|&j| c.dist_sq(self.grid.atoms[j].centroid))
            .fold(self.diam[to], f64::max);
        if !p.feasible(d_to, self.area[to] + a) {
            return None;
        }
        let rest: Vec<usize> = self.members[from].iter().copied().filter(|&j| j != atom).collect();
        let d_from = diam_sq(self.grid, &rest);
        p.feasible(d_from, self.area[from] - a).then_some((d_from, d_to))
    }

    fn valid(&self, atom: usize, to: usize) -> Option<(f64, f64)> {
        let from = self.design.beat_of(atom);
        if !self.adjacent_to(atom, to)
            || !can_leave(&self.design, self.grid, atom, self.members[from].len(), self.cfg.min_beat_size)
        {
            return None;
        }
        self.compact_after(atom, to)
    }

    fn apply(&mut self, m: MoveProposal, diam: (f64, f64)) {
        for (r, row) in self.rows.iter().enumerate() {
            self.loads[r][m.from] -= row[m.atom];
            self.loads[r][m.to] += row[m.atom];
        }
        let a = self.grid.atoms[m.atom].area;
        self.area[m.from] -= a;
        self.area[m.to] += a;
        if self.cfg.compactness.any_enabled() {
            self.diam[m.from] = diam.0;
            self.diam[m.to] = diam.1;
        }
        self.members[m.from].retain(|&j| j != m.atom);
        let pos = self.members[m.to].partition_point(|&j| j < m.atom);
        self.members[m.to].insert(pos, m.atom);
        self.design.set(m.atom, m.to);
    }

    /// A uniformly drawn feasible move, or None when none exists.
    fn draw(&self, rng: &mut ChaCha8Rng) -> Option<(MoveProposal, (f64, f64))> {
        let (n, k) = (self.design.n_atoms(), self.design.k());
        // Rejection sampling over (atom, beat) pairs is uniform over the
        // feasible set; fall back to enumeration if that set looks tiny.
        let budget = 64 * n * k.max(2);
        for _ in 0..budget.min(200_000) {
            let atom = rng.random_range(0..n);
            let to = rng.random_range(0..k);
            if let Some(d) = self.valid(atom, to) {
                let from = self.design.beat_of(atom);
                return Some((MoveProposal { atom, from, to }, d));
            }
        }
        let all: Vec<(MoveProposal, (f64, f64))> = boundary_moves(&self.design, self.grid, self.cfg.min_beat_size)
            .into_iter()
            .filter_map(|m| self.compact_after(m.atom, m.to).map(|d| (m, d)))
            .collect();
        if all.is_empty() {
            None
        } else {
            Some(all[rng.random_range(0..all.len())])
        }
    }
}

fn check_start(initial: &BeatDesign, grid: &AtomGrid, rows: &[Vec<f64>], cfg: &AnnealConfig) -> Result<()> {
    initial.check_dims(grid.len())?;
    if rows.is_empty() {
        return Err(Error::InvalidInput("no workload rows for the objective".into()));
    }
    let problems = cfg.validate();
    if !problems.is_empty() {
        return Err(Error::InvalidInput(problems.join("; ")));
    }
    if let Some(k) = first_disconnected_beat(initial, grid) {
        return Err(Error::InvalidInput(format!("initial design: beat {k} is not contiguous")));
    }
    if let Some(k) = compactness(initial, grid, &cfg.compactness).iter().position(|c| !c.feasible) {
        return Err(Error::InvalidInput(format!("initial design: beat {k} violates compactness")));
    }
    Ok(())
}

fn run_chain(
    initial: &BeatDesign,
    grid: &AtomGrid,
    rows: &[Vec<f64>],
    cfg: &AnnealConfig,
    chain: usize,
) -> Result<SearchTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain as u64);
    let mut st = Chain::new(initial.clone(), grid, rows, cfg)?;
    let mut z = st.z();
    let mut best = (st.design.clone(), z);
    let mut t = cfg.t0;
    let mut records = Vec::with_capacity(cfg.iterations);
    let mut exhausted_at = None;
    for it in 0..cfg.iterations {
        let Some((m, diam)) = st.draw(&mut rng) else {
            exhausted_at = Some(it);
            break;
        };
        let dz = st.delta(m.atom, m.to);
        let u: f64 = rng.random();
        let accepted = u < accept_prob(z + dz, z, t);
        if accepted {
            st.apply(m, diam);
            z = st.z();
            if z < best.1 {
                best = (st.design.clone(), z);
            }
        }
        records.push(TraceRecord {
            iteration: it,
            z_current: z,
            z_best: best.1,
            accepted,
            temperature: t,
        });
        if !cfg.fixed_t {
            t *= cfg.gamma;
        }
    }
    let best_z = objective_z_rows(&best.0, rows)?;
    Ok(SearchTrace {
        chain,
        records,
        best: best.0,
        best_z,
        exhausted_at,
    })
}

/// Runs `cfg.chains` independent chains in parallel and keeps the best
/// design (ties to the lowest chain index). The objective is Z averaged
/// over `rows`.
pub fn anneal(initial: &BeatDesign, grid: &AtomGrid, rows: &[Vec<f64>], cfg: &AnnealConfig) -> Result<AnnealResult> {
    check_start(initial, grid, rows, cfg)?;
    let traces: Vec<SearchTrace> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| run_chain(initial, grid, rows, cfg, c))
        .collect::<Result<_>>()?;
    let best_chain = (0..traces.len())
        .min_by(|&a, &b| traces[a].best_z.total_cmp(&traces[b].best_z).then(a.cmp(&b)))
        .expect("at least one chain");
    Ok(AnnealResult {
        best: traces[best_chain].best.clone(),
        best_z: traces[best_chain].best_z,
        best_chain,
        traces,
    })
}

pub fn write_traces_csv<W: Write>(w: W, traces: &[SearchTrace]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["chain", "iteration", "z_current", "z_best", "accepted", "temperature"])?;
    for tr in traces {
        for r in &tr.records {
            wtr.write_record([
                tr.chain.to_string(),
                r.iteration.to_string(),
                r.z_current.to_string(),
                r.z_best.to_string(),
                u8::from(r.accepted).to_string(),
                r.temperature.to_string(),
            ])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<trace csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{atomize, GridKind, Polygon, Projection};
    use crate::partition::{is_contiguous, objective_z};

    fn grid(rows: usize, cols: usize) -> AtomGrid {
        atomize(
            &[Polygon::rect(0.0, 0.0, cols as f64, rows as f64)],
            1.0,
            GridKind::SquareRook,
            Projection::PlanarMiles,
        )
        .unwrap()
    }

    fn wcss(g: &AtomGrid, set: &[usize]) -> f64 {
        let n = set.len() as f64;
        let (mx, my) = set.iter().fold((0.0, 0.0), |(x, y), &i| {
            (x + g.atoms[i].centroid.x / n, y + g.atoms[i].centroid.y / n)
        });
        set.iter().map(|&i| g.atoms[i].centroid.dist_sq(Point::new(mx, my))).sum()
    }

    #[test]
    fn rectangle_splits_into_squares() {
        let g = grid(2, 4);
        let all: Vec<usize> = (0..8).collect();
        let (a, b) = kmeans_split(&g, 0, &all, None).unwrap();
        assert_eq!(a, vec![0, 1, 4, 5]);
        assert_eq!(b, vec![2, 3, 6, 7]);
        // brute-force minimum within-cluster sum of squares
        let best = (1..255u32)
            .map(|mask| {
                let (x, y): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| mask >> i & 1 == 1);
                wcss(&g, &x) + wcss(&g, &y)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((wcss(&g, &a) + wcss(&g, &b) - best).abs() < 1e-12);
    }

    #[test]
    fn small_splits() {
        let g = grid(1, 2);
        assert_eq!(kmeans_split(&g, 0, &[0, 1], None).unwrap(), (vec![0], vec![1]));
        let g = grid(1, 3);
        let (a, b) = kmeans_split(&g, 0, &[0, 1, 2], None).unwrap();
        assert_eq!((a, b), (vec![0, 1], vec![2]));
        assert!(matches!(kmeans_split(&g, 4, &[1], None), Err(Error::Unsplittable(4))));
    }

    #[test]
    fn repair_restores_contiguity() {
        // U-shaped beat: k-means on centroids cuts the two arms apart
        let g = grid(3, 3);
        let u = vec![0, 1, 2, 3, 5, 6, 8];
        let (a, b) = kmeans_split(&g, 0, &u, None).unwrap();
        let d = {
            let mut asg = vec![0; 9];
            for &i in &b {
                asg[i] = 1;
            }
            asg[4] = 2;
            BeatDesign::from_assignment(asg).unwrap()
        };
        assert_eq!(a.len() + b.len(), 7);
        assert!(first_disconnected_beat(&d, &g).is_none_or(|k| k == 2));
    }

    #[test]
    fn greedy_uniform_two_by_two() {
        let g = grid(2, 2);
        let r = greedy_expand(&BeatDesign::single(4), &g, &[1.0; 4], 2, &GreedyOptions::default()).unwrap();
        assert_eq!(r.last().k(), 2);
        assert_eq!(objective_z(r.last(), &[1.0; 4]).unwrap(), 0.0);
        assert_eq!(r.elbow.len(), 2);
    }

    #[test]
    fn greedy_stops_on_singleton() {
        let g = grid(1, 3);
        let d = BeatDesign::from_assignment(vec![0, 1, 2]).unwrap();
        let r = greedy_expand(&d, &g, &[10.0, 1.0, 1.0], 4, &GreedyOptions::default());
        // K = 4 > I = 3 is rejected up front
        assert!(r.is_err());
        let d = BeatDesign::from_assignment(vec![0, 1, 1]).unwrap();
        let r = greedy_expand(&d, &g, &[10.0, 1.0, 1.0], 3, &GreedyOptions::default()).unwrap();
        assert!(r.stopped.is_some());
        assert_eq!(r.last().k(), 2);
    }

    #[test]
    fn acceptance_probability() {
        assert_eq!(accept_prob(1.0, 2.0, 0.5), 1.0);
        assert_eq!(accept_prob(2.0, 2.0, 0.5), 1.0);
        assert!((accept_prob(3.0, 2.0, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    fn random_rows(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        vec![(0..n).map(|_| rng.random_range(0.0..10.0)).collect()]
    }

    #[test]
    fn cold_anneal_never_worsens() {
        let g = grid(4, 4);
        let rows = random_rows(16, 3);
        let init = BeatDesign::from_assignment((0..16).map(|i| usize::from(i % 4 >= 2)).collect()).unwrap();
        let cfg = AnnealConfig {
            t0: 1e-12,
            iterations: 500,
            compactness: CompactnessParams::disabled(),
            ..Default::default()
        };
        let r = anneal(&init, &g, &rows, &cfg).unwrap();
        let z0 = objective_z(&init, &rows[0]).unwrap();
        assert!(r.best_z <= z0);
        let tr = &r.traces[0];
        for pair in tr.records.windows(2) {
            assert!(pair[1].z_current <= pair[0].z_current + 1e-9);
            assert!(pair[1].z_best <= pair[0].z_best);
        }
    }

    #[test]
    fn deterministic_and_feasible() {
        let g = grid(5, 5);
        let rows = random_rows(25, 9);
        let init = BeatDesign::from_assignment((0..25).map(|i| usize::from(i % 5 >= 3)).collect()).unwrap();
        let cfg = AnnealConfig {
            t0: 5.0,
            iterations: 800,
            seed: 7,
            chains: 2,
            compactness: CompactnessParams {
                c2: 4.0,
                ..Default::default()
            },
            ..Default::default()
        };
        let a = anneal(&init, &g, &rows, &cfg).unwrap();
        let b = anneal(&init, &g, &rows, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(is_contiguous(&a.best, &g));
        assert!(compactness(&a.best, &g, &cfg.compactness).iter().all(|c| c.feasible));
    }

    #[test]
    fn hot_fixed_temperature_accepts_nearly_everything() {
        let g = grid(4, 4);
        let rows = random_rows(16, 1);
        let init = BeatDesign::from_assignment((0..16).map(|i| usize::from(i % 4 >= 2)).collect()).unwrap();
        let cfg = AnnealConfig {
            t0: 1e12,
            gamma: 1.0,
            iterations: 2000,
            compactness: CompactnessParams::disabled(),
            ..Default::default()
        };
        let r = anneal(&init, &g, &rows, &cfg).unwrap();
        assert!(r.traces[0].acceptance_rate() > 0.99);
    }

    #[test]
    fn exhausted_chain_stops() {
        let g = grid(1, 2);
        let init = BeatDesign::from_assignment(vec![0, 1]).unwrap();
        let cfg = AnnealConfig {
            compactness: CompactnessParams::disabled(),
            ..Default::default()
        };
        let r = anneal(&init, &g, &[vec![1.0, 2.0]], &cfg).unwrap();
        assert_eq!(r.traces[0].exhausted_at, Some(0));
    }
}
