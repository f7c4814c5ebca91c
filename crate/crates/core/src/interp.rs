//! Areal interpolation of census-block factors onto atoms.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calendar::YearMonth;
use crate::error::{Error, Result};
use crate::geo::polygon::intersection_area;
use crate::geo::{AtomGrid, BBox, Projection, Region};
use crate::ingest::census::{BlockGeometry, CensusBlockRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorMode {
    /// Counts, split by area share.
    Extensive,
    /// Medians and averages, area-weighted mean.
    Intensive,
}

/// Medians, averages and means are intensive; everything else is a count.
pub fn default_mode(factor: &str) -> FactorMode {
    let f = factor.to_ascii_lowercase();
    if f.contains("median") || f.contains("average") || f.contains("mean") {
        FactorMode::Intensive
    } else {
        FactorMode::Extensive
    }
}

/// Modes for every factor: explicit overrides first, then [`default_mode`].
/// `all_extensive` forces the proportional split for every factor.
pub fn resolve_modes(
    factors: &[String],
    overrides: &BTreeMap<String, FactorMode>,
    all_extensive: bool,
) -> BTreeMap<String, FactorMode> {
    factors
        .iter()
        .map(|f| {
            let m = if all_extensive {
                FactorMode::Extensive
            } else {
                overrides.get(f).copied().unwrap_or_else(|| default_mode(f))
            };
            (f.clone(), m)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlayEntry {
    pub atom: usize,
    pub block: usize,
    /// area(atom ∩ block)
    pub area: f64,
}

/// Sparse atom/block overlap, entries sorted by (atom, block).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlayWeights {
    pub n_atoms: usize,
    pub block_ids: Vec<String>,
    pub block_areas: Vec<f64>,
    pub entries: Vec<OverlayEntry>,
}

impl OverlayWeights {
    /// area(atom ∩ block) / area(block).
    pub fn weight(&self, e: &OverlayEntry) -> f64 {
        e.area / self.block_areas[e.block]
    }

    pub fn weight_of(&self, atom: usize, block: usize) -> f64 {
        self.entries
            .iter()
            .find(|e| e.atom == atom && e.block == block)
            .map_or(0.0, |e| self.weight(e))
    }

    pub fn atoms_without_blocks(&self) -> Vec<usize> {
        let covered: BTreeSet<usize> = self.entries.iter().map(|e| e.atom).collect();
        (0..self.n_atoms).filter(|i| !covered.contains(i)).collect()
    }
}

/// Exact polygon-intersection areas between every atom and every block.
pub fn overlay(grid: &AtomGrid, blocks: &[BlockGeometry], blocks_projection: &Projection) -> Result<OverlayWeights> {
    if *blocks_projection != grid.projection {
        return Err(Error::ProjectionMismatch(format!(
            "blocks use {blocks_projection:?}, grid uses {:?}",
            grid.projection
        )));
    }
    let atom_regions: Vec<Region> = grid.atoms.iter().map(|a| a.region()).collect();
    let per_block: Vec<(f64, Vec<OverlayEntry>)> = blocks
        .par_iter()
        .enumerate()
        .map(|(b, blk)| {
            let region = Region::from_polygons(&blk.geometry);
            let bb: BBox = region.bbox();
            let entries = grid
                .atoms_in_bbox(&bb)
                .into_iter()
                .filter_map(|i| {
                    let window = grid.cell_outline(grid.atoms[i].grid_coord);
                    let local = region.clip_convex(&window);
                    if local.rings.is_empty() {
                        return None;
                    }
                    let area = intersection_area(&atom_regions[i], &local);
                    (area > 0.0).then_some(OverlayEntry { atom: i, block: b, area })
                })
                .collect();
            (region.area(), entries)
        })
        .collect();
    let mut entries: Vec<OverlayEntry> = Vec::new();
    let mut block_areas = Vec::with_capacity(blocks.len());
    for (a, e) in per_block {
        block_areas.push(a);
        entries.extend(e);
    }
    entries.sort_by_key(|e| (e.atom, e.block));
    Ok(OverlayWeights {
        n_atoms: grid.len(),
        block_ids: blocks.iter().map(|b| b.block_id.clone()).collect(),
        block_areas,
        entries,
    })
}

/// Dense x_iℓm over atoms × months × factors. NaN marks a missing value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusTensor {
    pub n_atoms: usize,
    pub first_month: YearMonth,
    pub n_months: usize,
    pub factor_names: Vec<String>,
    pub values: Vec<f64>,
}

impl CensusTensor {
    pub fn zeros(n_atoms: usize, first_month: YearMonth, n_months: usize, factor_names: Vec<String>) -> Self {
        let m = factor_names.len();
        CensusTensor {
            n_atoms,
            first_month,
            n_months,
            factor_names,
            values: vec![0.0; n_atoms * n_months * m],
        }
    }

    pub fn n_factors(&self) -> usize {
        self.factor_names.len()
    }

    fn idx(&self, i: usize, l: usize, m: usize) -> usize {
        (i * self.n_months + l) * self.n_factors() + m
    }

    pub fn get(&self, i: usize, l: usize, m: usize) -> f64 {
        self.values[self.idx(i, l, m)]
    }

    pub fn set(&mut self, i: usize, l: usize, m: usize, v: f64) {
        let k = self.idx(i, l, m);
        self.values[k] = v;
    }

    pub fn months(&self) -> impl Iterator<Item = YearMonth> + '_ {
        (0..self.n_months).map(|l| self.first_month.offset(l as i64))
    }

    /// Month position of `ym` in this tensor.
    pub fn month_pos(&self, ym: YearMonth) -> Option<usize> {
        let d = ym.index() - self.first_month.index();
        (0..self.n_months as i64).contains(&d).then_some(d as usize)
    }

    /// Lists every (atom, factor) with a missing value.
    pub fn null_cells(&self) -> Vec<(usize, String)> {
        let mut out = BTreeSet::new();
        for i in 0..self.n_atoms {
            for l in 0..self.n_months {
                for m in 0..self.n_factors() {
                    if self.get(i, l, m).is_nan() {
                        out.insert((i, m));
                    }
                }
            }
        }
        out.into_iter()
            .map(|(i, m)| (i, self.factor_names[m].clone()))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["atom_id", "month", "factor", "value"])?;
        for i in 0..self.n_atoms {
            for (l, ym) in self.months().enumerate() {
                for (m, name) in self.factor_names.iter().enumerate() {
                    let v = self.get(i, l, m);
                    let vs = if v.is_nan() { String::new() } else { v.to_string() };
                    wtr.write_record([i.to_string(), ym.to_string(), name.clone(), vs])?;
                }
            }
        }
        wtr.flush().map_err(|e| Error::io("<tensor csv>", e))?;
        Ok(())
    }

    /// Reads the long-format CSV; factor order follows first appearance.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut rows = Vec::new();
        let mut factors: Vec<String> = Vec::new();
        let (mut max_atom, mut months) = (0usize, BTreeSet::new());
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |m: &str| Error::Parse {
                path: "<tensor csv>".into(),
                message: format!("line {}: {m}", k + 2),
            };
            if rec.len() != 4 {
                return Err(bad("expected 4 fields"));
            }
            let atom: usize = rec[0].parse().map_err(|_| bad("bad atom_id"))?;
            let month: YearMonth = rec[1].parse().map_err(|_| bad("bad month"))?;
            let factor = rec[2].to_string();
            let value = if rec[3].is_empty() {
                f64::NAN
            } else {
                rec[3].parse().map_err(|_| bad("bad value"))?
            };
            if !factors.contains(&factor) {
                factors.push(factor.clone());
            }
            max_atom = max_atom.max(atom.checked_add(1).ok_or_else(|| bad("bad atom_id"))?);
            months.insert(month);
            rows.push((atom, month, factor, value));
        }
        let first = *months.first().ok_or_else(|| Error::InvalidInput("empty tensor csv".into()))?;
        let last = *months.last().expect("non-empty");
        let n_months = (last.index() - first.index() + 1) as usize;
        // every cell is written, possibly empty, so the table cannot be
        // larger than the row count
        if max_atom.saturating_mul(n_months).saturating_mul(factors.len()) > rows.len() {
            return Err(Error::InvalidInput("tensor csv is not a complete atom × month × factor table".into()));
        }
        let mut t = CensusTensor::zeros(max_atom, first, n_months, factors.clone());
        t.values.fill(f64::NAN);
        for (atom, month, factor, value) in rows {
            let m = factors.iter().position(|f| *f == factor).expect("registered");
            let l = t.month_pos(month).expect("in range");
            t.set(atom, l, m, value);
        }
        Ok(t)
    }

    pub const CACHE_MAGIC: [u8; 4] = *b"BDCT";
    pub const CACHE_VERSION: u16 = 1;

    /// Binary cache: magic, version, dimensions, first month, factor
    /// names, then values as little-endian f64.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(48 + self.values.len() * 8);
        out.extend_from_slice(&Self::CACHE_MAGIC);
        out.extend_from_slice(&Self::CACHE_VERSION.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&(self.n_atoms as u64).to_le_bytes());
        out.extend_from_slice(&(self.n_months as u64).to_le_bytes());
        out.extend_from_slice(&(self.n_factors() as u64).to_le_bytes());
        out.extend_from_slice(&self.first_month.index().to_le_bytes());
        for name in &self.factor_names {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != Self::CACHE_MAGIC {
            return Err(Error::Cache("bad magic".into()));
        }
        let version = u16::from_le_bytes(cur.array()?);
        if version != Self::CACHE_VERSION {
            return Err(Error::Cache(format!("unsupported version {version}")));
        }
        let _reserved = cur.take(2)?;
        let n_atoms = u64::from_le_bytes(cur.array()?);
        let n_months = u64::from_le_bytes(cur.array()?);
        let n_factors = u64::from_le_bytes(cur.array()?);
        let first = i64::from_le_bytes(cur.array()?);
        if !(-(1i64 << 40)..(1i64 << 40)).contains(&first) {
            return Err(Error::Cache("first month out of range".into()));
        }
        if n_factors > cur.remaining() as u64 / 4 {
            return Err(Error::Cache("factor count exceeds payload".into()));
        }
        let mut names = Vec::with_capacity(n_factors as usize);
        for _ in 0..n_factors {
            let len = u32::from_le_bytes(cur.array()?) as usize;
            let raw = cur.take(len)?;
            names.push(
                String::from_utf8(raw.to_vec()).map_err(|_| Error::Cache("factor name not utf-8".into()))?,
            );
        }
        let count = n_atoms
            .checked_mul(n_months)
            .and_then(|x| x.checked_mul(n_factors))
            .and_then(|x| x.checked_mul(8))
            .ok_or_else(|| Error::Cache("dimension overflow".into()))?;
        if count != cur.remaining() as u64 {
            return Err(Error::Cache(format!(
                "payload holds {} bytes, header implies {count}",
                cur.remaining()
            )));
        }
        let values = cur
            .take(count as usize)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(CensusTensor {
            n_atoms: n_atoms as usize,
            first_month: YearMonth::from_index(first),
            n_months: n_months as usize,
            factor_names: names,
            values,
        })
    }

    pub fn save_cache(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load_cache(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::Cache("truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("exact length"))
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct InterpDiagnostics {
    /// Atoms outside every block: zero for extensive factors, nearest-block
    /// value for intensive ones.
    pub atoms_outside_blocks: Vec<usize>,
    /// Requested years with no census rows, mapped to the year used instead.
    pub substituted_years: BTreeMap<i32, i32>,
    pub null_cells: usize,
}

/// Builds the tensor for `n_months` months starting at `first_month`.
/// Annual values are replicated across the months of their year.
pub fn interpolate(
    weights: &OverlayWeights,
    records: &[CensusBlockRecord],
    factor_names: &[String],
    modes: &BTreeMap<String, FactorMode>,
    first_month: YearMonth,
    n_months: usize,
    block_centroids: Option<&[crate::geo::Point]>,
    atom_centroids: Option<&[crate::geo::Point]>,
) -> Result<(CensusTensor, InterpDiagnostics)> {
    for f in factor_names {
        if !modes.contains_key(f) {
            return Err(Error::InvalidInput(format!("no interpolation mode for factor {f:?}")));
        }
    }
    let n_blocks = weights.block_ids.len();
    let block_pos: BTreeMap<&str, usize> = weights
        .block_ids
        .iter()
        .enumerate()
        .map(|(k, b)| (b.as_str(), k))
        .collect();
    let years: BTreeSet<i32> = records.iter().map(|r| r.year).collect();
    if years.is_empty() {
        return Err(Error::InvalidInput("no census records".into()));
    }
    // values[year][block][factor]
    let mut by_year: BTreeMap<i32, Vec<Vec<f64>>> = years
        .iter()
        .map(|&y| (y, vec![vec![f64::NAN; factor_names.len()]; n_blocks]))
        .collect();
    for r in records {
        let Some(&b) = block_pos.get(r.block_id.as_str()) else { continue };
        let slot = by_year.get_mut(&r.year).expect("year registered");
        for (m, name) in factor_names.iter().enumerate() {
            slot[b][m] = r.factors.get(name).copied().flatten().unwrap_or(f64::NAN);
        }
    }

    let mut diag = InterpDiagnostics {
        atoms_outside_blocks: weights.atoms_without_blocks(),
        ..Default::default()
    };
    let nearest_block: Vec<Option<usize>> = diag
        .atoms_outside_blocks
        .iter()
        .map(|&i| {
            let (bc, ac) = (block_centroids?, atom_centroids?);
            (0..n_blocks).min_by(|&a, &b| {
                bc[a].dist_sq(ac[i]).total_cmp(&bc[b].dist_sq(ac[i])).then(a.cmp(&b))
            })
        })
        .collect();

    let mut by_atom: Vec<Vec<&OverlayEntry>> = vec![Vec::new(); weights.n_atoms];
    for e in &weights.entries {
        by_atom[e.atom].push(e);
    }

    let mut tensor = CensusTensor::zeros(weights.n_atoms, first_month, n_months, factor_names.to_vec());
    for l in 0..n_months {
        let ym = first_month.offset(l as i64);
        let year = if years.contains(&ym.year) {
            ym.year
        } else {
            let y = *years
                .iter()
                .min_by_key(|&&y| ((y - ym.year).abs(), y))
                .expect("non-empty");
            diag.substituted_years.insert(ym.year, y);
            y
        };
        let vals = &by_year[&year];
        for (i, entries) in by_atom.iter().enumerate() {
            for (m, name) in factor_names.iter().enumerate() {
                let v = match modes[name] {
                    FactorMode::Extensive => entries
                        .iter()
                        .map(|e| weights.weight(e) * vals[e.block][m])
                        .sum::<f64>(),
                    FactorMode::Intensive => {
                        let (num, den) = entries.iter().fold((0.0, 0.0), |(n, d), e| {
                            (n + e.area * vals[e.block][m], d + e.area)
                        });
                        if den > 0.0 {
                            num / den
                        } else {
                            f64::NAN
                        }
                    }
                };
                tensor.set(i, l, m, v);
            }
        }
        for (k, &i) in diag.atoms_outside_blocks.iter().enumerate() {
            for (m, name) in factor_names.iter().enumerate() {
                let v = match (modes[name], nearest_block[k]) {
                    (FactorMode::Extensive, _) => 0.0,
                    (FactorMode::Intensive, Some(b)) => vals[b][m],
                    (FactorMode::Intensive, None) => f64::NAN,
                };
                tensor.set(i, l, m, v);
            }
        }
    }
    diag.null_cells = tensor.values.iter().filter(|v| v.is_nan()).count();
    Ok((tensor, diag))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geo::{atomize, GridKind, Polygon};

    fn grid(n: usize) -> AtomGrid {
        atomize(
            &[Polygon::rect(0.0, 0.0, n as f64, n as f64)],
            1.0,
            GridKind::SquareRook,
            Projection::PlanarMiles,
        )
        .unwrap()
    }

    fn block(id: &str, p: Polygon) -> BlockGeometry {
        BlockGeometry {
            block_id: id.into(),
            geometry: Arc::from(vec![p]),
        }
    }

    fn record(id: &str, b: &BlockGeometry, year: i32, vals: &[(&str, Option<f64>)]) -> CensusBlockRecord {
        CensusBlockRecord {
            block_id: id.into(),
            geometry: b.geometry.clone(),
            year,
            factors: vals.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    fn jan() -> YearMonth {
        "2019-01".parse().unwrap()
    }

    #[test]
    fn atom_inside_large_block() {
        let g = grid(4);
        let b = block("B", Polygon::rect(0.0, 0.0, 4.0, 4.0));
        let w = overlay(&g, &[b], &Projection::PlanarMiles).unwrap();
        assert_eq!(w.entries.len(), 16);
        for e in &w.entries {
            assert!((w.weight(e) - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_geometry_weight_one_and_quarter_split() {
        let g = grid(2);
        let same = block("S", Polygon::rect(0.0, 0.0, 1.0, 1.0));
        let whole = block("W", Polygon::rect(0.0, 0.0, 2.0, 2.0));
        let w = overlay(&g, &[same, whole], &Projection::PlanarMiles).unwrap();
        assert!((w.weight_of(0, 0) - 1.0).abs() < 1e-15);
        for i in 0..4 {
            assert!((w.weight_of(i, 1) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn extensive_split_thirty_percent() {
        // one atom [0,1]^2 inside a block [0,1]x[0,10/3]: 30% of the block
        let g = grid(1);
        let b = block("B", Polygon::rect(0.0, 0.0, 1.0, 10.0 / 3.0));
        let recs = vec![record("B", &b, 2019, &[("Population", Some(100.0))])];
        let w = overlay(&g, &[b], &Projection::PlanarMiles).unwrap();
        let names = vec!["Population".to_string()];
        let modes = resolve_modes(&names, &BTreeMap::new(), false);
        let (t, _) = interpolate(&w, &recs, &names, &modes, jan(), 12, None, None).unwrap();
        assert!((t.get(0, 0, 0) - 30.0).abs() < 1e-9);
        assert!((t.get(0, 11, 0) - 30.0).abs() < 1e-9);
    }

    #[test]
    fn intensive_midpoint_when_straddling() {
        let g = grid(1);
        let left = block("L", Polygon::rect(-1.0, 0.0, 0.5, 1.0));
        let right = block("R", Polygon::rect(0.5, 0.0, 3.0, 1.0));
        let recs = vec![
            record("L", &left, 2019, &[("Median Household Income", Some(50_000.0))]),
            record("R", &right, 2019, &[("Median Household Income", Some(70_000.0))]),
        ];
        let w = overlay(&g, &[left, right], &Projection::PlanarMiles).unwrap();
        let names = vec!["Median Household Income".to_string()];
        let modes = resolve_modes(&names, &BTreeMap::new(), false);
        assert_eq!(modes[&names[0]], FactorMode::Intensive);
        let (t, _) = interpolate(&w, &recs, &names, &modes, jan(), 1, None, None).unwrap();
        assert!((t.get(0, 0, 0) - 60_000.0).abs() < 1e-6);
        // all-extensive mode splits it instead
        let modes = resolve_modes(&names, &BTreeMap::new(), true);
        let (t, _) = interpolate(&w, &recs, &names, &modes, jan(), 1, None, None).unwrap();
        let expect = 50_000.0 * 0.5 / 1.5 + 70_000.0 * 0.5 / 2.5;
        assert!((t.get(0, 0, 0) - expect).abs() < 1e-6);
    }

    #[test]
    fn nulls_propagate_and_outside_atoms_flagged() {
        let g = grid(2);
        let b = block("B", Polygon::rect(0.0, 0.0, 1.0, 2.0));
        let recs = vec![record("B", &b, 2019, &[("Population", None), ("Median Age", Some(40.0))])];
        let w = overlay(&g, &[b.clone()], &Projection::PlanarMiles).unwrap();
        let names = vec!["Population".to_string(), "Median Age".to_string()];
        let modes = resolve_modes(&names, &BTreeMap::new(), false);
        let bc = vec![Region::from_polygons(&b.geometry).centroid()];
        let ac: Vec<_> = g.atoms.iter().map(|a| a.centroid).collect();
        let (t, d) = interpolate(&w, &recs, &names, &modes, jan(), 1, Some(&bc), Some(&ac)).unwrap();
        assert!(t.get(0, 0, 0).is_nan());
        assert_eq!(d.atoms_outside_blocks, vec![1, 3]);
        assert_eq!(t.get(1, 0, 0), 0.0);
        assert_eq!(t.get(1, 0, 1), 40.0);
        assert_eq!(t.null_cells(), vec![(0, "Population".to_string()), (2, "Population".to_string())]);
    }

    #[test]
    fn missing_year_uses_nearest() {
        let g = grid(1);
        let b = block("B", Polygon::rect(0.0, 0.0, 1.0, 1.0));
        let recs = vec![
            record("B", &b, 2017, &[("Population", Some(1.0))]),
            record("B", &b, 2018, &[("Population", Some(2.0))]),
        ];
        let w = overlay(&g, &[b], &Projection::PlanarMiles).unwrap();
        let names = vec!["Population".to_string()];
        let modes = resolve_modes(&names, &BTreeMap::new(), false);
        let (t, d) = interpolate(&w, &recs, &names, &modes, "2018-12".parse().unwrap(), 2, None, None).unwrap();
        assert_eq!(t.get(0, 0, 0), 2.0);
        assert_eq!(t.get(0, 1, 0), 2.0);
        assert_eq!(d.substituted_years[&2019], 2018);
    }

    #[test]
    fn missing_mode_is_error() {
        let w = OverlayWeights {
            n_atoms: 0,
            block_ids: vec![],
            block_areas: vec![],
            entries: vec![],
        };
        let err = interpolate(&w, &[], &["X".into()], &BTreeMap::new(), jan(), 1, None, None);
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn cache_round_trip_and_corruption() {
        let mut t = CensusTensor::zeros(2, jan(), 3, vec!["a".into(), "bb".into()]);
        t.set(1, 2, 1, 7.5);
        t.set(0, 0, 0, f64::NAN);
        let bytes = t.encode();
        let u = CensusTensor::decode(&bytes).unwrap();
        assert_eq!(u.factor_names, t.factor_names);
        assert_eq!(u.get(1, 2, 1), 7.5);
        assert!(u.get(0, 0, 0).is_nan());
        assert!(CensusTensor::decode(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(CensusTensor::decode(&bad), Err(Error::Cache(_))));
    }

    #[test]
    fn csv_round_trip() {
        let mut t = CensusTensor::zeros(2, jan(), 2, vec!["Population".into()]);
        t.set(1, 1, 0, 3.25);
        t.set(0, 1, 0, f64::NAN);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let u = CensusTensor::read_csv(buf.as_slice()).unwrap();
        assert_eq!(u.get(1, 1, 0), 3.25);
        assert!(u.get(0, 1, 0).is_nan());
        assert_eq!(u.first_month, t.first_month);
    }
}
