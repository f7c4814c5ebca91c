//! Deterministic synthetic cities: a rectangular grid, census blocks made of
//! rectangular atom groups, latent rates following the spatial-lag
//! dynamics, and calls drawn from them.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::Duration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use crate::calendar::{default_offset, parse_offset, YearMonth};
use crate::error::{Error, Result};
use crate::forecast::{build_weights, RateMatrix};
use crate::geo::{atomize, geojson, AtomGrid, GridCoord, GridKind, Point, Polygon, Projection};
use crate::ingest::calls::{write_calls, CallRecord};
use crate::ingest::census::{write_block_geometry, write_census_table, BlockGeometry, CensusBlockRecord};
use crate::interp::{CensusTensor, FactorMode};
use crate::partition::BeatDesign;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    /// Centre as fractions of the grid width and height.
    pub x: f64,
    pub y: f64,
    /// Peak extra rate (calls per month).
    pub intensity: f64,
    /// Gaussian radius in miles.
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub name: String,
    pub mode: FactorMode,
    /// Block values are drawn uniformly from [low, high].
    pub low: f64,
    pub high: f64,
    /// Ground-truth coefficient at lag 1.
    pub beta: f64,
    /// Relative year-over-year drift applied to every block.
    #[serde(default)]
    pub annual_growth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Noise {
    #[default]
    Poisson,
    /// Counts are the rounded rates.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub cols: usize,
    /// Atom side in miles.
    pub side: f64,
    pub first_month: YearMonth,
    pub n_months: usize,
    /// Rate in every atom in the first month, before hotspots.
    pub base_rate: f64,
    pub hotspots: Vec<Hotspot>,
    /// Each atom's first-month rate is scaled by a uniform draw from
    /// [1 − r, 1 + r].
    pub atom_roughness: f64,
    pub rho: f64,
    pub beta0: f64,
    pub intercept: f64,
    pub factors: Vec<FactorSpec>,
    /// Census block size in atoms (rows, cols).
    pub block_rows: usize,
    pub block_cols: usize,
    pub noise: Noise,
    /// Log-normal processing time: parameters of the underlying normal,
    /// in log-hours.
    pub processing_mu: f64,
    pub processing_sigma: f64,
    pub categories: Vec<String>,
    /// The existing design splits the grid into this many strips per axis.
    pub existing_rows: usize,
    pub existing_cols: usize,
    pub utc_offset: String,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            rows: 20,
            cols: 20,
            side: 0.345,
            first_month: YearMonth { year: 2019, month: 1 },
            n_months: 12,
            base_rate: 20.0,
            hotspots: vec![
                Hotspot {
                    x: 0.25,
                    y: 0.3,
                    intensity: 400.0,
                    radius: 0.8,
                },
                Hotspot {
                    x: 0.7,
                    y: 0.75,
                    intensity: 250.0,
                    radius: 1.2,
                },
                Hotspot {
                    x: 0.8,
                    y: 0.2,
                    intensity: 150.0,
                    radius: 0.5,
                },
            ],
            atom_roughness: 0.0,
            rho: 0.4,
            beta0: 0.5,
            intercept: 2.0,
            factors: vec![
                FactorSpec {
                    name: "Population".into(),
                    mode: FactorMode::Extensive,
                    low: 100.0,
                    high: 1200.0,
                    beta: 0.02,
                    annual_growth: 0.01,
                },
                FactorSpec {
                    name: "Median Household Income".into(),
                    mode: FactorMode::Intensive,
                    low: 30.0,
                    high: 110.0,
                    beta: -0.02,
                    annual_growth: 0.02,
                },
            ],
            block_rows: 2,
            block_cols: 2,
            noise: Noise::Poisson,
            processing_mu: 0.0,
            processing_sigma: 0.6,
            categories: vec!["disturbance".into(), "theft".into(), "traffic".into(), "medical".into()],
            existing_rows: 2,
            existing_cols: 2,
            utc_offset: "-05:00".into(),
            seed: 1,
        }
    }
}

impl SyntheticSpec {
    /// Defaults with rates and effects scaled tenfold and rough first-month
    /// rates. At the plain defaults the noisy lagged count biases ρ̂ upward
    /// by about 0.3; this setting keeps it well under 0.1.
    pub fn high_signal() -> Self {
        let mut s = SyntheticSpec::default();
        s.base_rate *= 10.0;
        for h in &mut s.hotspots {
            h.intensity *= 10.0;
        }
        for f in &mut s.factors {
            f.beta *= 10.0;
        }
        s.intercept *= 10.0;
        s.atom_roughness = 0.5;
        s
    }

    /// Every violation, not just the first.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.rows == 0 || self.cols == 0 {
            v.push("rows and cols must be positive".into());
        }
        if !(self.side > 0.0 && self.side.is_finite()) {
            v.push(format!("side must be positive, got {}", self.side));
        }
        if self.n_months == 0 {
            v.push("n_months must be positive".into());
        }
        if !(self.rho.abs() < 1.0) {
            v.push(format!("|rho| must be < 1, got {}", self.rho));
        }
        if !(0.0..=1.0).contains(&self.atom_roughness) {
            v.push(format!("atom_roughness must be in [0, 1], got {}", self.atom_roughness));
        }
        if !(self.base_rate >= 0.0) {
            v.push("base_rate must be >= 0".into());
        }
        for h in &self.hotspots {
            if !(h.intensity >= 0.0 && h.radius > 0.0) {
                v.push(format!("hotspot at ({}, {}) needs intensity >= 0 and radius > 0", h.x, h.y));
            }
        }
        for f in &self.factors {
            if !(f.low <= f.high && f.low.is_finite() && f.high.is_finite()) {
                v.push(format!("factor {} needs finite low <= high", f.name));
            }
        }
        if self.block_rows == 0 || self.block_cols == 0 {
            v.push("block_rows and block_cols must be positive".into());
        }
        if !(self.processing_sigma >= 0.0) {
            v.push("processing_sigma must be >= 0".into());
        }
        if self.categories.is_empty() {
            v.push("at least one category is required".into());
        }
        if self.existing_rows == 0
            || self.existing_cols == 0
            || self.existing_rows > self.rows
            || self.existing_cols > self.cols
        {
            v.push("existing design strips must be between 1 and the grid size".into());
        }
        if parse_offset(&self.utc_offset).is_err() {
            v.push(format!("bad utc_offset {:?}", self.utc_offset));
        }
        v
    }

    pub fn factor_names(&self) -> Vec<String> {
        self.factors.iter().map(|f| f.name.clone()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// Latent rates λ_iℓ.
    pub lambda: RateMatrix,
    /// Drawn counts N_iℓ.
    pub counts: RateMatrix,
    /// Atom-level factors, starting one month before the first call month.
    pub x: CensusTensor,
}

#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub spec: SyntheticSpec,
    pub grid: AtomGrid,
    pub boundary: Vec<Polygon>,
    pub calls: Vec<CallRecord>,
    pub blocks: Vec<BlockGeometry>,
    pub census: Vec<CensusBlockRecord>,
    pub existing: BeatDesign,
    pub truth: GroundTruth,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    let problems = spec.validate();
    if !problems.is_empty() {
        return Err(Error::InvalidInput(problems.join("; ")));
    }
    let offset = parse_offset(&spec.utc_offset)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let s = spec.side;
    let (w_mi, h_mi) = (spec.cols as f64 * s, spec.rows as f64 * s);
    let boundary = vec![Polygon::rect(0.0, 0.0, w_mi, h_mi)];
    let grid = atomize(&boundary, s, GridKind::SquareRook, Projection::PlanarMiles)?;
    let n = grid.len();
    let atom_rc = |i: usize| {
        let c = grid.atoms[i].grid_coord;
        (c.row as usize, c.col as usize)
    };

    // Census blocks and their annual values.
    let first_x = spec.first_month.offset(-1);
    let last = spec.first_month.offset(spec.n_months as i64 - 1);
    let years: Vec<i32> = (first_x.year..=last.year).collect();
    let (nbr, nbc) = (spec.rows.div_ceil(spec.block_rows), spec.cols.div_ceil(spec.block_cols));
    let mut blocks = Vec::with_capacity(nbr * nbc);
    let mut block_atoms: Vec<usize> = Vec::with_capacity(nbr * nbc);
    for br in 0..nbr {
        for bc in 0..nbc {
            let (r0, c0) = (br * spec.block_rows, bc * spec.block_cols);
            let (r1, c1) = ((r0 + spec.block_rows).min(spec.rows), (c0 + spec.block_cols).min(spec.cols));
            blocks.push(BlockGeometry {
                block_id: format!("B{br:03}{bc:03}"),
                geometry: Arc::from(vec![Polygon::rect(
                    c0 as f64 * s,
                    r0 as f64 * s,
                    c1 as f64 * s,
                    r1 as f64 * s,
                )]),
            });
            block_atoms.push((r1 - r0) * (c1 - c0));
        }
    }
    let block_of = |i: usize| {
        let (r, c) = atom_rc(i);
        (r / spec.block_rows) * nbc + c / spec.block_cols
    };
    // base[b][m], grown per year
    let base: Vec<Vec<f64>> = (0..blocks.len())
        .map(|_| spec.factors.iter().map(|f| rng.random_range(f.low..=f.high)).collect())
        .collect();
    let value = |b: usize, m: usize, year: i32| {
        let f = &spec.factors[m];
        base[b][m] * (1.0 + f.annual_growth).powi(year - years[0])
    };
    let mut census = Vec::new();
    for (b, blk) in blocks.iter().enumerate() {
        for &y in &years {
            census.push(CensusBlockRecord {
                block_id: blk.block_id.clone(),
                geometry: blk.geometry.clone(),
                year: y,
                factors: spec
                    .factors
                    .iter()
                    .enumerate()
                    .map(|(m, f)| (f.name.clone(), Some(value(b, m, y))))
                    .collect(),
            });
        }
    }
    let nx = spec.n_months + 1;
    let mut x = CensusTensor::zeros(n, first_x, nx, spec.factor_names());
    for i in 0..n {
        let b = block_of(i);
        for l in 0..nx {
            let y = first_x.offset(l as i64).year;
            for (m, f) in spec.factors.iter().enumerate() {
                let v = match f.mode {
                    FactorMode::Extensive => value(b, m, y) / block_atoms[b] as f64,
                    FactorMode::Intensive => value(b, m, y),
                };
                x.set(i, l, m, v);
            }
        }
    }

    // Latent rates.
    let w = build_weights(&grid);
    let lam0: Vec<f64> = (0..n)
        .map(|i| {
            let p = grid.atoms[i].centroid;
            let jitter = if spec.atom_roughness > 0.0 {
                rng.random_range(1.0 - spec.atom_roughness..=1.0 + spec.atom_roughness)
            } else {
                1.0
            };
            jitter
                * (spec.base_rate
                + spec
                    .hotspots
                    .iter()
                    .map(|h| {
                        let d2 = p.dist_sq(Point::new(h.x * w_mi, h.y * h_mi));
                        h.intensity * (-d2 / (2.0 * h.radius * h.radius)).exp()
                    })
                    .sum::<f64>())
        })
        .collect();
    let mut cols = vec![lam0];
    for l in 1..spec.n_months {
        let b: Vec<f64> = (0..n)
            .map(|i| {
                let mut v = spec.intercept + spec.beta0 * cols[l - 1][i];
                for (m, f) in spec.factors.iter().enumerate() {
                    // X_{ℓ−1} sits at tensor position ℓ (tensor starts a month early)
                    v += f.beta * x.get(i, l, m);
                }
                v
            })
            .collect();
        let next: Vec<f64> = w.solve_lag(spec.rho, &b)?.into_iter().map(|v| v.max(0.0)).collect();
        cols.push(next);
    }
    let lambda = RateMatrix::from_columns(spec.first_month, &cols);

    // Counts and calls.
    let proc = LogNormal::new(spec.processing_mu, spec.processing_sigma.max(1e-12))
        .map_err(|e| Error::InvalidInput(format!("processing time distribution: {e}")))?;
    let mut counts = RateMatrix::zeros(n, spec.first_month, spec.n_months);
    let mut calls = Vec::new();
    for l in 0..spec.n_months {
        let month = spec.first_month.offset(l as i64);
        let start = month.start_utc(offset);
        let month_ms = (month.offset(1).start_utc(offset) - start).num_milliseconds();
        for i in 0..n {
            let lam = lambda.get(i, l);
            let k = match spec.noise {
                Noise::None => lam.round() as u64,
                Noise::Poisson if lam > 0.0 => Poisson::new(lam)
                    .map_err(|e| Error::InvalidInput(format!("poisson({lam}): {e}")))?
                    .sample(&mut rng) as u64,
                Noise::Poisson => 0,
            };
            counts.set(i, l, k as f64);
            let GridCoord { row, col } = grid.atoms[i].grid_coord;
            for _ in 0..k {
                // strictly inside the cell so the location test is unambiguous
                let fx: f64 = rng.random_range(0.001..0.999);
                let fy: f64 = rng.random_range(0.001..0.999);
                let t = start + Duration::milliseconds(rng.random_range(0..month_ms));
                let hours = if spec.processing_sigma == 0.0 {
                    spec.processing_mu.exp()
                } else {
                    proc.sample(&mut rng)
                };
                let cat = &spec.categories[rng.random_range(0..spec.categories.len())];
                calls.push(CallRecord {
                    call_id: format!("S{:07}", calls.len()),
                    location: Point::new((col as f64 + fx) * s, (row as f64 + fy) * s),
                    call_time: t,
                    clear_time: t + Duration::milliseconds((hours * 3_600_000.0).round() as i64),
                    category: cat.clone(),
                });
            }
        }
    }
    calls.sort_by(|a, b| a.call_time.cmp(&b.call_time).then_with(|| a.call_id.cmp(&b.call_id)));

    let existing = BeatDesign::from_assignment(
        (0..n)
            .map(|i| {
                let (r, c) = atom_rc(i);
                (r * spec.existing_rows / spec.rows) * spec.existing_cols + c * spec.existing_cols / spec.cols
            })
            .collect(),
    )?;

    Ok(SyntheticInstance {
        spec: spec.clone(),
        grid,
        boundary,
        calls,
        blocks,
        census,
        existing,
        truth: GroundTruth { lambda, counts, x },
    })
}

/// File names written by [`SyntheticInstance::write_to`].
pub const SYNTH_FILES: [&str; 7] = [
    "boundary.geojson",
    "calls.csv",
    "blocks.geojson",
    "census.csv",
    "existing_design.csv",
    "truth_lambda.csv",
    "synthetic_spec.json",
];

impl SyntheticInstance {
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let proj = Projection::PlanarMiles;
        let path = |name: &str| dir.join(name);
        let write = |name: &str, bytes: Vec<u8>| -> Result<PathBuf> {
            let p = path(name);
            std::fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
            Ok(p)
        };
        let boundary = geojson::feature_collection(
            vec![geojson::feature(
                geojson::multipolygon_json(&self.boundary, &proj),
                serde_json::Map::new(),
            )],
            &proj,
        );
        let mut out = vec![write(SYNTH_FILES[0], serde_json::to_vec_pretty(&boundary)?)?];
        let mut buf = Vec::new();
        write_calls(&mut buf, &self.calls)?;
        out.push(write(SYNTH_FILES[1], buf)?);
        out.push(write(
            SYNTH_FILES[2],
            serde_json::to_vec_pretty(&write_block_geometry(&self.blocks, &proj))?,
        )?);
        let mut buf = Vec::new();
        write_census_table(&mut buf, &self.spec.factor_names(), &self.census)?;
        out.push(write(SYNTH_FILES[3], buf)?);
        let mut buf = Vec::new();
        self.existing.write_csv(&mut buf)?;
        out.push(write(SYNTH_FILES[4], buf)?);
        let mut buf = Vec::new();
        self.truth.lambda.write_csv(&mut buf, "lambda")?;
        out.push(write(SYNTH_FILES[5], buf)?);
        out.push(write(SYNTH_FILES[6], serde_json::to_vec_pretty(&self.spec)?)?);
        Ok(out)
    }
}

/// Default offset used for synthetic call timestamps.
pub fn synthetic_offset(spec: &SyntheticSpec) -> chrono::FixedOffset {
    parse_offset(&spec.utc_offset).unwrap_or_else(|_| default_offset())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::count_calls;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            rows: 6,
            cols: 5,
            n_months: 4,
            ..Default::default()
        }
    }

    #[test]
    fn zero_intensity_means_no_calls() {
        let spec = SyntheticSpec {
            base_rate: 0.0,
            hotspots: vec![],
            intercept: 0.0,
            factors: vec![],
            ..small()
        };
        let inst = generate_synthetic(&spec).unwrap();
        assert!(inst.calls.is_empty());
    }

    #[test]
    fn deterministic_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate_synthetic(&small()).unwrap().write_to(a.path()).unwrap();
        generate_synthetic(&small()).unwrap().write_to(b.path()).unwrap();
        for f in SYNTH_FILES {
            let x = std::fs::read(a.path().join(f)).unwrap();
            let y = std::fs::read(b.path().join(f)).unwrap();
            assert!(x == y, "{f} differs");
        }
    }

    #[test]
    fn counts_match_placements() {
        let inst = generate_synthetic(&small()).unwrap();
        let n = count_calls(
            &inst.grid,
            &inst.calls,
            Some((inst.spec.first_month, inst.spec.n_months)),
            synthetic_offset(&inst.spec),
        );
        assert_eq!(n.unmatched + n.outside_window, 0);
        for i in 0..inst.grid.len() {
            for l in 0..inst.spec.n_months {
                assert_eq!(n.get(i, l) as f64, inst.truth.counts.get(i, l));
            }
        }
    }

    #[test]
    fn stationary_identity_dynamics() {
        let spec = SyntheticSpec {
            rho: 0.0,
            beta0: 1.0,
            intercept: 0.0,
            factors: vec![],
            n_months: 24,
            noise: Noise::Poisson,
            ..small()
        };
        let inst = generate_synthetic(&spec).unwrap();
        let lam = &inst.truth.lambda;
        let n = inst.grid.len();
        // Each atom's 24-month mean is within 3σ with probability 0.9973;
        // over 30 atoms more than two misses would be a < 0.1% event.
        let mut misses = 0;
        let (mut total, mut expected) = (0.0, 0.0);
        for i in 0..n {
            let l0 = lam.get(i, 0);
            for l in 1..24 {
                assert_eq!(lam.get(i, l), l0);
            }
            let sum: f64 = (0..24).map(|l| inst.truth.counts.get(i, l)).sum();
            if (sum / 24.0 - l0).abs() > 3.0 * (l0 / 24.0).sqrt() {
                misses += 1;
            }
            total += sum;
            expected += 24.0 * l0;
        }
        assert!(misses <= 2, "{misses} atoms outside 3 sigma");
        assert!((total - expected).abs() <= 3.0 * expected.sqrt());
    }

    #[test]
    fn default_rates_stay_positive() {
        // a clamped rate breaks the linear dynamics the fit assumes
        for seed in 1..=5 {
            for spec in [SyntheticSpec { seed, ..Default::default() }, SyntheticSpec { seed, ..SyntheticSpec::high_signal() }] {
                let inst = generate_synthetic(&spec).unwrap();
                for i in 0..inst.grid.len() {
                    for l in 0..spec.n_months {
                        assert!(inst.truth.lambda.get(i, l) > 0.0, "seed {seed} atom {i} month {l}");
                    }
                }
            }
        }
    }

    #[test]
    fn validation_lists_everything() {
        let spec = SyntheticSpec {
            rows: 0,
            rho: 1.5,
            categories: vec![],
            ..Default::default()
        };
        assert!(spec.validate().len() >= 3);
    }
}
