//! Census blocks: a GeoJSON of block outlines keyed by `block_id`, joined
//! with a CSV table `block_id,year,<factor>...`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geo::geojson::{self, RawCollection};
use crate::geo::{Polygon, Projection};

#[derive(Debug, Clone, PartialEq)]
pub struct CensusBlockRecord {
    pub block_id: String,
    pub geometry: Arc<[Polygon]>,
    pub year: i32,
    /// Factor name → value; `None` marks a missing value.
    pub factors: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, Default)]
pub struct CensusLoad {
    pub records: Vec<CensusBlockRecord>,
    pub factor_names: Vec<String>,
    pub warnings: Vec<String>,
}

/// One census block outline, shared by every year of its records.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGeometry {
    pub block_id: String,
    pub geometry: Arc<[Polygon]>,
}

fn block_id_of(props: &Map<String, Value>) -> Option<String> {
    match props.get("block_id")? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Parses block outlines, projecting them with the grid's projection.
pub fn parse_block_geometry(text: &str, projection: &Projection) -> Result<Vec<BlockGeometry>> {
    let coll: RawCollection = geojson::parse_collection(text)?;
    let planar_grid = *projection == Projection::PlanarMiles;
    if coll.planar != planar_grid {
        return Err(Error::ProjectionMismatch(format!(
            "census blocks are {} but the atom grid is {}",
            if coll.planar { "planar miles" } else { "lon/lat" },
            if planar_grid { "planar miles" } else { "lon/lat" },
        )));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(coll.features.len());
    for (k, f) in coll.features.iter().enumerate() {
        let id = block_id_of(&f.properties)
            .ok_or_else(|| Error::GeoJson(format!("feature {k} has no block_id property")))?;
        if !seen.insert(id.clone()) {
            return Err(Error::GeoJson(format!("block {id} appears twice in the geometry file")));
        }
        let geometry = geojson::to_polygons(&f.polygons, projection)?;
        out.push(BlockGeometry {
            block_id: id,
            geometry: geometry.into(),
        });
    }
    Ok(out)
}

fn parse_value(s: &str) -> std::result::Result<Option<f64>, String> {
    let s = s.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("null") {
        return Ok(None);
    }
    let v: f64 = s.parse().map_err(|_| format!("bad value {s:?}"))?;
    if v.is_finite() {
        Ok(Some(v))
    } else {
        Err(format!("non-finite value {s:?}"))
    }
}

/// Table rows keyed by (block_id, year).
pub type CensusTable = BTreeMap<(String, i32), BTreeMap<String, Option<f64>>>;

pub fn parse_census_table<R: Read>(reader: R, source: &str) -> Result<(Vec<String>, CensusTable)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let perr = |message: String| Error::Parse {
        path: source.to_string(),
        message,
    };
    let id_col = headers
        .iter()
        .position(|h| h == "block_id")
        .ok_or_else(|| perr("missing column \"block_id\"".into()))?;
    let year_col = headers
        .iter()
        .position(|h| h == "year")
        .ok_or_else(|| perr("missing column \"year\"".into()))?;
    let factor_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != id_col && *k != year_col)
        .map(|(k, h)| (k, h.to_string()))
        .collect();
    let mut table = CensusTable::new();
    for (k, row) in rdr.records().enumerate() {
        let line = k + 2;
        let row = row?;
        let id = row.get(id_col).unwrap_or_default().to_string();
        let year: i32 = row
            .get(year_col)
            .unwrap_or_default()
            .parse()
            .map_err(|_| perr(format!("line {line}: bad year")))?;
        let mut factors = BTreeMap::new();
        for (c, name) in &factor_cols {
            let v = parse_value(row.get(*c).unwrap_or_default())
                .map_err(|m| perr(format!("line {line}: {name}: {m}")))?;
            factors.insert(name.clone(), v);
        }
        if table.insert((id.clone(), year), factors).is_some() {
            return Err(Error::DuplicateCensusKey { block_id: id, year });
        }
    }
    Ok((factor_cols.into_iter().map(|(_, n)| n).collect(), table))
}

/// Joins geometry and table. Blocks without table rows get all-null records
/// for every year in the table, with a warning.
pub fn join_census(blocks: &[BlockGeometry], factor_names: Vec<String>, table: CensusTable) -> CensusLoad {
    let years: BTreeSet<i32> = table.keys().map(|(_, y)| *y).collect();
    let by_id: HashMap<&str, &BlockGeometry> = blocks.iter().map(|b| (b.block_id.as_str(), b)).collect();
    let mut load = CensusLoad {
        factor_names,
        ..Default::default()
    };
    for (id, year) in table.keys() {
        if !by_id.contains_key(id.as_str()) {
            load.warnings.push(format!("table row for block {id} ({year}) has no geometry; skipped"));
        }
    }
    for b in blocks {
        let mut missing = true;
        for &year in &years {
            let factors = match table.get(&(b.block_id.clone(), year)) {
                Some(f) => {
                    missing = false;
                    f.clone()
                }
                None => load.factor_names.iter().map(|n| (n.clone(), None)).collect(),
            };
            load.records.push(CensusBlockRecord {
                block_id: b.block_id.clone(),
                geometry: b.geometry.clone(),
                year,
                factors,
            });
        }
        if missing {
            load.warnings.push(format!("block {} has no table rows; factors set to null", b.block_id));
        }
    }
    load
}

pub fn load_census(path_geo: &Path, path_table: &Path, projection: &Projection) -> Result<CensusLoad> {
    let text = std::fs::read_to_string(path_geo).map_err(|e| Error::io(path_geo, e))?;
    let blocks = parse_block_geometry(&text, projection)?;
    let f = std::fs::File::open(path_table).map_err(|e| Error::io(path_table, e))?;
    let (names, table) = parse_census_table(f, &path_table.display().to_string())?;
    Ok(join_census(&blocks, names, table))
}

pub fn write_block_geometry(blocks: &[BlockGeometry], projection: &Projection) -> Value {
    let features = blocks
        .iter()
        .map(|b| {
            let mut props = Map::new();
            props.insert("block_id".into(), json!(b.block_id));
            geojson::feature(geojson::multipolygon_json(&b.geometry, projection), props)
        })
        .collect();
    geojson::feature_collection(features, projection)
}

pub fn write_census_table<W: Write>(w: W, factor_names: &[String], records: &[CensusBlockRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["block_id".to_string(), "year".to_string()];
    header.extend(factor_names.iter().cloned());
    wtr.write_record(&header)?;
    for r in records {
        let mut row = vec![r.block_id.clone(), r.year.to_string()];
        for n in factor_names {
            row.push(match r.factors.get(n).copied().flatten() {
                Some(v) => v.to_string(),
                None => String::new(),
            });
        }
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<census table>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BLOCKS: &str = r#"{"type":"FeatureCollection",
        "crs":{"type":"name","properties":{"name":"urn:beatdesign:planar-miles"}},
        "features":[
          {"type":"Feature","properties":{"block_id":"A"},
           "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
          {"type":"Feature","properties":{"block_id":"B"},
           "geometry":{"type":"Polygon","coordinates":[[[1,0],[2,0],[2,1],[1,1],[1,0]]]}}]}"#;

    fn load(table: &str) -> Result<CensusLoad> {
        let blocks = parse_block_geometry(BLOCKS, &Projection::PlanarMiles)?;
        let (names, t) = parse_census_table(table.as_bytes(), "t")?;
        Ok(join_census(&blocks, names, t))
    }

    #[test]
    fn two_blocks_two_years() {
        let l = load("block_id,year,Population\nA,2018,10\nA,2019,11\nB,2018,20\nB,2019,\n").unwrap();
        assert_eq!(l.records.len(), 4);
        assert!(l.warnings.is_empty());
        let b19 = l.records.iter().find(|r| r.block_id == "B" && r.year == 2019).unwrap();
        assert_eq!(b19.factors["Population"], None);
    }

    #[test]
    fn block_missing_from_table_gets_nulls_and_warning() {
        let l = load("block_id,year,Population\nA,2019,10\n").unwrap();
        assert_eq!(l.records.len(), 2);
        let b = l.records.iter().find(|r| r.block_id == "B").unwrap();
        assert_eq!(b.factors["Population"], None);
        assert_eq!(l.warnings.len(), 1);
    }

    #[test]
    fn duplicate_key_is_error() {
        let err = load("block_id,year,Population\nA,2019,10\nA,2019,11\n");
        assert!(matches!(err, Err(Error::DuplicateCensusKey { .. })));
    }

    #[test]
    fn projection_mismatch() {
        let err = parse_block_geometry(
            BLOCKS,
            &Projection::AzimuthalEqualArea { lon0: 0.0, lat0: 0.0 },
        );
        assert!(matches!(err, Err(Error::ProjectionMismatch(_))));
    }

    #[test]
    fn table_round_trip() {
        let l = load("block_id,year,Population,Median Age\nA,2019,10,31.5\nB,2019,,40\n").unwrap();
        let mut buf = Vec::new();
        write_census_table(&mut buf, &l.factor_names, &l.records).unwrap();
        let (names, t) = parse_census_table(buf.as_slice(), "rt").unwrap();
        assert_eq!(names, l.factor_names);
        assert_eq!(t[&("B".to_string(), 2019)]["Population"], None);
        assert_eq!(t[&("A".to_string(), 2019)]["Median Age"], Some(31.5));
    }
}
