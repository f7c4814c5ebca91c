//! Minimal GeoJSON reading and writing for polygon feature collections.

use serde_json::{json, Map, Value};

use super::polygon::{Point, Polygon, Region};
use super::projection::Projection;
use super::AtomGrid;
use crate::error::{Error, Result};

/// A polygon as it appears in the file: rings of raw coordinates.
pub type RawPolygon = Vec<Vec<Point>>;

#[derive(Debug, Clone)]
pub struct RawFeature {
    pub properties: Map<String, Value>,
    pub polygons: Vec<RawPolygon>,
}

#[derive(Debug, Clone)]
pub struct RawCollection {
    pub features: Vec<RawFeature>,
    /// Set when the file declares planar-mile coordinates via its `crs` member.
    pub planar: bool,
}

fn err(msg: impl Into<String>) -> Error {
    Error::GeoJson(msg.into())
}

fn parse_position(v: &Value) -> Result<Point> {
    let arr = v.as_array().ok_or_else(|| err("position is not an array"))?;
    if arr.len() < 2 {
        return Err(err("position needs at least two numbers"));
    }
    let x = arr[0].as_f64().ok_or_else(|| err("non-numeric coordinate"))?;
    let y = arr[1].as_f64().ok_or_else(|| err("non-numeric coordinate"))?;
    if !x.is_finite() || !y.is_finite() {
        return Err(err("non-finite coordinate"));
    }
    Ok(Point::new(x, y))
}

fn parse_rings(v: &Value) -> Result<RawPolygon> {
    v.as_array()
        .ok_or_else(|| err("polygon coordinates are not an array"))?
        .iter()
        .map(|ring| {
            ring.as_array()
                .ok_or_else(|| err("ring is not an array"))?
                .iter()
                .map(parse_position)
                .collect()
        })
        .collect()
}

fn parse_geometry(g: &Value) -> Result<Vec<RawPolygon>> {
    let ty = g
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| err("geometry without type"))?;
    let coords = g.get("coordinates");
    match ty {
        "Polygon" => Ok(vec![parse_rings(
            coords.ok_or_else(|| err("Polygon without coordinates"))?,
        )?]),
        "MultiPolygon" => coords
            .and_then(Value::as_array)
            .ok_or_else(|| err("MultiPolygon without coordinates"))?
            .iter()
            .map(parse_rings)
            .collect(),
        other => Err(err(format!("unsupported geometry type {other}"))),
    }
}

fn declares_planar(v: &Value) -> bool {
    v.get("crs")
        .and_then(|c| c.get("properties"))
        .and_then(|p| p.get("name"))
        .and_then(Value::as_str)
        == Some(Projection::PLANAR_CRS_NAME)
}

/// Parses a FeatureCollection, a single Feature, or a bare geometry.
pub fn parse_collection(text: &str) -> Result<RawCollection> {
    let v: Value = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
    let planar = declares_planar(&v);
    let ty = v
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| err("top-level object without type"))?;
    let features = match ty {
        "FeatureCollection" => v
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| err("FeatureCollection without features"))?
            .iter()
            .map(parse_feature)
            .collect::<Result<Vec<_>>>()?,
        "Feature" => vec![parse_feature(&v)?],
        _ => vec![RawFeature {
            properties: Map::new(),
            polygons: parse_geometry(&v)?,
        }],
    };
    Ok(RawCollection { features, planar })
}

fn parse_feature(f: &Value) -> Result<RawFeature> {
    if f.get("type").and_then(Value::as_str) != Some("Feature") {
        return Err(err("collection member is not a Feature"));
    }
    let geometry = f.get("geometry").ok_or_else(|| err("feature without geometry"))?;
    let properties = match f.get("properties") {
        Some(Value::Object(m)) => m.clone(),
        _ => Map::new(),
    };
    Ok(RawFeature {
        properties,
        polygons: parse_geometry(geometry)?,
    })
}

/// Projects raw rings and validates them as polygons.
pub fn to_polygons(raw: &[RawPolygon], projection: &Projection) -> Result<Vec<Polygon>> {
    raw.iter()
        .map(|rings| {
            let mut it = rings
                .iter()
                .map(|r| r.iter().map(|p| projection.project(*p)).collect::<Vec<_>>());
            let exterior = it.next().ok_or_else(|| err("polygon without rings"))?;
            Polygon::new(exterior, it.collect())
        })
        .collect()
}

/// Chooses the projection for a boundary file: planar when declared,
/// otherwise an equal-area plane centered on the lon/lat area centroid.
pub fn boundary_projection(coll: &RawCollection) -> Projection {
    if coll.planar {
        return Projection::PlanarMiles;
    }
    let polys: Vec<Polygon> = coll
        .features
        .iter()
        .flat_map(|f| f.polygons.iter())
        .filter_map(|rings| {
            let mut it = rings.iter().cloned();
            it.next()
                .map(|ext| Polygon::from_rings_unchecked(ext, it.collect()))
        })
        .collect();
    let c = Region::from_polygons(&polys).centroid();
    Projection::AzimuthalEqualArea {
        lon0: c.x,
        lat0: c.y,
    }
}

/// Reads a city boundary into projected polygons.
pub fn read_boundary(text: &str) -> Result<(Vec<Polygon>, Projection)> {
    let coll = parse_collection(text)?;
    let projection = boundary_projection(&coll);
    let mut polys = Vec::new();
    for f in &coll.features {
        polys.extend(to_polygons(&f.polygons, &projection)?);
    }
    if polys.is_empty() {
        return Err(err("boundary contains no polygons"));
    }
    Ok((polys, projection))
}

fn ring_json(ring: &[Point], projection: &Projection) -> Value {
    Value::Array(
        ring.iter()
            .map(|p| {
                let q = projection.unproject(*p);
                json!([q.x, q.y])
            })
            .collect(),
    )
}

/// MultiPolygon geometry in the file coordinate system of `projection`.
pub fn multipolygon_json(polys: &[Polygon], projection: &Projection) -> Value {
    let coords: Vec<Value> = polys
        .iter()
        .map(|p| Value::Array(p.rings().map(|r| ring_json(r, projection)).collect()))
        .collect();
    json!({ "type": "MultiPolygon", "coordinates": coords })
}

pub fn feature(geometry: Value, properties: Map<String, Value>) -> Value {
    json!({ "type": "Feature", "geometry": geometry, "properties": properties })
}

pub fn feature_collection(features: Vec<Value>, projection: &Projection) -> Value {
    let mut fc = Map::new();
    fc.insert("type".into(), json!("FeatureCollection"));
    if *projection == Projection::PlanarMiles {
        fc.insert(
            "crs".into(),
            json!({ "type": "name", "properties": { "name": Projection::PLANAR_CRS_NAME } }),
        );
    }
    fc.insert("features".into(), Value::Array(features));
    Value::Object(fc)
}

/// One feature per atom carrying {atom_id, area_sq_mi, row, col} plus any
/// extra properties supplied by `extra`.
pub fn atoms_collection(
    grid: &AtomGrid,
    mut extra: impl FnMut(usize, &mut Map<String, Value>),
) -> Value {
    let features = grid
        .atoms
        .iter()
        .map(|a| {
            let mut props = Map::new();
            props.insert("atom_id".into(), json!(a.id));
            props.insert("area_sq_mi".into(), json!(a.area));
            props.insert("row".into(), json!(a.grid_coord.row));
            props.insert("col".into(), json!(a.grid_coord.col));
            extra(a.id, &mut props);
            feature(multipolygon_json(&a.cell, &grid.projection), props)
        })
        .collect();
    feature_collection(features, &grid.projection)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_square_round_trip() {
        let text = r#"{"type":"FeatureCollection",
            "crs":{"type":"name","properties":{"name":"urn:beatdesign:planar-miles"}},
            "features":[{"type":"Feature","properties":{},
              "geometry":{"type":"Polygon","coordinates":[[[0,0],[2,0],[2,1],[0,1],[0,0]]]}}]}"#;
        let (polys, proj) = read_boundary(text).unwrap();
        assert_eq!(proj, Projection::PlanarMiles);
        assert!((polys[0].area() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lonlat_boundary_is_projected_to_miles() {
        // roughly 0.01° x 0.01° near Atlanta
        let text = r#"{"type":"Polygon","coordinates":[[[-84.60,33.60],[-84.59,33.60],[-84.59,33.61],[-84.60,33.61],[-84.60,33.60]]]}"#;
        let (polys, proj) = read_boundary(text).unwrap();
        assert!(matches!(proj, Projection::AzimuthalEqualArea { .. }));
        let area = polys[0].area();
        // 0.691 mi (lat) * 0.576 mi (lon at 33.6°)
        assert!((area - 0.3978).abs() < 0.002, "{area}");
    }

    #[test]
    fn rejects_unsupported_geometry() {
        let text = r#"{"type":"Point","coordinates":[0,0]}"#;
        assert!(matches!(read_boundary(text), Err(Error::GeoJson(_))));
    }

    #[test]
    fn malformed_json_is_an_error_not_a_panic() {
        for text in ["", "{", r#"{"type":"Polygon","coordinates":[[["a",1]]]}"#, "[]"] {
            assert!(read_boundary(text).is_err());
        }
    }
}
