//! Fuzz entry points. Each takes raw bytes, must never panic, and checks a
//! round trip wherever a writer exists for the parsed value. The return
//! value says whether the input was accepted.

use beatdesign_cli::config::PipelineConfig;
use beatdesign_core::calendar::{parse_offset, YearMonth};
use beatdesign_core::forecast::RateMatrix;
use beatdesign_core::geo::geojson::read_boundary;
use beatdesign_core::geo::{AtomGrid, Projection};
use beatdesign_core::ingest::calls::{parse_calls, parse_timestamp, CallParseOptions};
use beatdesign_core::ingest::census::{parse_block_geometry, parse_census_table};
use beatdesign_core::ingest::synthetic::SyntheticSpec;
use beatdesign_core::interp::CensusTensor;
use beatdesign_core::mip::lp::parse_lp;
use beatdesign_core::partition::BeatDesign;
use beatdesign_core::report::{self, read_heat_surface};
use beatdesign_core::workload::WorkloadPanel;

/// Every target, by the name of its fuzz binary and corpus directory.
pub const TARGETS: &[(&str, fn(&[u8]) -> bool)] = &[
    ("boundary_geojson", boundary_geojson),
    ("block_geometry", block_geometry),
    ("calls_csv", calls_csv),
    ("census_table", census_table),
    ("lp_reader", lp_reader),
    ("tensor_cache", tensor_cache),
    ("tensor_csv", tensor_csv),
    ("design_csv", design_csv),
    ("rate_csv", rate_csv),
    ("workload_panel", workload_panel),
    ("atom_grid_json", atom_grid_json),
    ("pipeline_config", pipeline_config),
    ("synth_spec", synth_spec),
    ("calendar", calendar),
    ("heat_surface", heat_surface),
];

fn text(data: &[u8]) -> Option<&str> {
    std::str::from_utf8(data).ok()
}

pub fn boundary_geojson(data: &[u8]) -> bool {
    text(data).is_some_and(|s| read_boundary(s).is_ok())
}

pub fn block_geometry(data: &[u8]) -> bool {
    let Some(s) = text(data) else { return false };
    let planar = parse_block_geometry(s, &Projection::PlanarMiles).is_ok();
    let lonlat = Projection::AzimuthalEqualArea {
        lon0: -87.6,
        lat0: 41.8,
    };
    parse_block_geometry(s, &lonlat).is_ok() || planar
}

pub fn calls_csv(data: &[u8]) -> bool {
    parse_calls(data, "<fuzz>", CallParseOptions::default()).is_ok()
}

pub fn census_table(data: &[u8]) -> bool {
    parse_census_table(data, "<fuzz>").is_ok()
}

pub fn lp_reader(data: &[u8]) -> bool {
    let Some(s) = text(data) else { return false };
    let Ok(lp) = parse_lp(s) else { return false };
    let mut out = Vec::new();
    lp.write(&mut out).expect("parsed LP writes");
    let written = String::from_utf8(out).expect("LP output is UTF-8");
    let again = parse_lp(&written).unwrap_or_else(|e| panic!("written LP does not reparse: {e}\n{written}"));
    let mut out2 = Vec::new();
    again.write(&mut out2).expect("reparsed LP writes");
    assert_eq!(written.as_bytes(), &out2[..], "LP writer is not idempotent");
    true
}

pub fn tensor_cache(data: &[u8]) -> bool {
    let Ok(t) = CensusTensor::decode(data) else { return false };
    let bytes = t.encode();
    let back = CensusTensor::decode(&bytes).expect("encoded tensor decodes");
    assert_eq!(back.encode(), bytes);
    true
}

pub fn tensor_csv(data: &[u8]) -> bool {
    let Ok(t) = CensusTensor::read_csv(data) else { return false };
    let mut out = Vec::new();
    t.write_csv(&mut out).expect("tensor writes");
    let back = CensusTensor::read_csv(&out[..]).expect("written tensor csv reads");
    assert_eq!(back.encode(), t.encode());
    true
}

pub fn design_csv(data: &[u8]) -> bool {
    let Ok(d) = BeatDesign::read_csv(data) else { return false };
    let mut out = Vec::new();
    d.write_csv(&mut out).expect("design writes");
    let back = BeatDesign::read_csv(&out[..]).expect("written design reads");
    assert_eq!(back, d);
    true
}

pub fn rate_csv(data: &[u8]) -> bool {
    let Ok(m) = RateMatrix::read_csv(data) else { return false };
    let mut out = Vec::new();
    m.write_csv(&mut out, "rate").expect("rates write");
    let back = RateMatrix::read_csv(&out[..]).expect("written rates read");
    let mut out2 = Vec::new();
    back.write_csv(&mut out2, "rate").expect("rates write");
    assert_eq!(out, out2);
    true
}

/// Input is the panel CSV and its JSON sidecar separated by a NUL byte.
pub fn workload_panel(data: &[u8]) -> bool {
    let split = data.iter().position(|&b| b == 0).unwrap_or(data.len());
    let (csv, rest) = data.split_at(split);
    let Some(sidecar) = text(rest.get(1..).unwrap_or_default()) else { return false };
    let Ok(p) = WorkloadPanel::read(csv, sidecar) else { return false };
    let mut out = Vec::new();
    p.write_csv(&mut out).expect("panel writes");
    let meta = p.sidecar_json().to_string();
    let back = WorkloadPanel::read(&out[..], &meta).expect("written panel reads");
    let mut out2 = Vec::new();
    back.write_csv(&mut out2).expect("panel writes");
    assert_eq!(out, out2);
    true
}

pub fn atom_grid_json(data: &[u8]) -> bool {
    let Some(Ok(g)) = text(data).map(AtomGrid::from_json_str) else { return false };
    let out = serde_json::to_string(&g).expect("grid serializes");
    let back = AtomGrid::from_json_str(&out).expect("written grid reads");
    assert_eq!(serde_json::to_string(&back).expect("grid serializes"), out);
    true
}

/// Tried as TOML and as JSON.
pub fn pipeline_config(data: &[u8]) -> bool {
    let Some(s) = text(data) else { return false };
    let mut accepted = false;
    for json in [false, true] {
        if let Ok(cfg) = PipelineConfig::parse(s, json) {
            let _ = cfg.violations();
            let back = PipelineConfig::parse(&cfg.to_toml(), false).expect("written config parses");
            assert_eq!(back, cfg);
            accepted = true;
        }
    }
    accepted
}

/// Parsed and validated only; generation cost scales with the spec.
pub fn synth_spec(data: &[u8]) -> bool {
    let Ok(spec) = serde_json::from_slice::<SyntheticSpec>(data) else { return false };
    let _ = spec.validate();
    true
}

/// Timestamps, UTC offsets and year-month labels, one per line.
pub fn calendar(data: &[u8]) -> bool {
    let Some(s) = text(data) else { return false };
    let mut accepted = false;
    for line in s.lines() {
        if let Ok(off) = parse_offset(line) {
            let _ = parse_timestamp(line, off);
            accepted = true;
        }
        accepted |= parse_timestamp(line, CallParseOptions::default().naive_offset).is_ok();
        if let Ok(ym) = line.parse::<YearMonth>() {
            assert_eq!(ym.to_string().parse::<YearMonth>().ok(), Some(ym));
            assert_eq!(YearMonth::from_index(ym.index()), ym);
            accepted = true;
        }
    }
    accepted
}

/// Arbitrary JSON goes to the surface reader; an atom grid is also written
/// out as a surface and read back.
pub fn heat_surface(data: &[u8]) -> bool {
    let Ok(v) = serde_json::from_slice::<serde_json::Value>(data) else { return false };
    let mut accepted = read_heat_surface(&v, "hours_per_day").is_ok();
    if let Some(Ok(g)) = text(data).map(AtomGrid::from_json_str) {
        let values: Vec<f64> = (0..g.len()).map(|i| i as f64 * 0.5).collect();
        let surface = report::heat_surface(&values, &g, "value").expect("matching lengths");
        assert_eq!(read_heat_surface(&surface, "value").expect("surface reads"), values);
        accepted = true;
    }
    accepted
}
