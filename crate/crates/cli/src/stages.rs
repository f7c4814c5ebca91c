//! One function per subcommand. Each reads the artifacts of earlier stages
//! from the output directory and returns the files it wrote.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use beatdesign_core::calendar::{default_offset, parse_offset, YearMonth};
use beatdesign_core::fixtures::city_replica;
use beatdesign_core::forecast::{
    build_weights, fit, forecast_workload, predict, PredictOptions, RateMatrix, SpatialLagModel,
};
use beatdesign_core::geo::geojson::{atoms_collection, read_boundary};
use beatdesign_core::geo::{atomize as atomize_grid, AtomGrid, Region};
use beatdesign_core::ingest::calls::{load_calls, CallParseOptions, CallRecord};
use beatdesign_core::ingest::census::{join_census, parse_block_geometry, parse_census_table};
use beatdesign_core::ingest::synthetic::{generate_synthetic, SyntheticSpec, SYNTH_FILES};
use beatdesign_core::interp::{interpolate as interpolate_tensor, overlay, resolve_modes, CensusTensor};
use beatdesign_core::mip::{build_model, ClosedForm, CountReport, MipMode, MipParams, Reconciliation};
use beatdesign_core::optimize::{anneal as anneal_design, greedy_expand, write_traces_csv, AnnealResult, GreedyOptions, GreedyResult};
use beatdesign_core::partition::{design_geojson, BeatDesign, CompactnessParams};
use beatdesign_core::report::{beat_table, heat_surface, write_elbow_csv, AnnualWorkload, Summary};
use beatdesign_core::workload::{call_window, count_calls, estimate_workload, hours_per_day, WorkloadPanel};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{CliError, StageExt};

pub const ATOMS_JSON: &str = "atoms.json";
pub const ATOMS_GEOJSON: &str = "atoms.geojson";
pub const TENSOR_CACHE: &str = "census_tensor.bin";
pub const INTERP_DIAGNOSTICS: &str = "interp_diagnostics.json";
pub const WORKLOAD_CSV: &str = "workload.csv";
pub const WORKLOAD_SIDECAR: &str = "workload.json";
pub const MODEL_JSON: &str = "model.json";
pub const FORECAST_RATES: &str = "forecast_rates.csv";
pub const FORECAST_WORKLOAD: &str = "forecast_workload.csv";
pub const GREEDY_DESIGN: &str = "greedy_design.csv";
pub const ELBOW_CSV: &str = "elbow.csv";
pub const GREEDY_JSON: &str = "greedy.json";
pub const DESIGN_CSV: &str = "design.csv";
pub const ANNEAL_TRACE: &str = "anneal_trace.csv";
pub const ANNEAL_JSON: &str = "anneal.json";
pub const MIP_LP: &str = "model.lp";
pub const MIP_COUNTS: &str = "mip_counts.json";
pub const BEAT_TABLE: &str = "beat_table.csv";
pub const SUMMARY_MD: &str = "summary.md";
pub const DESIGN_GEOJSON: &str = "design.geojson";
pub const HEAT_GEOJSON: &str = "workload_heat.geojson";
pub const PIPELINE_TOML: &str = "pipeline.toml";

/// Outputs of each stage, in pipeline order.
pub const STAGE_OUTPUTS: [(&str, &[&str]); 9] = [
    ("atomize", &[ATOMS_JSON, ATOMS_GEOJSON]),
    ("interpolate", &[TENSOR_CACHE, INTERP_DIAGNOSTICS]),
    ("workload", &[WORKLOAD_CSV, WORKLOAD_SIDECAR]),
    ("fit", &[MODEL_JSON]),
    ("predict", &[FORECAST_RATES, FORECAST_WORKLOAD]),
    ("greedy", &[GREEDY_DESIGN, ELBOW_CSV, GREEDY_JSON]),
    ("anneal", &[DESIGN_CSV, ANNEAL_TRACE, ANNEAL_JSON]),
    ("export-mip", &[MIP_LP, MIP_COUNTS]),
    ("report", &[BEAT_TABLE, SUMMARY_MD, DESIGN_GEOJSON, HEAT_GEOJSON]),
];

/// The bundled 20×20 synthetic spec.
pub const BUNDLED_SPEC: &str = include_str!("../assets/synth_20x20.json");

fn io_err(stage: &str, path: &Path, e: std::io::Error) -> CliError {
    CliError::new(stage, "io", format!("{}: {e}", path.display())).with("path", path)
}

fn create(stage: &str, path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(stage, path, e))
}

fn open(stage: &str, path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| {
        let err = io_err(stage, path, e);
        CliError {
            code: "missing_artifact".into(),
            message: format!("{} (run the stage that produces it first)", err.message),
            ..err
        }
    })
}

fn read_text(stage: &str, path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_err(stage, path, e))
}

fn write_json<T: Serialize>(stage: &str, path: &Path, value: &T) -> Result<(), CliError> {
    let w = create(stage, path)?;
    serde_json::to_writer_pretty(w, value).map_err(|e| CliError::new(stage, "json", e.to_string()))
}

fn read_json<T: serde::de::DeserializeOwned>(stage: &str, path: &Path) -> Result<T, CliError> {
    let f = open(stage, path)?;
    serde_json::from_reader(std::io::BufReader::new(f))
        .map_err(|e| CliError::new(stage, "json", format!("{}: {e}", path.display())).with("path", path))
}

fn required<'a>(stage: &str, name: &str, p: &'a Option<PathBuf>) -> Result<&'a Path, CliError> {
    p.as_deref()
        .ok_or_else(|| CliError::new(stage, "missing_path", format!("config has no paths.{name}")))
}

fn ensure_dir(stage: &str, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(stage, dir, e))
}

/// Everything a stage needs: the validated config and its output folder.
pub struct Pipeline {
    pub cfg: PipelineConfig,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self, CliError> {
        cfg.validate()?;
        ensure_dir("config", cfg.out_dir())?;
        Ok(Pipeline { cfg })
    }

    fn out(&self, name: &str) -> PathBuf {
        self.cfg.out_dir().join(name)
    }

    fn grid(&self, stage: &str) -> Result<AtomGrid, CliError> {
        let p = self.out(ATOMS_JSON);
        open(stage, &p)?;
        AtomGrid::load_json(&p).stage(stage)
    }

    fn offset(&self) -> chrono::FixedOffset {
        self.cfg
            .workload
            .utc_offset
            .as_deref()
            .and_then(|o| parse_offset(o).ok())
            .unwrap_or_else(default_offset)
    }

    fn calls(&self, stage: &str) -> Result<Vec<CallRecord>, CliError> {
        let path = required(stage, "calls", &self.cfg.paths.calls)?;
        let load = load_calls(
            path,
            CallParseOptions {
                naive_offset: self.offset(),
            },
        )
        .stage(stage)?;
        Ok(self.cfg.workload.categories.apply(load.records))
    }

    /// Panel window: configured, or the months the calls span.
    fn window(&self, stage: &str, calls: Option<&[CallRecord]>) -> Result<(YearMonth, usize), CliError> {
        if let (Some(f), Some(n)) = (self.cfg.workload.first_month, self.cfg.workload.n_months) {
            return Ok((f, n));
        }
        let owned;
        let calls = match calls {
            Some(c) => c,
            None => {
                owned = self.calls(stage)?;
                &owned
            }
        };
        call_window(calls, self.offset()).ok_or_else(|| CliError::new(stage, "no_calls", "no calls to define the month window"))
    }

    fn panel(&self, stage: &str) -> Result<WorkloadPanel, CliError> {
        let csv = open(stage, &self.out(WORKLOAD_CSV))?;
        let sidecar = read_text(stage, &self.out(WORKLOAD_SIDECAR))?;
        WorkloadPanel::read(std::io::BufReader::new(csv), &sidecar).stage(stage)
    }

    fn tensor(&self, stage: &str) -> Result<CensusTensor, CliError> {
        let p = self.out(TENSOR_CACHE);
        open(stage, &p)?;
        CensusTensor::load_cache(&p).stage(stage)
    }

    /// Forecast workload as hours/day, one row per forecast month.
    fn forecast_rows(&self, stage: &str) -> Result<Vec<Vec<f64>>, CliError> {
        let f = open(stage, &self.out(FORECAST_WORKLOAD))?;
        let m = RateMatrix::read_csv(std::io::BufReader::new(f)).stage(stage)?;
        Ok((0..m.n_months)
            .map(|l| (0..m.n_atoms).map(|i| hours_per_day(m.get(i, l), m.month(l))).collect())
            .collect())
    }

    fn read_design(&self, stage: &str, path: &Path) -> Result<BeatDesign, CliError> {
        BeatDesign::read_csv(std::io::BufReader::new(open(stage, path)?)).stage(stage)
    }

    fn write_design(&self, stage: &str, name: &str, d: &BeatDesign) -> Result<PathBuf, CliError> {
        let p = self.out(name);
        d.write_csv(create(stage, &p)?).stage(stage)?;
        Ok(p)
    }

    pub fn atomize(&self) -> Result<Vec<PathBuf>, CliError> {
        let s = "atomize";
        let path = required(s, "boundary", &self.cfg.paths.boundary)?;
        let (polys, projection) = read_boundary(&read_text(s, path)?).stage(s)?;
        let grid = atomize_grid(&polys, self.cfg.atoms.side_length, self.cfg.grid_kind(), projection).stage(s)?;
        let (a, b) = (self.out(ATOMS_JSON), self.out(ATOMS_GEOJSON));
        grid.save_json(&a).stage(s)?;
        write_json(s, &b, &atoms_collection(&grid, |_, _| {}))?;
        Ok(vec![a, b])
    }

    pub fn interpolate(&self) -> Result<Vec<PathBuf>, CliError> {
        let s = "interpolate";
        let grid = self.grid(s)?;
        let geo_path = required(s, "census_blocks", &self.cfg.paths.census_blocks)?;
        let table_path = required(s, "census_table", &self.cfg.paths.census_table)?;
        let blocks = parse_block_geometry(&read_text(s, geo_path)?, &grid.projection).stage(s)?;
        let (names, table) =
            parse_census_table(open(s, table_path)?, &table_path.display().to_string()).stage(s)?;
        let census = join_census(&blocks, names.clone(), table);
        let weights = overlay(&grid, &blocks, &grid.projection).stage(s)?;
        let modes = resolve_modes(&names, &self.cfg.interp.modes, self.cfg.interp.all_extensive);

        // one extra month per lag so the first panel month has regressors
        let (first, n) = self.window(s, None)?;
        let p = self.cfg.forecast.p;
        let block_centroids: Vec<_> = blocks.iter().map(|b| Region::from_polygons(&b.geometry).centroid()).collect();
        let atom_centroids: Vec<_> = grid.atoms.iter().map(|a| a.centroid).collect();
        let (tensor, diag) = interpolate_tensor(
            &weights,
            &census.records,
            &names,
            &modes,
            first.offset(-(p as i64)),
            n + p,
            Some(&block_centroids),
            Some(&atom_centroids),
        )
        .stage(s)?;
        let (a, b) = (self.out(TENSOR_CACHE), self.out(INTERP_DIAGNOSTICS));
        tensor.save_cache(&a).stage(s)?;
        write_json(
            s,
            &b,
            &serde_json::json!({ "modes": modes, "warnings": census.warnings, "diagnostics": diag }),
        )?;
        Ok(vec![a, b])
    }

    pub fn workload(&self) -> Result<Vec<PathBuf>, CliError> {
        let s = "workload";
        let grid = self.grid(s)?;
        let calls = self.calls(s)?;
        let window = self.window(s, Some(&calls))?;
        let counts = count_calls(&grid, &calls, Some(window), self.offset());
        let panel = estimate_workload(&counts, &calls, self.cfg.workload.tau_mode).stage(s)?;
        let (a, b) = (self.out(WORKLOAD_CSV), self.out(WORKLOAD_SIDECAR));
        panel.write_csv(create(s, &a)?).stage(s)?;
        write_json(s, &b, &panel.sidecar_json())?;
        Ok(vec![a, b])
    }

    pub fn fit(&self) -> Result<Vec<PathBuf>, CliError> {
        let s = "fit";
        let grid = self.grid(s)?;
        let panel = self.panel(s)?;
        let x = self.tensor(s)?;
        let model = fit(
            &RateMatrix::from_counts(&panel),
            &x,
            &build_weights(&grid),
            &self.cfg.forecast.fit_options(),
        )
        .stage(s)?;
        let p = self.out(MODEL_JSON);
        write_json(s, &p, &model)?;
        Ok(vec![p])
    }

    pub fn predict(&self) -> Result<Vec<PathBuf>, CliError> {
        let s = "predict";
        let grid = self.grid(s)?;
        let panel = self.panel(s)?;
        let x = self.tensor(s)?;
        let model: SpatialLagModel = read_json(s, &self.out(MODEL_JSON))?;
        let opts = PredictOptions {
            horizon: self.cfg.forecast.horizon,
            clamp_negative: true,
            extension: self.cfg.forecast.extension,
        };
        let rates = predict(&model, &RateMatrix::from_counts(&panel), &x, &build_weights(&grid), &opts).stage(s)?;
        let hours = forecast_workload(&rates, panel.tau_hours);
        let (a, b) = (self.out(FORECAST_RATES), self.out(FORECAST_WORKLOAD));
        rates.write_csv(create(s, &a)?, "rate").stage(s)?;
        hours.write_csv(create(s, &b)?, "hours").stage(s)?;
        Ok(vec![a, b])
    }

    pub fn greedy(&self) -> Result<Vec<PathBuf>, CliError> {
        let s = "greedy";
        let grid = self.grid(s)?;
        let w = mean_row(&self.forecast_rows(s)?);
        let start = match &self.cfg.paths.existing_design {
            Some(p) => self.read_design(s, p)?,
            None => BeatDesign::single(grid.len()),
        };
        let opts = GreedyOptions {
            workload_weighted: self.cfg.design.workload_weighted,
        };
        let res = greedy_expand(&start, &grid, &w, self.cfg.design.k_target, &opts).stage(s)?;
        let a = self.write_design(s, GREEDY_DESIGN, res.last())?;
        let b = self.out(ELBOW_CSV);
        write_elbow_csv(create(s, &b)?, &res.elbow).stage(s)?;
        let c = self.out(GREEDY_JSON);
        write_json(s, &c, &res)?;
        Ok(vec![a, b, c])
    }

    pub fn anneal(&self) -> Result<Vec<PathBuf>, CliError> {
        let s = "anneal";
        let grid = self.grid(s)?;
        let rows = self.forecast_rows(s)?;
        let start = self.read_design(s, &self.out(GREEDY_DESIGN))?;
        let res = anneal_design(&start, &grid, &rows, &self.cfg.anneal_config()).stage(s)?;
        let a = self.write_design(s, DESIGN_CSV, &res.best)?;
        let b = self.out(ANNEAL_TRACE);
        write_traces_csv(create(s, &b)?, &res.traces).stage(s)?;
        let c = self.out(ANNEAL_JSON);
        write_json(s, &c, &res)?;
        Ok(vec![a, b, c])
    }

    /// Writes the LP (unless `count_only`) and the size report.
    pub fn export_mip(&self, args: &MipArgs) -> Result<(Vec<PathBuf>, CountReport), CliError> {
        let s = "export-mip";
        let grid = self.grid(s)?;
        let w = mean_row(&self.forecast_rows(s)?);
        let params = MipParams {
            k: args.k.unwrap_or(self.cfg.design.k_target),
            q: self.cfg.mip.q,
            mode: args.mode.unwrap_or(self.cfg.mip.mode),
            compactness: if self.cfg.mip.compactness {
                self.cfg.anneal.compactness
            } else {
                CompactnessParams::disabled()
            },
            dense_cap: self.cfg.mip.dense_cap.unwrap_or(MipParams::default().dense_cap),
        };
        let model = build_model(&grid, &w, &params, args.count_only).stage(s)?;
        let report = model.count_report();
        let mut out = Vec::new();
        if !args.count_only {
            let p = self.out(MIP_LP);
            model.write_lp(create(s, &p)?).stage(s)?;
            out.push(p);
        }
        let p = self.out(MIP_COUNTS);
        write_json(s, &p, &report)?;
        out.push(p);
        Ok((out, report))
    }

    pub fn report(&self) -> Result<Vec<PathBuf>, CliError> {
        let s = "report";
        let grid = self.grid(s)?;
        let panel = self.panel(s)?;
        let model: SpatialLagModel = read_json(s, &self.out(MODEL_JSON))?;
        let greedy: GreedyResult = read_json(s, &self.out(GREEDY_JSON))?;
        let annealed: AnnealResult = read_json(s, &self.out(ANNEAL_JSON))?;
        let f = open(s, &self.out(FORECAST_WORKLOAD))?;
        let forecast = RateMatrix::read_csv(std::io::BufReader::new(f)).stage(s)?;

        let mut designs = Vec::new();
        if let Some(p) = &self.cfg.paths.existing_design {
            designs.push(("existing".to_string(), self.read_design(s, p)?));
        }
        designs.push(("greedy".to_string(), greedy.last().clone()));
        designs.push(("annealed".to_string(), annealed.best.clone()));

        let observed: BTreeSet<i32> = (0..panel.n_months).map(|l| panel.month(l).year).collect();
        let mut years = Vec::new();
        for &y in &observed {
            years.push(AnnualWorkload::from_panel(&panel, y).stage(s)?);
        }
        let predicted: BTreeSet<i32> = (0..forecast.n_months).map(|l| forecast.month(l).year).collect();
        for &y in predicted.difference(&observed) {
            years.push(AnnualWorkload::from_monthly_hours(&forecast, y).stage(s)?);
        }
        let table = beat_table(&designs, &years).stage(s)?;

        let mut notes = vec![format!(
            "observed years {:?}; forecast-only years {:?}",
            observed,
            predicted.difference(&observed).collect::<Vec<_>>()
        )];
        if let Some(msg) = &greedy.stopped {
            notes.push(format!("greedy split stopped early: {msg}"));
        }
        if panel.unmatched > 0 || panel.outside_window > 0 {
            notes.push(format!(
                "{} calls outside every atom, {} outside the month window",
                panel.unmatched, panel.outside_window
            ));
        }
        let summary = Summary {
            title: "Beat design report",
            table: Some(&table),
            elbow: Some(&greedy.elbow),
            model: Some(&model),
            anneal: Some(&annealed),
            notes,
        };

        let (a, b, c, d) = (
            self.out(BEAT_TABLE),
            self.out(SUMMARY_MD),
            self.out(DESIGN_GEOJSON),
            self.out(HEAT_GEOJSON),
        );
        table.write_csv(create(s, &a)?).stage(s)?;
        std::fs::write(&b, summary.render()).map_err(|e| io_err(s, &b, e))?;
        write_json(s, &c, &design_geojson(&annealed.best, &grid).stage(s)?)?;
        let mean_forecast = mean_row(
            &(0..forecast.n_months)
                .map(|l| (0..forecast.n_atoms).map(|i| hours_per_day(forecast.get(i, l), forecast.month(l))).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        );
        write_json(s, &d, &heat_surface(&mean_forecast, &grid, "hours_per_day").stage(s)?)?;
        Ok(vec![a, b, c, d])
    }

    pub fn run_all(&self) -> Result<Vec<PathBuf>, CliError> {
        let mut out = Vec::new();
        out.extend(self.atomize()?);
        out.extend(self.interpolate()?);
        out.extend(self.workload()?);
        out.extend(self.fit()?);
        out.extend(self.predict()?);
        out.extend(self.greedy()?);
        out.extend(self.anneal()?);
        out.extend(self.export_mip(&MipArgs::default())?.0);
        out.extend(self.report()?);
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MipArgs {
    pub mode: Option<MipMode>,
    pub k: Option<usize>,
    pub count_only: bool,
}

fn mean_row(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.first().map_or(0, Vec::len);
    (0..n).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / rows.len() as f64).collect()
}

/// Dense-mode sizes from (I, K) alone, without a grid.
pub fn closed_form_report(n_atoms: u64, k: u64) -> (ClosedForm, Reconciliation) {
    (ClosedForm::new(n_atoms, k), Reconciliation::new())
}

/// Size report for the built-in 1187-atom city replica.
pub fn replica_report(mode: MipMode, k: usize) -> Result<CountReport, CliError> {
    let s = "export-mip";
    let r = city_replica().stage(s)?;
    let params = MipParams {
        k,
        mode,
        ..Default::default()
    };
    Ok(build_model(&r.grid, &r.hours_per_day, &params, true).stage(s)?.count_report())
}

/// Writes the synthetic instance and a ready-to-run `pipeline.toml`.
pub fn synth(spec_text: Option<&str>, seed: Option<u64>, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let s = "synth";
    let mut spec: SyntheticSpec = serde_json::from_str(spec_text.unwrap_or(BUNDLED_SPEC))
        .map_err(|e| CliError::new(s, "invalid_spec", e.to_string()))?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let problems = spec.validate();
    if !problems.is_empty() {
        return Err(CliError::new(s, "invalid_spec", format!("{} problem(s) in spec", problems.len()))
            .with("violations", problems));
    }
    let inst = generate_synthetic(&spec).stage(s)?;
    let mut out = inst.write_to(out_dir).stage(s)?;

    let existing_k = inst.existing.k();
    let mut cfg = PipelineConfig {
        seed: Some(spec.seed),
        ..Default::default()
    };
    cfg.paths.boundary = Some(SYNTH_FILES[0].into());
    cfg.paths.calls = Some(SYNTH_FILES[1].into());
    cfg.paths.census_blocks = Some(SYNTH_FILES[2].into());
    cfg.paths.census_table = Some(SYNTH_FILES[3].into());
    cfg.paths.existing_design = Some(SYNTH_FILES[4].into());
    cfg.paths.out_dir = Some("out".into());
    cfg.atoms.side_length = spec.side;
    cfg.workload.utc_offset = Some(spec.utc_offset.clone());
    cfg.design.k_target = cfg.design.k_target.max(existing_k).min(inst.grid.len());
    let p = out_dir.join(PIPELINE_TOML);
    std::fs::write(&p, cfg.to_toml()).map_err(|e| io_err(s, &p, e))?;
    out.push(p);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_spec_is_the_library_default() {
        let spec: SyntheticSpec = serde_json::from_str(BUNDLED_SPEC).unwrap();
        assert_eq!(spec, SyntheticSpec::default());
        assert_eq!((spec.rows, spec.cols), (20, 20));
    }

    #[test]
    fn closed_forms_match_published_totals() {
        let (cf, rec) = closed_form_report(1187, 15);
        assert_eq!(cf.total_variables, 21_170_145);
        assert_eq!(cf.constraint_identity, 63_421_410);
        assert!(rec.variables_match && rec.constraints_match);
    }

    #[test]
    fn mean_row_averages_columns() {
        assert_eq!(mean_row(&[vec![1.0, 2.0], vec![3.0, 6.0]]), vec![2.0, 4.0]);
    }
}
