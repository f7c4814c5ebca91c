//! Evaluation artifacts: per-beat workload tables, elbow curves, heat
//! surfaces and a Markdown summary.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::forecast::{RateMatrix, SpatialLagModel};
use crate::geo::{geojson, AtomGrid};
use crate::optimize::AnnealResult;
use crate::partition::{beat_loads, variance_of_loads, BeatDesign};
use crate::workload::{hours_per_day, WorkloadPanel};

/// Per-atom hours/day for one evaluation year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualWorkload {
    pub year: i32,
    pub hours_per_day: Vec<f64>,
}

impl AnnualWorkload {
    pub fn from_panel(panel: &WorkloadPanel, year: i32) -> Result<Self> {
        Ok(AnnualWorkload {
            year,
            hours_per_day: panel.annual_hours_per_day(year)?,
        })
    }

    /// From monthly workload hours (e.g. a forecast scaled by τ); averages
    /// the hours/day of the year's months, like the panel conversion.
    pub fn from_monthly_hours(hours: &RateMatrix, year: i32) -> Result<Self> {
        let months: Vec<usize> = (0..hours.n_months).filter(|&l| hours.month(l).year == year).collect();
        if months.is_empty() {
            return Err(Error::InvalidInput(format!("no months in {year}")));
        }
        let hours_per_day = (0..hours.n_atoms)
            .map(|i| {
                months.iter().map(|&l| hours_per_day(hours.get(i, l), hours.month(l))).sum::<f64>()
                    / months.len() as f64
            })
            .collect();
        Ok(AnnualWorkload { year, hours_per_day })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatColumn {
    pub label: String,
    pub year: i32,
    pub hours_per_day: Vec<f64>,
    /// Z/K over the beat loads.
    pub variance: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatTable {
    pub columns: Vec<BeatColumn>,
}

/// One column per (design, year), in design-major order.
pub fn beat_table(designs: &[(String, BeatDesign)], years: &[AnnualWorkload]) -> Result<BeatTable> {
    let mut columns = Vec::new();
    for (label, d) in designs {
        for y in years {
            let loads = beat_loads(d, &y.hours_per_day)?;
            columns.push(BeatColumn {
                label: label.clone(),
                year: y.year,
                variance: variance_of_loads(&loads),
                total: loads.iter().sum(),
                hours_per_day: loads,
            });
        }
    }
    Ok(BeatTable { columns })
}

impl BeatTable {
    pub fn max_beats(&self) -> usize {
        self.columns.iter().map(|c| c.hours_per_day.len()).max().unwrap_or(0)
    }

    fn header(&self) -> Vec<String> {
        std::iter::once("beat".to_string())
            .chain(self.columns.iter().map(|c| format!("{} {}", c.label, c.year)))
            .collect()
    }

    /// Wide layout: one row per beat id, then `variance` and `total` rows.
    /// Beats a design does not have are left blank.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(self.header())?;
        for k in 0..self.max_beats() {
            let mut rec = vec![(k + 1).to_string()];
            rec.extend(self.columns.iter().map(|c| c.hours_per_day.get(k).map_or(String::new(), |v| format!("{v:.4}"))));
            wtr.write_record(rec)?;
        }
        for (name, f) in [("variance", 0usize), ("total", 1)] {
            let mut rec = vec![name.to_string()];
            rec.extend(
                self.columns
                    .iter()
                    .map(|c| format!("{:.4}", if f == 0 { c.variance } else { c.total })),
            );
            wtr.write_record(rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<beat table>", e))?;
        Ok(())
    }

    pub fn markdown(&self) -> String {
        let mut s = String::new();
        let h = self.header();
        let _ = writeln!(s, "| {} |", h.join(" | "));
        let _ = writeln!(s, "|{}", "---|".repeat(h.len()));
        for k in 0..self.max_beats() {
            let cells: Vec<String> = self
                .columns
                .iter()
                .map(|c| c.hours_per_day.get(k).map_or("n/a".into(), |v| format!("{v:.2}")))
                .collect();
            let _ = writeln!(s, "| {} | {} |", k + 1, cells.join(" | "));
        }
        let var: Vec<String> = self.columns.iter().map(|c| format!("{:.2}", c.variance)).collect();
        let tot: Vec<String> = self.columns.iter().map(|c| format!("{:.2}", c.total)).collect();
        let _ = writeln!(s, "| variance | {} |", var.join(" | "));
        let _ = writeln!(s, "| total | {} |", tot.join(" | "));
        s
    }
}

pub fn write_elbow_csv<W: Write>(w: W, elbow: &[(usize, f64)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["k", "variance"])?;
    for (k, v) in elbow {
        wtr.write_record([k.to_string(), v.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io("<elbow csv>", e))?;
    Ok(())
}

/// One feature per atom with `values[i]` under `property`.
pub fn heat_surface(values: &[f64], grid: &AtomGrid, property: &str) -> Result<Value> {
    if values.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "{} values for {} atoms",
            values.len(),
            grid.len()
        )));
    }
    Ok(geojson::atoms_collection(grid, |i, props| {
        props.insert(property.into(), json!(values[i]));
    }))
}

/// Reads `property` back from a heat surface, indexed by `atom_id`.
pub fn read_heat_surface(v: &Value, property: &str) -> Result<Vec<f64>> {
    let feats = v
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::GeoJson("missing features array".into()))?;
    let mut out = vec![f64::NAN; feats.len()];
    for f in feats {
        let props = f.get("properties").ok_or_else(|| Error::GeoJson("feature without properties".into()))?;
        let id = props
            .get("atom_id")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::GeoJson("feature without atom_id".into()))? as usize;
        let x = props
            .get(property)
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::GeoJson(format!("feature without numeric {property}")))?;
        *out.get_mut(id)
            .ok_or_else(|| Error::GeoJson(format!("atom_id {id} out of range")))? = x;
    }
    Ok(out)
}

/// Parts of the Markdown summary; any may be absent.
#[derive(Default)]
pub struct Summary<'a> {
    pub title: &'a str,
    pub table: Option<&'a BeatTable>,
    pub elbow: Option<&'a [(usize, f64)]>,
    pub model: Option<&'a SpatialLagModel>,
    pub anneal: Option<&'a AnnealResult>,
    pub notes: Vec<String>,
}

impl Summary<'_> {
    pub fn render(&self) -> String {
        let mut s = format!("# {}\n\n", self.title);
        if let Some(m) = self.model {
            let d = &m.diagnostics;
            let _ = writeln!(s, "## Rate model\n");
            let _ = writeln!(
                s,
                "rho = {:.4}, p = {}, n = {}, R^2 = {:.4}, residual Moran's I = {:.4}\n",
                m.rho, m.p, d.n_obs, d.r_squared, d.morans_i
            );
            let _ = writeln!(s, "| term | estimate | std. error | p-value |\n|---|---|---|---|");
            let opt = |x: Option<f64>| x.map_or("-".into(), |v| format!("{v:.4}"));
            for c in &d.coefficients {
                let _ = writeln!(
                    s,
                    "| {}{} | {:.4} | {} | {} |",
                    c.name,
                    if c.aliased { " (aliased)" } else { "" },
                    c.estimate,
                    opt(c.std_error),
                    opt(c.p_value)
                );
            }
            s.push('\n');
        }
        if let Some(e) = self.elbow {
            let _ = writeln!(s, "## Variance by beat count\n\n| K | variance |\n|---|---|");
            for (k, v) in e {
                let _ = writeln!(s, "| {k} | {v:.3} |");
            }
            s.push('\n');
        }
        if let Some(a) = self.anneal {
            let _ = writeln!(s, "## Annealing\n");
            let _ = writeln!(
                s,
                "best Z = {:.4} from chain {} of {}",
                a.best_z,
                a.best_chain,
                a.traces.len()
            );
            for t in &a.traces {
                let _ = writeln!(
                    s,
                    "- chain {}: {} iterations, acceptance {:.3}, best Z {:.4}{}",
                    t.chain,
                    t.records.len(),
                    t.acceptance_rate(),
                    t.best_z,
                    t.exhausted_at.map_or(String::new(), |i| format!(", no feasible move at {i}"))
                );
            }
            s.push('\n');
        }
        if let Some(t) = self.table {
            let _ = writeln!(s, "## Workload per beat (hours/day)\n");
            s.push_str(&t.markdown());
            s.push('\n');
        }
        if !self.notes.is_empty() {
            let _ = writeln!(s, "## Notes\n");
            for n in &self.notes {
                let _ = writeln!(s, "- {n}");
            }
        }
        s
    }
}
