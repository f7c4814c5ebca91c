//! Per-atom monthly call counts and workload hours.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::FixedOffset;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calendar::YearMonth;
use crate::error::{Error, Result};
use crate::geo::AtomGrid;
use crate::ingest::calls::CallRecord;
use crate::partition::{beat_loads, BeatDesign};

/// Counts N_iℓ plus, per call, the (atom, month position) it landed in.
#[derive(Debug, Clone, PartialEq)]
pub struct CallCounts {
    pub n_atoms: usize,
    pub first_month: YearMonth,
    pub n_months: usize,
    /// Row-major atom × month.
    pub counts: Vec<u32>,
    /// Calls outside every atom.
    pub unmatched: usize,
    /// Calls inside an atom but outside the month window.
    pub outside_window: usize,
    pub assignments: Vec<Option<(usize, usize)>>,
}

impl CallCounts {
    pub fn get(&self, i: usize, l: usize) -> u32 {
        self.counts[i * self.n_months + l]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Month window spanning the calls' local months.
pub fn call_window(calls: &[CallRecord], offset: FixedOffset) -> Option<(YearMonth, usize)> {
    let months = calls.iter().map(|c| YearMonth::of_instant(c.call_time, offset));
    let (lo, hi) = months.fold(None, |acc: Option<(YearMonth, YearMonth)>, m| match acc {
        None => Some((m, m)),
        Some((a, b)) => Some((a.min(m), b.max(m))),
    })?;
    Some((lo, (hi.index() - lo.index() + 1) as usize))
}

/// Assigns each call to the atom containing its location and to its local
/// calendar month. Call locations are in the grid's geographic frame and
/// are projected here.
pub fn count_calls(
    grid: &AtomGrid,
    calls: &[CallRecord],
    window: Option<(YearMonth, usize)>,
    offset: FixedOffset,
) -> CallCounts {
    let (first_month, n_months) = window
        .or_else(|| call_window(calls, offset))
        .unwrap_or((YearMonth { year: 1970, month: 1 }, 0));
    let located: Vec<(Option<usize>, YearMonth)> = calls
        .par_iter()
        .map(|c| {
            let p = grid.projection.project(c.location);
            (grid.locate(p), YearMonth::of_instant(c.call_time, offset))
        })
        .collect();
    let mut out = CallCounts {
        n_atoms: grid.len(),
        first_month,
        n_months,
        counts: vec![0; grid.len() * n_months],
        unmatched: 0,
        outside_window: 0,
        assignments: Vec::with_capacity(calls.len()),
    };
    for (atom, ym) in located {
        let Some(i) = atom else {
            out.unmatched += 1;
            out.assignments.push(None);
            continue;
        };
        let d = ym.index() - first_month.index();
        if d < 0 || d >= n_months as i64 {
            out.outside_window += 1;
            out.assignments.push(None);
            continue;
        }
        out.counts[i * n_months + d as usize] += 1;
        out.assignments.push(Some((i, d as usize)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauMode {
    /// One mean processing time over all calls.
    #[default]
    Global,
    /// Each call weighted by its category's mean processing time.
    PerCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadPanel {
    pub n_atoms: usize,
    pub first_month: YearMonth,
    pub n_months: usize,
    pub counts: Vec<u32>,
    /// Hours per atom-month, row-major like `counts`.
    pub workload: Vec<f64>,
    pub tau_hours: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_tau: Option<BTreeMap<String, f64>>,
    pub unmatched: usize,
    #[serde(default)]
    pub outside_window: usize,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    tau_hours: f64,
    unmatched: usize,
    outside_window: usize,
    n_atoms: usize,
    first_month: YearMonth,
    n_months: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category_tau: Option<BTreeMap<String, f64>>,
}

fn mean_hours<'a>(calls: impl Iterator<Item = &'a CallRecord>) -> Option<f64> {
    let (s, n) = calls.fold((0.0, 0usize), |(s, n), c| (s + c.processing_hours(), n + 1));
    (n > 0).then(|| s / n as f64)
}

/// τ = mean processing time over `calls`; w = N·τ.
pub fn estimate_workload(counts: &CallCounts, calls: &[CallRecord], mode: TauMode) -> Result<WorkloadPanel> {
    let tau = mean_hours(calls.iter()).ok_or(Error::NoCalls)?;
    let (workload, category_tau) = match mode {
        TauMode::Global => (counts.counts.iter().map(|&n| n as f64 * tau).collect(), None),
        TauMode::PerCategory => {
            if counts.assignments.len() != calls.len() {
                return Err(Error::InvalidInput("counts were built from a different call set".into()));
            }
            let mut by_cat: BTreeMap<String, (f64, usize)> = BTreeMap::new();
            for c in calls {
                let e = by_cat.entry(c.category.clone()).or_default();
                e.0 += c.processing_hours();
                e.1 += 1;
            }
            let taus: BTreeMap<String, f64> = by_cat.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect();
            let mut w = vec![0.0; counts.counts.len()];
            for (c, a) in calls.iter().zip(&counts.assignments) {
                if let Some((i, l)) = a {
                    w[i * counts.n_months + l] += taus[&c.category];
                }
            }
            (w, Some(taus))
        }
    };
    Ok(WorkloadPanel {
        n_atoms: counts.n_atoms,
        first_month: counts.first_month,
        n_months: counts.n_months,
        counts: counts.counts.clone(),
        workload,
        tau_hours: tau,
        category_tau,
        unmatched: counts.unmatched,
        outside_window: counts.outside_window,
    })
}

/// Monthly hours expressed per day of that month.
pub fn hours_per_day(hours: f64, month: YearMonth) -> f64 {
    hours / month.days() as f64
}

impl WorkloadPanel {
    pub fn count(&self, i: usize, l: usize) -> u32 {
        self.counts[i * self.n_months + l]
    }

    pub fn hours(&self, i: usize, l: usize) -> f64 {
        self.workload[i * self.n_months + l]
    }

    pub fn month(&self, l: usize) -> YearMonth {
        self.first_month.offset(l as i64)
    }

    /// Counts for month position `l` as f64, one entry per atom.
    pub fn count_row(&self, l: usize) -> Vec<f64> {
        (0..self.n_atoms).map(|i| self.count(i, l) as f64).collect()
    }

    /// Workload hours w_·ℓ.
    pub fn workload_row(&self, l: usize) -> Vec<f64> {
        (0..self.n_atoms).map(|i| self.hours(i, l)).collect()
    }

    /// Month positions falling in `year`.
    pub fn months_in_year(&self, year: i32) -> Vec<usize> {
        (0..self.n_months).filter(|&l| self.month(l).year == year).collect()
    }

    /// Per-atom hours/day averaged over the months of `year` in the panel.
    pub fn annual_hours_per_day(&self, year: i32) -> Result<Vec<f64>> {
        let months = self.months_in_year(year);
        if months.is_empty() {
            return Err(Error::InvalidInput(format!("panel has no months in {year}")));
        }
        Ok((0..self.n_atoms)
            .map(|i| {
                months
                    .iter()
                    .map(|&l| hours_per_day(self.hours(i, l), self.month(l)))
                    .sum::<f64>()
                    / months.len() as f64
            })
            .collect())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["atom_id", "month", "count", "workload_hours"])?;
        for i in 0..self.n_atoms {
            for l in 0..self.n_months {
                wtr.write_record([
                    i.to_string(),
                    self.month(l).to_string(),
                    self.count(i, l).to_string(),
                    self.hours(i, l).to_string(),
                ])?;
            }
        }
        wtr.flush().map_err(|e| Error::io("<workload csv>", e))?;
        Ok(())
    }

    pub fn sidecar_json(&self) -> serde_json::Value {
        serde_json::to_value(Sidecar {
            tau_hours: self.tau_hours,
            unmatched: self.unmatched,
            outside_window: self.outside_window,
            n_atoms: self.n_atoms,
            first_month: self.first_month,
            n_months: self.n_months,
            category_tau: self.category_tau.clone(),
        })
        .expect("plain data serializes")
    }

    pub fn read<R: Read>(csv_reader: R, sidecar: &str) -> Result<Self> {
        let meta: Sidecar = serde_json::from_str(sidecar)?;
        let mut rows = Vec::new();
        let mut rdr = csv::Reader::from_reader(csv_reader);
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |m: &str| Error::Parse {
                path: "<workload csv>".into(),
                message: format!("line {}: {m}", k + 2),
            };
            let i: usize = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad atom_id"))?;
            let ym: YearMonth = rec.get(1).ok_or_else(|| bad("missing month"))?.parse()?;
            let n: u32 = rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad count"))?;
            let h: f64 = rec.get(3).and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad workload"))?;
            let l = ym.index() - meta.first_month.index();
            if i >= meta.n_atoms || l < 0 || l >= meta.n_months as i64 {
                return Err(bad("row outside panel dimensions"));
            }
            rows.push((i, l as usize, n, h));
        }
        // the csv holds one row per cell, so its length bounds the allocation
        let size = meta
            .n_atoms
            .checked_mul(meta.n_months)
            .filter(|&s| s <= rows.len())
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "workload csv has {} rows for a {} × {} panel",
                    rows.len(),
                    meta.n_atoms,
                    meta.n_months
                ))
            })?;
        let mut panel = WorkloadPanel {
            n_atoms: meta.n_atoms,
            first_month: meta.first_month,
            n_months: meta.n_months,
            counts: vec![0; size],
            workload: vec![0.0; size],
            tau_hours: meta.tau_hours,
            category_tau: meta.category_tau,
            unmatched: meta.unmatched,
            outside_window: meta.outside_window,
        };
        let mut seen = vec![false; size];
        for (i, l, n, h) in rows {
            let idx = i * panel.n_months + l;
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::InvalidInput(format!("workload csv lists atom {i} month {} twice", panel.month(l))));
            }
            panel.counts[idx] = n;
            panel.workload[idx] = h;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!(
                "workload csv lacks atom {} month {}",
                missing / panel.n_months.max(1),
                panel.month(missing % panel.n_months.max(1))
            )));
        }
        Ok(panel)
    }
}

/// Beat sums w_kℓ(D) of one per-atom row.
pub fn beat_workload(row: &[f64], design: &BeatDesign) -> Result<Vec<f64>> {
    beat_loads(design, row)
}

#[cfg(test)]
mod tests {
    use chrono::{DateTime, Duration, Utc};

    use super::*;
    use crate::calendar::default_offset;
    use crate::geo::{atomize, GridKind, Point, Polygon, Projection};

    fn grid() -> AtomGrid {
        atomize(
            &[Polygon::rect(0.0, 0.0, 3.0, 2.0)],
            1.0,
            GridKind::SquareRook,
            Projection::PlanarMiles,
        )
        .unwrap()
    }

    fn call(x: f64, y: f64, t: &str, hours: i64) -> CallRecord {
        let t: DateTime<Utc> = t.parse().unwrap();
        CallRecord {
            call_id: format!("{x},{y},{t}"),
            location: Point::new(x, y),
            call_time: t,
            clear_time: t + Duration::hours(hours),
            category: if hours > 1 { "long".into() } else { "short".into() },
        }
    }

    fn jan() -> YearMonth {
        "2019-01".parse().unwrap()
    }

    #[test]
    fn single_call_lands_in_atom_and_month() {
        let g = grid();
        // atom 5 = row 1, col 2
        let c = [call(2.5, 1.5, "2019-03-10T12:00:00Z", 1)];
        let n = count_calls(&g, &c, Some((jan(), 12)), default_offset());
        assert_eq!(n.get(5, 2), 1);
        assert_eq!(n.total(), 1);
    }

    #[test]
    fn outside_call_is_unmatched() {
        let g = grid();
        let c = [call(9.0, 9.0, "2019-03-10T12:00:00Z", 1), call(0.5, 0.5, "2019-01-10T12:00:00Z", 1)];
        let n = count_calls(&g, &c, None, default_offset());
        assert_eq!(n.unmatched, 1);
        assert_eq!(n.total() as usize + n.unmatched, 2);
        assert_eq!(n.n_months, 3);
    }

    #[test]
    fn edge_call_goes_to_smaller_id() {
        let g = grid();
        let c = [call(1.0, 0.5, "2019-01-10T12:00:00Z", 1)];
        let n = count_calls(&g, &c, None, default_offset());
        assert_eq!(n.get(0, 0), 1);
    }

    #[test]
    fn tau_and_workload() {
        let g = grid();
        let mut calls = vec![call(0.5, 0.5, "2019-01-10T12:00:00Z", 1), call(0.5, 0.5, "2019-01-11T12:00:00Z", 3)];
        calls.extend((0..2).map(|k| call(0.5, 0.5, &format!("2019-01-2{k}T12:00:00Z"), 2)));
        let n = count_calls(&g, &calls, None, default_offset());
        let p = estimate_workload(&n, &calls, TauMode::Global).unwrap();
        assert_eq!(p.tau_hours, 2.0);
        assert_eq!(p.count(0, 0), 4);
        assert_eq!(p.hours(0, 0), 8.0);
        let q = estimate_workload(&n, &calls, TauMode::PerCategory).unwrap();
        assert!((q.hours(0, 0) - (1.0 + 3.0 * (7.0 / 3.0))).abs() < 1e-12);
    }

    #[test]
    fn no_calls_error() {
        let n = count_calls(&grid(), &[], Some((jan(), 1)), default_offset());
        assert!(matches!(estimate_workload(&n, &[], TauMode::Global), Err(Error::NoCalls)));
    }

    #[test]
    fn beat_sums() {
        let d = BeatDesign::from_assignment(vec![0, 0, 1, 1]).unwrap();
        assert_eq!(beat_workload(&[1.0, 2.0, 3.0, 4.0], &d).unwrap(), vec![3.0, 7.0]);
        assert_eq!(beat_workload(&[0.0; 4], &d).unwrap(), vec![0.0, 0.0]);
        let one = BeatDesign::single(4);
        assert_eq!(beat_workload(&[1.0, 2.0, 3.0, 4.0], &one).unwrap(), vec![10.0]);
    }

    #[test]
    fn hours_per_day_conversion() {
        assert_eq!(hours_per_day(31.0, jan()), 1.0);
        assert_eq!(hours_per_day(28.0, "2019-02".parse().unwrap()), 1.0);
    }

    #[test]
    fn panel_round_trip() {
        let g = grid();
        let calls = vec![call(0.5, 0.5, "2019-01-10T12:00:00Z", 1), call(2.5, 1.5, "2019-02-11T12:00:00Z", 3)];
        let n = count_calls(&g, &calls, None, default_offset());
        let p = estimate_workload(&n, &calls, TauMode::Global).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let side = p.sidecar_json().to_string();
        let q = WorkloadPanel::read(buf.as_slice(), &side).unwrap();
        assert_eq!(p, q);
        assert_eq!(q.annual_hours_per_day(2019).unwrap()[0], (2.0 / 31.0) / 2.0);
    }
}
