//! Calls-for-service CSV: `call_id,lon,lat,call_time,clear_time,category`.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, FixedOffset, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::calendar;
use crate::error::{Error, Result};
use crate::geo::Point;

pub const CALL_COLUMNS: [&str; 6] = ["call_id", "lon", "lat", "call_time", "clear_time", "category"];

/// Share of bad rows above which a file is rejected outright.
pub const MAX_BAD_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub call_id: String,
    /// (lon, lat), or planar miles when the instance is planar.
    pub location: Point,
    pub call_time: DateTime<Utc>,
    pub clear_time: DateTime<Utc>,
    pub category: String,
}

impl CallRecord {
    pub fn processing_hours(&self) -> f64 {
        (self.clear_time - self.call_time).num_milliseconds() as f64 / 3_600_000.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    /// 1-based line number in the file (the header is line 1).
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct CallLoad {
    pub records: Vec<CallRecord>,
    pub rejected: Vec<RowError>,
}

#[derive(Debug, Clone, Copy)]
pub struct CallParseOptions {
    /// Offset applied to timestamps that carry none.
    pub naive_offset: FixedOffset,
}

impl Default for CallParseOptions {
    fn default() -> Self {
        CallParseOptions {
            naive_offset: calendar::default_offset(),
        }
    }
}

pub fn parse_timestamp(s: &str, naive_offset: FixedOffset) -> std::result::Result<DateTime<Utc>, String> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(n) = NaiveDateTime::parse_from_str(s, fmt) {
            return n
                .and_local_timezone(naive_offset)
                .single()
                .map(|t| t.with_timezone(&Utc))
                .ok_or_else(|| format!("ambiguous local time {s:?}"));
        }
    }
    Err(format!("unparseable timestamp {s:?}"))
}

/// Parses a calls CSV. Bad rows are collected with their line numbers;
/// the whole file fails when more than 10% of rows are bad.
pub fn parse_calls<R: Read>(reader: R, source: &str, opts: CallParseOptions) -> Result<CallLoad> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut col = [0usize; 6];
    for (k, name) in CALL_COLUMNS.iter().enumerate() {
        col[k] = headers.iter().position(|h| h == *name).ok_or_else(|| Error::Parse {
            path: source.to_string(),
            message: format!("missing column {name:?}"),
        })?;
    }
    let mut load = CallLoad::default();
    let mut total = 0usize;
    for (k, row) in rdr.records().enumerate() {
        total += 1;
        let line = k + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                load.rejected.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        match parse_row(&row, &col, opts) {
            Ok(rec) => load.records.push(rec),
            Err(message) => load.rejected.push(RowError { line, message }),
        }
    }
    if total > 0 && load.rejected.len() as f64 > MAX_BAD_FRACTION * total as f64 {
        return Err(Error::TooManyBadRows {
            path: source.to_string(),
            bad: load.rejected.len(),
            total,
        });
    }
    load.records.sort_by(|a, b| a.call_time.cmp(&b.call_time));
    Ok(load)
}

fn parse_row(row: &csv::StringRecord, col: &[usize; 6], opts: CallParseOptions) -> std::result::Result<CallRecord, String> {
    let field = |k: usize| {
        row.get(col[k])
            .ok_or_else(|| format!("missing field {:?}", CALL_COLUMNS[k]))
    };
    let coord = |k: usize| -> std::result::Result<f64, String> {
        let s = field(k)?;
        let v: f64 = s.parse().map_err(|_| format!("bad {} {s:?}", CALL_COLUMNS[k]))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(format!("non-finite {}", CALL_COLUMNS[k]))
        }
    };
    let call_id = field(0)?.to_string();
    let location = Point::new(coord(1)?, coord(2)?);
    let call_time = parse_timestamp(field(3)?, opts.naive_offset)?;
    let clear_time = parse_timestamp(field(4)?, opts.naive_offset)?;
    if clear_time < call_time {
        return Err(format!("clear_time {clear_time} precedes call_time {call_time}"));
    }
    Ok(CallRecord {
        call_id,
        location,
        call_time,
        clear_time,
        category: field(5)?.to_string(),
    })
}

pub fn load_calls(path: &Path, opts: CallParseOptions) -> Result<CallLoad> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_calls(std::io::BufReader::new(f), &path.display().to_string(), opts)
}

pub fn write_calls<W: Write>(w: W, calls: &[CallRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CALL_COLUMNS)?;
    for c in calls {
        wtr.write_record([
            c.call_id.clone(),
            c.location.x.to_string(),
            c.location.y.to_string(),
            c.call_time.to_rfc3339_opts(SecondsFormat::AutoSi, true),
            c.clear_time.to_rfc3339_opts(SecondsFormat::AutoSi, true),
            c.category.clone(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<calls>", e))?;
    Ok(())
}

/// Category include/exclude filter; an empty include list keeps everything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryFilter {
    #[serde(default)]
    pub include: BTreeSet<String>,
    #[serde(default)]
    pub exclude: BTreeSet<String>,
}

impl CategoryFilter {
    pub fn keeps(&self, category: &str) -> bool {
        (self.include.is_empty() || self.include.contains(category)) && !self.exclude.contains(category)
    }

    pub fn apply(&self, calls: Vec<CallRecord>) -> Vec<CallRecord> {
        calls.into_iter().filter(|c| self.keeps(&c.category)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "call_id,lon,lat,call_time,clear_time,category\n";

    fn parse(body: &str) -> Result<CallLoad> {
        parse_calls(format!("{HEADER}{body}").as_bytes(), "test", CallParseOptions::default())
    }

    #[test]
    fn three_valid_rows_sorted() {
        let load = parse(
            "c,1,2,2019-03-01T10:00:00Z,2019-03-01T11:00:00Z,theft\n\
             a,1,2,2019-01-01T10:00:00Z,2019-01-01T10:30:00Z,theft\n\
             b,1,2,2019-02-01T10:00:00-05:00,2019-02-01T12:00:00-05:00,traffic\n",
        )
        .unwrap();
        let ids: Vec<_> = load.records.iter().map(|r| r.call_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert!(load.rejected.is_empty());
        assert!((load.records[1].processing_hours() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn clear_before_call_rejected_with_line_number() {
        let mut body = String::new();
        for k in 0..10 {
            body.push_str(&format!("ok{k},0,0,2019-01-01T10:00:00Z,2019-01-01T11:00:00Z,x\n"));
        }
        body.push_str("bad,0,0,2019-01-01T10:00:00Z,2019-01-01T09:00:00Z,x\n");
        let load = parse(&body).unwrap();
        assert_eq!(load.records.len(), 10);
        assert_eq!(load.rejected.len(), 1);
        assert_eq!(load.rejected[0].line, 12);
    }

    #[test]
    fn empty_file_with_header() {
        assert!(parse("").unwrap().records.is_empty());
    }

    #[test]
    fn missing_column_is_hard_failure() {
        let err = parse_calls("call_id,lon,lat\n".as_bytes(), "t", CallParseOptions::default());
        assert!(matches!(err, Err(Error::Parse { .. })));
    }

    #[test]
    fn too_many_bad_rows() {
        let err = parse(
            "a,x,0,2019-01-01T10:00:00Z,2019-01-01T11:00:00Z,t\n\
             b,0,0,2019-01-01T10:00:00Z,2019-01-01T11:00:00Z,t\n",
        );
        assert!(matches!(err, Err(Error::TooManyBadRows { bad: 1, total: 2, .. })));
    }

    #[test]
    fn naive_timestamps_use_local_offset() {
        let load = parse("a,0,0,2019-01-01 10:00:00,2019-01-01 11:00:00,t\n").unwrap();
        assert_eq!(load.records[0].call_time.to_rfc3339(), "2019-01-01T15:00:00+00:00");
    }

    #[test]
    fn non_finite_coordinates_rejected() {
        let mut body = String::new();
        for k in 0..20 {
            body.push_str(&format!("ok{k},0,0,2019-01-01T10:00:00Z,2019-01-01T11:00:00Z,x\n"));
        }
        body.push_str("nan,NaN,0,2019-01-01T10:00:00Z,2019-01-01T11:00:00Z,x\n");
        body.push_str("inf,0,inf,2019-01-01T10:00:00Z,2019-01-01T11:00:00Z,x\n");
        let load = parse(&body).unwrap();
        assert_eq!(load.rejected.len(), 2);
    }

    #[test]
    fn write_then_load_round_trip() {
        let load = parse(
            "a,-84.5,33.6,2019-01-01T10:00:00.250Z,2019-01-01T10:30:00Z,theft\n\
             b,0.1,0.2,2019-02-01T10:00:00Z,2019-02-01T12:00:00Z,a \"quoted\" one\n",
        )
        .unwrap();
        let mut buf = Vec::new();
        write_calls(&mut buf, &load.records).unwrap();
        let again = parse_calls(buf.as_slice(), "rt", CallParseOptions::default()).unwrap();
        assert_eq!(again.records, load.records);
    }

    #[test]
    fn category_filter() {
        let f = CategoryFilter {
            include: BTreeSet::new(),
            exclude: ["noise".to_string()].into(),
        };
        assert!(f.keeps("theft"));
        assert!(!f.keeps("noise"));
    }
}
