use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, FixedOffset, NaiveDate, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A calendar month, the time index ℓ of every panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidInput(format!("month {month} out of range")));
        }
        Ok(YearMonth { year, month })
    }

    /// Months since year 0.
    pub fn index(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_index(idx: i64) -> Self {
        YearMonth {
            year: idx.div_euclid(12) as i32,
            month: idx.rem_euclid(12) as u32 + 1,
        }
    }

    pub fn offset(self, months: i64) -> Self {
        Self::from_index(self.index() + months)
    }

    pub fn days(self) -> u32 {
        let next = self.offset(1);
        let a = NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month");
        let b = NaiveDate::from_ymd_opt(next.year, next.month, 1).expect("valid month");
        (b - a).num_days() as u32
    }

    /// Local calendar month of a UTC instant under a fixed offset.
    pub fn of_instant(t: DateTime<Utc>, offset: FixedOffset) -> Self {
        let local = t.with_timezone(&offset);
        YearMonth {
            year: local.year(),
            month: local.month(),
        }
    }

    /// First instant of this month in the given local offset, in UTC.
    pub fn start_utc(self, offset: FixedOffset) -> DateTime<Utc> {
        NaiveDate::from_ymd_opt(self.year, self.month, 1)
            .expect("valid month")
            .and_hms_opt(0, 0, 0)
            .expect("midnight")
            .and_local_timezone(offset)
            .single()
            .expect("fixed offsets are unambiguous")
            .with_timezone(&Utc)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("expected YYYY-MM, got {s:?}"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        YearMonth::new(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses "+HH:MM" / "-HH:MM" (or "Z").
pub fn parse_offset(s: &str) -> Result<FixedOffset> {
    let s = s.trim();
    if s == "Z" || s == "UTC" {
        return Ok(FixedOffset::east_opt(0).expect("zero offset"));
    }
    let bad = || Error::InvalidInput(format!("bad UTC offset {s:?}"));
    let (sign, rest) = match s.as_bytes().first() {
        Some(b'+') => (1, &s[1..]),
        Some(b'-') => (-1, &s[1..]),
        _ => return Err(bad()),
    };
    let (h, m) = rest.split_once(':').unwrap_or((rest, "0"));
    let h: i32 = h.parse().map_err(|_| bad())?;
    let m: i32 = m.parse().map_err(|_| bad())?;
    if h > 23 || m > 59 {
        return Err(bad());
    }
    FixedOffset::east_opt(sign * (h * 3600 + m * 60)).ok_or_else(bad)
}

pub fn default_offset() -> FixedOffset {
    FixedOffset::west_opt(5 * 3600).expect("-05:00")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip_and_days() {
        let m: YearMonth = "2019-02".parse().unwrap();
        assert_eq!(YearMonth::from_index(m.index()), m);
        assert_eq!(m.days(), 28);
        assert_eq!("2020-02".parse::<YearMonth>().unwrap().days(), 29);
        assert_eq!(m.offset(11).to_string(), "2020-01");
        assert_eq!(m.offset(-2).to_string(), "2018-12");
    }

    #[test]
    fn local_month_bucketing() {
        let t = "2019-02-01T03:00:00Z".parse::<DateTime<Utc>>().unwrap();
        // still January in UTC-5
        assert_eq!(YearMonth::of_instant(t, default_offset()).to_string(), "2019-01");
        assert_eq!(parse_offset("-05:00").unwrap(), default_offset());
        assert!(parse_offset("5").is_err());
    }
}
