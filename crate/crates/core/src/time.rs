//! Calendar dates, datetimes and the legislative-period window.

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WindowError {
    #[error("window start {start} is after window end {end}")]
    Inverted { start: NaiveDate, end: NaiveDate },
    #[error("invalid date {0:?}; expected YYYY-MM-DD")]
    BadDate(alloc::string::String),
}

/// Parses an ISO-8601 calendar date (`YYYY-MM-DD`).
pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

/// Parses an ISO-8601 datetime. Values with an offset are converted to UTC,
/// values without one are taken as UTC. A bare date means midnight.
pub fn parse_datetime(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.naive_utc());
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
    ] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt);
        }
    }
    parse_date(s).map(|d| d.and_time(NaiveTime::MIN))
}

/// Closed date interval used by every temporal predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawWindow", into = "RawWindow")]
pub struct TemporalWindow {
    start: NaiveDate,
    end: NaiveDate,
}

impl TemporalWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, WindowError> {
        if start > end {
            return Err(WindowError::Inverted { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn parse(start: &str, end: &str) -> Result<Self, WindowError> {
        let s = parse_date(start).ok_or_else(|| WindowError::BadDate(start.into()))?;
        let e = parse_date(end).ok_or_else(|| WindowError::BadDate(end.into()))?;
        Self::new(s, e)
    }

    /// The 50th legislative period of the Swiss parliament.
    pub fn legislature_50() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2015, 11, 30).expect("valid date"),
            end: NaiveDate::from_ymd_opt(2019, 12, 1).expect("valid date"),
        }
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.end
    }

    /// First instant of the window (`start` at 00:00:00).
    pub fn start_datetime(&self) -> NaiveDateTime {
        self.start.and_time(NaiveTime::MIN)
    }

    /// Last instant of the window (`end` at 23:59:59).
    pub fn end_datetime(&self) -> NaiveDateTime {
        self.end
            .and_time(NaiveTime::from_hms_opt(23, 59, 59).expect("valid time"))
    }

    pub fn contains_date(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }

    /// Interval overlap between `[from, to]` and the window, at datetime
    /// resolution.
    pub fn overlaps(&self, from: NaiveDateTime, to: NaiveDateTime) -> bool {
        to >= self.start_datetime() && from <= self.end_datetime()
    }
}

impl Default for TemporalWindow {
    fn default() -> Self {
        Self::legislature_50()
    }
}

impl core::fmt::Display for TemporalWindow {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Serialize, Deserialize)]
struct RawWindow {
    start: NaiveDate,
    end: NaiveDate,
}

impl TryFrom<RawWindow> for TemporalWindow {
    type Error = WindowError;
    fn try_from(raw: RawWindow) -> Result<Self, Self::Error> {
        Self::new(raw.start, raw.end)
    }
}

impl From<TemporalWindow> for RawWindow {
    fn from(w: TemporalWindow) -> Self {
        RawWindow {
            start: w.start,
            end: w.end,
        }
    }
}
