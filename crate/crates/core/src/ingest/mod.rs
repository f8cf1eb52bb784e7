//! Telemetry and metadata ingestion.
//!
//! One CSV per home (header plus 5-minute rows) and one metadata CSV keyed by home id.
//! Header names are configuration, see [`ColumnMap`]. Temperatures are converted to °F
//! on read; the user's own unit is recovered later by [`crate::condition`].
//!
//! Row handling in [`parse_home`]:
//!
//! * rows are stable-sorted by timestamp; a repeated timestamp keeps its first occurrence,
//! * timestamps off the 5-minute grid (or with nonzero seconds) are skipped,
//! * a row with an unparseable timestamp, a missing setpoint or indoor temperature, or a
//!   runtime outside `[0, 300]` s is malformed and skipped,
//! * an unrecognised event token is kept as [`EventKind::None`] and counted.
//!
//! Timestamps are naive local time. Time-of-day statistics are local by construction, so no
//! timezone arithmetic happens anywhere in the crate.

mod cohort;
mod corpus;
mod event;
mod meta;
mod schema;
mod write;

use std::io::Read;

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::temperature::c_to_f;
use crate::HvacMode;

pub use cohort::{select_cohort, CohortCriteria};
pub use corpus::{list_homes, read_corpus_metadata, HomeFile, HOMES_DIR, META_FILE};
pub use event::{EventKind, EventPrecedence, HoldDuration};
pub use meta::{parse_metadata, write_metadata, HomeMeta};
pub use schema::{ColumnMap, MetaColumnMap, RawUnit, DEFAULT_TIMESTAMP_FORMAT};
pub use write::{format_timestamp, write_home_csv, HOME_CSV_HEADER};

use schema::ResolvedColumns;

/// Runtime is reported in seconds per 5-minute interval.
pub const MAX_RUNTIME_SECONDS: u16 = 300;

/// One 5-minute telemetry interval. Temperatures are °F.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub timestamp: NaiveDateTime,
    pub heat_setpoint: f64,
    pub cool_setpoint: f64,
    pub indoor_temp: f64,
    pub outdoor_temp: Option<f64>,
    pub event: EventKind,
    /// Any PIR sensor fired during the interval.
    pub motion: bool,
    pub heat_runtime: u16,
    pub cool_runtime: u16,
    /// Explicit equipment mode, when the export carries one.
    pub mode_hint: Option<HvacMode>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    /// Physical data rows (header excluded).
    pub rows: u64,
    pub rows_kept: u64,
    pub malformed: u64,
    pub off_grid: u64,
    pub duplicates: u64,
    /// Rows kept with an unrecognised event token mapped to `none`.
    pub unknown_events: u64,
}

impl ParseReport {
    pub fn rows_skipped(&self) -> u64 {
        self.malformed + self.off_grid + self.duplicates
    }

    pub fn merge(&mut self, other: &ParseReport) {
        self.rows += other.rows;
        self.rows_kept += other.rows_kept;
        self.malformed += other.malformed;
        self.off_grid += other.off_grid;
        self.duplicates += other.duplicates;
        self.unknown_events += other.unknown_events;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedHome {
    pub home_id: String,
    pub samples: Vec<Sample>,
    pub report: ParseReport,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{home}: unreadable header: {reason}")]
    Header { home: String, reason: String },
    #[error("{home}: required column '{column}' not in header")]
    MissingColumn { home: String, column: String },
    #[error("{home}: {malformed} of {rows} rows malformed, check the column map")]
    TooManyMalformed { home: String, malformed: u64, rows: u64 },
    #[error("metadata: {0}")]
    Metadata(String),
    #[error("duplicate home id '{0}' in metadata")]
    DuplicateHome(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

enum RowOutcome {
    Kept(Sample, bool),
    Malformed,
    OffGrid,
}

/// Parse one home's telemetry file.
pub fn parse_home<R: Read>(
    reader: R,
    home_id: &str,
    map: &ColumnMap,
) -> Result<ParsedHome, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| IngestError::Header {
        home: home_id.to_string(),
        reason: e.to_string(),
    })?;
    let header_fields: Vec<&str> = header.iter().collect();
    if header_fields.iter().all(|h| h.trim().is_empty()) {
        return Err(IngestError::Header {
            home: home_id.to_string(),
            reason: "empty header row".into(),
        });
    }
    let cols = ResolvedColumns::resolve(map, &header_fields).map_err(|column| {
        IngestError::MissingColumn {
            home: home_id.to_string(),
            column,
        }
    })?;
    let fast_ts = map.timestamp_format == DEFAULT_TIMESTAMP_FORMAT;

    let mut report = ParseReport::default();
    let mut kept = Vec::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        report.rows += 1;
        match parse_row(&record, &cols, map, fast_ts) {
            RowOutcome::Kept(s, unknown) => {
                if unknown {
                    report.unknown_events += 1;
                }
                kept.push(s);
            }
            RowOutcome::Malformed => report.malformed += 1,
            RowOutcome::OffGrid => report.off_grid += 1,
        }
    }
    if report.malformed * 2 > report.rows {
        return Err(IngestError::TooManyMalformed {
            home: home_id.to_string(),
            malformed: report.malformed,
            rows: report.rows,
        });
    }

    // Stable sort keeps file order among equal timestamps, so dedup keeps the first.
    if !kept.windows(2).all(|w| w[0].timestamp < w[1].timestamp) {
        kept.sort_by_key(|s| s.timestamp);
        let before = kept.len();
        kept.dedup_by(|later, first| later.timestamp == first.timestamp);
        report.duplicates = (before - kept.len()) as u64;
    }
    report.rows_kept = kept.len() as u64;

    Ok(ParsedHome {
        home_id: home_id.to_string(),
        samples: kept,
        report,
    })
}

fn parse_row(
    rec: &csv::StringRecord,
    cols: &ResolvedColumns,
    map: &ColumnMap,
    fast_ts: bool,
) -> RowOutcome {
    let field = |i: usize| rec.get(i).map(str::trim).unwrap_or("");
    let ts_raw = field(cols.timestamp);
    let ts = if fast_ts {
        parse_timestamp_fast(ts_raw)
    } else {
        None
    }
    .or_else(|| NaiveDateTime::parse_from_str(ts_raw, &map.timestamp_format).ok());
    let Some(timestamp) = ts else {
        return RowOutcome::Malformed;
    };
    if timestamp.minute() % 5 != 0 || timestamp.second() != 0 || timestamp.nanosecond() != 0 {
        return RowOutcome::OffGrid;
    }

    let to_f = |v: f64| match map.raw_unit {
        RawUnit::Fahrenheit => v,
        RawUnit::Celsius => c_to_f(v),
    };
    let temp = |i: usize| parse_f64(field(i)).map(to_f);
    let (Some(heat), Some(cool), Some(indoor)) = (
        temp(cols.heat_setpoint),
        temp(cols.cool_setpoint),
        temp(cols.indoor_temp),
    ) else {
        return RowOutcome::Malformed;
    };
    let outdoor = cols.outdoor_temp.and_then(temp);

    let runtime = |idx: &[usize]| -> Result<u16, ()> {
        let mut best = 0u16;
        for &i in idx {
            let raw = field(i);
            if raw.is_empty() {
                continue;
            }
            let v = parse_f64(raw).ok_or(())?;
            if !(0.0..=f64::from(MAX_RUNTIME_SECONDS)).contains(&v) {
                return Err(());
            }
            best = best.max(v.round() as u16);
        }
        Ok(best)
    };
    let (Ok(heat_runtime), Ok(cool_runtime)) =
        (runtime(&cols.heat_runtime), runtime(&cols.cool_runtime))
    else {
        return RowOutcome::Malformed;
    };

    let motion = cols.motion.iter().any(|&i| parse_flag(field(i)));

    let event_tok = EventKind::parse_token(field(cols.event));
    let schedule_tok = cols.schedule.map(|i| EventKind::parse_token(field(i)));
    let mut unknown = event_tok.is_none();
    if let Some(None) = schedule_tok {
        unknown = true;
    }
    let event = map.precedence.resolve(event_tok, schedule_tok.flatten());

    let mode_hint = cols.mode_hint.and_then(|i| field(i).parse::<HvacMode>().ok());

    RowOutcome::Kept(
        Sample {
            timestamp,
            heat_setpoint: heat,
            cool_setpoint: cool,
            indoor_temp: indoor,
            outdoor_temp: outdoor,
            event,
            motion,
            heat_runtime,
            cool_runtime,
            mode_hint,
        },
        unknown,
    )
}

fn parse_f64(s: &str) -> Option<f64> {
    if s.is_empty() {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_flag(s: &str) -> bool {
    match s {
        "" | "0" | "0.0" | "false" | "False" | "FALSE" => false,
        other => other.parse::<f64>().map(|v| v != 0.0).unwrap_or(true),
    }
}

/// `YYYY-MM-DD HH:MM:SS` without going through the chrono format interpreter.
fn parse_timestamp_fast(s: &str) -> Option<NaiveDateTime> {
    let b = s.as_bytes();
    if b.len() != 19 || b[4] != b'-' || b[7] != b'-' || b[10] != b' ' || b[13] != b':' || b[16] != b':'
    {
        return None;
    }
    let num = |r: std::ops::Range<usize>| -> Option<u32> {
        b[r].iter().try_fold(0u32, |acc, &c| {
            c.is_ascii_digit().then(|| acc * 10 + u32::from(c - b'0'))
        })
    };
    NaiveDate::from_ymd_opt(num(0..4)? as i32, num(5..7)?, num(8..10)?)?.and_hms_opt(
        num(11..13)?,
        num(14..16)?,
        num(17..19)?,
    )
}
