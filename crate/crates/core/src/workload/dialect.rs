//! Declarative mapping from a site-specific CSV trace to [`RawTraceRecord`]s.
//!
//! A dialect is a small TOML document:
//!
//! ```toml
//! delimiter = ","
//! timestamp_format = "epoch"          # or a chrono pattern, e.g. "%Y-%m-%dT%H:%M:%S"
//!
//! [columns]
//! record_id = "JobID"
//! job_key = "JobIDRaw"                # defaults to the record_id column
//! submit_time = "Submit"
//! start_time = "Start"                # optional
//! runtime = "ElapsedRaw"
//! nodes_allocated = "NNodes"
//! time_limit = "Timelimit"            # optional
//!
//! [durations]
//! runtime = "seconds"                 # seconds | minutes | hours | slurm
//! time_limit = "minutes"
//!
//! [shared]
//! rule = "flag"                       # flag | nodes_fraction | none
//! column = "Shared"
//! true_values = ["1", "yes"]
//! ```
//!
//! Any column entry may instead be `{ constant = "..." }`.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::{RawTraceRecord, WorkloadError};
use crate::Seconds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSource {
    Column(String),
    Constant { constant: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub record_id: FieldSource,
    #[serde(default)]
    pub job_key: Option<FieldSource>,
    pub submit_time: FieldSource,
    #[serde(default)]
    pub start_time: Option<FieldSource>,
    pub runtime: FieldSource,
    pub nodes_allocated: FieldSource,
    #[serde(default)]
    pub time_limit: Option<FieldSource>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum TimestampFormat {
    /// Integer (or fractional) seconds.
    Epoch,
    /// A chrono `NaiveDateTime` pattern interpreted as UTC.
    Pattern(String),
}

impl From<String> for TimestampFormat {
    fn from(s: String) -> Self {
        if s.eq_ignore_ascii_case("epoch") || s.eq_ignore_ascii_case("seconds") {
            TimestampFormat::Epoch
        } else {
            TimestampFormat::Pattern(s)
        }
    }
}

impl From<TimestampFormat> for String {
    fn from(f: TimestampFormat) -> Self {
        match f {
            TimestampFormat::Epoch => "epoch".into(),
            TimestampFormat::Pattern(p) => p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DurationFormat {
    #[default]
    Seconds,
    Minutes,
    Hours,
    /// `[D-]HH:MM:SS`, `MM:SS` or `MM`, as printed by Slurm accounting.
    Slurm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DurationFormats {
    #[serde(default)]
    pub runtime: DurationFormat,
    #[serde(default)]
    pub time_limit: DurationFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SharedNodeRule {
    /// Shared when the column's value is one of `true_values` (case-insensitive).
    Flag {
        column: String,
        #[serde(default = "default_true_values")]
        true_values: Vec<String>,
    },
    /// Shared when the numeric column (fraction of a node's cores used) is below `below`.
    NodesFraction { column: String, below: f64 },
    #[default]
    None,
}

fn default_true_values() -> Vec<String> {
    vec!["1".into(), "true".into(), "yes".into(), "y".into()]
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDialect {
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    pub timestamp_format: TimestampFormat,
    pub columns: ColumnMap,
    #[serde(default)]
    pub durations: DurationFormats,
    #[serde(default)]
    pub shared: SharedNodeRule,
}

impl TraceDialect {
    pub fn from_toml(text: &str) -> Result<Self, WorkloadError> {
        let d: TraceDialect = toml::from_str(text).map_err(|e| WorkloadError::Dialect(e.to_string()))?;
        if !d.delimiter.is_ascii() {
            return Err(WorkloadError::Dialect("delimiter must be ASCII".into()));
        }
        Ok(d)
    }

    pub fn load(path: &Path) -> Result<Self, WorkloadError> {
        let text = std::fs::read_to_string(path).map_err(|source| WorkloadError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    fn referenced_columns(&self) -> Vec<&str> {
        let c = &self.columns;
        let mut cols: Vec<&str> = [
            Some(&c.record_id),
            c.job_key.as_ref(),
            Some(&c.submit_time),
            c.start_time.as_ref(),
            Some(&c.runtime),
            Some(&c.nodes_allocated),
            c.time_limit.as_ref(),
        ]
        .into_iter()
        .flatten()
        .filter_map(|s| match s {
            FieldSource::Column(name) => Some(name.as_str()),
            FieldSource::Constant { .. } => None,
        })
        .collect();
        match &self.shared {
            SharedNodeRule::Flag { column, .. } | SharedNodeRule::NodesFraction { column, .. } => {
                cols.push(column)
            }
            SharedNodeRule::None => {}
        }
        cols
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTrace {
    pub records: Vec<RawTraceRecord>,
    /// Rows dropped because a mandatory field did not parse.
    pub skipped: usize,
}

pub fn parse_trace(path: &Path, dialect: &TraceDialect) -> Result<ParsedTrace, WorkloadError> {
    let f = File::open(path).map_err(|source| WorkloadError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_trace_reader(f, dialect)
}

pub fn parse_trace_reader<R: Read>(reader: R, dialect: &TraceDialect) -> Result<ParsedTrace, WorkloadError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(dialect.delimiter as u8)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();

    let missing: Vec<String> = dialect
        .referenced_columns()
        .into_iter()
        .filter(|c| !index.contains_key(c))
        .map(str::to_owned)
        .collect();
    if !missing.is_empty() {
        return Err(WorkloadError::MissingColumns(missing));
    }

    let mut records = Vec::new();
    let mut skipped = 0;
    for row in rdr.records() {
        let row = row?;
        let get = |src: &FieldSource| -> Option<String> {
            match src {
                FieldSource::Column(name) => row.get(index[name.as_str()]).map(str::to_owned),
                FieldSource::Constant { constant } => Some(constant.clone()),
            }
        };
        match parse_row(&get, dialect) {
            Some(rec) => records.push(rec),
            None => skipped += 1,
        }
    }
    if records.is_empty() {
        return Err(WorkloadError::NoRows { skipped });
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} unparseable trace rows");
    }
    Ok(ParsedTrace { records, skipped })
}

fn parse_row(get: &dyn Fn(&FieldSource) -> Option<String>, d: &TraceDialect) -> Option<RawTraceRecord> {
    let c = &d.columns;
    let record_id = get(&c.record_id).filter(|s| !s.is_empty())?;
    let job_key = match &c.job_key {
        Some(src) => get(src).filter(|s| !s.is_empty())?,
        None => record_id.clone(),
    };
    let submit_time = parse_timestamp(&get(&c.submit_time)?, &d.timestamp_format)?;
    let start_time = c
        .start_time
        .as_ref()
        .and_then(get)
        .and_then(|s| parse_timestamp(&s, &d.timestamp_format));
    let runtime = parse_duration(&get(&c.runtime)?, d.durations.runtime)?;
    let nodes_allocated: u32 = get(&c.nodes_allocated)?.parse().ok().filter(|&n| n >= 1)?;
    let time_limit = c
        .time_limit
        .as_ref()
        .and_then(get)
        .and_then(|s| parse_duration(&s, d.durations.time_limit));
    if matches!(start_time, Some(start) if start < submit_time) {
        return None;
    }
    let shared_node_flag = match &d.shared {
        SharedNodeRule::Flag { column, true_values } => {
            let v = get(&FieldSource::Column(column.clone()))?;
            true_values.iter().any(|t| t.eq_ignore_ascii_case(&v))
        }
        SharedNodeRule::NodesFraction { column, below } => {
            let v: f64 = get(&FieldSource::Column(column.clone()))?.parse().ok()?;
            v < *below
        }
        SharedNodeRule::None => false,
    };
    Some(RawTraceRecord {
        record_id,
        job_key,
        submit_time,
        start_time,
        runtime,
        nodes_allocated,
        shared_node_flag,
        time_limit,
    })
}

fn parse_seconds(s: &str) -> Option<f64> {
    let v: f64 = s.parse().ok()?;
    (v.is_finite() && v >= 0.0).then_some(v)
}

pub(crate) fn parse_timestamp(s: &str, fmt: &TimestampFormat) -> Option<Seconds> {
    match fmt {
        TimestampFormat::Epoch => parse_seconds(s).map(|v| v.round() as Seconds),
        TimestampFormat::Pattern(p) => {
            let t = NaiveDateTime::parse_from_str(s, p).ok()?.and_utc().timestamp();
            u64::try_from(t).ok()
        }
    }
}

pub(crate) fn parse_duration(s: &str, fmt: DurationFormat) -> Option<Seconds> {
    let scale = match fmt {
        DurationFormat::Seconds => 1.0,
        DurationFormat::Minutes => 60.0,
        DurationFormat::Hours => 3600.0,
        DurationFormat::Slurm => return parse_slurm_duration(s),
    };
    parse_seconds(s).map(|v| (v * scale).round() as Seconds)
}

fn parse_slurm_duration(s: &str) -> Option<Seconds> {
    let (days, rest) = match s.split_once('-') {
        Some((d, r)) => (d.parse::<u64>().ok()?, r),
        None => (0, s),
    };
    let parts: Vec<u64> = rest
        .split(':')
        .map(|p| p.parse::<u64>().ok())
        .collect::<Option<_>>()?;
    let secs = match parts.as_slice() {
        [m] if !s.contains('-') => m * 60,
        [h] => h * 3600,
        [m, sec] if !s.contains('-') => m * 60 + sec,
        [h, m] => h * 3600 + m * 60,
        [h, m, sec] => h * 3600 + m * 60 + sec,
        _ => return None,
    };
    Some(days * 86_400 + secs)
}
