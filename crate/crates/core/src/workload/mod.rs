//! Trace ingestion and the cleaning pipeline.
//!
//! Raw accounting records go through [`merge_split_entries`],
//! [`filter_shared_node_jobs`] and [`finalize_jobs`] to become
//! [`RigidJobSpec`]s, which can then be windowed with [`select_window`] and
//! persisted with [`emit_canonical`].

mod canonical;
mod dialect;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Seconds;

pub use canonical::{emit_canonical, load_canonical, read_canonical, write_canonical, CanonicalFile};
pub use dialect::{
    parse_trace, parse_trace_reader, DurationFormat, ParsedTrace, SharedNodeRule, TimestampFormat,
    TraceDialect,
};

pub const DEFAULT_LIMIT_FILL_FACTOR: f64 = 1.25;

/// Segments whose boundaries are this close (one default tick) are merged.
pub const DEFAULT_MERGE_TOLERANCE: Seconds = 10;

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("failed to read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("dialect references columns absent from the trace header: {0:?}")]
    MissingColumns(Vec<String>),
    #[error("invalid dialect: {0}")]
    Dialect(String),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("no parseable rows ({skipped} skipped)")]
    NoRows { skipped: usize },
    #[error("jobs with zero runtime or zero nodes: {0:?}")]
    InvalidJobs(Vec<String>),
    #[error("limit fill factor must exceed 1, got {0}")]
    FillFactor(f64),
    #[error("window duration must be positive")]
    EmptyDuration,
    #[error("malformed canonical job file: {0}")]
    Canonical(String),
}

/// One row of a raw accounting trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTraceRecord {
    pub record_id: String,
    /// Stable across the daily segments of one job.
    pub job_key: String,
    pub submit_time: Seconds,
    pub start_time: Option<Seconds>,
    pub runtime: Seconds,
    pub nodes_allocated: u32,
    /// True when the record shares (oversubscribes) nodes with other jobs.
    pub shared_node_flag: bool,
    pub time_limit: Option<Seconds>,
}

impl RawTraceRecord {
    /// End of the span covered by this record, if its start is known.
    pub fn span_end(&self) -> Option<Seconds> {
        self.start_time.map(|s| s + self.runtime)
    }
}

/// A cleaned job as replayed by the simulator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RigidJobSpec {
    pub id: String,
    #[serde(rename = "submit")]
    pub submit_time: Seconds,
    #[serde(rename = "nodes")]
    pub requested_nodes: u32,
    pub runtime: Seconds,
    pub time_limit: Seconds,
}

/// Collapse chains of contiguous same-key segments into single records.
///
/// Records are processed in `(job_key, submit_time)` order. A segment joins
/// the current chain when its start lies within `tolerance` seconds of the
/// chain's end (chain start plus accumulated runtime). Merged records keep the
/// earliest submit and start times, the summed runtime, the largest node count
/// and the largest time limit. Output is in `(job_key, submit_time)` order.
pub fn merge_split_entries(records: &[RawTraceRecord], tolerance: Seconds) -> Vec<RawTraceRecord> {
    let mut sorted: Vec<&RawTraceRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (a.job_key.as_str(), a.submit_time, a.start_time, a.record_id.as_str()).cmp(&(
            b.job_key.as_str(),
            b.submit_time,
            b.start_time,
            b.record_id.as_str(),
        ))
    });

    let mut out: Vec<RawTraceRecord> = Vec::with_capacity(sorted.len());
    for rec in sorted {
        if let Some(chain) = out.last_mut() {
            let contiguous = chain.job_key == rec.job_key
                && match (chain.span_end(), rec.start_time) {
                    (Some(end), Some(start)) => end.abs_diff(start) <= tolerance,
                    _ => false,
                };
            if contiguous {
                if chain.nodes_allocated != rec.nodes_allocated {
                    log::info!(
                        "merging {} with differing node counts ({} vs {}), keeping the max",
                        chain.job_key,
                        chain.nodes_allocated,
                        rec.nodes_allocated
                    );
                }
                chain.submit_time = chain.submit_time.min(rec.submit_time);
                chain.start_time = chain.start_time.min(rec.start_time);
                chain.runtime += rec.runtime;
                chain.nodes_allocated = chain.nodes_allocated.max(rec.nodes_allocated);
                chain.shared_node_flag |= rec.shared_node_flag;
                chain.time_limit = chain.time_limit.max(rec.time_limit);
                continue;
            }
        }
        out.push(rec.clone());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedFilterOutcome {
    pub kept: Vec<RawTraceRecord>,
    pub removed_count: usize,
    pub removed_runtime_sum: Seconds,
    /// Node-seconds of the removed records.
    pub removed_node_seconds: u128,
}

pub fn filter_shared_node_jobs(records: &[RawTraceRecord]) -> SharedFilterOutcome {
    let mut kept = Vec::with_capacity(records.len());
    let mut removed_count = 0;
    let mut removed_runtime_sum = 0;
    let mut removed_node_seconds = 0u128;
    for rec in records {
        if rec.shared_node_flag {
            removed_count += 1;
            removed_runtime_sum += rec.runtime;
            removed_node_seconds += rec.runtime as u128 * rec.nodes_allocated as u128;
        } else {
            kept.push(rec.clone());
        }
    }
    SharedFilterOutcome {
        kept,
        removed_count,
        removed_runtime_sum,
        removed_node_seconds,
    }
}

/// `ceil(factor * runtime)`, the limit assigned to jobs without a usable one.
pub fn filled_limit(runtime: Seconds, factor: f64) -> Seconds {
    (runtime as f64 * factor).ceil() as Seconds
}

/// Turn cleaned records into rigid jobs, filling missing or sub-runtime limits.
pub fn finalize_jobs(
    records: &[RawTraceRecord],
    limit_fill_factor: f64,
) -> Result<Vec<RigidJobSpec>, WorkloadError> {
    if !(limit_fill_factor > 1.0) {
        return Err(WorkloadError::FillFactor(limit_fill_factor));
    }
    let bad: Vec<String> = records
        .iter()
        .filter(|r| r.runtime == 0 || r.nodes_allocated == 0)
        .map(|r| r.record_id.clone())
        .collect();
    if !bad.is_empty() {
        return Err(WorkloadError::InvalidJobs(bad));
    }

    let mut jobs: Vec<RigidJobSpec> = records
        .iter()
        .map(|r| {
            let time_limit = match r.time_limit {
                Some(limit) if limit >= r.runtime => limit,
                _ => filled_limit(r.runtime, limit_fill_factor),
            };
            RigidJobSpec {
                id: r.record_id.clone(),
                submit_time: r.submit_time,
                requested_nodes: r.nodes_allocated,
                runtime: r.runtime,
                time_limit,
            }
        })
        .collect();
    sort_jobs(&mut jobs);
    Ok(jobs)
}

/// Canonical job order: submit time, then id.
pub fn sort_jobs(jobs: &mut [RigidJobSpec]) {
    jobs.sort_by(|a, b| (a.submit_time, &a.id).cmp(&(b.submit_time, &b.id)));
}

/// Jobs submitted in `[start, start + duration)`, re-based so `start` is 0.
pub fn select_window(
    jobs: &[RigidJobSpec],
    start: Seconds,
    duration: Seconds,
) -> Result<Vec<RigidJobSpec>, WorkloadError> {
    if duration == 0 {
        return Err(WorkloadError::EmptyDuration);
    }
    let end = start.saturating_add(duration);
    let selected: Vec<RigidJobSpec> = jobs
        .iter()
        .filter(|j| j.submit_time >= start && j.submit_time < end)
        .map(|j| RigidJobSpec {
            submit_time: j.submit_time - start,
            ..j.clone()
        })
        .collect();
    if selected.is_empty() {
        log::warn!("window [{start}, {end}) selects no jobs");
    }
    Ok(selected)
}

/// Step function of nodes in use over time implied by records with known
/// start times: `(time, nodes)` pairs at every change, sorted by time.
pub fn usage_profile(records: &[RawTraceRecord]) -> Vec<(Seconds, u64)> {
    let mut deltas: Vec<(Seconds, i64)> = Vec::new();
    for r in records {
        if let (Some(start), Some(end)) = (r.start_time, r.span_end()) {
            if end > start {
                deltas.push((start, r.nodes_allocated as i64));
                deltas.push((end, -(r.nodes_allocated as i64)));
            }
        }
    }
    deltas.sort();
    let mut profile: Vec<(Seconds, u64)> = Vec::new();
    let mut level: i64 = 0;
    for (t, d) in deltas {
        level += d;
        match profile.last_mut() {
            Some(last) if last.0 == t => last.1 = level as u64,
            _ => profile.push((t, level as u64)),
        }
    }
    // Drop points where simultaneous changes cancelled out.
    profile.dedup_by(|b, a| a.1 == b.1);
    profile
}

/// Accounting of one pass through the cleaning pipeline.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CleaningReport {
    pub raw_count: usize,
    pub skipped_rows: usize,
    pub merged_segments: usize,
    pub shared_removed: usize,
    pub removed_runtime: Seconds,
    /// Removed runtime relative to the total raw runtime.
    pub removed_runtime_fraction: f64,
    pub cleaned_count: usize,
    pub peak_usage_before: u64,
    pub peak_usage_after: u64,
}

/// Merge, filter and finalize in one go.
pub fn clean(
    records: &[RawTraceRecord],
    merge_tolerance: Seconds,
    limit_fill_factor: f64,
) -> Result<(Vec<RigidJobSpec>, CleaningReport), WorkloadError> {
    let merged = merge_split_entries(records, merge_tolerance);
    let filtered = filter_shared_node_jobs(&merged);
    let jobs = finalize_jobs(&filtered.kept, limit_fill_factor)?;
    let raw_runtime: Seconds = records.iter().map(|r| r.runtime).sum();
    let peak = |rs: &[RawTraceRecord]| usage_profile(rs).iter().map(|p| p.1).max().unwrap_or(0);
    let report = CleaningReport {
        raw_count: records.len(),
        skipped_rows: 0,
        merged_segments: records.len() - merged.len(),
        shared_removed: filtered.removed_count,
        removed_runtime: filtered.removed_runtime_sum,
        removed_runtime_fraction: if raw_runtime == 0 {
            0.0
        } else {
            filtered.removed_runtime_sum as f64 / raw_runtime as f64
        },
        cleaned_count: jobs.len(),
        peak_usage_before: peak(records),
        peak_usage_after: peak(&filtered.kept),
    };
    Ok((jobs, report))
}

/// Ids that occur more than once; a canonical list must have none.
pub fn duplicate_ids(jobs: &[RigidJobSpec]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut dups = BTreeSet::new();
    for j in jobs {
        if !seen.insert(j.id.as_str()) {
            dups.insert(j.id.clone());
        }
    }
    dups.into_iter().collect()
}
