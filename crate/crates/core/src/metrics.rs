//! Windowed per-run metrics and cross-seed aggregation.
//!
//! A run is measured over `[warm_up, last submission]`. A job belongs to the
//! window iff it was submitted inside it, and then counts with its full
//! outcome even if it finishes after the window closes.
//!
//! Quantiles use linear interpolation between order statistics: for sorted
//! values `x[0..n]` the `p` quantile sits at position `h = (n - 1) p` and is
//! `x[floor h] + (h - floor h) (x[floor h + 1] - x[floor h])`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{ClusterConfig, SimResult};
use crate::Seconds;

/// Twelve hours.
pub const DEFAULT_WARM_UP: Seconds = 43_200;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("simulation result has no jobs")]
    EmptyResult,
    #[error(
        "analysis window [{start}, {end}] is empty: the last submission is not after the warm-up; \
         use a smaller warm-up"
    )]
    WindowTooShort { start: Seconds, end: Seconds },
    #[error("no job was submitted inside the analysis window [{start}, {end}]")]
    NoJobs { start: Seconds, end: Seconds },
    #[error("nothing to aggregate")]
    NoRuns,
    #[error("cannot aggregate runs of different cells: {0}")]
    MixedCells(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisWindow {
    pub start: Seconds,
    pub end: Seconds,
}

impl AnalysisWindow {
    pub fn len(&self) -> Seconds {
        self.end - self.start
    }

    pub fn contains(&self, t: Seconds) -> bool {
        (self.start..=self.end).contains(&t)
    }
}

pub fn analysis_window(result: &SimResult, warm_up: Seconds) -> Result<AnalysisWindow, MetricsError> {
    let end = result.max_submit().ok_or(MetricsError::EmptyResult)?;
    if end <= warm_up {
        return Err(MetricsError::WindowTooShort { start: warm_up, end });
    }
    Ok(AnalysisWindow { start: warm_up, end })
}

/// Metrics of one run. The `total_*` fields are exact integer sums over the
/// included jobs; the means are derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub strategy: String,
    pub malleable_fraction: f64,
    pub seed: u64,
    pub job_count: u64,
    pub mean_wait: f64,
    pub mean_makespan: f64,
    pub mean_turnaround: f64,
    pub node_utilization: f64,
    pub expands_per_job: f64,
    pub shrinks_per_job: f64,
    pub total_wait: u64,
    pub total_makespan: u64,
    pub total_turnaround: u64,
    pub total_expands: u64,
    pub total_shrinks: u64,
}

/// Job part of [`RunMetrics`]; `node_utilization` is left at 0.
pub fn job_metrics(result: &SimResult, window: AnalysisWindow) -> Result<RunMetrics, MetricsError> {
    let mut m = RunMetrics {
        strategy: result.config.strategy.clone(),
        malleable_fraction: result.config.malleable_fraction,
        seed: result.config.seed,
        job_count: 0,
        mean_wait: 0.0,
        mean_makespan: 0.0,
        mean_turnaround: 0.0,
        node_utilization: 0.0,
        expands_per_job: 0.0,
        shrinks_per_job: 0.0,
        total_wait: 0,
        total_makespan: 0,
        total_turnaround: 0,
        total_expands: 0,
        total_shrinks: 0,
    };
    for o in result.outcomes.values().filter(|o| window.contains(o.submit)) {
        m.job_count += 1;
        m.total_wait += o.wait();
        m.total_makespan += o.makespan();
        m.total_turnaround += o.turnaround();
        m.total_expands += o.expand_count as u64;
        m.total_shrinks += o.shrink_count as u64;
    }
    if m.job_count == 0 {
        return Err(MetricsError::NoJobs {
            start: window.start,
            end: window.end,
        });
    }
    let n = m.job_count as f64;
    m.mean_wait = m.total_wait as f64 / n;
    m.mean_makespan = m.total_makespan as f64 / n;
    m.mean_turnaround = m.total_turnaround as f64 / n;
    m.expands_per_job = m.total_expands as f64 / n;
    m.shrinks_per_job = m.total_shrinks as f64 / n;
    Ok(m)
}

/// Time-averaged fraction of nodes held over the window.
pub fn node_utilization(result: &SimResult, window: AnalysisWindow, cluster: &ClusterConfig) -> f64 {
    let series = &result.utilization_series;
    let mut area: u128 = 0;
    for (i, &(t, nodes)) in series.iter().enumerate() {
        let next = series.get(i + 1).map_or(Seconds::MAX, |s| s.0);
        let lo = t.max(window.start);
        let hi = next.min(window.end);
        if hi > lo {
            area += (hi - lo) as u128 * nodes as u128;
        }
    }
    let denom = cluster.node_count as f64 * window.len() as f64;
    if denom == 0.0 {
        return 0.0;
    }
    area as f64 / denom
}

/// Window, job metrics and utilization in one go.
pub fn run_metrics(result: &SimResult, warm_up: Seconds) -> Result<RunMetrics, MetricsError> {
    let window = analysis_window(result, warm_up)?;
    let mut m = job_metrics(result, window)?;
    let cluster = ClusterConfig {
        node_count: result.config.node_count,
        tick_seconds: result.config.tick_seconds,
    };
    m.node_utilization = node_utilization(result, window, &cluster);
    Ok(m)
}

/// Linear-interpolation quantile of `values` (need not be sorted).
///
/// Panics on an empty slice or `p` outside `[0, 1]`.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty slice");
    assert!((0.0..=1.0).contains(&p), "quantile level {p} outside [0, 1]");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        // Sum in sorted order so the mean does not depend on input order.
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Stat {
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            q25: quantile(&sorted, 0.25),
            median: quantile(&sorted, 0.5),
            q75: quantile(&sorted, 0.75),
        }
    }

    pub fn iqr(&self) -> f64 {
        self.q75 - self.q25
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub strategy: String,
    pub malleable_fraction: f64,
    pub seeds: Vec<u64>,
    pub job_count: Stat,
    pub wait: Stat,
    pub makespan: Stat,
    pub turnaround: Stat,
    pub node_utilization: Stat,
    pub expands_per_job: Stat,
    pub shrinks_per_job: Stat,
}

/// Metric names in CSV column order.
pub const METRIC_NAMES: [&str; 7] = [
    "job_count",
    "wait",
    "makespan",
    "turnaround",
    "node_utilization",
    "expands_per_job",
    "shrinks_per_job",
];

impl AggregateMetrics {
    pub fn metric(&self, name: &str) -> Option<&Stat> {
        Some(match name {
            "job_count" => &self.job_count,
            "wait" => &self.wait,
            "makespan" => &self.makespan,
            "turnaround" => &self.turnaround,
            "node_utilization" => &self.node_utilization,
            "expands_per_job" => &self.expands_per_job,
            "shrinks_per_job" => &self.shrinks_per_job,
            _ => return None,
        })
    }

    pub fn stats(&self) -> [(&'static str, &Stat); 7] {
        METRIC_NAMES.map(|n| (n, self.metric(n).expect("known metric")))
    }
}

/// Mean and IQR across the runs of one (strategy, fraction) cell.
pub fn aggregate(per_seed: &[RunMetrics]) -> Result<AggregateMetrics, MetricsError> {
    let first = per_seed.first().ok_or(MetricsError::NoRuns)?;
    if let Some(other) = per_seed
        .iter()
        .find(|m| m.strategy != first.strategy || m.malleable_fraction != first.malleable_fraction)
    {
        return Err(MetricsError::MixedCells(format!(
            "{}@{} vs {}@{}",
            first.strategy, first.malleable_fraction, other.strategy, other.malleable_fraction
        )));
    }
    let stat = |f: fn(&RunMetrics) -> f64| Stat::of(&per_seed.iter().map(f).collect::<Vec<_>>());
    let mut seeds: Vec<u64> = per_seed.iter().map(|m| m.seed).collect();
    seeds.sort_unstable();
    Ok(AggregateMetrics {
        strategy: first.strategy.clone(),
        malleable_fraction: first.malleable_fraction,
        seeds,
        job_count: stat(|m| m.job_count as f64),
        wait: stat(|m| m.mean_wait),
        makespan: stat(|m| m.mean_makespan),
        turnaround: stat(|m| m.mean_turnaround),
        node_utilization: stat(|m| m.node_utilization),
        expands_per_job: stat(|m| m.expands_per_job),
        shrinks_per_job: stat(|m| m.shrinks_per_job),
    })
}
