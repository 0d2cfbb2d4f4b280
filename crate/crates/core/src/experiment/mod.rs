//! Experiment orchestration: configuration, the sweep runner and the
//! commands behind the `malleable-sim` binary.
//!
//! A sweep writes
//!
//! ```text
//! <output>/
//!   runs/<strategy>/f<fraction>/seed<seed>/
//!     result.json      SimResult
//!     metrics.json     RunMetrics over the analysis window
//!     run.toml         everything needed to rerun this cell alone
//!     decisions.jsonl  only with trace_decisions = true
//!   aggregate.csv      one row per (strategy, fraction)
//!   plots/<metric>.dat and <metric>.gp
//! ```
//!
//! `cmd_report` adds `report.csv` and `plots/improvement_*.{dat,gp}`.

pub mod observe;
mod output;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{simulate, ClusterConfig, SimError, SimOptions, SimResult};
use crate::malleability::{
    transform_workload, EfficiencyThresholds, MalleabilityError, MixedWorkload, SpeedupModel, WorkloadJob,
};
use crate::metrics::{aggregate, run_metrics, AggregateMetrics, MetricsError, RunMetrics, DEFAULT_WARM_UP, METRIC_NAMES};
use crate::strategies::{StrategyId, Violation};
use crate::synth::{self, SynthError, WorkloadProfile};
use crate::workload::{
    clean, emit_canonical, load_canonical, parse_trace, select_window, CleaningReport, RigidJobSpec, TraceDialect,
    WorkloadError, DEFAULT_LIMIT_FILL_FACTOR, DEFAULT_MERGE_TOLERANCE,
};
use crate::Seconds;
use observe::{AuditObserver, JsonlTrace};

pub use output::{
    aggregate_header, format_improvements, improvement_gnuplot, improvement_pct, improvement_plot_data,
    improvements, metric_gnuplot, metric_plot_data, read_aggregate_csv, write_aggregate_csv,
    write_improvements_csv, Improvement, IMPROVEMENT_COLUMNS,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("infeasible workload: {0}")]
    Infeasible(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{count} conformance violations; first at t={}: {}", .first.now, .first.message)]
    Audit { count: usize, first: Violation },
}

impl ExperimentError {
    /// 2 configuration, 3 infeasible workload, 4 I/O, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            ExperimentError::Config(_) | ExperimentError::Metrics(_) => 2,
            ExperimentError::Infeasible(_) => 3,
            ExperimentError::Io { .. } => 4,
            ExperimentError::Workload(WorkloadError::Read { .. } | WorkloadError::Write { .. }) => 4,
            ExperimentError::Workload(_) => 2,
            ExperimentError::Simulation(SimError::Infeasible { .. } | SimError::DuplicateIds(_)) => 3,
            ExperimentError::Simulation(SimError::Config(_)) => 2,
            ExperimentError::Simulation(_) | ExperimentError::Audit { .. } => 1,
        }
    }
}

impl From<MalleabilityError> for ExperimentError {
    fn from(e: MalleabilityError) -> Self {
        match e {
            MalleabilityError::ExceedsCluster { .. } => ExperimentError::Infeasible(e.to_string()),
            _ => ExperimentError::Config(e.to_string()),
        }
    }
}

impl From<SynthError> for ExperimentError {
    fn from(e: SynthError) -> Self {
        ExperimentError::Config(e.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_owned(),
        source,
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

fn read_file(path: &Path) -> Result<String, ExperimentError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Where the jobs of an experiment come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum WorkloadSource {
    /// A built-in synthetic preset; `seed` and `job_count` override the profile.
    Preset {
        name: String,
        #[serde(default)]
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        job_count: Option<usize>,
    },
    /// A synthetic profile spelled out in full.
    Synth { profile: WorkloadProfile },
    /// A canonical job file.
    Canonical { path: PathBuf },
    /// A raw trace, cleaned on the fly.
    Trace {
        path: PathBuf,
        dialect: PathBuf,
        #[serde(default = "default_merge")]
        merge_tolerance: Seconds,
        #[serde(default = "default_fill")]
        limit_fill_factor: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<TraceWindow>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceWindow {
    pub start: Seconds,
    pub duration: Seconds,
}

fn default_merge() -> Seconds {
    DEFAULT_MERGE_TOLERANCE
}

fn default_fill() -> f64 {
    DEFAULT_LIMIT_FILL_FACTOR
}

fn default_strategies() -> Vec<StrategyId> {
    StrategyId::ALL.to_vec()
}

pub const DEFAULT_FRACTIONS: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

fn default_fractions() -> Vec<f64> {
    DEFAULT_FRACTIONS.to_vec()
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_warm_up() -> Seconds {
    DEFAULT_WARM_UP
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Declarative description of a sweep, read from TOML.
///
/// ```toml
/// output = "out/knl"
/// warm_up = 43200
/// strategies = ["easy-backfill", "min", "pref", "avg", "keep-pref"]
/// fractions = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
/// seeds = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]
///
/// [workload]
/// source = "preset"
/// name = "knl-like"
///
/// [cluster]            # optional for presets
/// node_count = 256
/// tick_seconds = 10
///
/// [model]              # optional; presets bring their own
/// kind = "amdahl"
/// parallel_fraction = 0.9
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub workload: WorkloadSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<ClusterConfig>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<StrategyId>,
    #[serde(default = "default_fractions")]
    pub fractions: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_warm_up")]
    pub warm_up: Seconds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<SpeedupModel>,
    #[serde(default)]
    pub thresholds: EfficiencyThresholds,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Audit every scheduling decision and fail the sweep on any violation.
    #[serde(default)]
    pub audit: bool,
    /// Write per-run `decisions.jsonl`.
    #[serde(default)]
    pub trace_decisions: bool,
    /// Worker threads; all cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(workload: WorkloadSource) -> Self {
        ExperimentConfig {
            workload,
            cluster: None,
            strategies: default_strategies(),
            fractions: default_fractions(),
            seeds: default_seeds(),
            warm_up: DEFAULT_WARM_UP,
            model: None,
            thresholds: EfficiencyThresholds::default(),
            output: default_output(),
            audit: false,
            trace_decisions: false,
            threads: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Load a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let mut c = Self::from_toml(&read_file(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut c.workload {
            WorkloadSource::Canonical { path } => rebase(path),
            WorkloadSource::Trace { path, dialect, .. } => {
                rebase(path);
                rebase(dialect);
            }
            WorkloadSource::Preset { .. } | WorkloadSource::Synth { .. } => {}
        }
        rebase(&mut c.output);
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.strategies.is_empty() || self.fractions.is_empty() || self.seeds.is_empty() {
            return bad("strategies, fractions and seeds must be non-empty".into());
        }
        if let Some(f) = self.fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return bad(format!("fraction {f} outside [0, 1]"));
        }
        let mut fr = self.fractions.clone();
        fr.sort_by(f64::total_cmp);
        if fr.windows(2).any(|w| w[0] == w[1]) {
            return bad("fractions must be distinct".into());
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return bad("seeds must be distinct".into());
        }
        let mut st = self.strategies.clone();
        st.sort_unstable();
        if st.windows(2).any(|w| w[0] == w[1]) {
            return bad("strategies must be distinct".into());
        }
        if let Some(c) = &self.cluster {
            c.validate()?;
        }
        if let Some(m) = &self.model {
            m.validate()?;
        }
        self.thresholds.validate()?;
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }
}

/// Jobs, cluster and model resolved from a config.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedWorkload {
    pub jobs: Vec<RigidJobSpec>,
    pub cluster: ClusterConfig,
    pub model: SpeedupModel,
    pub thresholds: EfficiencyThresholds,
    /// Echo of the source, for run metadata.
    pub source: WorkloadSource,
}

pub fn prepare(config: &ExperimentConfig) -> Result<PreparedWorkload, ExperimentError> {
    config.validate()?;
    let mut default_cluster = None;
    let mut default_model = SpeedupModel::default();
    let jobs = match &config.workload {
        WorkloadSource::Preset { name, seed, job_count } => {
            let p = synth::preset(name)?;
            default_cluster = Some(p.cluster);
            default_model = p.model;
            let mut profile = p.profile.with_seed(*seed);
            if let Some(n) = job_count {
                profile.job_count = *n;
            }
            synth::generate(&profile)?
        }
        WorkloadSource::Synth { profile } => synth::generate(profile)?,
        WorkloadSource::Canonical { path } => load_canonical(path)?,
        WorkloadSource::Trace {
            path,
            dialect,
            merge_tolerance,
            limit_fill_factor,
            window,
        } => {
            let (jobs, _) = clean_trace(path, dialect, *merge_tolerance, *limit_fill_factor)?;
            match window {
                Some(w) => select_window(&jobs, w.start, w.duration)?,
                None => jobs,
            }
        }
    };
    let cluster = config
        .cluster
        .or(default_cluster)
        .ok_or_else(|| ExperimentError::Config("a [cluster] table is required for this workload source".into()))?;
    let too_big: Vec<&str> = jobs
        .iter()
        .filter(|j| j.requested_nodes > cluster.node_count)
        .map(|j| j.id.as_str())
        .collect();
    if !too_big.is_empty() {
        return Err(ExperimentError::Infeasible(format!(
            "{} jobs request more than {} nodes, e.g. {:?}",
            too_big.len(),
            cluster.node_count,
            &too_big[..too_big.len().min(5)]
        )));
    }
    Ok(PreparedWorkload {
        jobs,
        cluster,
        model: config.model.unwrap_or(default_model),
        thresholds: config.thresholds,
        source: config.workload.clone(),
    })
}

/// Parse and clean a raw trace.
pub fn clean_trace(
    trace: &Path,
    dialect: &Path,
    merge_tolerance: Seconds,
    limit_fill_factor: f64,
) -> Result<(Vec<RigidJobSpec>, CleaningReport), ExperimentError> {
    let dialect = TraceDialect::load(dialect)?;
    let parsed = parse_trace(trace, &dialect)?;
    let (jobs, mut report) = clean(&parsed.records, merge_tolerance, limit_fill_factor)?;
    report.skipped_rows = parsed.skipped;
    Ok((jobs, report))
}

/// Directory of one run relative to the sweep output.
pub fn run_dir(strategy: StrategyId, fraction: f64, seed: u64) -> PathBuf {
    PathBuf::from("runs")
        .join(strategy.name())
        .join(format!("f{fraction}"))
        .join(format!("seed{seed}"))
}

/// Parameters echoed into `run.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEchoFile {
    pub strategy: StrategyId,
    pub fraction: f64,
    pub seed: u64,
    pub warm_up: Seconds,
    pub cluster: ClusterConfig,
    pub model: SpeedupModel,
    pub thresholds: EfficiencyThresholds,
    pub workload: WorkloadSource,
}

/// Outcome of one (strategy, fraction, seed) cell.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub strategy: StrategyId,
    pub fraction: f64,
    pub seed: u64,
    pub metrics: RunMetrics,
    pub violations: Vec<Violation>,
    pub ticks: u64,
    /// Kept only when the run was not written to disk.
    pub result: Option<SimResult>,
}

/// Simulate one cell. With `audit`, every scheduling point is checked.
pub fn run_cell(
    prepared: &PreparedWorkload,
    strategy: StrategyId,
    fraction: f64,
    seed: u64,
    warm_up: Seconds,
    audit: bool,
    trace: Option<&Path>,
) -> Result<(SimResult, RunRecord), ExperimentError> {
    let workload = transform_workload(
        &prepared.jobs,
        fraction,
        seed,
        &prepared.model,
        &prepared.thresholds,
        prepared.cluster.node_count,
    )?;
    let (result, violations, ticks) = simulate_observed(&workload, prepared.cluster, strategy, audit, trace)?;
    let metrics = run_metrics(&result, warm_up)?;
    Ok((
        result,
        RunRecord {
            strategy,
            fraction,
            seed,
            metrics,
            violations,
            ticks,
            result: None,
        },
    ))
}

fn simulate_observed(
    workload: &MixedWorkload,
    cluster: ClusterConfig,
    strategy: StrategyId,
    audit: bool,
    trace: Option<&Path>,
) -> Result<(SimResult, Vec<Violation>, u64), ExperimentError> {
    struct Both {
        audit: Option<AuditObserver>,
        trace: Option<JsonlTrace<BufWriter<fs::File>>>,
    }
    impl crate::engine::Observer for Both {
        fn on_tick(&mut self, ctx: &crate::engine::TickContext<'_>) {
            if let Some(a) = &mut self.audit {
                a.on_tick(ctx);
            }
            if let Some(t) = &mut self.trace {
                t.on_tick(ctx);
            }
        }
    }
    let writer = match trace {
        Some(path) => {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(io_err(dir))?;
            }
            let f = fs::File::create(path).map_err(io_err(path))?;
            Some(JsonlTrace::new(BufWriter::new(f)))
        }
        None => None,
    };
    let mut obs = Both {
        audit: audit.then(|| AuditObserver::new(strategy)),
        trace: writer,
    };
    let mut result = simulate(workload, cluster, &strategy, SimOptions::default(), &mut obs)?;
    result.config.strategy = strategy.name().into();
    if let (Some(t), Some(path)) = (obs.trace.take(), trace) {
        t.finish().map_err(io_err(path))?;
    }
    let (violations, ticks) = match obs.audit {
        Some(a) => (a.violations, a.ticks),
        None => (Vec::new(), 0),
    };
    Ok((result, violations, ticks))
}

/// Run the whole grid, in parallel. With `write`, each run's files go under
/// `config.output` as they finish and results are dropped; otherwise results
/// are kept in the returned records. Records come back sorted by
/// (strategy, fraction, seed) regardless of execution order.
pub fn run_grid(
    config: &ExperimentConfig,
    prepared: &PreparedWorkload,
    write: bool,
) -> Result<Vec<RunRecord>, ExperimentError> {
    let mut cells: Vec<(StrategyId, f64, u64)> = Vec::new();
    for &s in &config.strategies {
        for &f in &config.fractions {
            for &seed in &config.seeds {
                cells.push((s, f, seed));
            }
        }
    }
    let work = || {
        cells
            .par_iter()
            .map(|&(strategy, fraction, seed)| {
                let dir = config.output.join(run_dir(strategy, fraction, seed));
                let trace = (write && config.trace_decisions).then(|| dir.join("decisions.jsonl"));
                let (result, mut record) =
                    run_cell(prepared, strategy, fraction, seed, config.warm_up, config.audit, trace.as_deref())?;
                if write {
                    write_run(&dir, prepared, config, &record, &result)?;
                } else {
                    record.result = Some(result);
                }
                Ok(record)
            })
            .collect::<Result<Vec<RunRecord>, ExperimentError>>()
    };
    let mut records = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ExperimentError::Config(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    records.sort_by(|a, b| {
        (a.strategy, a.fraction, a.seed)
            .partial_cmp(&(b.strategy, b.fraction, b.seed))
            .expect("fractions are finite")
    });
    Ok(records)
}

fn write_run(
    dir: &Path,
    prepared: &PreparedWorkload,
    config: &ExperimentConfig,
    record: &RunRecord,
    result: &SimResult,
) -> Result<(), ExperimentError> {
    let echo = RunEchoFile {
        strategy: record.strategy,
        fraction: record.fraction,
        seed: record.seed,
        warm_up: config.warm_up,
        cluster: prepared.cluster,
        model: prepared.model,
        thresholds: prepared.thresholds,
        workload: prepared.source.clone(),
    };
    write_file(&dir.join("result.json"), result.to_json())?;
    write_file(
        &dir.join("metrics.json"),
        serde_json::to_string_pretty(&record.metrics).expect("metrics serialize"),
    )?;
    write_file(
        &dir.join("run.toml"),
        toml::to_string(&echo).map_err(|e| ExperimentError::Config(e.to_string()))?,
    )
}

/// Aggregate sorted records per (strategy, fraction) cell.
pub fn aggregate_records(records: &[RunRecord]) -> Result<Vec<AggregateMetrics>, ExperimentError> {
    let mut groups: Vec<((StrategyId, f64), Vec<RunMetrics>)> = Vec::new();
    for r in records {
        match groups.last_mut() {
            Some((key, ms)) if *key == (r.strategy, r.fraction) => ms.push(r.metrics.clone()),
            _ => groups.push(((r.strategy, r.fraction), vec![r.metrics.clone()])),
        }
    }
    groups.iter().map(|(_, ms)| aggregate(ms).map_err(Into::into)).collect()
}

/// What a sweep produced.
#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub runs: usize,
    pub violations: usize,
    pub aggregates: Vec<AggregateMetrics>,
    pub output: PathBuf,
}

/// Run every (strategy, fraction, seed) cell and write all outputs.
pub fn cmd_sweep(config: &ExperimentConfig) -> Result<SweepSummary, ExperimentError> {
    let prepared = prepare(config)?;
    log::info!(
        "sweep: {} jobs on {} nodes, {} strategies x {} fractions x {} seeds",
        prepared.jobs.len(),
        prepared.cluster.node_count,
        config.strategies.len(),
        config.fractions.len(),
        config.seeds.len()
    );
    let records = run_grid(config, &prepared, true)?;
    let violations: Vec<&Violation> = records.iter().flat_map(|r| &r.violations).collect();
    if let Some(first) = violations.first() {
        return Err(ExperimentError::Audit {
            count: violations.len(),
            first: (*first).clone(),
        });
    }
    let aggregates = aggregate_records(&records)?;
    write_aggregate_outputs(&config.output, &aggregates)?;
    Ok(SweepSummary {
        runs: records.len(),
        violations: 0,
        aggregates,
        output: config.output.clone(),
    })
}

fn strategies_in(rows: &[AggregateMetrics]) -> Vec<String> {
    let mut v: Vec<String> = Vec::new();
    for a in rows {
        if !v.contains(&a.strategy) {
            v.push(a.strategy.clone());
        }
    }
    v
}

/// `aggregate.csv` and the per-metric plot files.
pub fn write_aggregate_outputs(output: &Path, rows: &[AggregateMetrics]) -> Result<(), ExperimentError> {
    let mut csv = Vec::new();
    write_aggregate_csv(rows, &mut csv).map_err(|e| ExperimentError::Config(e.to_string()))?;
    write_file(&output.join("aggregate.csv"), csv)?;
    let strategies = strategies_in(rows);
    let plots = output.join("plots");
    for m in METRIC_NAMES {
        write_file(&plots.join(format!("{m}.dat")), metric_plot_data(rows, m))?;
        write_file(&plots.join(format!("{m}.gp")), metric_gnuplot(m, &strategies))?;
    }
    Ok(())
}

/// Improvement table against the rigid baseline, plus plot files in `out`.
pub fn cmd_report(aggregate_csv: &Path, out: &Path) -> Result<Vec<Improvement>, ExperimentError> {
    let text = read_file(aggregate_csv)?;
    let rows = read_aggregate_csv(text.as_bytes())?;
    let imp = improvements(&rows)?;
    let mut csv = Vec::new();
    write_improvements_csv(&imp, &mut csv).map_err(|e| ExperimentError::Config(e.to_string()))?;
    write_file(&out.join("report.csv"), csv)?;
    let strategies = strategies_in(&rows);
    for col in ["wait_pct", "makespan_pct", "turnaround_pct", "utilization_delta_pp"] {
        write_file(
            &out.join("plots").join(format!("improvement_{col}.dat")),
            improvement_plot_data(&imp, col),
        )?;
        write_file(
            &out.join("plots").join(format!("improvement_{col}.gp")),
            improvement_gnuplot(col, &strategies),
        )?;
    }
    Ok(imp)
}

/// Clean a raw trace into a canonical job file and a JSON cleaning report
/// next to it (`<out>.report.json`).
pub fn cmd_clean(
    trace: &Path,
    dialect: &Path,
    out: &Path,
    merge_tolerance: Seconds,
    limit_fill_factor: f64,
) -> Result<CleaningReport, ExperimentError> {
    let (jobs, report) = clean_trace(trace, dialect, merge_tolerance, limit_fill_factor)?;
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    emit_canonical(&jobs, out)?;
    let mut report_path = out.as_os_str().to_owned();
    report_path.push(".report.json");
    write_file(
        Path::new(&report_path),
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    Ok(report)
}

/// Convert a seeded fraction of a canonical job file to malleable form.
pub fn cmd_transform(
    canonical: &Path,
    out: &Path,
    fraction: f64,
    seed: u64,
    model: &SpeedupModel,
    thresholds: &EfficiencyThresholds,
    cluster_nodes: u32,
) -> Result<MixedWorkload, ExperimentError> {
    let jobs = load_canonical(canonical)?;
    let w = transform_workload(&jobs, fraction, seed, model, thresholds, cluster_nodes)?;
    write_file(out, serde_json::to_string_pretty(&w).expect("workload serializes"))?;
    Ok(w)
}

/// Load either a mixed workload or a canonical (all-rigid) job file.
pub fn load_workload(path: &Path) -> Result<MixedWorkload, ExperimentError> {
    let text = read_file(path)?;
    #[derive(Deserialize)]
    struct Probe {
        #[serde(default)]
        malleable_fraction: Option<f64>,
    }
    let probe: Probe = serde_json::from_str(&text)
        .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
    if probe.malleable_fraction.is_some() {
        let w: MixedWorkload = serde_json::from_str(&text)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Ok(w)
    } else {
        Ok(MixedWorkload::all_rigid(&load_canonical(path)?))
    }
}

/// Simulate one workload file and write `result.json`, the utilization and
/// queue series as plot data, and optionally `decisions.jsonl`, into `out`.
pub fn cmd_simulate(
    workload: &Path,
    cluster: ClusterConfig,
    strategy: StrategyId,
    out: &Path,
    trace_decisions: bool,
    audit: bool,
) -> Result<SimResult, ExperimentError> {
    let w = load_workload(workload)?;
    if strategy == StrategyId::EasyBackfill && w.jobs.iter().any(WorkloadJob::is_malleable) {
        log::info!("easy-backfill runs malleable jobs rigidly at their preferred size");
    }
    let trace = trace_decisions.then(|| out.join("decisions.jsonl"));
    let (result, violations, _) = simulate_observed(&w, cluster, strategy, audit, trace.as_deref())?;
    if let Some(first) = violations.first() {
        return Err(ExperimentError::Audit {
            count: violations.len(),
            first: first.clone(),
        });
    }
    write_file(&out.join("result.json"), result.to_json())?;
    write_file(
        &out.join("utilization.dat"),
        crate::engine::series_plot_data(&result.utilization_series),
    )?;
    write_file(&out.join("queue.dat"), crate::engine::series_plot_data(&result.queue_series))?;
    Ok(result)
}

/// Generate a synthetic workload into a canonical job file.
pub fn cmd_synth(profile: &WorkloadProfile, out: &Path) -> Result<Vec<RigidJobSpec>, ExperimentError> {
    let jobs = synth::generate(profile)?;
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    emit_canonical(&jobs, out)?;
    Ok(jobs)
}

#[cfg(test)]
mod tests;
