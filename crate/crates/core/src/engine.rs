//! Tick-driven simulation core.
//!
//! Scheduling points sit at multiples of the tick. At each one the engine
//!
//! 1. completes jobs whose work ran out since the previous point (completion
//!    times are exact to the second),
//! 2. applies resizes decided at the previous point,
//! 3. enqueues jobs submitted since the previous point,
//! 4. asks the policy for decisions and applies them.
//!
//! Starts take effect immediately. Resizes take effect at the next scheduling
//! point: an expanding job holds its new nodes right away but keeps running at
//! its old size for one tick, and a shrinking job releases nodes only at the
//! next point. That one-tick lag is the only reconfiguration overhead.
//!
//! When a tick produces no decisions the engine jumps straight to the next
//! point at which anything can change (an arrival, a completion, or a running
//! job crossing its predicted end). [`SimOptions::fast_forward`] turns that
//! off for cross-checking.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::malleability::{MixedWorkload, WorkloadJob};
use crate::strategies::{Decision, JobIndex, Policy, RunningView, SchedulerView, Shape, StrategyId, WaitingJob};
use crate::Seconds;

pub const RESULT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid cluster configuration: {0}")]
    Config(String),
    #[error("job node bounds do not fit a {node_count}-node cluster: {ids:?}")]
    Infeasible { node_count: u32, ids: Vec<String> },
    #[error("duplicate job ids: {0:?}")]
    DuplicateIds(Vec<String>),
    #[error("strategy conformance violation at t={now}: {message}")]
    Conformance { now: Seconds, message: String },
    #[error("simulation stalled at t={now} with {queued} queued jobs and nothing running")]
    Stalled { now: Seconds, queued: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub node_count: u32,
    pub tick_seconds: Seconds,
}

impl ClusterConfig {
    pub fn new(node_count: u32, tick_seconds: Seconds) -> Result<Self, SimError> {
        let c = ClusterConfig {
            node_count,
            tick_seconds,
        };
        c.validate().map(|_| c)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.node_count == 0 || self.tick_seconds == 0 {
            return Err(SimError::Config(format!(
                "node_count and tick_seconds must be >= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    fn ceil_tick(&self, t: Seconds) -> Seconds {
        t.div_ceil(self.tick_seconds) * self.tick_seconds
    }
}

/// Per-job simulated result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobOutcome {
    pub submit: Seconds,
    pub start: Seconds,
    pub end: Seconds,
    pub malleable: bool,
    pub expand_count: u32,
    pub shrink_count: u32,
    /// `(time, nodes)` at the start and at every allocation change.
    pub allocation_history: Vec<(Seconds, u32)>,
}

impl JobOutcome {
    pub fn wait(&self) -> Seconds {
        self.start - self.submit
    }

    pub fn makespan(&self) -> Seconds {
        self.end - self.start
    }

    pub fn turnaround(&self) -> Seconds {
        self.end - self.submit
    }
}

/// Run parameters echoed into every result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEcho {
    pub node_count: u32,
    pub tick_seconds: Seconds,
    pub strategy: String,
    pub job_count: usize,
    pub malleable_count: usize,
    pub malleable_fraction: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub version: u32,
    pub config: RunEcho,
    pub outcomes: BTreeMap<String, JobOutcome>,
    /// Step function of allocated nodes: `(time, nodes)` at every change.
    pub utilization_series: Vec<(Seconds, u32)>,
    /// Step function of waiting jobs, sampled at scheduling points.
    pub queue_series: Vec<(Seconds, u32)>,
}

impl SimResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("SimResult serializes")
    }

    pub fn max_submit(&self) -> Option<Seconds> {
        self.outcomes.values().map(|o| o.submit).max()
    }
}

/// Two-column `time value` plot data.
pub fn series_plot_data(series: &[(Seconds, u32)]) -> String {
    let mut s = String::from("# time value\n");
    for (t, v) in series {
        s.push_str(&format!("{t} {v}\n"));
    }
    s
}

/// Nodes not held by any of `running`.
pub fn free_nodes(node_count: u32, running: &[RunningView]) -> u32 {
    let held: u32 = running.iter().map(|r| r.nodes).sum();
    node_count.saturating_sub(held)
}

/// Everything a policy saw and decided at one scheduling point.
pub struct TickContext<'a> {
    pub view: &'a SchedulerView,
    pub decisions: &'a [Decision],
    /// Job ids indexed by [`JobIndex`].
    pub ids: &'a [String],
}

/// Hook invoked after every scheduling point, before decisions are applied.
pub trait Observer {
    fn on_tick(&mut self, ctx: &TickContext<'_>);
}

impl Observer for () {
    fn on_tick(&mut self, _: &TickContext<'_>) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub fast_forward: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { fast_forward: true }
    }
}

pub fn run_simulation(
    workload: &MixedWorkload,
    cluster: ClusterConfig,
    strategy: StrategyId,
) -> Result<SimResult, SimError> {
    let mut result = simulate(workload, cluster, &strategy, SimOptions::default(), &mut ())?;
    result.config.strategy = strategy.name().into();
    Ok(result)
}

#[derive(Debug, Clone)]
enum Remaining {
    Seconds(Seconds),
    Work(f64),
}

#[derive(Debug, Clone)]
struct Running {
    /// Nodes driving progress.
    nodes: u32,
    /// Nodes counted against capacity (differs from `nodes` while a resize is pending).
    held: u32,
    pending: Option<u32>,
    remaining: Remaining,
    last_update: Seconds,
    end: Seconds,
    start: Seconds,
    history: Vec<(Seconds, u32)>,
    expands: u32,
    shrinks: u32,
}

/// Advance a running job's remaining work to `now` at its current size and
/// recompute its completion time.
fn advance_progress(job: &WorkloadJob, r: &mut Running, now: Seconds) {
    let dt = now - r.last_update;
    match (&mut r.remaining, job) {
        (Remaining::Seconds(s), _) => *s -= dt.min(*s),
        (Remaining::Work(w), WorkloadJob::Malleable(m)) => *w -= m.speedup(r.nodes) * dt as f64,
        (Remaining::Work(_), WorkloadJob::Rigid(_)) => unreachable!("rigid jobs track seconds"),
    }
    r.last_update = now;
    r.end = completion_time(job, r);
}

fn completion_time(job: &WorkloadJob, r: &Running) -> Seconds {
    match (&r.remaining, job) {
        (Remaining::Seconds(s), _) => r.last_update + s,
        (Remaining::Work(w), WorkloadJob::Malleable(m)) => {
            let secs = w.max(0.0) / m.speedup(r.nodes);
            // Absorb floating-point noise so a job replayed at its calibrated
            // size finishes on the recorded second.
            let secs = (secs - 1e-9 * secs.max(1.0)).ceil().max(1.0);
            r.last_update + secs as Seconds
        }
        (Remaining::Work(_), WorkloadJob::Rigid(_)) => unreachable!(),
    }
}

fn shape_of(job: &WorkloadJob) -> Shape {
    match job {
        WorkloadJob::Rigid(j) => Shape::Rigid {
            nodes: j.requested_nodes,
        },
        WorkloadJob::Malleable(m) => Shape::Malleable {
            min: m.min_nodes,
            pref: m.pref_nodes,
            max: m.max_nodes,
            model: m.model,
        },
    }
}

/// Reject workloads that cannot run on the cluster or have ambiguous ids.
pub fn validate_workload(workload: &MixedWorkload, cluster: &ClusterConfig) -> Result<(), SimError> {
    cluster.validate()?;
    let infeasible: Vec<String> = workload
        .jobs
        .iter()
        .filter(|j| {
            j.min_nodes() == 0 || j.max_nodes() > cluster.node_count || j.min_nodes() > j.max_nodes()
        })
        .map(|j| j.id().to_owned())
        .collect();
    if !infeasible.is_empty() {
        return Err(SimError::Infeasible {
            node_count: cluster.node_count,
            ids: infeasible,
        });
    }
    let mut seen = BTreeSet::new();
    let dups: BTreeSet<String> = workload
        .jobs
        .iter()
        .filter(|j| !seen.insert(j.id()))
        .map(|j| j.id().to_owned())
        .collect();
    if !dups.is_empty() {
        return Err(SimError::DuplicateIds(dups.into_iter().collect()));
    }
    Ok(())
}

/// Run `workload` under an arbitrary policy.
pub fn simulate(
    workload: &MixedWorkload,
    cluster: ClusterConfig,
    policy: &dyn Policy,
    options: SimOptions,
    observer: &mut dyn Observer,
) -> Result<SimResult, SimError> {
    validate_workload(workload, &cluster)?;
    let mut jobs: Vec<&WorkloadJob> = workload.jobs.iter().collect();
    jobs.sort_by(|a, b| (a.base().submit_time, a.id()).cmp(&(b.base().submit_time, b.id())));
    let ids: Vec<String> = jobs.iter().map(|j| j.id().to_owned()).collect();
    let shapes: Vec<Shape> = jobs.iter().map(|j| shape_of(j)).collect();

    let mut sim = Sim {
        cluster,
        jobs: &jobs,
        shapes: &shapes,
        queue: Vec::new(),
        running: BTreeMap::new(),
        outcomes: vec![None; jobs.len()],
        held_total: 0,
        utilization: vec![(0, 0)],
        queue_series: vec![(0, 0)],
    };

    let mut next_arrival = 0;
    let mut now = match jobs.first() {
        Some(j) => cluster.ceil_tick(j.base().submit_time),
        None => 0,
    };
    loop {
        sim.complete_until(now);
        sim.apply_pending(now);
        while next_arrival < jobs.len() && jobs[next_arrival].base().submit_time <= now {
            sim.queue.push(next_arrival);
            next_arrival += 1;
        }

        let view = sim.view(now);
        let decisions = policy.decide(&view);
        observer.on_tick(&TickContext {
            view: &view,
            decisions: &decisions,
            ids: &ids,
        });
        sim.apply_decisions(now, &decisions)?;
        sim.record_queue(now);

        if next_arrival == jobs.len() && sim.queue.is_empty() && sim.running.is_empty() {
            break;
        }
        if decisions.is_empty() && sim.running.is_empty() && next_arrival == jobs.len() {
            return Err(SimError::Stalled {
                now,
                queued: sim.queue.len(),
            });
        }
        let next = if !options.fast_forward || !decisions.is_empty() {
            Some(now + cluster.tick_seconds)
        } else {
            sim.next_event(now, jobs.get(next_arrival).map(|j| j.base().submit_time))
        };
        match next {
            Some(t) => now = t,
            None => {
                return Err(SimError::Stalled {
                    now,
                    queued: sim.queue.len(),
                })
            }
        }
    }

    let outcomes = ids
        .iter()
        .cloned()
        .zip(sim.outcomes.into_iter().map(|o| o.expect("every job completes")))
        .collect();
    Ok(SimResult {
        version: RESULT_VERSION,
        config: RunEcho {
            node_count: cluster.node_count,
            tick_seconds: cluster.tick_seconds,
            strategy: String::new(),
            job_count: jobs.len(),
            malleable_count: workload.malleable_count(),
            malleable_fraction: workload.malleable_fraction,
            seed: workload.seed,
        },
        outcomes,
        utilization_series: sim.utilization,
        queue_series: sim.queue_series,
    })
}

struct Sim<'a> {
    cluster: ClusterConfig,
    jobs: &'a [&'a WorkloadJob],
    shapes: &'a [Shape],
    /// Waiting jobs, in index order.
    queue: Vec<JobIndex>,
    running: BTreeMap<JobIndex, Running>,
    outcomes: Vec<Option<JobOutcome>>,
    held_total: u32,
    utilization: Vec<(Seconds, u32)>,
    queue_series: Vec<(Seconds, u32)>,
}

impl Sim<'_> {
    fn free(&self) -> u32 {
        self.cluster.node_count - self.held_total
    }

    fn record_util(&mut self, t: Seconds) {
        push_step(&mut self.utilization, t, self.held_total);
    }

    fn record_queue(&mut self, t: Seconds) {
        push_step(&mut self.queue_series, t, self.queue.len() as u32);
    }

    fn complete_until(&mut self, now: Seconds) {
        let mut finished: Vec<(Seconds, JobIndex)> = self
            .running
            .iter()
            .filter(|(_, r)| r.end <= now)
            .map(|(&i, r)| (r.end, i))
            .collect();
        finished.sort_unstable();
        for &(end, i) in &finished {
            let r = self.running.remove(&i).expect("running");
            self.held_total -= r.held;
            self.record_util(end);
            self.outcomes[i] = Some(JobOutcome {
                submit: self.jobs[i].base().submit_time,
                start: r.start,
                end,
                malleable: self.jobs[i].is_malleable(),
                expand_count: r.expands,
                shrink_count: r.shrinks,
                allocation_history: r.history,
            });
        }
    }

    fn apply_pending(&mut self, now: Seconds) {
        let mut changed = false;
        for (&i, r) in self.running.iter_mut() {
            let Some(target) = r.pending.take() else { continue };
            advance_progress(self.jobs[i], r, now);
            if target > r.nodes {
                r.expands += 1;
            } else {
                r.shrinks += 1;
                self.held_total -= r.held - target;
                r.held = target;
                changed = true;
            }
            r.nodes = target;
            r.history.push((now, target));
            r.end = completion_time(self.jobs[i], r);
        }
        if changed {
            self.record_util(now);
        }
    }

    fn running_view(&self, i: JobIndex, r: &Running) -> RunningView {
        let work_done = match (&r.remaining, self.jobs[i]) {
            (Remaining::Work(w), WorkloadJob::Malleable(m)) => m.total_work - w,
            _ => 0.0,
        };
        RunningView {
            job: i,
            submit: self.jobs[i].base().submit_time,
            start: r.start,
            time_limit: self.jobs[i].base().time_limit,
            nodes: r.nodes,
            shape: self.shapes[i],
            since: r.last_update,
            work_done,
        }
    }

    fn view(&self, now: Seconds) -> SchedulerView {
        debug_assert!(self.running.values().all(|r| r.pending.is_none() && r.held == r.nodes));
        SchedulerView {
            now,
            tick: self.cluster.tick_seconds,
            node_count: self.cluster.node_count,
            free_nodes: self.free(),
            queue: self
                .queue
                .iter()
                .map(|&i| WaitingJob {
                    job: i,
                    submit: self.jobs[i].base().submit_time,
                    time_limit: self.jobs[i].base().time_limit,
                    shape: self.shapes[i],
                })
                .collect(),
            running: self
                .running
                .iter()
                .map(|(&i, r)| self.running_view(i, r))
                .collect(),
        }
    }

    fn apply_decisions(&mut self, now: Seconds, decisions: &[Decision]) -> Result<(), SimError> {
        let conformance = |message: String| SimError::Conformance { now, message };
        for d in decisions {
            match *d {
                Decision::Start { job, nodes } => {
                    let pos = self
                        .queue
                        .iter()
                        .position(|&i| i == job)
                        .ok_or_else(|| conformance(format!("start of job {job} which is not waiting")))?;
                    let spec = self.jobs[job];
                    let ok_size = match spec {
                        WorkloadJob::Rigid(r) => nodes == r.requested_nodes,
                        WorkloadJob::Malleable(m) => (m.min_nodes..=m.max_nodes).contains(&nodes),
                    };
                    if !ok_size {
                        return Err(conformance(format!("job {job} started on invalid size {nodes}")));
                    }
                    if nodes > self.free() {
                        return Err(conformance(format!(
                            "job {job} needs {nodes} nodes but only {} are free",
                            self.free()
                        )));
                    }
                    self.queue.remove(pos);
                    self.held_total += nodes;
                    let remaining = match spec {
                        WorkloadJob::Rigid(r) => Remaining::Seconds(r.runtime),
                        WorkloadJob::Malleable(m) => Remaining::Work(m.total_work),
                    };
                    let mut r = Running {
                        nodes,
                        held: nodes,
                        pending: None,
                        remaining,
                        last_update: now,
                        end: now,
                        start: now,
                        history: vec![(now, nodes)],
                        expands: 0,
                        shrinks: 0,
                    };
                    r.end = completion_time(spec, &r);
                    self.running.insert(job, r);
                }
                Decision::Resize { job, nodes } => {
                    let free = self.free();
                    let spec = self.jobs[job];
                    let r = self
                        .running
                        .get_mut(&job)
                        .ok_or_else(|| conformance(format!("resize of job {job} which is not running")))?;
                    let WorkloadJob::Malleable(m) = spec else {
                        return Err(conformance(format!("resize of rigid job {job}")));
                    };
                    if r.pending.is_some() {
                        return Err(conformance(format!("job {job} resized twice in one tick")));
                    }
                    if !(m.min_nodes..=m.max_nodes).contains(&nodes) {
                        return Err(conformance(format!(
                            "job {job} resized to {nodes} outside [{}, {}]",
                            m.min_nodes, m.max_nodes
                        )));
                    }
                    if nodes == r.nodes {
                        continue;
                    }
                    if nodes > r.nodes {
                        let delta = nodes - r.nodes;
                        if delta > free {
                            return Err(conformance(format!(
                                "expanding job {job} by {delta} exceeds {free} free nodes"
                            )));
                        }
                        r.held = nodes;
                        self.held_total += delta;
                    }
                    r.pending = Some(nodes);
                }
            }
        }
        debug_assert!(self.held_total <= self.cluster.node_count);
        self.record_util(now);
        Ok(())
    }

    /// Earliest future scheduling point at which a decision could differ.
    fn next_event(&self, now: Seconds, next_submit: Option<Seconds>) -> Option<Seconds> {
        let tick = self.cluster.tick_seconds;
        let mut next: Option<Seconds> = next_submit.map(|s| self.cluster.ceil_tick(s));
        let mut consider = |t: Seconds| next = Some(next.map_or(t, |n| n.min(t)));
        for (&i, r) in &self.running {
            if r.pending.is_some() {
                consider(now + tick);
            }
            consider(self.cluster.ceil_tick(r.end));
            if !self.queue.is_empty() {
                let predicted = self.running_view(i, r).predicted_end();
                if predicted <= now {
                    consider(now + tick);
                } else {
                    consider(self.cluster.ceil_tick(predicted));
                }
            }
        }
        next.map(|t| t.max(now + tick))
    }
}

fn push_step(series: &mut Vec<(Seconds, u32)>, t: Seconds, v: u32) {
    if let Some(last) = series.last_mut() {
        if last.0 == t {
            last.1 = v;
            let n = series.len();
            if n >= 2 && series[n - 2].1 == v {
                series.pop();
            }
            return;
        }
        if last.1 == v {
            return;
        }
    }
    series.push((t, v));
}
