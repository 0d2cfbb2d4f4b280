//! Scheduling strategies.
//!
//! Every strategy is a pure function from a [`SchedulerView`] to a list of
//! [`Decision`]s, invoked once per scheduling point. The rigid baseline is
//! EASY-Backfill. The malleable strategies run three steps per tick:
//!
//! 1. start waiting jobs with EASY-Backfill, sizing malleable jobs per
//!    strategy;
//! 2. if nodes are idle but the queue head still does not fit, shrink running
//!    malleable jobs in descending priority until it would (or nothing is
//!    left to shrink), and keep the idle nodes for the head;
//! 3. otherwise hand the idle nodes to running malleable jobs in ascending
//!    priority.
//!
//! Min and Pref resize as few jobs as possible; Avg and KeepPref move one
//! node at a time and re-rank, which spreads changes across jobs.

mod audit;
mod priority;

use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::malleability::SpeedupModel;
use crate::Seconds;

pub use audit::{audit_tick, Violation};
pub use priority::{priority, Priority};
use priority::{ExpandFirst, ShrinkFirst};

/// Position of a job in the engine's canonical `(submit, id)` ordering.
pub type JobIndex = usize;

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("unknown strategy {0:?} (expected easy-backfill|min|pref|avg|keep-pref)")]
    Unknown(String),
    #[error("{0} has no malleable priority")]
    NoPriority(StrategyId),
    #[error("job {0} is rigid and has no priority")]
    RigidJob(JobIndex),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyId {
    EasyBackfill,
    Min,
    Pref,
    Avg,
    KeepPref,
}

impl StrategyId {
    pub const ALL: [StrategyId; 5] = [
        StrategyId::EasyBackfill,
        StrategyId::Min,
        StrategyId::Pref,
        StrategyId::Avg,
        StrategyId::KeepPref,
    ];
    pub const MALLEABLE: [StrategyId; 4] = [
        StrategyId::Min,
        StrategyId::Pref,
        StrategyId::Avg,
        StrategyId::KeepPref,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyId::EasyBackfill => "easy-backfill",
            StrategyId::Min => "min",
            StrategyId::Pref => "pref",
            StrategyId::Avg => "avg",
            StrategyId::KeepPref => "keep-pref",
        }
    }

    pub fn is_malleable(self) -> bool {
        self != StrategyId::EasyBackfill
    }

    /// Acceptable start sizes `(smallest, largest)` for a waiting job.
    /// Larger sizes are preferred.
    pub fn start_range(self, shape: &Shape) -> (u32, u32) {
        match *shape {
            Shape::Rigid { nodes } => (nodes, nodes),
            Shape::Malleable { min, pref, .. } => match self {
                StrategyId::EasyBackfill | StrategyId::KeepPref => (pref, pref),
                StrategyId::Min | StrategyId::Avg => (min, min),
                StrategyId::Pref => (min, pref),
            },
        }
    }

    /// Lowest allocation Step 2 may shrink a malleable job to.
    pub fn shrink_floor(self, shape: &Shape) -> Option<u32> {
        match *shape {
            Shape::Rigid { .. } => None,
            Shape::Malleable { min, pref, max, .. } => match self {
                StrategyId::EasyBackfill => None,
                StrategyId::KeepPref => Some(pref),
                StrategyId::Avg if max == min => None,
                _ => Some(min),
            },
        }
    }

    /// Whether Steps 2 and 3 spread single-node changes over all eligible
    /// jobs (re-ranking after each) instead of resizing as few jobs as
    /// possible. KeepPref spreads like Avg: it keeps many jobs slightly above
    /// their preferred size rather than one job far above it.
    pub fn balanced(self) -> bool {
        matches!(self, StrategyId::Avg | StrategyId::KeepPref)
    }

    /// Highest allocation Step 3 may grow a malleable job to.
    pub fn expand_ceiling(self, shape: &Shape) -> Option<u32> {
        match *shape {
            Shape::Rigid { .. } => None,
            Shape::Malleable { min, max, .. } => match self {
                StrategyId::EasyBackfill => None,
                StrategyId::Avg if max == min => None,
                _ => Some(max),
            },
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyId {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        StrategyId::ALL
            .into_iter()
            .find(|id| id.name() == norm || (norm == "easy" && *id == StrategyId::EasyBackfill))
            .ok_or_else(|| StrategyError::Unknown(s.to_owned()))
    }
}

/// Node requirements of a job as seen by the scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Shape {
    Rigid {
        nodes: u32,
    },
    Malleable {
        min: u32,
        pref: u32,
        max: u32,
        #[serde(skip)]
        model: SpeedupModel,
    },
}

impl Shape {
    /// Wall-time bound when running on `nodes`: the time limit for rigid
    /// jobs, the limit scaled by `S(pref) / S(nodes)` for malleable ones.
    pub fn estimated_runtime(&self, time_limit: Seconds, nodes: u32) -> Seconds {
        match *self {
            Shape::Rigid { .. } => time_limit,
            Shape::Malleable { pref, model, .. } => {
                let ratio = model.speedup_unchecked(pref) / model.speedup_unchecked(nodes.max(1));
                (time_limit as f64 * ratio).ceil() as Seconds
            }
        }
    }

    pub fn is_malleable(&self) -> bool {
        matches!(self, Shape::Malleable { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaitingJob {
    pub job: JobIndex,
    pub submit: Seconds,
    pub time_limit: Seconds,
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunningView {
    pub job: JobIndex,
    pub submit: Seconds,
    pub start: Seconds,
    pub time_limit: Seconds,
    pub nodes: u32,
    pub shape: Shape,
    /// Time of the last allocation change (the start if never resized).
    pub since: Seconds,
    /// Node-equivalent seconds completed by `since`; zero for rigid jobs.
    pub work_done: f64,
}

impl RunningView {
    /// Estimated completion, unclamped.
    ///
    /// Rigid and never-resized jobs: `start + estimated_runtime(nodes)`.
    /// Resized malleable jobs: the limit is read as a work budget at pref,
    /// and what is left of it after `since` runs at the current size. The
    /// two agree when the allocation never changed.
    pub fn predicted_end(&self) -> Seconds {
        match self.shape {
            Shape::Malleable { pref, model, .. } if self.since > self.start => {
                let budget = self.time_limit as f64 * model.speedup_unchecked(pref);
                let left = budget - self.work_done;
                if left <= 0.0 {
                    return self.since;
                }
                let secs = left / model.speedup_unchecked(self.nodes.max(1));
                self.since + (secs - 1e-9 * secs.max(1.0)).ceil() as Seconds
            }
            _ => self.start + self.shape.estimated_runtime(self.time_limit, self.nodes),
        }
    }
}

/// What a strategy sees at one scheduling point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchedulerView {
    pub now: Seconds,
    pub tick: Seconds,
    pub node_count: u32,
    pub free_nodes: u32,
    /// Waiting jobs in `(submit, id)` order.
    pub queue: Vec<WaitingJob>,
    /// Running jobs in `(submit, id)` order.
    pub running: Vec<RunningView>,
}

impl SchedulerView {
    /// Predicted release time of a running job. Jobs that overran their
    /// estimate are predicted to end one second from now.
    pub fn release_time(&self, r: &RunningView) -> Seconds {
        r.predicted_end().max(self.now + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Decision {
    /// Start a waiting job now on `nodes` nodes.
    Start { job: JobIndex, nodes: u32 },
    /// Change a running malleable job's allocation to `nodes`, effective at
    /// the next scheduling point.
    Resize { job: JobIndex, nodes: u32 },
}

/// A scheduling policy invoked once per tick.
pub trait Policy: Sync {
    fn decide(&self, view: &SchedulerView) -> Vec<Decision>;
}

impl Policy for StrategyId {
    fn decide(&self, view: &SchedulerView) -> Vec<Decision> {
        match self {
            StrategyId::EasyBackfill => easy_backfill(view),
            s => malleable_tick(view, *s),
        }
    }
}

/// Rigid EASY-Backfill: start jobs in queue order while the head fits, then
/// backfill later jobs that do not delay the head's reservation. Malleable
/// jobs are treated as rigid at their preferred size.
pub fn easy_backfill(view: &SchedulerView) -> Vec<Decision> {
    let mut plan = Plan::new(view, StrategyId::EasyBackfill);
    plan.step1();
    plan.into_decisions()
}

/// One tick of a malleable strategy (Steps 1 to 3).
pub fn malleable_tick(view: &SchedulerView, strategy: StrategyId) -> Vec<Decision> {
    let mut plan = Plan::new(view, strategy);
    plan.step1();
    if strategy.is_malleable() {
        // Idle nodes stay reserved for a blocked head rather than being
        // handed out to expansions.
        let idle = if plan.step2() { 0 } else { plan.free };
        plan.step3(idle);
    }
    plan.into_decisions()
}

/// True when nodes are idle but the queue head does not fit at its Step-1
/// size. `view` is expected to reflect Step 1 already.
pub fn step2_trigger(view: &SchedulerView, strategy: StrategyId) -> bool {
    match view.queue.first() {
        Some(head) => view.free_nodes > 0 && strategy.start_range(&head.shape).0 > view.free_nodes,
        None => false,
    }
}

/// Working state of one tick's decision procedure.
struct Plan<'a> {
    view: &'a SchedulerView,
    strategy: StrategyId,
    free: u32,
    /// Running jobs plus those started this tick, with planned allocations.
    running: Vec<RunningView>,
    /// Index into `view.queue` of the first job left waiting after Step 1.
    head: Option<usize>,
    starts: Vec<Decision>,
    /// Planned target allocation per job, for jobs whose size changes.
    targets: BTreeMap<JobIndex, u32>,
}

impl<'a> Plan<'a> {
    fn new(view: &'a SchedulerView, strategy: StrategyId) -> Self {
        Plan {
            view,
            strategy,
            free: view.free_nodes,
            running: view.running.clone(),
            head: None,
            starts: Vec::new(),
            targets: BTreeMap::new(),
        }
    }

    fn start(&mut self, w: &WaitingJob, nodes: u32) {
        debug_assert!(nodes <= self.free);
        self.free -= nodes;
        self.starts.push(Decision::Start { job: w.job, nodes });
        self.running.push(RunningView {
            job: w.job,
            submit: w.submit,
            start: self.view.now,
            time_limit: w.time_limit,
            nodes,
            shape: w.shape,
            since: self.view.now,
            work_done: 0.0,
        });
    }

    fn step1(&mut self) {
        let view = self.view;
        let queue = &view.queue;
        let mut i = 0;
        while i < queue.len() {
            let (lo, hi) = self.strategy.start_range(&queue[i].shape);
            if lo > self.free {
                break;
            }
            let size = hi.min(self.free);
            self.start(&queue[i], size);
            i += 1;
        }
        if i == queue.len() {
            return;
        }
        self.head = Some(i);
        let need = self.strategy.start_range(&queue[i].shape).0;

        // Reservation for the head: the earliest predicted release that frees enough nodes.
        let mut releases: Vec<(Seconds, JobIndex, u32)> = self
            .running
            .iter()
            .map(|r| (view.release_time(r), r.job, r.nodes))
            .collect();
        releases.sort_unstable();
        let mut avail = self.free;
        let mut reservation = None;
        for (t, _, nodes) in releases {
            avail += nodes;
            if avail >= need {
                reservation = Some((t, avail - need));
                break;
            }
        }
        let Some((shadow, mut extra)) = reservation else {
            return;
        };

        for w in &queue[i + 1..] {
            if self.free == 0 {
                break;
            }
            let (lo, hi) = self.strategy.start_range(&w.shape);
            if lo > self.free {
                continue;
            }
            let size = hi.min(self.free);
            if view.now + w.shape.estimated_runtime(w.time_limit, size) <= shadow {
                self.start(w, size);
            } else {
                let size = size.min(extra);
                if size >= lo && size > 0 {
                    extra -= size;
                    self.start(w, size);
                }
            }
        }
    }

    fn current(&self, r: &RunningView) -> u32 {
        self.targets.get(&r.job).copied().unwrap_or(r.nodes)
    }

    /// Shrink toward the head's deficit in priority order, each job down to
    /// its floor. Returns whether Step 2 was triggered at all.
    fn step2(&mut self) -> bool {
        let Some(head) = self.head.map(|i| &self.view.queue[i]) else {
            return false;
        };
        let need = self.strategy.start_range(&head.shape).0;
        if self.free == 0 || need <= self.free {
            return false;
        }
        let deficit = need - self.free;
        let strategy = self.strategy;
        let mut eligible: Vec<(ShrinkFirst, u32)> = self
            .running
            .iter()
            .filter_map(|r| {
                let floor = strategy.shrink_floor(&r.shape)?;
                (r.nodes > floor).then(|| (ShrinkFirst(priority(r, strategy).expect("malleable")), floor))
            })
            .collect();
        let shrinkable: u64 = eligible.iter().map(|(p, floor)| (p.0.nodes - floor) as u64).sum();
        let mut remaining = deficit.min(shrinkable.min(u32::MAX as u64) as u32);
        if strategy.balanced() {
            // Single-node steps from the currently highest-priority job.
            let mut heap: BinaryHeap<(ShrinkFirst, u32)> = eligible.into_iter().collect();
            while remaining > 0 {
                let (ShrinkFirst(p), floor) = heap.pop().expect("remaining bounded by shrinkable");
                let next = p.with_nodes(p.nodes - 1);
                self.targets.insert(next.job, next.nodes);
                remaining -= 1;
                if next.nodes > floor {
                    heap.push((ShrinkFirst(next), floor));
                }
            }
        } else {
            eligible.sort_by(|a, b| b.0.cmp(&a.0));
            for (ShrinkFirst(p), floor) in eligible {
                if remaining == 0 {
                    break;
                }
                let take = (p.nodes - floor).min(remaining);
                self.targets.insert(p.job, p.nodes - take);
                remaining -= take;
            }
        }
        true
    }

    fn step3(&mut self, mut idle: u32) {
        if idle == 0 {
            return;
        }
        let strategy = self.strategy;
        let mut eligible: Vec<(ExpandFirst, u32)> = self
            .running
            .iter()
            .filter_map(|r| {
                let ceiling = strategy.expand_ceiling(&r.shape)?;
                let cur = self.current(r);
                (cur < ceiling).then(|| {
                    let p = priority(r, strategy).expect("malleable").with_nodes(cur);
                    (ExpandFirst(p), ceiling)
                })
            })
            .collect();

        if strategy.balanced() {
            // Single-node grants to the currently lowest-priority job.
            let mut heap: BinaryHeap<(ExpandFirst, u32)> = eligible.into_iter().collect();
            while idle > 0 {
                let Some((ExpandFirst(p), ceiling)) = heap.pop() else { break };
                let next = p.with_nodes(p.nodes + 1);
                self.targets.insert(next.job, next.nodes);
                idle -= 1;
                if next.nodes < ceiling {
                    heap.push((ExpandFirst(next), ceiling));
                }
            }
        } else {
            eligible.sort_by(|a, b| b.0.cmp(&a.0));
            for (ExpandFirst(p), ceiling) in eligible {
                if idle == 0 {
                    break;
                }
                let grant = (ceiling - p.nodes).min(idle);
                self.targets.insert(p.job, p.nodes + grant);
                idle -= grant;
            }
        }
    }

    fn into_decisions(self) -> Vec<Decision> {
        let mut out = self.starts;
        for r in &self.running {
            if let Some(&target) = self.targets.get(&r.job) {
                if target != r.nodes {
                    out.push(Decision::Resize {
                        job: r.job,
                        nodes: target,
                    });
                }
            }
        }
        out
    }
}
