//! Conformance audit of one tick's decisions against the strategy rules.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::priority::{ExpandFirst, ShrinkFirst};
use super::{priority, Decision, JobIndex, RunningView, SchedulerView, StrategyId};
use crate::Seconds;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub now: Seconds,
    pub message: String,
}

/// Check `decisions` (as produced for `view`) for capacity, bounds, floor,
/// ceiling and priority-order violations. An empty result means conformant.
pub fn audit_tick(view: &SchedulerView, decisions: &[Decision], strategy: StrategyId) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut fail = |message: String| out.push(Violation { now: view.now, message });

    let queued: BTreeMap<JobIndex, _> = view.queue.iter().map(|w| (w.job, w)).collect();
    let mut running: Vec<RunningView> = view.running.clone();
    let mut free = view.free_nodes as i64;
    let mut started = BTreeSet::new();

    for d in decisions {
        if let Decision::Start { job, nodes } = *d {
            let Some(w) = queued.get(&job) else {
                fail(format!("start of job {job} which is not waiting"));
                continue;
            };
            if !started.insert(job) {
                fail(format!("job {job} started twice"));
            }
            let (lo, hi) = strategy.start_range(&w.shape);
            if nodes < lo || nodes > hi {
                fail(format!("job {job} started on {nodes} nodes outside [{lo}, {hi}]"));
            }
            free -= nodes as i64;
            running.push(RunningView {
                job,
                submit: w.submit,
                start: view.now,
                time_limit: w.time_limit,
                nodes,
                shape: w.shape,
                since: view.now,
                work_done: 0.0,
            });
        }
    }
    if free < 0 {
        fail(format!("starts over-allocate the cluster by {}", -free));
    }
    let free_after_starts = free.max(0) as u32;

    let by_job: BTreeMap<JobIndex, &RunningView> = running.iter().map(|r| (r.job, r)).collect();
    let mut shrunk: BTreeMap<JobIndex, u32> = BTreeMap::new();
    let mut expanded: BTreeMap<JobIndex, u32> = BTreeMap::new();
    for d in decisions {
        let Decision::Resize { job, nodes } = *d else { continue };
        let Some(r) = by_job.get(&job) else {
            fail(format!("resize of job {job} which is not running"));
            continue;
        };
        if !strategy.is_malleable() || !r.shape.is_malleable() {
            fail(format!("resize of job {job} under {strategy} (rigid job or rigid strategy)"));
            continue;
        }
        if nodes < r.nodes {
            match strategy.shrink_floor(&r.shape) {
                Some(floor) if nodes >= floor => {}
                floor => fail(format!("job {job} shrunk to {nodes} below floor {floor:?}")),
            }
            shrunk.insert(job, nodes);
        } else if nodes > r.nodes {
            match strategy.expand_ceiling(&r.shape) {
                Some(ceiling) if nodes <= ceiling => {}
                ceiling => fail(format!("job {job} expanded to {nodes} above ceiling {ceiling:?}")),
            }
            free -= (nodes - r.nodes) as i64;
            expanded.insert(job, nodes);
        } else {
            fail(format!("no-op resize of job {job}"));
        }
    }
    if free < 0 {
        fail(format!("decisions over-allocate the cluster by {}", -free));
    }
    if !shrunk.is_empty() && !expanded.is_empty() {
        fail("shrinks and expands in the same tick".into());
    }

    let head = view.queue.iter().find(|w| !started.contains(&w.job));
    let triggered = head.is_some_and(|h| {
        free_after_starts > 0 && strategy.start_range(&h.shape).0 > free_after_starts
    });
    if triggered && !expanded.is_empty() {
        fail("expansions emitted while idle nodes are held for the blocked queue head".into());
    }
    if !shrunk.is_empty() {
        if !triggered {
            fail("shrinks emitted although the queue head fits or no node is idle".into());
        }
        let mut order: Vec<(ShrinkFirst, u32)> = running
            .iter()
            .filter_map(|r| {
                let floor = strategy.shrink_floor(&r.shape)?;
                let p = priority(r, strategy).ok()?;
                (r.nodes > floor).then_some((ShrinkFirst(p), floor))
            })
            .collect();
        order.sort_by(|a, b| b.0.cmp(&a.0));
        check_prefix(&order, &shrunk, !strategy.balanced(), "shrink", &mut fail);
    }
    if !expanded.is_empty() {
        let mut order: Vec<(ExpandFirst, u32)> = running
            .iter()
            .filter_map(|r| {
                let ceiling = strategy.expand_ceiling(&r.shape)?;
                let p = priority(r, strategy).ok()?;
                (r.nodes < ceiling).then_some((ExpandFirst(p), ceiling))
            })
            .collect();
        order.sort_by(|a, b| b.0.cmp(&a.0));
        check_prefix(&order, &expanded, !strategy.balanced(), "expand", &mut fail);
    }
    out
}

trait Keyed {
    fn job(&self) -> JobIndex;
}

impl Keyed for ShrinkFirst {
    fn job(&self) -> JobIndex {
        self.0.job
    }
}

impl Keyed for ExpandFirst {
    fn job(&self) -> JobIndex {
        self.0.job
    }
}

/// Resized jobs must be a prefix of `order`. With `greedy`, all of them but
/// the last must also have been driven to their limit.
fn check_prefix<K: Keyed>(
    order: &[(K, u32)],
    resized: &BTreeMap<JobIndex, u32>,
    greedy: bool,
    what: &str,
    fail: &mut impl FnMut(String),
) {
    let prefix = &order[..resized.len().min(order.len())];
    let in_prefix: BTreeSet<JobIndex> = prefix.iter().map(|(k, _)| k.job()).collect();
    if resized.len() > order.len() || resized.keys().any(|j| !in_prefix.contains(j)) {
        fail(format!(
            "{what} set {:?} is not a prefix of the priority order {:?}",
            resized.keys().collect::<Vec<_>>(),
            order.iter().map(|(k, _)| k.job()).collect::<Vec<_>>()
        ));
        return;
    }
    if greedy {
        for (k, limit) in prefix.iter().take(prefix.len().saturating_sub(1)) {
            if resized[&k.job()] != *limit {
                fail(format!(
                    "{what} of job {} stopped at {} before its limit {limit}",
                    k.job(),
                    resized[&k.job()]
                ));
            }
        }
    }
}
