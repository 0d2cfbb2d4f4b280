use std::cmp::Ordering;

use serde::Serialize;

use super::{JobIndex, RunningView, Shape, StrategyError, StrategyId};
use crate::Seconds;

/// Resize priority of a running malleable job.
///
/// * `Min`: `current - min`
/// * `Pref`, `KeepPref`: `current - pref`
/// * `Avg`: `(current - min) / (max - min)`, 0 when `max == min`
///
/// Values are compared exactly (as rationals). The total order is
/// `(value, submit, job)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Priority {
    pub job: JobIndex,
    pub submit: Seconds,
    pub nodes: u32,
    min: u32,
    pref: u32,
    max: u32,
    strategy: StrategyId,
}

pub fn priority(job: &RunningView, strategy: StrategyId) -> Result<Priority, StrategyError> {
    if strategy == StrategyId::EasyBackfill {
        return Err(StrategyError::NoPriority(strategy));
    }
    match job.shape {
        Shape::Rigid { .. } => Err(StrategyError::RigidJob(job.job)),
        Shape::Malleable { min, pref, max, .. } => Ok(Priority {
            job: job.job,
            submit: job.submit,
            nodes: job.nodes,
            min,
            pref,
            max,
            strategy,
        }),
    }
}

impl Priority {
    /// The same job's priority at a different allocation.
    pub fn with_nodes(self, nodes: u32) -> Self {
        Priority { nodes, ..self }
    }

    fn ratio(&self) -> (i64, i64) {
        let cur = self.nodes as i64;
        match self.strategy {
            StrategyId::Min => (cur - self.min as i64, 1),
            StrategyId::Pref | StrategyId::KeepPref => (cur - self.pref as i64, 1),
            StrategyId::Avg if self.max == self.min => (0, 1),
            StrategyId::Avg => (cur - self.min as i64, (self.max - self.min) as i64),
            StrategyId::EasyBackfill => unreachable!("constructed only for malleable strategies"),
        }
    }

    pub fn value(&self) -> f64 {
        let (num, den) = self.ratio();
        num as f64 / den as f64
    }

    pub fn cmp_value(&self, other: &Self) -> Ordering {
        let (an, ad) = self.ratio();
        let (bn, bd) = other.ratio();
        (an as i128 * bd as i128).cmp(&(bn as i128 * ad as i128))
    }
}

impl Ord for Priority {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_value(other)
            .then(self.submit.cmp(&other.submit))
            .then(self.job.cmp(&other.job))
    }
}

impl PartialOrd for Priority {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Heap/sort key whose greatest element is the next job to shrink:
/// highest value first, earlier `(submit, job)` on ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ShrinkFirst(pub Priority);

impl Ord for ShrinkFirst {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .cmp_value(&other.0)
            .then(other.0.submit.cmp(&self.0.submit))
            .then(other.0.job.cmp(&self.0.job))
    }
}

impl PartialOrd for ShrinkFirst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Heap/sort key whose greatest element is the next job to expand:
/// lowest value first, earlier `(submit, job)` on ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ExpandFirst(pub Priority);

impl Ord for ExpandFirst {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .cmp_value(&self.0)
            .then(other.0.submit.cmp(&self.0.submit))
            .then(other.0.job.cmp(&self.0.job))
    }
}

impl PartialOrd for ExpandFirst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
