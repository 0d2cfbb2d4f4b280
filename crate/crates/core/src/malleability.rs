//! Speedup models, node-bound derivation and the rigid → malleable transform.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workload::RigidJobSpec;
use crate::Seconds;

#[derive(Debug, Error, PartialEq)]
pub enum MalleabilityError {
    #[error("speedup is undefined for zero nodes")]
    ZeroNodes,
    #[error("invalid speedup model: {0}")]
    Model(String),
    #[error("invalid efficiency thresholds: {0}")]
    Thresholds(String),
    #[error("malleable fraction must lie in [0, 1], got {0}")]
    Fraction(f64),
    #[error("jobs request more than {cluster_nodes} nodes: {ids:?}")]
    ExceedsCluster { cluster_nodes: u32, ids: Vec<String> },
}

/// Execution-rate multiplier at `n` nodes relative to one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpeedupModel {
    /// `S(n) = 1 / ((1 - f) + f / n)`.
    Amdahl { parallel_fraction: f64 },
    /// Downey's model with average parallelism `A` and variance `sigma`.
    Downey { average_parallelism: f64, variance: f64 },
}

impl Default for SpeedupModel {
    fn default() -> Self {
        SpeedupModel::Amdahl { parallel_fraction: 0.9 }
    }
}

impl SpeedupModel {
    pub fn amdahl(parallel_fraction: f64) -> Result<Self, MalleabilityError> {
        let m = SpeedupModel::Amdahl { parallel_fraction };
        m.validate().map(|_| m)
    }

    pub fn downey(average_parallelism: f64, variance: f64) -> Result<Self, MalleabilityError> {
        let m = SpeedupModel::Downey {
            average_parallelism,
            variance,
        };
        m.validate().map(|_| m)
    }

    pub fn validate(&self) -> Result<(), MalleabilityError> {
        match *self {
            SpeedupModel::Amdahl { parallel_fraction: f } => {
                if !(f > 0.0 && f < 1.0) {
                    return Err(MalleabilityError::Model(format!(
                        "parallel fraction must lie in (0, 1), got {f}"
                    )));
                }
            }
            SpeedupModel::Downey {
                average_parallelism: a,
                variance: s,
            } => {
                if !(a >= 1.0 && a.is_finite()) || !(s >= 0.0 && s.is_finite()) {
                    return Err(MalleabilityError::Model(format!(
                        "Downey needs A >= 1 and sigma >= 0, got A={a} sigma={s}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn speedup(&self, n: u32) -> Result<f64, MalleabilityError> {
        if n == 0 {
            return Err(MalleabilityError::ZeroNodes);
        }
        Ok(self.speedup_unchecked(n))
    }

    /// [`speedup`](Self::speedup) for callers that already hold `n >= 1`.
    pub(crate) fn speedup_unchecked(&self, n: u32) -> f64 {
        debug_assert!(n >= 1);
        if n == 1 {
            return 1.0;
        }
        let n = n as f64;
        match *self {
            SpeedupModel::Amdahl { parallel_fraction: f } => 1.0 / ((1.0 - f) + f / n),
            SpeedupModel::Downey {
                average_parallelism: a,
                variance: sigma,
            } => downey(a, sigma, n),
        }
    }

    pub fn efficiency(&self, n: u32) -> Result<f64, MalleabilityError> {
        Ok(self.speedup(n)? / n as f64)
    }
}

fn downey(a: f64, sigma: f64, n: f64) -> f64 {
    if sigma <= 1.0 {
        if n <= a {
            a * n / (a + sigma / 2.0 * (n - 1.0))
        } else if n <= 2.0 * a - 1.0 {
            a * n / (sigma * (a - 0.5) + n * (1.0 - sigma / 2.0))
        } else {
            a
        }
    } else if n <= a + a * sigma - sigma {
        n * a * (sigma + 1.0) / (sigma * (n + a - 1.0) + a)
    } else {
        a
    }
}

/// Knobs that turn a speedup model into node bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyThresholds {
    /// The largest allocation must keep at least this parallel efficiency.
    pub min_efficiency_for_max: f64,
    /// `min_nodes = max(1, ceil(ratio * requested))`.
    pub shrink_floor_ratio: f64,
    /// When set, `min_nodes` is instead the smallest `n` with
    /// `S(n) >= fraction * S(pref)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_speedup_fraction: Option<f64>,
}

impl Default for EfficiencyThresholds {
    fn default() -> Self {
        EfficiencyThresholds {
            min_efficiency_for_max: 0.5,
            shrink_floor_ratio: 0.5,
            min_speedup_fraction: None,
        }
    }
}

impl EfficiencyThresholds {
    pub fn validate(&self) -> Result<(), MalleabilityError> {
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        if !in_unit(self.min_efficiency_for_max) || !in_unit(self.shrink_floor_ratio) {
            return Err(MalleabilityError::Thresholds(format!(
                "ratios must lie in (0, 1]: {self:?}"
            )));
        }
        if let Some(f) = self.min_speedup_fraction {
            if !in_unit(f) {
                return Err(MalleabilityError::Thresholds(format!(
                    "min_speedup_fraction must lie in (0, 1], got {f}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeBounds {
    pub min: u32,
    pub pref: u32,
    pub max: u32,
}

// Efficiencies within this distance of the threshold count as meeting it.
const EFFICIENCY_SLACK: f64 = 1e-12;

/// `pref` is the requested size; `max` the largest size up to the cluster
/// that keeps the efficiency threshold (never below `pref`); `min` follows
/// the shrink floor.
pub fn derive_node_bounds(
    job: &RigidJobSpec,
    model: &SpeedupModel,
    thresholds: &EfficiencyThresholds,
    cluster_nodes: u32,
) -> NodeBounds {
    let pref = job.requested_nodes.clamp(1, cluster_nodes.max(1));
    let mut max = pref;
    for n in pref + 1..=cluster_nodes {
        let eff = model.speedup_unchecked(n) / n as f64;
        if eff + EFFICIENCY_SLACK >= thresholds.min_efficiency_for_max {
            max = n;
        } else {
            break;
        }
    }
    let min = match thresholds.min_speedup_fraction {
        Some(frac) => {
            let target = frac * model.speedup_unchecked(pref);
            (1..=pref)
                .find(|&n| model.speedup_unchecked(n) + EFFICIENCY_SLACK >= target)
                .unwrap_or(pref)
        }
        None => ((thresholds.shrink_floor_ratio * pref as f64).ceil() as u32).clamp(1, pref),
    };
    NodeBounds { min, pref, max }
}

/// A rigid job augmented with node bounds and a work quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MalleableJobSpec {
    #[serde(flatten)]
    pub base: RigidJobSpec,
    pub min_nodes: u32,
    pub pref_nodes: u32,
    pub max_nodes: u32,
    /// Node-equivalent seconds: `runtime * S(pref_nodes)`.
    pub total_work: f64,
    pub model: SpeedupModel,
}

impl MalleableJobSpec {
    pub fn speedup(&self, n: u32) -> f64 {
        self.model.speedup_unchecked(n)
    }

    /// Wall-time bound at `nodes`, scaling the limit by the speedup ratio.
    pub fn limit_at(&self, nodes: u32) -> Seconds {
        let scaled = self.base.time_limit as f64 * self.speedup(self.pref_nodes) / self.speedup(nodes);
        scaled.ceil() as Seconds
    }
}

pub fn to_malleable(job: &RigidJobSpec, bounds: NodeBounds, model: SpeedupModel) -> MalleableJobSpec {
    debug_assert!(1 <= bounds.min && bounds.min <= bounds.pref && bounds.pref <= bounds.max);
    MalleableJobSpec {
        base: job.clone(),
        min_nodes: bounds.min,
        pref_nodes: bounds.pref,
        max_nodes: bounds.max,
        total_work: job.runtime as f64 * model.speedup_unchecked(bounds.pref),
        model,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WorkloadJob {
    Rigid(RigidJobSpec),
    Malleable(MalleableJobSpec),
}

impl WorkloadJob {
    pub fn base(&self) -> &RigidJobSpec {
        match self {
            WorkloadJob::Rigid(j) => j,
            WorkloadJob::Malleable(m) => &m.base,
        }
    }

    pub fn id(&self) -> &str {
        &self.base().id
    }

    pub fn is_malleable(&self) -> bool {
        matches!(self, WorkloadJob::Malleable(_))
    }

    /// The smallest allocation the job can run on.
    pub fn min_nodes(&self) -> u32 {
        match self {
            WorkloadJob::Rigid(j) => j.requested_nodes,
            WorkloadJob::Malleable(m) => m.min_nodes,
        }
    }

    /// The largest allocation the job can run on.
    pub fn max_nodes(&self) -> u32 {
        match self {
            WorkloadJob::Rigid(j) => j.requested_nodes,
            WorkloadJob::Malleable(m) => m.max_nodes,
        }
    }
}

/// A workload in which a seeded subset of jobs is malleable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedWorkload {
    pub version: u32,
    pub malleable_fraction: f64,
    pub seed: u64,
    pub jobs: Vec<WorkloadJob>,
}

impl MixedWorkload {
    pub fn all_rigid(jobs: &[RigidJobSpec]) -> Self {
        MixedWorkload {
            version: 1,
            malleable_fraction: 0.0,
            seed: 0,
            jobs: jobs.iter().cloned().map(WorkloadJob::Rigid).collect(),
        }
    }

    pub fn malleable_count(&self) -> usize {
        self.jobs.iter().filter(|j| j.is_malleable()).count()
    }
}

/// SplitMix64 (Steele, Lea & Flood 2014).
///
/// `state += 0x9E3779B97F4A7C15`, then the output mix
/// `z = (z ^ z >> 30) * 0xBF58476D1CE4E5B9; z = (z ^ z >> 27) * 0x94D049BB133111EB; z ^ z >> 31`.
/// Chosen because it is fully specified by those three constants and trivial
/// to port.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `[0, bound)` by rejecting draws below `2^64 mod bound`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % bound;
            }
        }
    }
}

/// Indices of `count` of `0..len` chosen uniformly without replacement:
/// the first `count` positions of a partial Fisher-Yates shuffle driven by
/// [`SplitMix64`], where step `i` swaps position `i` with `i + below(len - i)`.
pub fn select_indices(len: usize, count: usize, seed: u64) -> Vec<usize> {
    let count = count.min(len);
    let mut idx: Vec<usize> = (0..len).collect();
    let mut rng = SplitMix64::new(seed);
    for i in 0..count {
        let j = i + rng.below((len - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(count);
    idx
}

/// Convert `round(fraction * len)` seeded-random jobs to malleable form,
/// preserving job order.
pub fn transform_workload(
    jobs: &[RigidJobSpec],
    fraction: f64,
    seed: u64,
    model: &SpeedupModel,
    thresholds: &EfficiencyThresholds,
    cluster_nodes: u32,
) -> Result<MixedWorkload, MalleabilityError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(MalleabilityError::Fraction(fraction));
    }
    model.validate()?;
    thresholds.validate()?;
    let too_big: Vec<String> = jobs
        .iter()
        .filter(|j| j.requested_nodes > cluster_nodes)
        .map(|j| j.id.clone())
        .collect();
    if !too_big.is_empty() {
        return Err(MalleabilityError::ExceedsCluster {
            cluster_nodes,
            ids: too_big,
        });
    }

    let count = (fraction * jobs.len() as f64).round() as usize;
    let mut chosen = vec![false; jobs.len()];
    for i in select_indices(jobs.len(), count, seed) {
        chosen[i] = true;
    }
    let jobs = jobs
        .iter()
        .zip(chosen)
        .map(|(job, malleable)| {
            if malleable {
                let bounds = derive_node_bounds(job, model, thresholds, cluster_nodes);
                WorkloadJob::Malleable(to_malleable(job, bounds, *model))
            } else {
                WorkloadJob::Rigid(job.clone())
            }
        })
        .collect();
    Ok(MixedWorkload {
        version: 1,
        malleable_fraction: fraction,
        seed,
        jobs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn amdahl() -> SpeedupModel {
        SpeedupModel::amdahl(0.9).unwrap()
    }

    fn job(nodes: u32, runtime: u64) -> RigidJobSpec {
        RigidJobSpec {
            id: "j".into(),
            submit_time: 0,
            requested_nodes: nodes,
            runtime,
            time_limit: runtime * 5 / 4,
        }
    }

    #[test]
    fn amdahl_values() {
        let m = amdahl();
        assert_eq!(m.speedup(1).unwrap(), 1.0);
        assert!((m.speedup(2).unwrap() - 1.0 / 0.55).abs() < 1e-12);
        let big = m.speedup(1 << 30).unwrap();
        assert!(big < 10.0 && big > 9.9999);
        assert_eq!(m.speedup(0), Err(MalleabilityError::ZeroNodes));
    }

    #[test]
    fn downey_caps_at_average_parallelism() {
        for sigma in [0.0, 0.5, 1.0, 2.0] {
            let m = SpeedupModel::downey(8.0, sigma).unwrap();
            assert_eq!(m.speedup(1).unwrap(), 1.0);
            assert!((m.speedup(1000).unwrap() - 8.0).abs() < 1e-12);
        }
        // sigma = 0 is linear up to A.
        let m = SpeedupModel::downey(8.0, 0.0).unwrap();
        assert!((m.speedup(5).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_models_and_thresholds() {
        assert!(SpeedupModel::amdahl(1.0).is_err());
        assert!(SpeedupModel::amdahl(0.0).is_err());
        assert!(SpeedupModel::downey(0.5, 0.0).is_err());
        assert!(SpeedupModel::downey(2.0, -1.0).is_err());
        let t = EfficiencyThresholds {
            shrink_floor_ratio: 0.0,
            ..Default::default()
        };
        assert!(t.validate().is_err());
    }

    #[test]
    fn bounds_floor_and_clamp() {
        let t = EfficiencyThresholds::default();
        let b = derive_node_bounds(&job(1, 10), &amdahl(), &t, 64);
        assert_eq!((b.min, b.pref), (1, 1));
        let b = derive_node_bounds(&job(64, 10), &amdahl(), &t, 64);
        assert_eq!(b.max, 64);
        let b = derive_node_bounds(&job(5, 10), &amdahl(), &t, 64);
        assert_eq!(b.min, 3);
    }

    #[test]
    fn speedup_fraction_min_rule() {
        let t = EfficiencyThresholds {
            min_speedup_fraction: Some(0.5),
            ..Default::default()
        };
        // S(8) = 1/(0.1+0.1125) = 4.7059; smallest n with S(n) >= 2.353 is 3 (S(3) = 2.5).
        let b = derive_node_bounds(&job(8, 10), &amdahl(), &t, 64);
        assert_eq!(b.min, 3);
    }

    #[test]
    fn work_calibration() {
        let m = to_malleable(&job(4, 1000), NodeBounds { min: 2, pref: 4, max: 11 }, amdahl());
        assert!((m.total_work - 1000.0 / 0.325).abs() < 1e-9);
        let one = to_malleable(&job(1, 1000), NodeBounds { min: 1, pref: 1, max: 11 }, amdahl());
        assert_eq!(one.total_work, 1000.0);
    }

    #[test]
    fn splitmix_reference_values() {
        // First outputs for seed 0, as published with the reference C code.
        let mut r = SplitMix64::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(r.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn selection_boundaries() {
        let jobs: Vec<_> = (0..10).map(|i| RigidJobSpec { id: i.to_string(), ..job(2, 100) }).collect();
        let t = EfficiencyThresholds::default();
        let none = transform_workload(&jobs, 0.0, 3, &amdahl(), &t, 16).unwrap();
        assert_eq!(none.malleable_count(), 0);
        let all = transform_workload(&jobs, 1.0, 3, &amdahl(), &t, 16).unwrap();
        assert_eq!(all.malleable_count(), 10);
        assert!(transform_workload(&jobs, 1.5, 3, &amdahl(), &t, 16).is_err());
        assert!(matches!(
            transform_workload(&jobs, 0.5, 3, &amdahl(), &t, 1),
            Err(MalleabilityError::ExceedsCluster { .. })
        ));
    }
}
