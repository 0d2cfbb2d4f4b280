//! Synthetic workload generation.
//!
//! Arrivals are a Poisson process (optionally with one burst of simultaneous
//! submissions), node counts are drawn from a weighted discrete distribution
//! and runtimes from a mixture of log-uniform components. Generation is a pure
//! function of the profile: the same profile always yields the same jobs.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::ClusterConfig;
use crate::malleability::SpeedupModel;
use crate::workload::{filled_limit, sort_jobs, RigidJobSpec, DEFAULT_LIMIT_FILL_FACTOR};
use crate::Seconds;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid workload profile: {0}")]
    Invalid(String),
    #[error("unknown preset {0:?} (known: haswell-like, knl-like, eagle-like, theta-like)")]
    UnknownPreset(String),
}

/// `size` extra jobs all submitted at `at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Burst {
    pub at: Seconds,
    pub size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeWeight {
    pub nodes: u32,
    pub weight: f64,
}

/// Log-uniform runtime between `min` and `max` seconds, chosen with `weight`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeComponent {
    pub weight: f64,
    pub min: Seconds,
    pub max: Seconds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadProfile {
    /// Total number of jobs, burst included.
    pub job_count: usize,
    pub jobs_per_hour: f64,
    #[serde(default)]
    pub burst: Option<Burst>,
    pub nodes: Vec<NodeWeight>,
    pub runtime: Vec<RuntimeComponent>,
    #[serde(default = "default_fill")]
    pub limit_fill_factor: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_fill() -> f64 {
    DEFAULT_LIMIT_FILL_FACTOR
}

impl WorkloadProfile {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Invalid(m));
        if !(self.jobs_per_hour.is_finite() && self.jobs_per_hour > 0.0) {
            return bad(format!("jobs_per_hour must be positive, got {}", self.jobs_per_hour));
        }
        if !(self.limit_fill_factor > 1.0) {
            return bad(format!("limit_fill_factor must exceed 1, got {}", self.limit_fill_factor));
        }
        if let Some(b) = self.burst {
            if b.size > self.job_count {
                return bad(format!("burst of {} exceeds job_count {}", b.size, self.job_count));
            }
        }
        if self.nodes.is_empty() || self.runtime.is_empty() {
            return bad("node and runtime distributions must be non-empty".into());
        }
        for w in &self.nodes {
            if w.nodes == 0 || !(w.weight.is_finite() && w.weight >= 0.0) {
                return bad(format!("invalid node weight {w:?}"));
            }
        }
        for c in &self.runtime {
            if c.min == 0 || c.min > c.max || !(c.weight.is_finite() && c.weight >= 0.0) {
                return bad(format!("invalid runtime component {c:?}"));
            }
        }
        if self.nodes.iter().all(|w| w.weight == 0.0) || self.runtime.iter().all(|c| c.weight == 0.0) {
            return bad("weights must not all be zero".into());
        }
        Ok(())
    }

    /// Largest node count the profile can produce.
    pub fn max_nodes(&self) -> u32 {
        self.nodes.iter().filter(|w| w.weight > 0.0).map(|w| w.nodes).max().unwrap_or(0)
    }

    /// Expected number of Poisson arrivals within `duration` seconds.
    pub fn expected_arrivals(&self, duration: Seconds) -> f64 {
        self.jobs_per_hour * duration as f64 / 3600.0
    }

    /// Probability of each node count after normalization.
    pub fn node_probabilities(&self) -> Vec<(u32, f64)> {
        let total: f64 = self.nodes.iter().map(|w| w.weight).sum();
        self.nodes.iter().map(|w| (w.nodes, w.weight / total)).collect()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

pub fn generate(profile: &WorkloadProfile) -> Result<Vec<RigidJobSpec>, SynthError> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let gap = Exp::new(profile.jobs_per_hour / 3600.0).expect("rate validated");
    let node_pick = WeightedIndex::new(profile.nodes.iter().map(|w| w.weight)).expect("weights validated");
    let run_pick = WeightedIndex::new(profile.runtime.iter().map(|c| c.weight)).expect("weights validated");

    let draw = |rng: &mut ChaCha8Rng, i: usize, submit: Seconds| {
        let nodes = profile.nodes[node_pick.sample(rng)].nodes;
        let c = profile.runtime[run_pick.sample(rng)];
        let (lo, hi) = ((c.min as f64).ln(), (c.max as f64).ln());
        let runtime = if hi > lo { rng.random_range(lo..hi).exp().round() as Seconds } else { c.min };
        let runtime = runtime.clamp(c.min, c.max);
        RigidJobSpec {
            id: format!("s{i:06}"),
            submit_time: submit,
            requested_nodes: nodes,
            runtime,
            time_limit: filled_limit(runtime, profile.limit_fill_factor),
        }
    };

    let arrivals = profile.job_count - profile.burst.map_or(0, |b| b.size);
    let mut jobs = Vec::with_capacity(profile.job_count);
    let mut t = 0.0f64;
    for i in 0..arrivals {
        t += gap.sample(&mut rng);
        jobs.push(draw(&mut rng, i, t.floor() as Seconds));
    }
    if let Some(b) = profile.burst {
        for k in 0..b.size {
            jobs.push(draw(&mut rng, arrivals + k, b.at));
        }
    }
    sort_jobs(&mut jobs);
    Ok(jobs)
}

/// A named profile together with the cluster it is sized for and the
/// scaling behaviour assumed for its jobs.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub profile: WorkloadProfile,
    pub cluster: ClusterConfig,
    pub model: SpeedupModel,
}

pub const PRESET_NAMES: [&str; 4] = ["haswell-like", "knl-like", "eagle-like", "theta-like"];

fn weights(pairs: &[(u32, f64)]) -> Vec<NodeWeight> {
    pairs.iter().map(|&(nodes, weight)| NodeWeight { nodes, weight }).collect()
}

fn runtimes(parts: &[(f64, Seconds, Seconds)]) -> Vec<RuntimeComponent> {
    parts.iter().map(|&(weight, min, max)| RuntimeComponent { weight, min, max }).collect()
}

/// Built-in presets. Node and runtime shapes echo the published workload
/// characterizations. Arrival rates are scaled so the rigid baseline keeps
/// the (much smaller) cluster 70-80% busy, and the two throughput-heavy
/// presets include a submission burst.
pub fn preset(name: &str) -> Result<Preset, SynthError> {
    let scalable = SpeedupModel::Amdahl { parallel_fraction: 0.99 };
    let (profile, nodes, tick, model) = match name {
        // Half the jobs on one node, almost all at most 32 nodes.
        "haswell-like" => (
            WorkloadProfile {
                job_count: 2000,
                jobs_per_hour: 30.0,
                burst: Some(Burst { at: 144_000, size: 100 }),
                nodes: weights(&[
                    (1, 0.50),
                    (2, 0.12),
                    (4, 0.12),
                    (8, 0.10),
                    (16, 0.08),
                    (32, 0.058),
                    (64, 0.015),
                    (128, 0.007),
                ]),
                runtime: runtimes(&[(0.75, 30, 1000), (0.25, 1000, 43_200)]),
                limit_fill_factor: DEFAULT_LIMIT_FILL_FACTOR,
                seed: 0,
            },
            256,
            1,
            scalable,
        ),
        // 63% of jobs on exactly four nodes, 80% shorter than 1000 s.
        "knl-like" => (
            WorkloadProfile {
                job_count: 2000,
                jobs_per_hour: 24.0,
                burst: Some(Burst { at: 180_000, size: 100 }),
                nodes: weights(&[
                    (1, 0.10),
                    (2, 0.06),
                    (4, 0.63),
                    (8, 0.08),
                    (16, 0.05),
                    (32, 0.024),
                    (64, 0.03),
                    (128, 0.026),
                ]),
                runtime: runtimes(&[(0.80, 30, 1000), (0.20, 1000, 43_200)]),
                limit_fill_factor: DEFAULT_LIMIT_FILL_FACTOR,
                seed: 0,
            },
            256,
            10,
            scalable,
        ),
        // Nearly all single-node jobs, mostly under 10000 s; lightly loaded.
        "eagle-like" => (
            WorkloadProfile {
                job_count: 2000,
                jobs_per_hour: 40.0,
                burst: None,
                nodes: weights(&[(1, 0.966), (2, 0.015), (4, 0.01), (8, 0.005), (16, 0.004)]),
                runtime: runtimes(&[(0.868, 60, 10_000), (0.132, 10_000, 172_800)]),
                limit_fill_factor: DEFAULT_LIMIT_FILL_FACTOR,
                seed: 0,
            },
            256,
            10,
            SpeedupModel::default(),
        ),
        // Few, wide jobs concentrated at 1, 8 and 256 nodes.
        "theta-like" => (
            WorkloadProfile {
                job_count: 1000,
                jobs_per_hour: 4.0,
                burst: None,
                nodes: weights(&[
                    (1, 0.348),
                    (2, 0.05),
                    (4, 0.08),
                    (8, 0.203),
                    (16, 0.06),
                    (32, 0.05),
                    (64, 0.04),
                    (128, 0.043),
                    (256, 0.126),
                ]),
                runtime: runtimes(&[(0.847, 60, 10_000), (0.153, 10_000, 86_400)]),
                limit_fill_factor: DEFAULT_LIMIT_FILL_FACTOR,
                seed: 0,
            },
            512,
            1,
            SpeedupModel::default(),
        ),
        other => return Err(SynthError::UnknownPreset(other.into())),
    };
    let name = PRESET_NAMES.into_iter().find(|n| *n == name).expect("matched above");
    Ok(Preset {
        name,
        profile,
        cluster: ClusterConfig::new(nodes, tick).expect("preset cluster is valid"),
        model,
    })
}
