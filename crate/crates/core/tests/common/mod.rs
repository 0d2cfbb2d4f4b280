//! Helpers shared by the integration tests.
#![allow(dead_code)]

use malleable_sim::engine::ClusterConfig;
use malleable_sim::malleability::SpeedupModel;
use malleable_sim::strategies::{Decision, Policy, SchedulerView, Shape};
use malleable_sim::workload::sort_jobs;
use malleable_sim::{RigidJobSpec, Seconds};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small random rigid workload. With `exact_limits` every limit equals the
/// runtime; otherwise limits overestimate by up to 3x.
pub fn random_jobs(rng: &mut ChaCha8Rng, max_jobs: usize, max_nodes: u32, exact_limits: bool) -> Vec<RigidJobSpec> {
    let n = rng.random_range(1..=max_jobs);
    let mut t = 0;
    let mut jobs: Vec<RigidJobSpec> = (0..n)
        .map(|i| {
            t += rng.random_range(0..300);
            let runtime = rng.random_range(1..=1500);
            let time_limit = if exact_limits {
                runtime
            } else {
                runtime + rng.random_range(0..=2 * runtime)
            };
            RigidJobSpec {
                id: format!("j{i:02}"),
                submit_time: t,
                requested_nodes: rng.random_range(1..=max_nodes),
                runtime,
                time_limit,
            }
        })
        .collect();
    sort_jobs(&mut jobs);
    jobs
}

pub fn random_model(rng: &mut ChaCha8Rng) -> SpeedupModel {
    if rng.random_bool(0.5) {
        SpeedupModel::amdahl(rng.random_range(0.5..0.999)).unwrap()
    } else {
        SpeedupModel::downey(rng.random_range(1.0..128.0), rng.random_range(0.0..3.0)).unwrap()
    }
}

pub fn random_cluster(rng: &mut ChaCha8Rng, nodes: u32) -> ClusterConfig {
    ClusterConfig::new(nodes, [1, 5, 10][rng.random_range(0..3)]).unwrap()
}

/// Starts every waiting job that fits at its preferred size, FCFS without
/// backfill, and never resizes.
pub struct PrefFcfs;

impl Policy for PrefFcfs {
    fn decide(&self, view: &SchedulerView) -> Vec<Decision> {
        let mut free = view.free_nodes;
        let mut out = Vec::new();
        for w in &view.queue {
            let n = match w.shape {
                Shape::Rigid { nodes } => nodes,
                Shape::Malleable { pref, .. } => pref,
            };
            if n > free {
                break;
            }
            free -= n;
            out.push(Decision::Start { job: w.job, nodes: n });
        }
        out
    }
}

/// Starts jobs at a random size in `[min, max]` and resizes every running
/// job to a fresh random size at each scheduling point, within capacity.
pub struct RandomResizer {
    pub seed: u64,
}

impl RandomResizer {
    fn pick(&self, now: Seconds, job: usize, lo: u32, hi: u32) -> u32 {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed ^ now.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ job as u64);
        r.random_range(lo..=hi)
    }
}

impl Policy for RandomResizer {
    fn decide(&self, view: &SchedulerView) -> Vec<Decision> {
        let mut free = view.free_nodes;
        let mut out = Vec::new();
        for w in &view.queue {
            let (lo, hi) = match w.shape {
                Shape::Rigid { nodes } => (nodes, nodes),
                Shape::Malleable { min, max, .. } => (min, max),
            };
            let n = self.pick(view.now, w.job, lo, hi);
            if n > free {
                break;
            }
            free -= n;
            out.push(Decision::Start { job: w.job, nodes: n });
        }
        for r in &view.running {
            if let Shape::Malleable { min, max, .. } = r.shape {
                let n = self.pick(view.now, r.job, min, max);
                // Shrinks always fit; expansions need idle nodes now.
                if n < r.nodes || (n > r.nodes && n - r.nodes <= free) {
                    if n > r.nodes {
                        free -= n - r.nodes;
                    }
                    out.push(Decision::Resize { job: r.job, nodes: n });
                }
            }
        }
        out
    }
}
