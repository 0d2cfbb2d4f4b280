//! Turn a seeded fraction of a canonical workload malleable and show the
//! bounds and work assigned to each converted job.
//!
//! ```text
//! cargo run --example transform_workload [jobs.json fraction seed nodes]
//! ```

use std::path::PathBuf;

use malleable_sim::workload::load_canonical;
use malleable_sim::{transform_workload, EfficiencyThresholds, SpeedupModel, WorkloadJob};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/three_jobs.json"));
    let fraction: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.5);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let nodes: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(16);

    let jobs = load_canonical(&path)?;
    let w = transform_workload(
        &jobs,
        fraction,
        seed,
        &SpeedupModel::default(),
        &EfficiencyThresholds::default(),
        nodes,
    )?;
    println!("{} of {} jobs malleable (fraction {fraction}, seed {seed})", w.malleable_count(), w.jobs.len());
    for j in &w.jobs {
        match j {
            WorkloadJob::Rigid(r) => println!("{:>4} rigid     nodes={}", r.id, r.requested_nodes),
            WorkloadJob::Malleable(m) => println!(
                "{:>4} malleable min={} pref={} max={} work={:.0} node-equivalent s",
                m.base.id, m.min_nodes, m.pref_nodes, m.max_nodes, m.total_work
            ),
        }
    }
    Ok(())
}
