//! Replay a canonical workload rigidly under EASY backfill and print each
//! job's timeline, plus every scheduling decision as it happens.

use std::path::PathBuf;

use malleable_sim::engine::{simulate, Observer, SimOptions, TickContext};
use malleable_sim::strategies::Decision;
use malleable_sim::workload::load_canonical;
use malleable_sim::{ClusterConfig, MixedWorkload, StrategyId};

struct Printer;

impl Observer for Printer {
    fn on_tick(&mut self, ctx: &TickContext<'_>) {
        for d in ctx.decisions {
            if let Decision::Start { job, nodes } = *d {
                println!("t={:>5}  start {} on {nodes} nodes ({} free before)", ctx.view.now, ctx.ids[job], ctx.view.free_nodes);
            }
        }
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/three_jobs.json"));
    let workload = MixedWorkload::all_rigid(&load_canonical(&path)?);
    let cluster = ClusterConfig::new(16, 10)?;
    let result = simulate(&workload, cluster, &StrategyId::EasyBackfill, SimOptions::default(), &mut Printer)?;
    println!();
    for (id, o) in &result.outcomes {
        println!("{id:>4} submit={:>5} start={:>5} end={:>5} wait={:>5}", o.submit, o.start, o.end, o.wait());
    }
    Ok(())
}
