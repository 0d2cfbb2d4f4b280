//! Compare all strategies on a synthetic preset at a few malleable fractions.
//!
//! ```text
//! cargo run --release --example compare_strategies -- knl-like 3
//! ```
//! The optional second argument is the number of seeds per cell.

use malleable_sim::metrics::{run_metrics, DEFAULT_WARM_UP};
use malleable_sim::synth::{generate, preset};
use malleable_sim::{run_simulation, transform_workload, EfficiencyThresholds, StrategyId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "haswell-like".into());
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let p = preset(&name)?;
    let jobs = generate(&p.profile)?;
    println!(
        "{name}: {} jobs, {} nodes, tick {} s",
        jobs.len(),
        p.cluster.node_count,
        p.cluster.tick_seconds
    );
    println!("{:<14} {:>8} {:>10} {:>10} {:>8} {:>8} {:>8}", "strategy", "fraction", "wait", "turnaround", "util", "exp/job", "shr/job");
    for fraction in [0.0, 0.2, 0.6, 1.0] {
        for strategy in StrategyId::ALL {
            if fraction > 0.0 && strategy == StrategyId::EasyBackfill {
                continue;
            }
            let (mut wait, mut turn, mut util, mut exp, mut shr) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for seed in 0..seeds {
                let w = transform_workload(
                    &jobs,
                    fraction,
                    seed,
                    &p.model,
                    &EfficiencyThresholds::default(),
                    p.cluster.node_count,
                )?;
                let m = run_metrics(&run_simulation(&w, p.cluster, strategy)?, DEFAULT_WARM_UP)?;
                wait += m.mean_wait;
                turn += m.mean_turnaround;
                util += m.node_utilization;
                exp += m.expands_per_job;
                shr += m.shrinks_per_job;
            }
            let n = seeds as f64;
            println!(
                "{:<14} {:>8.1} {:>10.0} {:>10.0} {:>7.1}% {:>8.2} {:>8.2}",
                strategy.name(),
                fraction,
                wait / n,
                turn / n,
                100.0 * util / n,
                exp / n,
                shr / n
            );
        }
    }
    Ok(())
}
