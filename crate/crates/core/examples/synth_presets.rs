//! Summarize the built-in synthetic presets: arrival rate, size mix and the
//! offered load each places on its cluster.

use malleable_sim::synth::{generate, preset, PRESET_NAMES};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in PRESET_NAMES {
        let p = preset(name)?;
        let jobs = generate(&p.profile)?;
        let span = jobs.last().map(|j| j.submit_time).unwrap_or(0).max(1);
        let node_seconds: u128 = jobs.iter().map(|j| j.requested_nodes as u128 * j.runtime as u128).sum();
        let load = node_seconds as f64 / (span as f64 * p.cluster.node_count as f64);
        let single = jobs.iter().filter(|j| j.requested_nodes == 1).count();
        println!(
            "{name:<13} {:>6} jobs over {:>5.1} h on {:>4} nodes, {:>5.1}% single-node, offered load {:.2}, model {:?}",
            jobs.len(),
            span as f64 / 3600.0,
            p.cluster.node_count,
            100.0 * single as f64 / jobs.len() as f64,
            load,
            p.model
        );
    }
    Ok(())
}
