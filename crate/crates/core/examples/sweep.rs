//! Run a small audited sweep from a TOML config and print the aggregates.
//!
//! ```text
//! cargo run --release --example sweep [config.toml]
//! ```
//! Defaults to `examples/data/knl_sweep.toml`; outputs land under `target/`.

use std::path::PathBuf;

use malleable_sim::experiment::{cmd_sweep, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data/knl_sweep.toml"));
    let config = ExperimentConfig::load(&path)?;
    let summary = cmd_sweep(&config)?;
    println!("{} runs, output in {}", summary.runs, summary.output.display());
    for a in &summary.aggregates {
        println!(
            "{:<14} f={:.1}  wait {:>8.0} [{:>7.0}, {:>7.0}]  util {:>5.1}%  expands/job {:.2}",
            a.strategy,
            a.malleable_fraction,
            a.wait.mean,
            a.wait.q25,
            a.wait.q75,
            100.0 * a.node_utilization.mean,
            a.expands_per_job.mean
        );
    }
    Ok(())
}
