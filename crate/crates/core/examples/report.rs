//! Improvement of every malleable cell over rigid EASY backfill.
//!
//! ```text
//! cargo run --release --example report [aggregate.csv]
//! ```
//! Without an argument a two-seed Haswell-like sweep is run first.

use std::path::PathBuf;

use malleable_sim::experiment::{cmd_report, cmd_sweep, format_improvements, ExperimentConfig, WorkloadSource};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let csv = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let mut config = ExperimentConfig::new(WorkloadSource::Preset {
                name: "haswell-like".into(),
                seed: 0,
                job_count: Some(1500),
            });
            config.seeds = vec![0, 1];
            config.fractions = vec![0.0, 0.5, 1.0];
            config.output = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target/sweeps/report-example");
            cmd_sweep(&config)?.output.join("aggregate.csv")
        }
    };
    let out = csv.parent().map(PathBuf::from).unwrap_or_default();
    let rows = cmd_report(&csv, &out)?;
    print!("{}", format_improvements(&rows));
    println!("report.csv and plots/ written to {}", out.display());
    Ok(())
}
