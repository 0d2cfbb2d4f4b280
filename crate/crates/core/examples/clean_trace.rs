//! Clean a Slurm accounting export: merge the daily segments of long jobs,
//! drop shared-node rows and fill missing time limits.
//!
//! ```text
//! cargo run --example clean_trace [trace.csv dialect.toml]
//! ```

use std::path::PathBuf;

use malleable_sim::workload::{clean, parse_trace, usage_profile, TraceDialect, DEFAULT_LIMIT_FILL_FACTOR, DEFAULT_MERGE_TOLERANCE};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let mut args = std::env::args().skip(1);
    let trace = args.next().map(PathBuf::from).unwrap_or(data.join("slurm_trace.csv"));
    let dialect = args.next().map(PathBuf::from).unwrap_or(data.join("slurm_dialect.toml"));

    let parsed = parse_trace(&trace, &TraceDialect::load(&dialect)?)?;
    println!("{} rows parsed, {} skipped", parsed.records.len(), parsed.skipped);
    for (t, nodes) in usage_profile(&parsed.records) {
        println!("  raw usage from t={t}: {nodes} nodes");
    }

    let (jobs, report) = clean(&parsed.records, DEFAULT_MERGE_TOLERANCE, DEFAULT_LIMIT_FILL_FACTOR)?;
    println!("{report:#?}");
    for j in &jobs {
        println!(
            "{:>6} submit={} nodes={:>2} runtime={:>6} limit={:>6}",
            j.id, j.submit_time, j.requested_nodes, j.runtime, j.time_limit
        );
    }
    Ok(())
}
