//! Speedup and efficiency curves, and the node bounds they induce for a few
//! requested sizes.

use malleable_sim::malleability::derive_node_bounds;
use malleable_sim::{EfficiencyThresholds, RigidJobSpec, SpeedupModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let models = [
        ("amdahl f=0.9", SpeedupModel::amdahl(0.9)?),
        ("amdahl f=0.99", SpeedupModel::amdahl(0.99)?),
        ("downey A=32 s=1", SpeedupModel::downey(32.0, 1.0)?),
    ];
    println!("{:>5} {}", "n", models.map(|(n, _)| format!("{n:>24}")).join(""));
    for n in [1, 2, 4, 8, 16, 32, 64] {
        let cells: Vec<String> = models
            .iter()
            .map(|(_, m)| Ok(format!("{:>12.2} ({:>5.1}%)", m.speedup(n)?, 100.0 * m.efficiency(n)?)))
            .collect::<Result<_, malleable_sim::malleability::MalleabilityError>>()?;
        println!("{n:>5} {}", cells.join("  "));
    }

    let thresholds = EfficiencyThresholds::default();
    println!("\nbounds on a 256-node cluster:");
    for (name, m) in &models {
        for req in [1, 8, 64] {
            let job = RigidJobSpec {
                id: format!("r{req}"),
                submit_time: 0,
                requested_nodes: req,
                runtime: 3600,
                time_limit: 3600,
            };
            let b = derive_node_bounds(&job, m, &thresholds, 256);
            println!("  {name:<16} request {req:>3}: {b:?}");
        }
    }
    Ok(())
}
