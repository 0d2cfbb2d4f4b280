//! Batch scheduling simulator for malleable HPC workloads.
//!
//! The crate is organised as a pipeline:
//!
//! * [`workload`] ingests raw accounting traces, cleans them and emits a
//!   canonical job list.
//! * [`malleability`] attaches node bounds and a work quantity to a seeded
//!   fraction of the jobs.
//! * [`engine`] replays a workload tick by tick under one of the
//!   [`strategies`].
//! * [`metrics`] reduces simulation results to windowed per-run metrics and
//!   cross-seed aggregates.
//! * [`synth`] generates synthetic workloads with controllable shape.
//! * [`experiment`] wires everything into sweeps and reports; the
//!   `malleable-sim` binary is a thin front end over it.

pub mod engine;
pub mod experiment;
pub mod malleability;
pub mod metrics;
pub mod strategies;
pub mod synth;
pub mod workload;

pub use engine::{run_simulation, ClusterConfig, JobOutcome, SimResult};
pub use malleability::{
    transform_workload, EfficiencyThresholds, MalleableJobSpec, MixedWorkload, SpeedupModel,
    WorkloadJob,
};
pub use metrics::{aggregate, AggregateMetrics, AnalysisWindow, RunMetrics};
pub use strategies::StrategyId;
pub use workload::{RawTraceRecord, RigidJobSpec};

/// Simulation time in whole seconds since the simulation origin.
pub type Seconds = u64;
