use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use malleable_sim::experiment::{self, ExperimentConfig, ExperimentError, WorkloadSource};
use malleable_sim::synth::{self, WorkloadProfile};
use malleable_sim::workload::{DEFAULT_LIMIT_FILL_FACTOR, DEFAULT_MERGE_TOLERANCE};
use malleable_sim::{ClusterConfig, EfficiencyThresholds, Seconds, SpeedupModel, StrategyId};

#[derive(Parser)]
#[command(name = "malleable-sim", version, about = "Batch scheduling simulator for malleable workloads")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean a raw accounting trace into a canonical job file.
    Clean {
        #[arg(long)]
        trace: PathBuf,
        /// TOML describing the trace columns.
        #[arg(long)]
        dialect: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        /// Largest gap (s) between segments of a split job that still merges.
        #[arg(long, default_value_t = DEFAULT_MERGE_TOLERANCE)]
        merge_tolerance: Seconds,
        #[arg(long, default_value_t = DEFAULT_LIMIT_FILL_FACTOR)]
        limit_fill_factor: f64,
    },
    /// Mark a seeded fraction of a canonical workload malleable.
    Transform {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        nodes: u32,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Run one strategy over one workload file.
    Simulate {
        /// Canonical job file or transformed workload.
        #[arg(long)]
        workload: PathBuf,
        #[arg(long)]
        nodes: u32,
        #[arg(long, default_value_t = 10)]
        tick: Seconds,
        #[arg(long, default_value = "easy-backfill")]
        strategy: StrategyId,
        #[arg(long, short)]
        output: PathBuf,
        /// Also write decisions.jsonl.
        #[arg(long)]
        trace_decisions: bool,
        #[arg(long)]
        audit: bool,
    },
    /// Run a (strategy x fraction x seed) grid from a TOML config.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        overrides: SweepOverrides,
    },
    /// Improvement table of a sweep against the rigid baseline.
    Report {
        /// aggregate.csv written by `sweep`.
        aggregate: PathBuf,
        /// Directory for report.csv and plots; defaults to the CSV's directory.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic workload.
    Synth {
        /// Built-in preset name.
        #[arg(long, conflicts_with = "profile", required_unless_present = "profile")]
        preset: Option<String>,
        /// TOML profile file.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, short)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Amdahl parallel fraction.
    #[arg(long, default_value_t = 0.9, conflicts_with = "downey")]
    amdahl: f64,
    /// Downey model as A,SIGMA.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    downey: Option<Vec<f64>>,
}

impl ModelArgs {
    fn model(&self) -> Result<SpeedupModel, ExperimentError> {
        match &self.downey {
            Some(v) => Ok(SpeedupModel::downey(v[0], v[1])?),
            None => Ok(SpeedupModel::amdahl(self.amdahl)?),
        }
    }
}

#[derive(Args)]
struct SweepOverrides {
    #[arg(long, value_delimiter = ',')]
    seed_list: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
    /// Repeatable; replaces the configured list.
    #[arg(long)]
    strategy: Vec<StrategyId>,
    #[arg(long)]
    nodes: Option<u32>,
    #[arg(long)]
    tick: Option<Seconds>,
    #[arg(long)]
    warm_up: Option<Seconds>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    audit: bool,
}

impl SweepOverrides {
    fn apply(self, c: &mut ExperimentConfig) -> Result<(), ExperimentError> {
        if let Some(s) = self.seed_list {
            c.seeds = s;
        }
        if let Some(f) = self.fractions {
            c.fractions = f;
        }
        if !self.strategy.is_empty() {
            c.strategies = self.strategy;
        }
        if self.nodes.is_some() || self.tick.is_some() {
            let base = c.cluster.or_else(|| match &c.workload {
                WorkloadSource::Preset { name, .. } => synth::preset(name).ok().map(|p| p.cluster),
                _ => None,
            });
            let node_count = self.nodes.or(base.map(|b| b.node_count)).ok_or_else(|| {
                ExperimentError::Config("--tick needs --nodes when the config has no cluster".into())
            })?;
            let tick = self.tick.or(base.map(|b| b.tick_seconds)).unwrap_or(10);
            c.cluster = Some(ClusterConfig::new(node_count, tick)?);
        }
        if let Some(w) = self.warm_up {
            c.warm_up = w;
        }
        if let Some(o) = self.output {
            c.output = o;
        }
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        c.audit |= self.audit;
        c.validate()
    }
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Clean {
            trace,
            dialect,
            output,
            merge_tolerance,
            limit_fill_factor,
        } => {
            let r = experiment::cmd_clean(&trace, &dialect, &output, merge_tolerance, limit_fill_factor)?;
            println!(
                "{} raw rows -> {} jobs ({} skipped, {} segments merged, {} shared-node removed, {:.2}% runtime removed)",
                r.raw_count,
                r.cleaned_count,
                r.skipped_rows,
                r.merged_segments,
                r.shared_removed,
                100.0 * r.removed_runtime_fraction
            );
            println!("peak node usage {} -> {}", r.peak_usage_before, r.peak_usage_after);
        }
        Command::Transform {
            input,
            output,
            fraction,
            seed,
            nodes,
            model,
        } => {
            let w = experiment::cmd_transform(
                &input,
                &output,
                fraction,
                seed,
                &model.model()?,
                &EfficiencyThresholds::default(),
                nodes,
            )?;
            let m = w.jobs.iter().filter(|j| j.is_malleable()).count();
            println!("{m} of {} jobs malleable", w.jobs.len());
        }
        Command::Simulate {
            workload,
            nodes,
            tick,
            strategy,
            output,
            trace_decisions,
            audit,
        } => {
            let cluster = ClusterConfig::new(nodes, tick)?;
            let r = experiment::cmd_simulate(&workload, cluster, strategy, &output, trace_decisions, audit)?;
            let end = r.outcomes.values().map(|o| o.end).max().unwrap_or(0);
            println!("{} jobs, last completion at t={end}", r.outcomes.len());
        }
        Command::Sweep { config, overrides } => {
            let mut c = ExperimentConfig::load(&config)?;
            overrides.apply(&mut c)?;
            let s = experiment::cmd_sweep(&c)?;
            println!("{} runs written to {}", s.runs, s.output.display());
            for a in &s.aggregates {
                println!(
                    "{:<14} f={:<4} wait {:>10.1}  turnaround {:>10.1}  util {:>6.2}%",
                    a.strategy,
                    a.malleable_fraction,
                    a.wait.mean,
                    a.turnaround.mean,
                    100.0 * a.node_utilization.mean
                );
            }
        }
        Command::Report { aggregate, output } => {
            let out = output.unwrap_or_else(|| aggregate.parent().map(PathBuf::from).unwrap_or_default());
            let imp = experiment::cmd_report(&aggregate, &out)?;
            print!("{}", experiment::format_improvements(&imp));
        }
        Command::Synth {
            preset,
            profile,
            seed,
            jobs,
            output,
        } => {
            let mut p: WorkloadProfile = match (preset, profile) {
                (Some(name), _) => synth::preset(&name)?.profile,
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path).map_err(|source| ExperimentError::Io {
                        path: path.clone(),
                        source,
                    })?;
                    toml::from_str(&text).map_err(|e| ExperimentError::Config(e.to_string()))?
                }
                (None, None) => unreachable!("clap requires one of --preset/--profile"),
            };
            if let Some(s) = seed {
                p.seed = s;
            }
            if let Some(n) = jobs {
                p.job_count = n;
            }
            let jobs = experiment::cmd_synth(&p, &output)?;
            println!("{} jobs written to {}", jobs.len(), output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
