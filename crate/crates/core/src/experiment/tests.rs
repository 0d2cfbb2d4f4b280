use super::*;

fn three_jobs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/three_jobs.json")
}

fn canonical_config(out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(WorkloadSource::Canonical { path: three_jobs() });
    c.cluster = Some(ClusterConfig::new(16, 60).unwrap());
    c.warm_up = 0;
    c.output = out.to_path_buf();
    c
}

#[test]
fn config_defaults() {
    let c = ExperimentConfig::from_toml("[workload]\nsource = \"preset\"\nname = \"knl-like\"\n").unwrap();
    assert_eq!(c.strategies, StrategyId::ALL.to_vec());
    assert_eq!(c.fractions, DEFAULT_FRACTIONS.to_vec());
    assert_eq!(c.seeds, (0..10).collect::<Vec<_>>());
    assert_eq!(c.warm_up, DEFAULT_WARM_UP);
    assert_eq!(c.output, PathBuf::from("out"));
    assert!(!c.audit && c.threads.is_none());
    assert_eq!(c, ExperimentConfig::new(c.workload.clone()));
}

#[test]
fn config_rejects_bad_values() {
    let base = "[workload]\nsource = \"preset\"\nname = \"knl-like\"\n";
    for extra in [
        "fractions = [0.2, 1.5]",
        "fractions = [0.2, 0.2]",
        "seeds = []",
        "seeds = [1, 1]",
        "strategies = [\"avg\", \"avg\"]",
        "strategies = [\"fifo\"]",
        "threads = 0",
        "colour = \"blue\"",
    ] {
        let err = ExperimentConfig::from_toml(&format!("{extra}\n{base}")).unwrap_err();
        assert!(matches!(err, ExperimentError::Config(_)), "{extra}: {err}");
        assert_eq!(err.exit_code(), 2);
    }
}

#[test]
fn trace_source_defaults() {
    let c = ExperimentConfig::from_toml(
        "[workload]\nsource = \"trace\"\npath = \"t.csv\"\ndialect = \"d.toml\"\n[cluster]\nnode_count = 16\ntick_seconds = 10\n",
    )
    .unwrap();
    let WorkloadSource::Trace {
        merge_tolerance,
        limit_fill_factor,
        window,
        ..
    } = c.workload
    else {
        panic!("trace source")
    };
    assert_eq!(merge_tolerance, DEFAULT_MERGE_TOLERANCE);
    assert_eq!(limit_fill_factor, DEFAULT_LIMIT_FILL_FACTOR);
    assert!(window.is_none());
}

#[test]
fn load_rebases_relative_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("exp.toml");
    fs::write(
        &path,
        "output = \"results\"\n[workload]\nsource = \"trace\"\npath = \"t.csv\"\ndialect = \"/abs/d.toml\"\n",
    )
    .unwrap();
    let c = ExperimentConfig::load(&path).unwrap();
    assert_eq!(c.output, tmp.path().join("results"));
    let WorkloadSource::Trace { path, dialect, .. } = c.workload else {
        panic!("trace source")
    };
    assert_eq!(path, tmp.path().join("t.csv"));
    assert_eq!(dialect, PathBuf::from("/abs/d.toml"));
}

#[test]
fn exit_codes_by_kind() {
    let io = ExperimentError::Io {
        path: "x".into(),
        source: std::io::Error::from(std::io::ErrorKind::NotFound),
    };
    assert_eq!(io.exit_code(), 4);
    assert_eq!(ExperimentError::Infeasible("x".into()).exit_code(), 3);
    let e: ExperimentError = MalleabilityError::ExceedsCluster {
        cluster_nodes: 4,
        ids: vec!["a".into()],
    }
    .into();
    assert_eq!(e.exit_code(), 3);
    let audit = ExperimentError::Audit {
        count: 1,
        first: Violation {
            now: 0,
            message: "x".into(),
        },
    };
    assert_eq!(audit.exit_code(), 1);
}

#[test]
fn canonical_source_needs_cluster() {
    let c = ExperimentConfig::new(WorkloadSource::Canonical { path: three_jobs() });
    assert!(matches!(prepare(&c), Err(ExperimentError::Config(_))));
    let mut c = canonical_config(Path::new("unused"));
    c.cluster = Some(ClusterConfig::new(8, 10).unwrap());
    assert!(matches!(prepare(&c), Err(ExperimentError::Infeasible(_))));
}

#[test]
fn preset_brings_cluster_and_model() {
    let mut c = ExperimentConfig::new(WorkloadSource::Preset {
        name: "haswell-like".into(),
        seed: 2,
        job_count: Some(150),
    });
    let p = prepare(&c).unwrap();
    let preset = synth::preset("haswell-like").unwrap();
    assert_eq!(p.jobs.len(), 150);
    assert_eq!((p.cluster, p.model), (preset.cluster, preset.model));
    c.model = Some(SpeedupModel::amdahl(0.5).unwrap());
    assert_eq!(prepare(&c).unwrap().model, SpeedupModel::amdahl(0.5).unwrap());
}

#[test]
fn single_cell_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = canonical_config(tmp.path());
    c.strategies = vec![StrategyId::EasyBackfill];
    c.fractions = vec![0.0];
    c.seeds = vec![0];
    c.audit = true;
    let s = cmd_sweep(&c).unwrap();
    assert_eq!((s.runs, s.violations, s.aggregates.len()), (1, 0, 1));
    let a = &s.aggregates[0];
    assert_eq!(a.wait.iqr(), 0.0);
    // a and c (backfilled on arrival) wait 0, b waits 3540.
    assert_eq!(a.wait.mean, 3540.0 / 3.0);
    let dir = tmp.path().join(run_dir(StrategyId::EasyBackfill, 0.0, 0));
    for f in ["result.json", "metrics.json", "run.toml"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let echo: RunEchoFile = toml::from_str(&fs::read_to_string(dir.join("run.toml")).unwrap()).unwrap();
    assert_eq!(echo.cluster.tick_seconds, 60);
    let csv = fs::read_to_string(tmp.path().join("aggregate.csv")).unwrap();
    assert_eq!(read_aggregate_csv(csv.as_bytes()).unwrap(), s.aggregates);
}

#[test]
fn grid_is_independent_of_thread_count() {
    let mut c = ExperimentConfig::new(WorkloadSource::Preset {
        name: "eagle-like".into(),
        seed: 1,
        job_count: Some(120),
    });
    c.strategies = vec![StrategyId::Min, StrategyId::KeepPref];
    c.fractions = vec![0.5, 1.0];
    c.seeds = vec![3, 4];
    c.warm_up = 0;
    let p = prepare(&c).unwrap();
    let run = |threads| {
        let c = ExperimentConfig {
            threads: Some(threads),
            ..c.clone()
        };
        run_grid(&c, &p, false).unwrap()
    };
    let (one, three) = (run(1), run(3));
    assert_eq!(one.len(), 8);
    for (a, b) in one.iter().zip(&three) {
        assert_eq!((a.strategy, a.fraction, a.seed), (b.strategy, b.fraction, b.seed));
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.result, b.result);
        assert!(a.result.is_some());
    }
    assert_eq!(aggregate_records(&one).unwrap(), aggregate_records(&three).unwrap());
}

#[test]
fn run_dir_layout() {
    assert_eq!(
        run_dir(StrategyId::KeepPref, 0.2, 7),
        PathBuf::from("runs/keep-pref/f0.2/seed7")
    );
    assert_eq!(run_dir(StrategyId::Min, 1.0, 0), PathBuf::from("runs/min/f1/seed0"));
}
