use std::path::PathBuf;

use dopf::algos::{AlgorithmKind, PresetSource, TestSystem};
use dopf::harness::{run_experiment, AlgorithmSpec, ExperimentConfig, OutputPaths};
use dopf::{ChannelModel, HarnessError};

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn config(runs: usize, channels: Vec<ChannelModel>) -> ExperimentConfig {
    ExperimentConfig {
        name: "case14-small".into(),
        case: data("cases/case14.m"),
        partition: data("partitions/case14.txt"),
        system: Some(TestSystem::Ieee14),
        runs,
        base_seed: 11,
        algorithms: vec![
            AlgorithmSpec::preset(AlgorithmKind::Admm, PresetSource::Table),
            AlgorithmSpec::preset(AlgorithmKind::App, PresetSource::Table),
        ],
        channels,
        output: OutputPaths::default(),
    }
}

#[test]
fn ideal_presets_succeed() {
    let r = run_experiment(&config(3, vec![ChannelModel::Ideal])).unwrap();
    assert_eq!(r.points.len(), 2);
    assert_eq!(r.regions, 2);
    for p in &r.points {
        assert_eq!(p.success_rate, 100.0, "{}", p.label());
        assert!(p.mismatch.mean <= 1e-4);
        assert_eq!(p.runs.len(), 3);
        // identical runs: the ideal channel ignores the seed
        assert!(p.runs.windows(2).all(|w| w[0].iterations == w[1].iterations));
        assert!(p.runs.windows(2).all(|w| w[0].seed != w[1].seed));
    }
}

#[test]
fn repeated_experiments_are_byte_identical() {
    let cfg = config(2, vec![ChannelModel::Gaussian { sigma: 1e-4 }]);
    let a = run_experiment(&cfg).unwrap().to_json();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap()
        .install(|| run_experiment(&cfg).unwrap().to_json());
    assert_eq!(a, b);
}

#[test]
fn adding_a_point_keeps_existing_runs() {
    let small = run_experiment(&config(2, vec![ChannelModel::Gaussian { sigma: 1e-4 }])).unwrap();
    let large = run_experiment(&config(
        2,
        vec![ChannelModel::Gaussian { sigma: 1e-5 }, ChannelModel::Gaussian { sigma: 1e-4 }],
    ))
    .unwrap();
    assert_eq!(small.points[0].runs, large.points[1].runs);
}

#[test]
fn statistics_are_recomputable_from_runs() {
    let r = run_experiment(&config(3, vec![ChannelModel::BadData { r: 2.0, p_bad: 0.01, per_message: false }])).unwrap();
    for p in &r.points {
        let again = dopf::harness::PointReport::from_runs(p.index, p.algorithm, p.channel, p.runs.clone());
        assert_eq!(&again, p);
    }
    let back = dopf::ExperimentReport::from_json(&r.to_json()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn bad_inputs_are_reported() {
    let mut cfg = config(1, vec![ChannelModel::Ideal]);
    cfg.case = data("cases/missing.m");
    assert!(matches!(run_experiment(&cfg), Err(HarnessError::Case(_))));
    let mut cfg = config(1, vec![ChannelModel::Ideal]);
    cfg.partition = data("partitions/case118.txt");
    assert!(matches!(run_experiment(&cfg), Err(HarnessError::Partition(_))));
}
