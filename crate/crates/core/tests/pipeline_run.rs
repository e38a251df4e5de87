//! End-to-end run artifacts.

use std::fs;

use piecehint::config::ExperimentConfig;
use piecehint::corpus::{load_corpus, load_registry};
use piecehint::pipeline::{read_ids, run_pipeline, Manifest, Stage, METRICS_HEADER};

fn small(seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::with_seed(seed);
    c.gen_problems = 24;
    c.alpha1 = 1.0;
    c.alpha2 = 0.0;
    c.alpha3 = 1.0;
    c.group_size = 4;
    c.batch_size = 4;
    c.total_updates = 10;
    c.eval_every = 5;
    c.eval_samples = 8;
    c.learning_rate = 20.0;
    c.checkpoint_every = 5;
    c
}

#[test]
fn full_run_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let config = small(3);
    let summary = run_pipeline(&config, dir.path()).unwrap();
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest.config_hash, config.hash());
    assert_eq!(manifest.seed, 3);
    assert!(manifest.failed_stage.is_none());
    assert_eq!(manifest.completed_stages.last(), Some(&Stage::Evaluate));
    for f in &manifest.files {
        assert!(dir.path().join(f).exists(), "{f}");
    }

    let metrics = summary.metrics_path.unwrap();
    let name = metrics.file_name().unwrap().to_str().unwrap().to_string();
    assert!(name.contains(&config.hash()[..16]) && name.contains("seed3"));
    let csv = fs::read_to_string(&metrics).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], METRICS_HEADER);
    assert_eq!(lines.len(), 11);
    assert!(lines[1].ends_with(",,,"));
    assert!(!lines[5].ends_with(",,,"));

    let corpus = load_corpus(&dir.path().join("corpus.jsonl")).unwrap();
    let registry = load_registry(&dir.path().join("registry.jsonl")).unwrap();
    let train_ids = read_ids(&dir.path().join("train_ids.txt")).unwrap();
    assert_eq!(corpus.len(), 24);
    assert_eq!(registry.entries.len(), train_ids.len());
    assert!(dir
        .path()
        .join("checkpoints/step-000005/curriculum.jsonl")
        .exists());
    assert!(dir
        .path()
        .join("checkpoints/step-000010/policy.json")
        .exists());
}

#[test]
fn zero_updates_stops_after_preprocessing() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small(4);
    config.total_updates = 0;
    let summary = run_pipeline(&config, dir.path()).unwrap();
    assert!(summary.outcome.is_none() && summary.metrics_path.is_none());
    assert!(dir.path().join("registry.jsonl").exists());
    assert!(!dir.path().join("policy.json").exists());
    assert_eq!(
        summary.manifest.completed_stages.last(),
        Some(&Stage::Allocate)
    );
}

#[test]
fn invalid_config_fails_at_config_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small(5);
    config.n_check = 0;
    let err = run_pipeline(&config, dir.path()).unwrap_err();
    assert_eq!(err.stage, Stage::Config);
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest.failed_stage, Some(Stage::Config));
}
