//! Drives the binary through every subcommand.

use std::path::Path;
use std::process::{Command, Output};

const SMALL: &[&str] = &[
    "--seed",
    "11",
    "--gen-problems",
    "16",
    "--alpha1",
    "1",
    "--alpha2",
    "0",
    "--alpha3",
    "1",
    "--group-size",
    "4",
    "--batch-size",
    "4",
    "--total-updates",
    "6",
    "--eval-every",
    "3",
    "--eval-samples",
    "8",
    "--learning-rate",
    "20",
];

fn piecehint(args: &[&str], extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_piecehint"))
        .args(args)
        .args(extra)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn staged_commands_chain_together() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let corpus = d.join("corpus.jsonl");
    ok(piecehint(&["gen-corpus", "--out", s(&corpus)], SMALL));
    let with_corpus: Vec<&str> = SMALL
        .iter()
        .copied()
        .chain(["--corpus", s(&corpus)])
        .collect();

    ok(piecehint(&["select", "--out-dir", s(d)], &with_corpus));
    let ids = std::fs::read_to_string(d.join("train_ids.txt")).unwrap();
    assert_eq!(ids.lines().count(), 16);

    let scored = d.join("scored.jsonl");
    let train_ids = d.join("train_ids.txt");
    ok(piecehint(
        &["score", "--ids", s(&train_ids), "--out", s(&scored)],
        &with_corpus,
    ));
    let registry = d.join("registry.jsonl");
    let counts = d.join("success_counts.jsonl");
    ok(piecehint(
        &[
            "allocate",
            "--scored",
            s(&scored),
            "--counts",
            s(&counts),
            "--out",
            s(&registry),
        ],
        &with_corpus,
    ));

    let train_dir = d.join("train");
    ok(piecehint(
        &[
            "train",
            "--registry",
            s(&registry),
            "--out-dir",
            s(&train_dir),
        ],
        &with_corpus,
    ));
    let metrics = std::fs::read_dir(&train_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "csv"))
        .unwrap();
    assert!(metrics
        .file_name()
        .unwrap()
        .to_str()
        .unwrap()
        .contains("seed11"));
    assert_eq!(
        std::fs::read_to_string(&metrics).unwrap().lines().count(),
        7
    );

    let policy = train_dir.join("policy.json");
    let report = ok(piecehint(
        &[
            "eval",
            "--policy",
            s(&policy),
            "--registry",
            s(&registry),
            "--ks",
            "1,2,8",
        ],
        &with_corpus,
    ));
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["problems"], 16);
    let p1 = report["pass_at_k"]["pass_at_1"].as_f64().unwrap();
    let p8 = report["pass_at_k"]["pass_at_8"].as_f64().unwrap();
    assert!(p1 <= p8);

    let svg = d.join("plot.svg");
    ok(piecehint(
        &["plot", "--metrics", s(&metrics), "--out", s(&svg)],
        &[],
    ));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let corrupted = d.join("corrupted.jsonl");
    ok(piecehint(
        &[
            "corrupt",
            "--registry",
            s(&registry),
            "--out",
            s(&corrupted),
            "--corruption",
            "worst_pieces",
        ],
        &with_corpus,
    ));
    assert_ne!(
        std::fs::read_to_string(&registry).unwrap(),
        std::fs::read_to_string(&corrupted).unwrap()
    );
}

#[test]
fn run_reads_a_config_file_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "seed = 2\ngen_problems = 12\nbaseline = \"no_hint\"\ntotal_updates = 0\n",
    )
    .unwrap();
    let out_dir = dir.path().join("run");
    let manifest = ok(piecehint(
        &["run", "--config", s(&cfg), "--out-dir", s(&out_dir)],
        &[
            "--seed", "5", "--alpha1", "1", "--alpha2", "0", "--alpha3", "1",
        ],
    ));
    let manifest: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(manifest["seed"], 5);
    let config: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("config.json")).unwrap())
            .unwrap();
    assert_eq!(config["baseline"], "no_hint");
    assert_eq!(config["gen_problems"], 12);
    assert!(out_dir.join("registry.jsonl").exists());
}

#[test]
fn bad_input_is_reported() {
    let out = piecehint(&["run", "--out-dir", "/tmp/unused"], &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));

    let out = piecehint(
        &["run", "--out-dir", "/tmp/unused"],
        &["--seed", "1", "--n-check", "0"],
    );
    assert!(!out.status.success());

    let out = piecehint(
        &["corrupt", "--registry", "x", "--out", "y"],
        &["--seed", "1"],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("corruption"));
}
