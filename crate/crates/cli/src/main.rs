//! `piecehint` command-line driver.

mod overrides;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use piecehint::allocation::build_entry;
use piecehint::config::{ExperimentConfig, METRIC_KS};
use piecehint::corpus::{
    load_corpus, load_registry, save_registry, write_corpus, Problem, Registry,
};
use piecehint::curriculum::corrupt_hints;
use piecehint::eval::{eval_pass_at_k, hint_free_success};
use piecehint::pipeline::{
    load_counts, load_or_generate, metrics_file_name, read_ids, reference_policies, run_pipeline,
    save_counts, scorer_for, train, write_ids, write_json, write_metrics,
};
use piecehint::plot::{read_series, render_svg};
use piecehint::scoring::score_problem;
use piecehint::selection::{estimate_all, filter_capability, filter_hard, ModelTag};
use piecehint::simenv::{Policy, PolicySnapshot};

/// Every config key is also accepted as `--key value`.
#[derive(Parser, Debug)]
#[command(
    name = "piecehint",
    version,
    about = "Hint curriculum pipeline on a synthetic environment"
)]
struct Cli {
    /// TOML file with experiment config keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the synthetic corpus.
    GenCorpus {
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate success counts and write the hard and training id sets.
    Select {
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score the pieces of the listed problems.
    Score {
        /// Ids to score, one per line; all problems when absent.
        #[arg(long)]
        ids: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the registry from scored problems and success counts.
    Allocate {
        #[arg(long)]
        scored: PathBuf,
        #[arg(long)]
        counts: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train against a registry.
    Train {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Hint-free evaluation of a saved policy.
    Eval {
        #[arg(long)]
        policy: PathBuf,
        /// Restrict to the registry's problems.
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = METRIC_KS.to_vec())]
        ks: Vec<usize>,
    },
    /// Render metrics CSV columns as an SVG chart.
    Plot {
        #[arg(long)]
        metrics: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "mean_reward,eval_success"
        )]
        columns: Vec<String>,
    },
    /// Apply the configured corruption to a registry.
    Corrupt {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage end to end.
    Run {
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(err) = real_main() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn real_main() -> Result<()> {
    let (args, overrides) = overrides::split_overrides(std::env::args_os().collect())?;
    let cli = Cli::parse_from(args);
    if let Command::Plot {
        metrics,
        out,
        columns,
    } = &cli.command
    {
        return plot(metrics, out, columns);
    }
    let config = overrides::load_config(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::GenCorpus { out } => {
            let corpus = load_or_generate(&config)?;
            write_corpus(&corpus, &out)?;
            log::info!("wrote {} problems to {}", corpus.len(), out.display());
        }
        Command::Select { out_dir } => select(&config, &out_dir)?,
        Command::Score { ids, out } => score(&config, ids.as_deref(), &out)?,
        Command::Allocate {
            scored,
            counts,
            out,
        } => allocate(&config, &scored, &counts, &out)?,
        Command::Train { registry, out_dir } => train_cmd(&config, &registry, &out_dir)?,
        Command::Eval {
            policy,
            registry,
            ks,
        } => eval(&config, &policy, registry.as_deref(), &ks)?,
        Command::Corrupt { registry, out } => corrupt(&config, &registry, &out)?,
        Command::Run { out_dir } => {
            let summary = run_pipeline(&config, &out_dir)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&summary.manifest).context("serializing manifest")?
            );
        }
        Command::Plot { .. } => unreachable!(),
    }
    Ok(())
}

fn select(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let corpus = load_or_generate(config)?;
    let params = config.selection_params();
    let (weak, train) = reference_policies(config, &corpus)?;
    let weak_counts = estimate_all(&corpus, &weak, params.m, config.seed)?;
    let train_counts = estimate_all(&corpus, &train, params.m, config.seed)?;
    let hard = filter_hard(&weak_counts, &params)?;
    let kept = filter_capability(&train_counts, &hard, &params)?;
    fs::create_dir_all(out_dir)?;
    let all: Vec<_> = weak_counts.into_iter().chain(train_counts).collect();
    save_counts(&out_dir.join("success_counts.jsonl"), &all)?;
    write_ids(&out_dir.join("hard_ids.txt"), &hard)?;
    write_ids(&out_dir.join("train_ids.txt"), &kept)?;
    log::info!(
        "{} problems, {} hard, {} kept for training",
        corpus.len(),
        hard.len(),
        kept.len()
    );
    Ok(())
}

fn score(config: &ExperimentConfig, ids: Option<&Path>, out: &Path) -> Result<()> {
    let corpus = load_or_generate(config)?;
    let wanted: Option<BTreeSet<String>> = ids.map(read_ids).transpose()?;
    let scorer = scorer_for(config).map_err(anyhow::Error::msg)?;
    let scored = corpus
        .iter()
        .filter(|p| wanted.as_ref().is_none_or(|w| w.contains(&p.id)))
        .map(|p| score_problem(p, &scorer).with_context(|| format!("scoring {}", p.id)))
        .collect::<Result<Vec<_>>>()?;
    write_corpus(&scored, out)?;
    log::info!("scored {} problems", scored.len());
    Ok(())
}

fn allocate(config: &ExperimentConfig, scored: &Path, counts: &Path, out: &Path) -> Result<()> {
    let problems = load_corpus(scored)?;
    let counts = load_counts(counts)?;
    let lookup = |id: &str, tag: ModelTag| {
        counts
            .iter()
            .find(|c| c.problem_id == id && c.model_tag == tag)
            .map(|c| c.count)
            .with_context(|| format!("no {tag:?} success count for {id}"))
    };
    let params = config.allocation_params();
    let entries = problems
        .iter()
        .map(|p| {
            Ok(build_entry(
                p,
                lookup(&p.id, ModelTag::Weak)?,
                lookup(&p.id, ModelTag::Train)?,
                &params,
            )?)
        })
        .collect::<Result<Vec<_>>>()?;
    let registry = Registry::new(config.m, config.preprocessing_hash(), entries);
    registry.validate()?;
    save_registry(&registry, out)?;
    Ok(())
}

fn train_cmd(config: &ExperimentConfig, registry: &Path, out_dir: &Path) -> Result<()> {
    let registry = load_registry(registry)?;
    let corpus = load_or_generate(config)?;
    fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("config.json"), config)?;
    let outcome = train(
        config,
        &corpus,
        &registry,
        Some(&out_dir.join("checkpoints")),
    )?;
    let metrics = out_dir.join(metrics_file_name(config));
    write_metrics(&outcome.rows, &metrics)?;
    write_json(&out_dir.join("policy.json"), &outcome.policy.snapshot())?;
    if let Some(eval) = &outcome.final_eval {
        write_json(&out_dir.join("final_eval.json"), eval)?;
        log::info!("final hint-free success {:.4}", eval.success);
    }
    log::info!("wrote {}", metrics.display());
    Ok(())
}

fn eval(
    config: &ExperimentConfig,
    policy: &Path,
    registry: Option<&Path>,
    ks: &[usize],
) -> Result<()> {
    let mut problems: Vec<Problem> = load_or_generate(config)?;
    if let Some(path) = registry {
        let registry = load_registry(path)?;
        problems.retain(|p| registry.get(&p.id).is_some());
    }
    let text =
        fs::read_to_string(policy).with_context(|| format!("reading {}", policy.display()))?;
    let snapshot: PolicySnapshot =
        serde_json::from_str(&text).context("parsing policy snapshot")?;
    let policy = Policy::from_snapshot(&problems, &snapshot)?;
    let success = hint_free_success(&problems, &policy)?;
    let table = eval_pass_at_k(&problems, &policy, config.eval_samples, ks, config.seed)?;
    let pass: serde_json::Map<String, serde_json::Value> = table
        .iter()
        .map(|p| (format!("pass_at_{}", p.k), p.value.into()))
        .collect();
    let report = serde_json::json!({
        "problems": problems.len(),
        "samples": config.eval_samples,
        "success": success,
        "pass_at_k": pass,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn corrupt(config: &ExperimentConfig, registry: &Path, out: &Path) -> Result<()> {
    let Some(mode) = config.corruption else {
        bail!("set --corruption to one of wrong_boundaries, random_scores, worst_pieces, fraction_corrupt(p), contradictory");
    };
    let registry = load_registry(registry)?;
    let entries = registry
        .entries
        .iter()
        .map(|e| corrupt_hints(e, mode, config.seed))
        .collect::<Result<Vec<_>, _>>()?;
    save_registry(
        &Registry {
            header: registry.header,
            entries,
        },
        out,
    )?;
    Ok(())
}

fn plot(metrics: &Path, out: &Path, columns: &[String]) -> Result<()> {
    let csv =
        fs::read_to_string(metrics).with_context(|| format!("reading {}", metrics.display()))?;
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let series = read_series(&csv, &cols)?;
    let title = metrics
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("metrics");
    fs::write(out, render_svg(&series, title))?;
    Ok(())
}
