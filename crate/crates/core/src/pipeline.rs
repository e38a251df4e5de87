//! End-to-end driver: corpus → selection → scoring → allocation → training →
//! evaluation.
//!
//! Rollouts for a batch run in parallel, but every curriculum update,
//! optimizer step and metrics row is committed from the driver loop in a
//! fixed order, so a run is a pure function of its config.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{build_entry, AllocationError};
use crate::baseline::baseline_hint_selector;
use crate::config::{ExperimentConfig, SampleUnit, METRIC_KS};
use crate::corpus::{
    load_corpus, read_lines, save_registry, write_corpus, write_lines, CorpusError, Problem,
    Registry, RegistryEntry,
};
use crate::curriculum::{corrupt_hints, save_checkpoint, Curriculum, CurriculumError};
use crate::eval::{eval_pass_at_k, hint_free_success, EvalError};
use crate::grpo::{batch_objective, l2_norm, update_step, GrpoError, RolloutGroup};
use crate::rng::Stream;
use crate::scoring::{score_problem, CommandTransport, ScorerHandle, ScorerKind, ScoringError};
use crate::selection::{
    estimate_all, filter_capability, filter_hard, FixedRatePolicy, ModelTag, PolicyHandle,
    SelectionError, SimAttemptPolicy, SuccessCount,
};
use crate::simenv::{generate_corpus, sample_trajectory, Policy, SimError};

/// Exact header of the metrics CSV.
pub const METRICS_HEADER: &str =
    "step,mean_reward,zero_var_frac,loss,grad_norm,mean_live_hints,eval_success,pass_at_1,pass_at_8";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Corpus,
    Select,
    Score,
    Allocate,
    Train,
    Evaluate,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = serde_json::to_value(self).expect("stage serializes");
        f.write_str(name.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Allocation(#[from] AllocationError),
    #[error(transparent)]
    Curriculum(#[from] CurriculumError),
    #[error(transparent)]
    Grpo(#[from] GrpoError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
#[error("stage {stage} failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: StageError,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: Into<StageError>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError {
            stage,
            source: e.into(),
        })
    }
}

/// One row of the metrics CSV, plus a few values kept only in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub step: usize,
    pub mean_reward: f64,
    pub zero_var_frac: f64,
    pub loss: f64,
    pub grad_norm: f64,
    pub mean_live_hints: f64,
    pub eval: Option<EvalSnapshot>,
    /// Fraction of groups with at least one rewarded rollout.
    pub rewarded_frac: f64,
}

impl MetricsRow {
    pub fn to_csv(&self) -> String {
        let (e, p1, p8) = match &self.eval {
            Some(ev) => (
                ev.success.to_string(),
                ev.pass_at_1.to_string(),
                ev.pass_at_8.to_string(),
            ),
            None => Default::default(),
        };
        format!(
            "{},{},{},{},{},{},{e},{p1},{p8}",
            self.step,
            self.mean_reward,
            self.zero_var_frac,
            self.loss,
            self.grad_norm,
            self.mean_live_hints
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSnapshot {
    /// Mean exact hint-free success probability.
    pub success: f64,
    pub pass_at_1: f64,
    pub pass_at_8: f64,
}

/// Everything produced before training.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub corpus: Vec<Problem>,
    pub weak_counts: Vec<SuccessCount>,
    pub train_counts: Vec<SuccessCount>,
    pub hard_ids: BTreeSet<String>,
    pub train_ids: BTreeSet<String>,
    /// Scored training problems, in corpus order.
    pub scored: Vec<Problem>,
    pub registry: Registry,
}

pub fn load_or_generate(config: &ExperimentConfig) -> Result<Vec<Problem>, PipelineError> {
    match &config.corpus {
        Some(path) => load_corpus(path).at(Stage::Corpus),
        None => generate_corpus(
            config.gen_problems,
            config.gen_min_steps,
            config.gen_max_steps,
            config.gen_profile,
            config.seed,
        )
        .at(Stage::Corpus),
    }
}

pub fn scorer_for(config: &ExperimentConfig) -> Result<ScorerHandle, String> {
    Ok(match config.scorer {
        ScorerKind::Heuristic => ScorerHandle::Heuristic,
        ScorerKind::Oracle => ScorerHandle::Oracle,
        ScorerKind::External => {
            let command = config
                .scorer_command
                .as_deref()
                .and_then(CommandTransport::parse)
                .ok_or("scorer = external needs a non-empty scorer_command")?;
            ScorerHandle::External {
                transport: Arc::new(command),
                max_in_flight: config.scorer_in_flight,
            }
        }
    })
}

/// Weak and training reference policies for selection.
pub fn reference_policies(
    config: &ExperimentConfig,
    corpus: &[Problem],
) -> Result<(PolicyHandle, PolicyHandle), SimError> {
    let initial = Policy::uniform(corpus, config.temperature)?;
    let weak = match config.weak_success_rate {
        Some(rate) => PolicyHandle::new(ModelTag::Weak, FixedRatePolicy::new(rate)),
        None => PolicyHandle::new(ModelTag::Weak, SimAttemptPolicy(initial.clone())),
    };
    let train = PolicyHandle::new(ModelTag::Train, SimAttemptPolicy(initial));
    Ok((weak, train))
}

pub fn preprocess(
    config: &ExperimentConfig,
    corpus: Vec<Problem>,
) -> Result<Preprocessed, PipelineError> {
    let params = config.selection_params();
    let (weak, train) = reference_policies(config, &corpus).at(Stage::Select)?;
    let weak_counts = estimate_all(&corpus, &weak, params.m, config.seed).at(Stage::Select)?;
    let hard_ids = filter_hard(&weak_counts, &params).at(Stage::Select)?;
    let train_counts = estimate_all(&corpus, &train, params.m, config.seed).at(Stage::Select)?;
    let train_ids = filter_capability(&train_counts, &hard_ids, &params).at(Stage::Select)?;
    log::info!(
        "selection: {} problems, {} hard, {} in training set",
        corpus.len(),
        hard_ids.len(),
        train_ids.len()
    );

    let scorer = scorer_for(config)
        .map_err(StageError::Config)
        .at(Stage::Score)?;
    let scored: Vec<Problem> = corpus
        .iter()
        .filter(|p| train_ids.contains(&p.id))
        .map(|p| score_problem(p, &scorer))
        .collect::<Result<_, _>>()
        .at(Stage::Score)?;

    let alloc = config.allocation_params();
    let weak_by_id: HashMap<&str, u32> = weak_counts
        .iter()
        .map(|c| (c.problem_id.as_str(), c.count))
        .collect();
    let train_by_id: HashMap<&str, u32> = train_counts
        .iter()
        .map(|c| (c.problem_id.as_str(), c.count))
        .collect();
    let entries: Vec<RegistryEntry> = scored
        .iter()
        .map(|p| {
            build_entry(
                p,
                weak_by_id[p.id.as_str()],
                train_by_id[p.id.as_str()],
                &alloc,
            )
        })
        .collect::<Result<_, _>>()
        .at(Stage::Allocate)?;
    let registry = Registry::new(params.m, config.preprocessing_hash(), entries);
    registry.validate().at(Stage::Allocate)?;

    Ok(Preprocessed {
        corpus,
        weak_counts,
        train_counts,
        hard_ids,
        train_ids,
        scored,
        registry,
    })
}

/// Result of a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub initial_params: Vec<f64>,
    pub policy: Policy,
    pub rows: Vec<MetricsRow>,
    pub curriculum: Curriculum,
    pub final_eval: Option<EvalSnapshot>,
}

/// Applies the configured corruption, if any, to every registry entry.
pub fn apply_corruption(
    config: &ExperimentConfig,
    registry: &Registry,
) -> Result<Registry, CurriculumError> {
    let Some(mode) = config.corruption else {
        return Ok(registry.clone());
    };
    let entries = registry
        .entries
        .iter()
        .map(|e| corrupt_hints(e, mode, config.seed))
        .collect::<Result<_, _>>()?;
    Ok(Registry {
        header: registry.header.clone(),
        entries,
    })
}

fn evaluate(
    config: &ExperimentConfig,
    problems: &[Problem],
    policy: &Policy,
    step: usize,
) -> Result<EvalSnapshot, EvalError> {
    let success = hint_free_success(problems, policy)?;
    let eval_seed: u64 = Stream::new(config.seed)
        .label("eval-seed")
        .index(step as u64)
        .rng()
        .gen();
    let pass = eval_pass_at_k(problems, policy, config.eval_samples, &METRIC_KS, eval_seed)?;
    Ok(EvalSnapshot {
        success,
        pass_at_1: pass[0].value,
        pass_at_8: pass[1].value,
    })
}

/// Trains on the registry's problems. `problems` must contain every
/// registry entry's problem; training prompts use the registry's piece texts.
/// When `checkpoint_dir` is given and `checkpoint_every > 0`, curriculum and
/// policy state are written there periodically.
pub fn train(
    config: &ExperimentConfig,
    problems: &[Problem],
    registry: &Registry,
    checkpoint_dir: Option<&Path>,
) -> Result<TrainOutcome, PipelineError> {
    let stage = Stage::Train;
    let grpo = config.grpo_params();
    let registry = apply_corruption(config, registry).at(stage)?;
    let by_id: HashMap<&str, &Problem> = problems.iter().map(|p| (p.id.as_str(), p)).collect();
    let train_problems: Vec<Problem> = registry
        .entries
        .iter()
        .map(|e| {
            let base = by_id.get(e.problem_id.as_str()).ok_or_else(|| {
                StageError::Config(format!("registry problem {:?} not in corpus", e.problem_id))
            })?;
            Ok(Problem {
                pieces: e.pieces.clone(),
                ..(*base).clone()
            })
        })
        .collect::<Result<_, StageError>>()
        .at(stage)?;

    let mut policy = Policy::uniform(&train_problems, config.temperature).at(stage)?;
    let initial_params = policy.params().to_vec();
    let mut curriculum =
        Curriculum::new(&registry.entries, config.n_check, config.withdrawal, |e| {
            baseline_hint_selector(config.baseline, e, config.seed)
        })
        .at(stage)?;

    let mut rows = Vec::with_capacity(config.total_updates);
    let mut final_eval = None;
    if train_problems.is_empty() {
        if config.total_updates > 0 {
            return Err(StageError::Config("training set is empty".into())).at(stage);
        }
        return Ok(TrainOutcome {
            initial_params,
            policy,
            rows,
            curriculum,
            final_eval,
        });
    }

    let mut epoch = 0u64;
    let mut order: Vec<usize> = Vec::new();
    let mut cursor = 0;
    for step in 1..=config.total_updates {
        if cursor >= order.len() {
            order = (0..train_problems.len()).collect();
            order.shuffle(&mut Stream::new(config.seed).label("epoch").index(epoch).rng());
            epoch += 1;
            cursor = 0;
        }
        let end = (cursor + config.batch_size).min(order.len());
        let batch = &order[cursor..end];
        cursor = end;

        let prompts = batch
            .iter()
            .map(|&i| curriculum.prompt(&train_problems[i]))
            .collect::<Result<Vec<_>, _>>()
            .at(stage)?;
        let groups: Vec<RolloutGroup> = batch
            .par_iter()
            .zip(prompts)
            .map(|(&i, prompt)| -> Result<RolloutGroup, StageError> {
                let problem = &train_problems[i];
                let trajectories = (0..grpo.group_size)
                    .map(|j| {
                        let mut rng = Stream::new(config.seed)
                            .label("rollout")
                            .index(step as u64)
                            .label(&problem.id)
                            .index(j as u64)
                            .rng();
                        sample_trajectory(&policy, &prompt, problem, &mut rng)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(RolloutGroup::score(
                    problem,
                    prompt,
                    trajectories,
                    grpo.std_floor,
                )?)
            })
            .collect::<Result<_, _>>()
            .at(stage)?;

        let n_groups = groups.len() as f64;
        let rollouts: usize = groups.iter().map(|g| g.rewards.len()).sum();
        let mean_reward =
            groups.iter().flat_map(|g| g.rewards.iter()).sum::<f64>() / rollouts as f64;
        let zero_var_frac =
            groups.iter().filter(|g| g.is_zero_variance()).count() as f64 / n_groups;
        let rewarded_frac = groups
            .iter()
            .filter(|g| g.rewards.iter().any(|&r| r > 0.0))
            .count() as f64
            / n_groups;

        let mut loss = 0.0;
        let mut grad_norm = 0.0;
        for inner in 0..config.inner_epochs {
            let (l, grad) = batch_objective(&groups, &policy, grpo.epsilon).at(stage)?;
            if inner == 0 {
                loss = l;
                grad_norm = l2_norm(&grad);
            }
            let next = update_step(policy.params(), &grad, &grpo).at(stage)?;
            policy.set_params(next).at(stage)?;
        }

        for &i in batch {
            let repeats = match config.sample_unit {
                SampleUnit::Group => 1,
                SampleUnit::Rollout => grpo.group_size,
            };
            for _ in 0..repeats {
                curriculum.on_sample(&train_problems[i].id).at(stage)?;
            }
        }

        let due = config.eval_every > 0 && step % config.eval_every == 0;
        let eval = if due || step == config.total_updates {
            let snapshot = evaluate(config, &train_problems, &policy, step).at(Stage::Evaluate)?;
            if step == config.total_updates {
                final_eval = Some(snapshot.clone());
            }
            Some(snapshot)
        } else {
            None
        };

        rows.push(MetricsRow {
            step,
            mean_reward,
            zero_var_frac,
            loss,
            grad_norm,
            mean_live_hints: curriculum.mean_live_hints(),
            eval,
            rewarded_frac,
        });

        if let Some(dir) = checkpoint_dir {
            if config.checkpoint_every > 0 && step % config.checkpoint_every == 0 {
                write_checkpoint(dir, step, &curriculum, &policy).at(stage)?;
            }
        }
    }

    Ok(TrainOutcome {
        initial_params,
        policy,
        rows,
        curriculum,
        final_eval,
    })
}

fn write_checkpoint(
    dir: &Path,
    step: usize,
    curriculum: &Curriculum,
    policy: &Policy,
) -> Result<(), StageError> {
    let dir = dir.join(format!("step-{step:06}"));
    fs::create_dir_all(&dir)?;
    save_checkpoint(&curriculum.checkpoint(), &dir.join("curriculum.jsonl"))?;
    write_json(&dir.join("policy.json"), &policy.snapshot())?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), std::io::Error> {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    fs::write(path, text + "\n")
}

pub fn write_metrics(rows: &[MetricsRow], path: &Path) -> Result<(), std::io::Error> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{METRICS_HEADER}")?;
    for row in rows {
        writeln!(out, "{}", row.to_csv())?;
    }
    out.flush()
}

/// Metrics file name, which carries the config hash and seed.
pub fn metrics_file_name(config: &ExperimentConfig) -> String {
    format!("metrics.{}.seed{}.csv", &config.hash()[..16], config.seed)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub completed_stages: Vec<Stage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<Stage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_eval: Option<EvalSnapshot>,
}

/// Outcome of [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    pub metrics_path: Option<PathBuf>,
    pub preprocessed: Preprocessed,
    pub outcome: Option<TrainOutcome>,
}

/// Runs every stage and writes artifacts under `out_dir`. A failing stage
/// still leaves a manifest naming it next to whatever was already written.
pub fn run_pipeline(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<RunSummary, PipelineError> {
    let mut manifest = Manifest {
        config_hash: config.hash(),
        seed: config.seed,
        completed_stages: Vec::new(),
        failed_stage: None,
        error: None,
        files: Vec::new(),
        final_eval: None,
    };
    let result = run_stages(config, out_dir, &mut manifest);
    if let Err(err) = &result {
        manifest.failed_stage = Some(err.stage);
        manifest.error = Some(err.to_string());
    }
    if fs::create_dir_all(out_dir).is_ok() {
        write_json(&out_dir.join("manifest.json"), &manifest).at(Stage::Evaluate)?;
    }
    let (preprocessed, outcome, metrics_path) = result?;
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        manifest,
        metrics_path,
        preprocessed,
        outcome,
    })
}

type StagesOutput = (Preprocessed, Option<TrainOutcome>, Option<PathBuf>);

fn run_stages(
    config: &ExperimentConfig,
    out_dir: &Path,
    manifest: &mut Manifest,
) -> Result<StagesOutput, PipelineError> {
    config
        .validate()
        .map_err(StageError::Config)
        .at(Stage::Config)?;
    fs::create_dir_all(out_dir).at(Stage::Config)?;
    write_json(&out_dir.join("config.json"), config).at(Stage::Config)?;
    manifest.files.push("config.json".into());
    manifest.completed_stages.push(Stage::Config);

    let corpus = load_or_generate(config)?;
    write_corpus(&corpus, &out_dir.join("corpus.jsonl")).at(Stage::Corpus)?;
    manifest.files.push("corpus.jsonl".into());
    manifest.completed_stages.push(Stage::Corpus);

    let pre = preprocess(config, corpus)?;
    let counts: Vec<&SuccessCount> = pre.weak_counts.iter().chain(&pre.train_counts).collect();
    write_lines(
        &out_dir.join("success_counts.jsonl"),
        counts.iter().copied(),
    )
    .at(Stage::Select)?;
    write_ids(&out_dir.join("hard_ids.txt"), &pre.hard_ids).at(Stage::Select)?;
    write_ids(&out_dir.join("train_ids.txt"), &pre.train_ids).at(Stage::Select)?;
    manifest
        .files
        .extend(["success_counts.jsonl", "hard_ids.txt", "train_ids.txt"].map(String::from));
    manifest.completed_stages.push(Stage::Select);
    write_corpus(&pre.scored, &out_dir.join("scored.jsonl")).at(Stage::Score)?;
    manifest.files.push("scored.jsonl".into());
    manifest.completed_stages.push(Stage::Score);
    save_registry(&pre.registry, &out_dir.join("registry.jsonl")).at(Stage::Allocate)?;
    manifest.files.push("registry.jsonl".into());
    manifest.completed_stages.push(Stage::Allocate);

    if config.total_updates == 0 {
        return Ok((pre, None, None));
    }

    let checkpoint_dir = out_dir.join("checkpoints");
    let outcome = train(config, &pre.corpus, &pre.registry, Some(&checkpoint_dir))?;
    let metrics_name = metrics_file_name(config);
    let metrics_path = out_dir.join(&metrics_name);
    write_metrics(&outcome.rows, &metrics_path).at(Stage::Train)?;
    write_json(&out_dir.join("policy.json"), &outcome.policy.snapshot()).at(Stage::Train)?;
    manifest.files.extend([metrics_name, "policy.json".into()]);
    manifest.completed_stages.push(Stage::Train);

    manifest.final_eval = outcome.final_eval.clone();
    if let Some(eval) = &outcome.final_eval {
        write_json(&out_dir.join("final_eval.json"), eval).at(Stage::Evaluate)?;
        manifest.files.push("final_eval.json".into());
    }
    manifest.completed_stages.push(Stage::Evaluate);
    Ok((pre, Some(outcome), Some(metrics_path)))
}

pub fn write_ids(path: &Path, ids: &BTreeSet<String>) -> Result<(), std::io::Error> {
    let mut text = String::new();
    for id in ids {
        text.push_str(id);
        text.push('\n');
    }
    fs::write(path, text)
}

pub fn save_counts(path: &Path, counts: &[SuccessCount]) -> Result<(), CorpusError> {
    write_lines(path, counts.iter())
}

pub fn load_counts(path: &Path) -> Result<Vec<SuccessCount>, CorpusError> {
    read_lines(path)
}

pub fn read_ids(path: &Path) -> Result<BTreeSet<String>, std::io::Error> {
    Ok(fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::with_seed(5);
        c.gen_problems = 12;
        c.gen_profile = "bottleneck(8,2)".parse().unwrap();
        c.gen_min_steps = 3;
        c.gen_max_steps = 3;
        c.alpha1 = 1.0;
        c.alpha2 = 0.0;
        c.alpha3 = 1.0;
        c.group_size = 4;
        c.batch_size = 3;
        c.total_updates = 6;
        c.eval_every = 3;
        c.eval_samples = 8;
        c.learning_rate = 1.0;
        c
    }

    #[test]
    fn csv_row_format() {
        let row = MetricsRow {
            step: 3,
            mean_reward: 0.25,
            zero_var_frac: 0.5,
            loss: -0.0,
            grad_norm: 1.5,
            mean_live_hints: 2.0,
            eval: None,
            rewarded_frac: 1.0,
        };
        assert_eq!(row.to_csv(), "3,0.25,0.5,-0,1.5,2,,,");
        assert_eq!(METRICS_HEADER.split(',').count(), 9);
    }

    #[test]
    fn preprocessing_with_open_filters_keeps_everything() {
        let config = small_config();
        let pre = preprocess(&config, load_or_generate(&config).unwrap()).unwrap();
        assert_eq!(pre.train_ids.len(), 12);
        assert_eq!(pre.registry.entries.len(), 12);
        for e in &pre.registry.entries {
            // the bottleneck step is always among the initial hints
            let widest = e
                .pieces
                .iter()
                .max_by(|a, b| a.norm_value.unwrap().total_cmp(&b.norm_value.unwrap()))
                .unwrap()
                .position;
            assert!(e.initial_hints.contains(&widest));
        }
    }

    #[test]
    fn train_emits_one_row_per_update() {
        let config = small_config();
        let pre = preprocess(&config, load_or_generate(&config).unwrap()).unwrap();
        let out = train(&config, &pre.corpus, &pre.registry, None).unwrap();
        assert_eq!(out.rows.len(), 6);
        assert!(out.rows[2].eval.is_some() && out.rows[5].eval.is_some());
        assert!(out.rows[0].eval.is_none());
        assert!(out.final_eval.is_some());
    }

    #[test]
    fn empty_training_set_is_an_error() {
        let mut config = small_config();
        config.alpha1 = 0.0;
        config.weak_success_rate = Some(1.0);
        let pre = preprocess(&config, load_or_generate(&config).unwrap()).unwrap();
        assert!(pre.train_ids.is_empty());
        let err = train(&config, &pre.corpus, &pre.registry, None).unwrap_err();
        assert_eq!(err.stage, Stage::Train);
    }

    #[test]
    fn failed_stage_is_recorded() {
        let mut config = small_config();
        config.corpus = Some(PathBuf::from("/nonexistent/corpus.jsonl"));
        let dir = tempfile::tempdir().unwrap();
        let err = run_pipeline(&config, dir.path()).unwrap_err();
        assert_eq!(err.stage, Stage::Corpus);
        let manifest: Manifest =
            serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest.failed_stage, Some(Stage::Corpus));
        assert_eq!(manifest.completed_stages, vec![Stage::Config]);
    }
}
