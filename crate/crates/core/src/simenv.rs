//! Synthetic reasoning environment and tabular softmax policy.
//!
//! A synthetic problem is a chain of discrete decisions. Step `j` offers
//! `branching_factor` options and exactly one of them is correct; the ground
//! truth solution is the sequence of correct choices and each step is one
//! piece. A problem is solved only when every step is right, so a single
//! wide step acts as a bottleneck.
//!
//! The policy keeps one logit per (problem, step, choice) and samples each
//! step from `softmax(theta / temperature)`. Steps whose piece appears in the
//! prompt's hint block are not sampled: the hinted choice is emitted as given
//! and no log-probability is recorded for it.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{PieceRecord, Problem};
use crate::curriculum::AugmentedPrompt;
use crate::rng::Stream;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("problem {0:?} has no synthetic env_spec")]
    NotSynthetic(String),
    #[error("problem {0:?} is not covered by the policy")]
    UnknownProblem(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("invalid generator settings: {0}")]
    InvalidGenerator(String),
    #[error("parameter vector has length {found}, expected {expected}")]
    ShapeMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepSpec {
    pub branching_factor: usize,
    pub correct_choice: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub steps: Vec<StepSpec>,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.steps.is_empty() {
            return Err("env_spec has no steps".into());
        }
        for (j, step) in self.steps.iter().enumerate() {
            if step.branching_factor < 2 {
                return Err(format!(
                    "step {j} has branching factor {} < 2",
                    step.branching_factor
                ));
            }
            if step.correct_choice >= step.branching_factor {
                return Err(format!(
                    "step {j} has correct choice {} >= branching factor {}",
                    step.correct_choice, step.branching_factor
                ));
            }
        }
        Ok(())
    }

    pub fn correct_choices(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.correct_choice).collect()
    }
}

/// Canonical answer string for a choice sequence, e.g. `"3,0,1"`.
pub fn render_choices(choices: &[usize]) -> String {
    choices
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Hint text of the piece that fixes `step` to `choice`.
pub fn hint_text(step: usize, choice: usize) -> String {
    format!("step {step} → choice {choice}")
}

/// Inverse of [`hint_text`]. Anything else (e.g. a piece whose boundaries
/// were damaged) yields `None`.
pub fn parse_hint(text: &str) -> Option<(usize, usize)> {
    let rest = text.trim().strip_prefix("step ")?;
    let (step, choice) = rest.split_once(" → choice ")?;
    Some((step.parse().ok()?, choice.parse().ok()?))
}

/// Per-step branching factors for generated corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BranchingProfile {
    /// Every step has the same branching factor.
    Uniform(usize),
    /// Branching factor drawn uniformly from an inclusive range.
    Range(usize, usize),
    /// `count` wide steps placed in the latter half of the solution, all
    /// other steps at `base`.
    Bottleneck {
        wide: usize,
        base: usize,
        count: usize,
    },
}

impl fmt::Display for BranchingProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BranchingProfile::Uniform(b) => write!(f, "uniform({b})"),
            BranchingProfile::Range(lo, hi) => write!(f, "range({lo},{hi})"),
            BranchingProfile::Bottleneck {
                wide,
                base,
                count: 1,
            } => {
                write!(f, "bottleneck({wide},{base})")
            }
            BranchingProfile::Bottleneck { wide, base, count } => {
                write!(f, "bottleneck({wide},{base},{count})")
            }
        }
    }
}

impl FromStr for BranchingProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (name, args) = s
            .strip_suffix(')')
            .and_then(|s| s.split_once('('))
            .ok_or_else(|| format!("cannot parse branching profile {s:?}"))?;
        let args: Vec<usize> = args
            .split(',')
            .map(|a| a.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("bad argument in {s:?}: {e}"))?;
        match (name.trim(), args.as_slice()) {
            ("uniform", [b]) => Ok(BranchingProfile::Uniform(*b)),
            ("range", [lo, hi]) => Ok(BranchingProfile::Range(*lo, *hi)),
            ("bottleneck", [wide, base]) => Ok(BranchingProfile::Bottleneck {
                wide: *wide,
                base: *base,
                count: 1,
            }),
            ("bottleneck", [wide, base, count]) => Ok(BranchingProfile::Bottleneck {
                wide: *wide,
                base: *base,
                count: *count,
            }),
            _ => Err(format!("unknown branching profile {s:?}")),
        }
    }
}

impl TryFrom<String> for BranchingProfile {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<BranchingProfile> for String {
    fn from(p: BranchingProfile) -> String {
        p.to_string()
    }
}

impl BranchingProfile {
    fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidGenerator(m.to_string()));
        match *self {
            BranchingProfile::Uniform(b) if b < 2 => bad("branching factor must be >= 2"),
            BranchingProfile::Range(lo, hi) if lo < 2 || lo > hi => {
                bad("range must satisfy 2 <= lo <= hi")
            }
            BranchingProfile::Bottleneck { wide, base, count }
                if wide < 2 || base < 2 || count == 0 =>
            {
                bad("bottleneck needs wide, base >= 2 and count >= 1")
            }
            _ => Ok(()),
        }
    }
}

/// Deterministic synthetic corpus. Problem `i` draws from its own stream, so
/// the first `n` problems do not depend on how many are generated.
pub fn generate_corpus(
    n_problems: usize,
    min_steps: usize,
    max_steps: usize,
    profile: BranchingProfile,
    seed: u64,
) -> Result<Vec<Problem>, SimError> {
    if min_steps == 0 || min_steps > max_steps {
        return Err(SimError::InvalidGenerator(format!(
            "step count range {min_steps}..={max_steps} is empty or starts at 0"
        )));
    }
    profile.validate()?;
    let problems = (0..n_problems)
        .map(|i| {
            let mut rng = Stream::new(seed).label("corpus").index(i as u64).rng();
            let n_steps = rng.gen_range(min_steps..=max_steps);
            let branching: Vec<usize> = match profile {
                BranchingProfile::Uniform(b) => vec![b; n_steps],
                BranchingProfile::Range(lo, hi) => {
                    (0..n_steps).map(|_| rng.gen_range(lo..=hi)).collect()
                }
                BranchingProfile::Bottleneck { wide, base, count } => {
                    let mut b = vec![base; n_steps];
                    let count = count.min(n_steps);
                    let tail_start = n_steps.div_ceil(2);
                    let candidates: Vec<usize> = if n_steps - tail_start >= count {
                        (tail_start..n_steps).collect()
                    } else {
                        (0..n_steps).collect()
                    };
                    for pos in rand::seq::index::sample(&mut rng, candidates.len(), count) {
                        b[candidates[pos]] = wide;
                    }
                    b
                }
            };
            let steps: Vec<StepSpec> = branching
                .iter()
                .map(|&b| StepSpec {
                    branching_factor: b,
                    correct_choice: rng.gen_range(0..b),
                })
                .collect();
            let id = format!("syn-{i:05}");
            let widths = render_choices(&branching);
            let spec = SyntheticSpec { steps };
            let pieces = spec
                .steps
                .iter()
                .enumerate()
                .map(|(j, s)| PieceRecord::new(j, hint_text(j, s.correct_choice)))
                .collect();
            Problem {
                statement: format!(
                    "Synthetic problem {id}: pick the correct option at each of {n_steps} steps (branching {widths})."
                ),
                answer: render_choices(&spec.correct_choices()),
                id,
                pieces,
                env_spec: Some(spec),
            }
        })
        .collect();
    Ok(problems)
}

#[derive(Debug)]
struct ProblemBlock {
    /// Offset of each step's logits in the flat parameter vector.
    step_offsets: Vec<usize>,
    branching: Vec<usize>,
}

/// Maps (problem, step, choice) to an index in the flat parameter vector.
#[derive(Debug)]
pub struct ParamLayout {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    blocks: Vec<ProblemBlock>,
    len: usize,
}

impl ParamLayout {
    pub fn new(problems: &[Problem]) -> Result<Self, SimError> {
        let mut ids = Vec::with_capacity(problems.len());
        let mut index = HashMap::with_capacity(problems.len());
        let mut blocks = Vec::with_capacity(problems.len());
        let mut len = 0;
        for problem in problems {
            let spec = problem
                .env_spec
                .as_ref()
                .ok_or_else(|| SimError::NotSynthetic(problem.id.clone()))?;
            spec.validate().map_err(SimError::InvalidSpec)?;
            if index.contains_key(&problem.id) {
                continue;
            }
            let mut step_offsets = Vec::with_capacity(spec.steps.len());
            let mut branching = Vec::with_capacity(spec.steps.len());
            for step in &spec.steps {
                step_offsets.push(len);
                branching.push(step.branching_factor);
                len += step.branching_factor;
            }
            index.insert(problem.id.clone(), blocks.len());
            ids.push(problem.id.clone());
            blocks.push(ProblemBlock {
                step_offsets,
                branching,
            });
        }
        Ok(ParamLayout {
            ids,
            index,
            blocks,
            len,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Offset and width of the logits for `step` of `problem_id`.
    pub fn slot(&self, problem_id: &str, step: usize) -> Option<(usize, usize)> {
        let block = &self.blocks[*self.index.get(problem_id)?];
        Some((*block.step_offsets.get(step)?, block.branching[step]))
    }

    fn block(&self, problem_id: &str) -> Result<&ProblemBlock, SimError> {
        self.index
            .get(problem_id)
            .map(|&i| &self.blocks[i])
            .ok_or_else(|| SimError::UnknownProblem(problem_id.to_string()))
    }
}

/// Tabular softmax policy over all synthetic problems of a run.
#[derive(Debug, Clone)]
pub struct Policy {
    layout: Arc<ParamLayout>,
    theta: Vec<f64>,
    temperature: f64,
}

impl Policy {
    /// All logits zero: every step is sampled uniformly.
    pub fn uniform(problems: &[Problem], temperature: f64) -> Result<Self, SimError> {
        let layout = ParamLayout::new(problems)?;
        let theta = vec![0.0; layout.len()];
        Ok(Policy {
            layout: Arc::new(layout),
            theta,
            temperature,
        })
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.theta
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn set_params(&mut self, theta: Vec<f64>) -> Result<(), SimError> {
        if theta.len() != self.theta.len() {
            return Err(SimError::ShapeMismatch {
                expected: self.theta.len(),
                found: theta.len(),
            });
        }
        self.theta = theta;
        Ok(())
    }

    /// Copy of this policy with different parameters and the same layout.
    pub fn with_params(&self, theta: Vec<f64>) -> Result<Self, SimError> {
        let mut p = self.clone();
        p.set_params(theta)?;
        Ok(p)
    }

    pub fn slot(&self, problem_id: &str, step: usize) -> Option<(usize, usize)> {
        self.layout.slot(problem_id, step)
    }

    /// Softmax of one step's logits at the policy temperature.
    pub fn step_probs(&self, offset: usize, width: usize) -> Vec<f64> {
        let logits = &self.theta[offset..offset + width];
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits
            .iter()
            .map(|&l| ((l - max) / self.temperature).exp())
            .collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }

    pub fn step_log_prob(&self, offset: usize, width: usize, choice: usize) -> f64 {
        let logits = &self.theta[offset..offset + width];
        let scaled = |l: f64| l / self.temperature;
        let max = logits
            .iter()
            .map(|&l| scaled(l))
            .fold(f64::NEG_INFINITY, f64::max);
        let lse = max
            + logits
                .iter()
                .map(|&l| (scaled(l) - max).exp())
                .sum::<f64>()
                .ln();
        scaled(logits[choice]) - lse
    }

    pub fn log_prob(&self, problem_id: &str, step: usize, choice: usize) -> Result<f64, SimError> {
        let (offset, width) = self
            .slot(problem_id, step)
            .ok_or_else(|| SimError::UnknownProblem(problem_id.to_string()))?;
        Ok(self.step_log_prob(offset, width, choice))
    }

    pub fn snapshot(&self) -> PolicySnapshot {
        let tables = self
            .layout
            .ids
            .iter()
            .zip(&self.layout.blocks)
            .map(|(id, block)| PolicyTable {
                problem_id: id.clone(),
                logits: block
                    .step_offsets
                    .iter()
                    .zip(&block.branching)
                    .map(|(&o, &b)| self.theta[o..o + b].to_vec())
                    .collect(),
            })
            .collect();
        PolicySnapshot {
            temperature: self.temperature,
            tables,
        }
    }

    /// Loads snapshot logits into a policy laid out for `problems`. Problems
    /// missing from the snapshot keep zero logits.
    pub fn from_snapshot(
        problems: &[Problem],
        snapshot: &PolicySnapshot,
    ) -> Result<Self, SimError> {
        let mut policy = Policy::uniform(problems, snapshot.temperature)?;
        let layout = Arc::clone(&policy.layout);
        for table in &snapshot.tables {
            let Ok(block) = layout.block(&table.problem_id) else {
                continue;
            };
            if table.logits.len() != block.branching.len() {
                return Err(SimError::InvalidSpec(format!(
                    "snapshot table for {:?} has {} steps, expected {}",
                    table.problem_id,
                    table.logits.len(),
                    block.branching.len()
                )));
            }
            for ((&offset, &width), logits) in block
                .step_offsets
                .iter()
                .zip(&block.branching)
                .zip(&table.logits)
            {
                if logits.len() != width {
                    return Err(SimError::InvalidSpec(format!(
                        "snapshot table for {:?} has a step with {} logits, expected {width}",
                        table.problem_id,
                        logits.len()
                    )));
                }
                policy.theta[offset..offset + width].copy_from_slice(logits);
            }
        }
        Ok(policy)
    }
}

/// Serializable policy parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySnapshot {
    pub temperature: f64,
    pub tables: Vec<PolicyTable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub problem_id: String,
    pub logits: Vec<Vec<f64>>,
}

/// One sampled (non-hinted) decision and its log-probability under the
/// policy that generated it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledToken {
    pub step: usize,
    pub choice: usize,
    pub offset: usize,
    pub width: usize,
    pub old_log_prob: f64,
}

/// Final output of a rollout.
#[derive(Debug, Clone, PartialEq)]
pub enum Answer {
    /// Full choice sequence of a synthetic problem, hinted steps included.
    Choices(Vec<usize>),
    /// Free-form text; the answer is read from its last `\boxed{...}`.
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub problem_id: String,
    pub answer: Answer,
    pub tokens: Vec<SampledToken>,
}

/// Choices fixed by the prompt's hint block. A hint only counts when its text
/// names its own step and a valid choice.
fn forced_choices(prompt: &AugmentedPrompt, spec: &SyntheticSpec) -> Vec<Option<usize>> {
    let mut forced = vec![None; spec.steps.len()];
    for (&pos, text) in prompt.hint_positions.iter().zip(&prompt.hint_texts) {
        if let Some((step, choice)) = parse_hint(text) {
            if step == pos && pos < spec.steps.len() && choice < spec.steps[pos].branching_factor {
                forced[pos] = Some(choice);
            }
        }
    }
    forced
}

pub fn sample_trajectory<R: Rng + ?Sized>(
    policy: &Policy,
    prompt: &AugmentedPrompt,
    problem: &Problem,
    rng: &mut R,
) -> Result<Trajectory, SimError> {
    let spec = problem
        .env_spec
        .as_ref()
        .ok_or_else(|| SimError::NotSynthetic(problem.id.clone()))?;
    let block = policy.layout.block(&problem.id)?;
    let forced = forced_choices(prompt, spec);
    let mut choices = Vec::with_capacity(spec.steps.len());
    let mut tokens = Vec::new();
    for (step, fixed) in forced.into_iter().enumerate() {
        if let Some(choice) = fixed {
            choices.push(choice);
            continue;
        }
        let offset = block.step_offsets[step];
        let width = block.branching[step];
        let probs = policy.step_probs(offset, width);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut choice = width - 1;
        for (c, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                choice = c;
                break;
            }
        }
        tokens.push(SampledToken {
            step,
            choice,
            offset,
            width,
            old_log_prob: policy.step_log_prob(offset, width, choice),
        });
        choices.push(choice);
    }
    Ok(Trajectory {
        problem_id: problem.id.clone(),
        answer: Answer::Choices(choices),
        tokens,
    })
}

/// Exact probability that the policy solves `problem` when the steps in
/// `hints` are given: the product of correct-choice probabilities over the
/// remaining steps.
pub fn success_probability(
    policy: &Policy,
    problem: &Problem,
    hints: &[usize],
) -> Result<f64, SimError> {
    let spec = problem
        .env_spec
        .as_ref()
        .ok_or_else(|| SimError::NotSynthetic(problem.id.clone()))?;
    let block = policy.layout.block(&problem.id)?;
    let mut p = 1.0;
    for (step, s) in spec.steps.iter().enumerate() {
        if hints.contains(&step) {
            continue;
        }
        let probs = policy.step_probs(block.step_offsets[step], block.branching[step]);
        p *= probs[s.correct_choice];
    }
    Ok(p)
}
