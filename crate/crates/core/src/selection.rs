//! Difficulty-based problem selection.
//!
//! Each problem is attempted `m` times by a weak reference model and by the
//! model about to be trained. Problems the weak model mostly fails form the
//! hard subset; of those, the ones the training model solves at a rate
//! inside `[alpha2, alpha3]` form the training set.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Problem;
use crate::curriculum::AugmentedPrompt;
use crate::grpo::reward;
use crate::rng::Stream;
use crate::simenv::{sample_trajectory, Policy};

/// Slack on threshold comparisons so that e.g. `0.29 * 100` still admits 29.
pub(crate) const THRESHOLD_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("invalid selection parameters: {0}")]
    Params(String),
    #[error("policy failed on problem {problem_id:?}: {message}")]
    Policy { problem_id: String, message: String },
    #[error("success count for {problem_id:?} is {count}, above m = {m}")]
    CountOutOfRange {
        problem_id: String,
        count: u32,
        m: u32,
    },
    #[error(
        "expected counts from the {expected:?} model, found one from {found:?} for {problem_id:?}"
    )]
    WrongModel {
        problem_id: String,
        expected: ModelTag,
        found: ModelTag,
    },
    #[error("hard problem {0:?} has no training-model success count")]
    MissingCount(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    /// Attempts per problem.
    pub m: u32,
    /// Hard filter: keep `c_weak <= alpha1 * m`.
    pub alpha1: f64,
    /// Capability band: keep `alpha2 * m <= c_train <= alpha3 * m`.
    pub alpha2: f64,
    pub alpha3: f64,
}

impl Default for SelectionParams {
    fn default() -> Self {
        SelectionParams {
            m: 16,
            alpha1: 0.2,
            alpha2: 0.1,
            alpha3: 0.4,
        }
    }
}

impl SelectionParams {
    pub fn validate(&self) -> Result<(), SelectionError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.m == 0 {
            return Err(SelectionError::Params("m must be positive".into()));
        }
        if !unit(self.alpha1) || !unit(self.alpha2) || !unit(self.alpha3) {
            return Err(SelectionError::Params("alphas must lie in [0, 1]".into()));
        }
        if self.alpha2 > self.alpha3 {
            return Err(SelectionError::Params(
                "alpha2 must not exceed alpha3".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTag {
    Weak,
    Train,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessCount {
    pub problem_id: String,
    pub count: u32,
    pub model_tag: ModelTag,
}

/// Something that can attempt a problem from its bare statement.
pub trait AttemptPolicy: Send + Sync {
    fn attempt(&self, problem: &Problem, rng: &mut ChaCha8Rng) -> Result<bool, String>;
}

/// Stub policy that succeeds with a fixed probability, optionally overridden
/// per problem.
#[derive(Debug, Clone, Default)]
pub struct FixedRatePolicy {
    pub default_rate: f64,
    pub per_problem: HashMap<String, f64>,
}

impl FixedRatePolicy {
    pub fn new(rate: f64) -> Self {
        FixedRatePolicy {
            default_rate: rate,
            per_problem: HashMap::new(),
        }
    }
}

impl AttemptPolicy for FixedRatePolicy {
    fn attempt(&self, problem: &Problem, rng: &mut ChaCha8Rng) -> Result<bool, String> {
        let p = self
            .per_problem
            .get(&problem.id)
            .copied()
            .unwrap_or(self.default_rate);
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("success rate {p} outside [0, 1]"));
        }
        Ok(rng.gen::<f64>() < p)
    }
}

/// The synthetic softmax policy attempting a problem without hints.
#[derive(Debug, Clone)]
pub struct SimAttemptPolicy(pub Policy);

impl AttemptPolicy for SimAttemptPolicy {
    fn attempt(&self, problem: &Problem, rng: &mut ChaCha8Rng) -> Result<bool, String> {
        let prompt = AugmentedPrompt::bare(problem);
        let trajectory =
            sample_trajectory(&self.0, &prompt, problem, rng).map_err(|e| e.to_string())?;
        Ok(reward(problem, &trajectory) == 1.0)
    }
}

/// A policy together with the role it plays in selection.
#[derive(Clone)]
pub struct PolicyHandle {
    pub tag: ModelTag,
    pub backend: Arc<dyn AttemptPolicy>,
}

impl PolicyHandle {
    pub fn new(tag: ModelTag, backend: impl AttemptPolicy + 'static) -> Self {
        PolicyHandle {
            tag,
            backend: Arc::new(backend),
        }
    }
}

/// Counts successes over `m` attempts. Attempt `i` draws from the stream
/// keyed by `(seed, model, problem id, i)`.
pub fn estimate_success(
    problem: &Problem,
    policy: &PolicyHandle,
    m: u32,
    seed: u64,
) -> Result<SuccessCount, SelectionError> {
    let tag = match policy.tag {
        ModelTag::Weak => "select-weak",
        ModelTag::Train => "select-train",
    };
    let mut count = 0;
    for attempt in 0..m {
        let mut rng = Stream::new(seed)
            .label(tag)
            .label(&problem.id)
            .index(u64::from(attempt))
            .rng();
        let solved = policy
            .backend
            .attempt(problem, &mut rng)
            .map_err(|message| SelectionError::Policy {
                problem_id: problem.id.clone(),
                message,
            })?;
        count += u32::from(solved);
    }
    Ok(SuccessCount {
        problem_id: problem.id.clone(),
        count,
        model_tag: policy.tag,
    })
}

/// [`estimate_success`] over a corpus, in parallel; output follows input order.
pub fn estimate_all(
    problems: &[Problem],
    policy: &PolicyHandle,
    m: u32,
    seed: u64,
) -> Result<Vec<SuccessCount>, SelectionError> {
    problems
        .par_iter()
        .map(|p| estimate_success(p, policy, m, seed))
        .collect()
}

fn check_counts(counts: &[SuccessCount], expected: ModelTag, m: u32) -> Result<(), SelectionError> {
    for c in counts {
        if c.model_tag != expected {
            return Err(SelectionError::WrongModel {
                problem_id: c.problem_id.clone(),
                expected,
                found: c.model_tag,
            });
        }
        if c.count > m {
            return Err(SelectionError::CountOutOfRange {
                problem_id: c.problem_id.clone(),
                count: c.count,
                m,
            });
        }
    }
    Ok(())
}

/// Problems with `c_weak <= alpha1 * m`.
pub fn filter_hard(
    counts: &[SuccessCount],
    params: &SelectionParams,
) -> Result<BTreeSet<String>, SelectionError> {
    params.validate()?;
    check_counts(counts, ModelTag::Weak, params.m)?;
    let bound = params.alpha1 * f64::from(params.m) + THRESHOLD_SLACK;
    Ok(counts
        .iter()
        .filter(|c| f64::from(c.count) <= bound)
        .map(|c| c.problem_id.clone())
        .collect())
}

/// Hard problems with `alpha2 * m <= c_train <= alpha3 * m`.
pub fn filter_capability(
    counts: &[SuccessCount],
    hard_ids: &BTreeSet<String>,
    params: &SelectionParams,
) -> Result<BTreeSet<String>, SelectionError> {
    params.validate()?;
    check_counts(counts, ModelTag::Train, params.m)?;
    let by_id: HashMap<&str, u32> = counts
        .iter()
        .map(|c| (c.problem_id.as_str(), c.count))
        .collect();
    let m = f64::from(params.m);
    let lo = params.alpha2 * m - THRESHOLD_SLACK;
    let hi = params.alpha3 * m + THRESHOLD_SLACK;
    let mut kept = BTreeSet::new();
    for id in hard_ids {
        let c = *by_id
            .get(id.as_str())
            .ok_or_else(|| SelectionError::MissingCount(id.clone()))?;
        if (lo..=hi).contains(&f64::from(c)) {
            kept.insert(id.clone());
        }
    }
    Ok(kept)
}
