//! Hint-free evaluation and the unbiased pass@k estimator.

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::Problem;
use crate::curriculum::AugmentedPrompt;
use crate::grpo::reward;
use crate::rng::Stream;
use crate::simenv::{sample_trajectory, success_probability, Policy, SimError};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("pass@{k} needs at least {k} samples per problem, got {n}")]
    KExceedsN { k: usize, n: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("success count {c} exceeds sample count {n}")]
    CountExceedsN { c: usize, n: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// `1 - C(n-c, k) / C(n, k)`, computed as a running product so large `n`
/// does not overflow.
pub fn pass_at_k(n: usize, c: usize, k: usize) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    if k > n {
        return Err(EvalError::KExceedsN { k, n });
    }
    if c > n {
        return Err(EvalError::CountExceedsN { c, n });
    }
    if n - c < k {
        return Ok(1.0);
    }
    // C(n-c, k) / C(n, k) = prod_{i = n-c+1}^{n} (1 - k / i)
    let miss: f64 = ((n - c + 1)..=n)
        .map(|i| 1.0 - k as f64 / i as f64)
        .product();
    Ok(1.0 - miss)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassAtK {
    pub k: usize,
    pub value: f64,
}

/// Samples `n` bare-prompt rollouts per problem and reports the mean
/// estimator over problems for every `k` in `ks`.
pub fn eval_pass_at_k(
    problems: &[Problem],
    policy: &Policy,
    n: usize,
    ks: &[usize],
    seed: u64,
) -> Result<Vec<PassAtK>, EvalError> {
    for &k in ks {
        if k == 0 {
            return Err(EvalError::ZeroK);
        }
        if k > n {
            return Err(EvalError::KExceedsN { k, n });
        }
    }
    let counts = success_counts(problems, policy, n, seed)?;
    ks.iter()
        .map(|&k| {
            let total = counts
                .iter()
                .map(|&c| pass_at_k(n, c, k))
                .sum::<Result<f64, _>>()?;
            Ok(PassAtK {
                k,
                value: if counts.is_empty() {
                    0.0
                } else {
                    total / counts.len() as f64
                },
            })
        })
        .collect()
}

/// Successes out of `n` hint-free samples for each problem.
pub fn success_counts(
    problems: &[Problem],
    policy: &Policy,
    n: usize,
    seed: u64,
) -> Result<Vec<usize>, EvalError> {
    problems
        .par_iter()
        .map(|problem| {
            let prompt = AugmentedPrompt::bare(problem);
            let mut solved = 0;
            for i in 0..n {
                let mut rng = Stream::new(seed)
                    .label("eval")
                    .label(&problem.id)
                    .index(i as u64)
                    .rng();
                let t = sample_trajectory(policy, &prompt, problem, &mut rng)?;
                solved += (reward(problem, &t) == 1.0) as usize;
            }
            Ok(solved)
        })
        .collect()
}

/// Mean exact hint-free success probability over `problems`.
pub fn hint_free_success(problems: &[Problem], policy: &Policy) -> Result<f64, EvalError> {
    if problems.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for p in problems {
        total += success_probability(policy, p, &[])?;
    }
    Ok(total / problems.len() as f64)
}
