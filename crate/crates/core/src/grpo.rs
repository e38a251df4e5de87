//! Group relative policy optimization.
//!
//! Rewards are binary. Within a group of `G` rollouts for the same prompt the
//! advantage of rollout `i` is `(R_i - mean(R)) / std(R)` with the population
//! standard deviation, shared by all of its tokens. The objective is the
//! token-level clipped surrogate
//!
//! ```text
//! J = 1/sum_i |o_i| * sum_i sum_t min(r_it * A_i, clip(r_it, 1-eps, 1+eps) * A_i)
//! r_it = pi(o_it) / pi_old(o_it)
//! ```
//!
//! with no KL term, maximized by clipped gradient ascent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Problem;
use crate::curriculum::AugmentedPrompt;
use crate::simenv::{render_choices, Answer, Policy, Trajectory};

#[derive(Debug, Error, PartialEq)]
pub enum GrpoError {
    #[error("a group needs at least 2 rollouts, got {0}")]
    GroupTooSmall(usize),
    #[error("group has {trajectories} trajectories but {rewards} rewards")]
    LengthMismatch { trajectories: usize, rewards: usize },
    #[error("reward {0} is not binary")]
    NonBinaryReward(f64),
    #[error("token at step {step} of {problem_id:?} does not match the policy layout")]
    TokenMismatch { problem_id: String, step: usize },
    #[error("gradient has length {found}, parameters have {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("non-finite gradient component {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("invalid GRPO parameters: {0}")]
    Params(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrpoParams {
    /// Clip ratio.
    pub epsilon: f64,
    /// Rollouts per prompt.
    pub group_size: usize,
    pub learning_rate: f64,
    /// Maximum gradient norm before scaling.
    pub grad_clip_norm: f64,
    /// Lower bound on the group standard deviation when it is positive.
    pub std_floor: f64,
}

impl Default for GrpoParams {
    fn default() -> Self {
        GrpoParams {
            epsilon: 0.2,
            group_size: 16,
            learning_rate: 1e-6,
            grad_clip_norm: 1.0,
            std_floor: 1e-6,
        }
    }
}

impl GrpoParams {
    pub fn validate(&self) -> Result<(), GrpoError> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(GrpoError::Params("epsilon must be positive".into()));
        }
        if self.group_size < 2 {
            return Err(GrpoError::Params("group_size must be at least 2".into()));
        }
        if self.std_floor.is_nan() || self.std_floor <= 0.0 {
            return Err(GrpoError::Params("std_floor must be positive".into()));
        }
        if self.grad_clip_norm.is_nan() || self.grad_clip_norm <= 0.0 {
            return Err(GrpoError::Params("grad_clip_norm must be positive".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(GrpoError::Params(
                "learning_rate must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Contents of the last `\boxed{...}` in `text`, with nested braces.
pub fn extract_boxed(text: &str) -> Option<&str> {
    let start = text.rfind("\\boxed{")? + "\\boxed{".len();
    let mut depth = 1usize;
    for (i, ch) in text[start..].char_indices() {
        match ch {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + i]);
                }
            }
            _ => {}
        }
    }
    None
}

/// 1 when the trajectory's answer is well formed and matches the reference
/// answer, 0 otherwise.
pub fn reward(problem: &Problem, trajectory: &Trajectory) -> f64 {
    let correct = match &trajectory.answer {
        Answer::Choices(choices) => {
            let well_formed = match &problem.env_spec {
                Some(spec) => {
                    choices.len() == spec.steps.len()
                        && choices
                            .iter()
                            .zip(&spec.steps)
                            .all(|(&c, s)| c < s.branching_factor)
                }
                None => !choices.is_empty(),
            };
            well_formed && render_choices(choices) == problem.answer.trim()
        }
        Answer::Text(text) => {
            extract_boxed(text).is_some_and(|a| a.trim() == problem.answer.trim())
        }
    };
    if correct {
        1.0
    } else {
        0.0
    }
}

/// Group-normalized advantages. A constant group has no signal and gets all
/// zeros.
pub fn compute_advantages(rewards: &[f64], std_floor: f64) -> Vec<f64> {
    let Some(&first) = rewards.first() else {
        return Vec::new();
    };
    if rewards.iter().all(|&r| r == first) {
        return vec![0.0; rewards.len()];
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(std_floor);
    rewards.iter().map(|r| (r - mean) / std).collect()
}

/// `G` rollouts of one prompt with their rewards and advantages.
#[derive(Debug, Clone)]
pub struct RolloutGroup {
    pub prompt: AugmentedPrompt,
    pub trajectories: Vec<Trajectory>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl RolloutGroup {
    pub fn new(
        prompt: AugmentedPrompt,
        trajectories: Vec<Trajectory>,
        rewards: Vec<f64>,
        std_floor: f64,
    ) -> Result<Self, GrpoError> {
        if trajectories.len() != rewards.len() {
            return Err(GrpoError::LengthMismatch {
                trajectories: trajectories.len(),
                rewards: rewards.len(),
            });
        }
        if trajectories.len() < 2 {
            return Err(GrpoError::GroupTooSmall(trajectories.len()));
        }
        if let Some(&bad) = rewards.iter().find(|&&r| r != 0.0 && r != 1.0) {
            return Err(GrpoError::NonBinaryReward(bad));
        }
        let advantages = compute_advantages(&rewards, std_floor);
        Ok(RolloutGroup {
            prompt,
            trajectories,
            rewards,
            advantages,
        })
    }

    /// Builds the group by scoring each trajectory against `problem`.
    pub fn score(
        problem: &Problem,
        prompt: AugmentedPrompt,
        trajectories: Vec<Trajectory>,
        std_floor: f64,
    ) -> Result<Self, GrpoError> {
        let rewards = trajectories.iter().map(|t| reward(problem, t)).collect();
        RolloutGroup::new(prompt, trajectories, rewards, std_floor)
    }

    pub fn total_tokens(&self) -> usize {
        self.trajectories.iter().map(|t| t.tokens.len()).sum()
    }

    /// True when every reward is equal, i.e. the group carries no signal.
    pub fn is_zero_variance(&self) -> bool {
        self.rewards.windows(2).all(|w| w[0] == w[1])
    }
}

/// Per-token surrogate term, its derivative with respect to the new
/// log-probability, and whether the clipped branch was taken.
fn token_term(log_ratio: f64, advantage: f64, epsilon: f64) -> (f64, f64) {
    let ratio = log_ratio.exp();
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    let unclipped_obj = ratio * advantage;
    let clipped_obj = clipped * advantage;
    if unclipped_obj <= clipped_obj {
        // d(r * A)/d(log pi) = r * A
        (unclipped_obj, ratio * advantage)
    } else {
        (clipped_obj, 0.0)
    }
}

fn check_token(
    policy: &Policy,
    trajectory: &Trajectory,
    tok: &crate::simenv::SampledToken,
) -> Result<(), GrpoError> {
    match policy.slot(&trajectory.problem_id, tok.step) {
        Some((offset, width))
            if offset == tok.offset && width == tok.width && tok.choice < width =>
        {
            Ok(())
        }
        _ => Err(GrpoError::TokenMismatch {
            problem_id: trajectory.problem_id.clone(),
            step: tok.step,
        }),
    }
}

/// Clipped surrogate objective of one group under `policy`, using the old
/// log-probabilities recorded at sampling time.
pub fn surrogate_loss(
    group: &RolloutGroup,
    policy: &Policy,
    epsilon: f64,
) -> Result<f64, GrpoError> {
    let total = group.total_tokens();
    if total == 0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (traj, &adv) in group.trajectories.iter().zip(&group.advantages) {
        for tok in &traj.tokens {
            check_token(policy, traj, tok)?;
            let lp = policy.step_log_prob(tok.offset, tok.width, tok.choice);
            sum += token_term(lp - tok.old_log_prob, adv, epsilon).0;
        }
    }
    Ok(sum / total as f64)
}

/// Adds `scale * dJ/dtheta` of one group into `grad` and returns
/// `scale * J`.
fn accumulate_group(
    group: &RolloutGroup,
    policy: &Policy,
    epsilon: f64,
    scale: f64,
    grad: &mut [f64],
) -> Result<f64, GrpoError> {
    let total = group.total_tokens();
    if total == 0 {
        return Ok(0.0);
    }
    let norm = scale / total as f64;
    let inv_temp = 1.0 / policy.temperature();
    let mut sum = 0.0;
    for (traj, &adv) in group.trajectories.iter().zip(&group.advantages) {
        for tok in &traj.tokens {
            check_token(policy, traj, tok)?;
            let probs = policy.step_probs(tok.offset, tok.width);
            let lp = probs[tok.choice].ln();
            let (term, dterm_dlp) = token_term(lp - tok.old_log_prob, adv, epsilon);
            sum += term;
            if dterm_dlp != 0.0 {
                // d log softmax(theta / T)_c / d theta_j = (1[j = c] - p_j) / T
                let w = norm * dterm_dlp * inv_temp;
                for (j, p) in probs.iter().enumerate() {
                    let indicator = if j == tok.choice { 1.0 } else { 0.0 };
                    grad[tok.offset + j] += w * (indicator - p);
                }
            }
        }
    }
    Ok(sum * norm)
}

/// Exact gradient of [`surrogate_loss`] with respect to the policy
/// parameters. Where the clipped branch is active the term is constant and
/// contributes nothing.
pub fn loss_gradient(
    group: &RolloutGroup,
    policy: &Policy,
    epsilon: f64,
) -> Result<Vec<f64>, GrpoError> {
    let mut grad = vec![0.0; policy.params().len()];
    accumulate_group(group, policy, epsilon, 1.0, &mut grad)?;
    Ok(grad)
}

/// Objective and gradient averaged uniformly over groups.
pub fn batch_objective(
    groups: &[RolloutGroup],
    policy: &Policy,
    epsilon: f64,
) -> Result<(f64, Vec<f64>), GrpoError> {
    let mut grad = vec![0.0; policy.params().len()];
    if groups.is_empty() {
        return Ok((0.0, grad));
    }
    let scale = 1.0 / groups.len() as f64;
    let mut loss = 0.0;
    for group in groups {
        loss += accumulate_group(group, policy, epsilon, scale, &mut grad)?;
    }
    Ok((loss, grad))
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One ascent step `theta + lr * clip_norm(g)`.
pub fn update_step(
    params: &[f64],
    gradient: &[f64],
    grpo: &GrpoParams,
) -> Result<Vec<f64>, GrpoError> {
    if params.len() != gradient.len() {
        return Err(GrpoError::ShapeMismatch {
            expected: params.len(),
            found: gradient.len(),
        });
    }
    if let Some((index, &value)) = gradient.iter().enumerate().find(|(_, g)| !g.is_finite()) {
        return Err(GrpoError::NonFinite { index, value });
    }
    let norm = l2_norm(gradient);
    let scale = if norm > grpo.grad_clip_norm {
        grpo.grad_clip_norm / norm
    } else {
        1.0
    };
    let step = grpo.learning_rate * scale;
    Ok(params
        .iter()
        .zip(gradient)
        .map(|(p, g)| p + step * g)
        .collect())
}
