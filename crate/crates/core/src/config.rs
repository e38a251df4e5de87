//! Experiment configuration.
//!
//! All keys are flat so that a config file and command-line overrides share
//! one namespace. Everything except `seed` has a default.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::allocation::AllocationParams;
use crate::baseline::BaselineMode;
use crate::curriculum::CorruptionMode;
use crate::grpo::GrpoParams;
use crate::scoring::ScorerKind;
use crate::selection::SelectionParams;
use crate::simenv::BranchingProfile;

/// What counts as one sample of a problem for the withdrawal counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleUnit {
    /// One group of `group_size` rollouts.
    Group,
    /// Every individual rollout.
    Rollout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,

    /// Problem file; when absent a synthetic corpus is generated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(default = "d::gen_problems")]
    pub gen_problems: usize,
    #[serde(default = "d::gen_steps")]
    pub gen_min_steps: usize,
    #[serde(default = "d::gen_steps")]
    pub gen_max_steps: usize,
    #[serde(default = "d::gen_profile")]
    pub gen_profile: BranchingProfile,

    #[serde(default = "d::m")]
    pub m: u32,
    #[serde(default = "d::alpha1")]
    pub alpha1: f64,
    #[serde(default = "d::alpha2")]
    pub alpha2: f64,
    #[serde(default = "d::alpha3")]
    pub alpha3: f64,
    /// Success rate of a stub weak model; when absent the weak model is the
    /// untrained synthetic policy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak_success_rate: Option<f64>,

    #[serde(default = "d::scorer")]
    pub scorer: ScorerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scorer_command: Option<String>,
    #[serde(default = "d::scorer_in_flight")]
    pub scorer_in_flight: usize,

    #[serde(default = "d::k_max")]
    pub k_max: usize,
    #[serde(default = "d::beta1")]
    pub beta1: f64,
    #[serde(default = "d::beta2")]
    pub beta2: f64,

    #[serde(default = "d::n_check")]
    pub n_check: u64,
    #[serde(default = "d::yes")]
    pub withdrawal: bool,
    #[serde(default = "d::sample_unit")]
    pub sample_unit: SampleUnit,
    #[serde(default = "d::baseline")]
    pub baseline: BaselineMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corruption: Option<CorruptionMode>,

    #[serde(default = "d::epsilon")]
    pub epsilon: f64,
    #[serde(default = "d::group_size")]
    pub group_size: usize,
    #[serde(default = "d::learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "d::grad_clip_norm")]
    pub grad_clip_norm: f64,
    #[serde(default = "d::std_floor")]
    pub std_floor: f64,
    #[serde(default = "d::temperature")]
    pub temperature: f64,
    /// Problems per update.
    #[serde(default = "d::batch_size")]
    pub batch_size: usize,
    /// Gradient steps taken on each batch of rollouts.
    #[serde(default = "d::inner_epochs")]
    pub inner_epochs: usize,
    #[serde(default = "d::total_updates")]
    pub total_updates: usize,

    /// Hint-free evaluation period in updates; 0 evaluates only at the end.
    #[serde(default = "d::eval_every")]
    pub eval_every: usize,
    /// Samples per problem for pass@k.
    #[serde(default = "d::eval_samples")]
    pub eval_samples: usize,
    /// Checkpoint period in updates; 0 disables checkpoints.
    #[serde(default)]
    pub checkpoint_every: usize,
}

mod d {
    use super::*;
    pub fn gen_problems() -> usize {
        200
    }
    pub fn gen_steps() -> usize {
        5
    }
    pub fn gen_profile() -> BranchingProfile {
        BranchingProfile::Bottleneck {
            wide: 32,
            base: 2,
            count: 1,
        }
    }
    pub fn m() -> u32 {
        16
    }
    pub fn alpha1() -> f64 {
        0.2
    }
    pub fn alpha2() -> f64 {
        0.1
    }
    pub fn alpha3() -> f64 {
        0.4
    }
    pub fn scorer() -> ScorerKind {
        ScorerKind::Oracle
    }
    pub fn scorer_in_flight() -> usize {
        4
    }
    pub fn k_max() -> usize {
        3
    }
    pub fn beta1() -> f64 {
        0.15
    }
    pub fn beta2() -> f64 {
        0.35
    }
    pub fn n_check() -> u64 {
        2
    }
    pub fn yes() -> bool {
        true
    }
    pub fn sample_unit() -> SampleUnit {
        SampleUnit::Group
    }
    pub fn baseline() -> BaselineMode {
        BaselineMode::PieceHint
    }
    pub fn epsilon() -> f64 {
        0.2
    }
    pub fn group_size() -> usize {
        16
    }
    pub fn learning_rate() -> f64 {
        1e-6
    }
    pub fn grad_clip_norm() -> f64 {
        1.0
    }
    pub fn std_floor() -> f64 {
        1e-6
    }
    pub fn temperature() -> f64 {
        1.0
    }
    pub fn batch_size() -> usize {
        8
    }
    pub fn inner_epochs() -> usize {
        1
    }
    pub fn total_updates() -> usize {
        100
    }
    pub fn eval_every() -> usize {
        100
    }
    pub fn eval_samples() -> usize {
        16
    }
}

/// pass@k columns written to the metrics CSV.
pub const METRIC_KS: [usize; 2] = [1, 8];

impl ExperimentConfig {
    /// Defaults for everything but the seed.
    pub fn with_seed(seed: u64) -> Self {
        serde_json::from_value(serde_json::json!({ "seed": seed })).expect("defaults deserialize")
    }

    pub fn selection_params(&self) -> SelectionParams {
        SelectionParams {
            m: self.m,
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            alpha3: self.alpha3,
        }
    }

    pub fn allocation_params(&self) -> AllocationParams {
        AllocationParams {
            k_max: self.k_max,
            beta1: self.beta1,
            beta2: self.beta2,
            m: self.m,
        }
    }

    pub fn grpo_params(&self) -> GrpoParams {
        GrpoParams {
            epsilon: self.epsilon,
            group_size: self.group_size,
            learning_rate: self.learning_rate,
            grad_clip_norm: self.grad_clip_norm,
            std_floor: self.std_floor,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.selection_params()
            .validate()
            .map_err(|e| e.to_string())?;
        self.allocation_params()
            .validate()
            .map_err(|e| e.to_string())?;
        self.grpo_params().validate().map_err(|e| e.to_string())?;
        if self.n_check == 0 {
            return Err("n_check must be at least 1".into());
        }
        if self.batch_size == 0 || self.inner_epochs == 0 {
            return Err("batch_size and inner_epochs must be at least 1".into());
        }
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return Err("temperature must be positive".into());
        }
        let max_k = METRIC_KS.iter().copied().max().unwrap_or(1);
        if self.eval_samples < max_k {
            return Err(format!("eval_samples must be at least {max_k}"));
        }
        if self.corpus.is_none()
            && (self.gen_min_steps == 0 || self.gen_min_steps > self.gen_max_steps)
        {
            return Err("gen_min_steps must be in 1..=gen_max_steps".into());
        }
        if let Some(rate) = self.weak_success_rate {
            if !(0.0..=1.0).contains(&rate) {
                return Err("weak_success_rate must lie in [0, 1]".into());
            }
        }
        if self.scorer == ScorerKind::External && self.scorer_command.is_none() {
            return Err("scorer = external needs scorer_command".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Hash of the parameters that shape the registry.
    pub fn preprocessing_hash(&self) -> String {
        let key = serde_json::json!({
            "selection": self.selection_params(),
            "allocation": self.allocation_params(),
            "scorer": self.scorer,
            "seed": self.seed,
        });
        hex::encode(Sha256::digest(key.to_string().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_hyperparameters() {
        let c = ExperimentConfig::with_seed(1);
        assert_eq!(c.n_check, 2);
        assert_eq!(c.k_max, 3);
        assert_eq!(c.epsilon, 0.2);
        assert_eq!(c.group_size, 16);
        assert_eq!(c.learning_rate, 1e-6);
        assert_eq!(c.grad_clip_norm, 1.0);
        assert_eq!(c.temperature, 1.0);
        assert_eq!((c.alpha1, c.alpha2, c.alpha3), (0.2, 0.1, 0.4));
        assert_eq!((c.beta1, c.beta2), (0.15, 0.35));
        c.validate().unwrap();
    }

    #[test]
    fn seed_is_mandatory_and_keys_are_checked() {
        assert!(serde_json::from_str::<ExperimentConfig>("{}").is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"seed":1,"k_mx":2}"#).is_err());
    }

    #[test]
    fn hash_tracks_every_field() {
        let a = ExperimentConfig::with_seed(1);
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.baseline = BaselineMode::NoHint;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn string_enums_round_trip() {
        let mut c = ExperimentConfig::with_seed(3);
        c.baseline = BaselineMode::PrefixFraction(0.5);
        c.corruption = Some(CorruptionMode::FractionCorrupt(0.5));
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"prefix_fraction(0.5)\""));
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), c);
    }

    #[test]
    fn validation_failures() {
        let mut c = ExperimentConfig::with_seed(1);
        c.eval_samples = 4;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::with_seed(1);
        c.alpha2 = 0.5;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::with_seed(1);
        c.scorer = ScorerKind::External;
        assert!(c.validate().is_err());
    }
}
