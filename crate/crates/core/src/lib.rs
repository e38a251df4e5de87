//! Curriculum RL with value-ranked solution hints.
//!
//! Reference solutions are split into pieces, each piece is scored for how
//! much it helps, and the most valuable pieces are fed as hints during GRPO
//! training, then withdrawn one at a time as the policy improves. A tabular
//! synthetic environment stands in for a language model so the whole loop
//! runs on a desk machine.

pub mod allocation;
pub mod baseline;
pub mod config;
pub mod corpus;
pub mod curriculum;
pub mod eval;
pub mod grpo;
pub mod pipeline;
pub mod plot;
pub mod rng;
pub mod scoring;
pub mod selection;
pub mod simenv;

pub use allocation::{allocate_budget, build_entry, select_hints, AllocationParams};
pub use baseline::{baseline_hint_selector, BaselineMode};
pub use config::ExperimentConfig;
pub use corpus::{
    load_corpus, load_registry, save_registry, PieceRecord, Problem, Registry, RegistryEntry,
};
pub use curriculum::{corrupt_hints, AugmentedPrompt, CorruptionMode, Curriculum, CurriculumState};
pub use eval::pass_at_k;
pub use grpo::{compute_advantages, surrogate_loss, GrpoParams, RolloutGroup};
pub use pipeline::{preprocess, run_pipeline, train, MetricsRow, PipelineError, Stage};
pub use scoring::{normalize_values, score_pieces, ScorerHandle, ScorerKind};
pub use selection::{filter_capability, filter_hard, SelectionParams, SuccessCount};
pub use simenv::{generate_corpus, BranchingProfile, Policy, SyntheticSpec};
