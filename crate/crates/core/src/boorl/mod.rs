//! Tabular bootstrapped offline-to-online ensemble on gridworlds.

mod data;
mod grid;
mod member;
mod online;

pub use data::{
    build_masked_dataset, collect_behavior_dataset, dataset_from_csv, dataset_to_csv, MaskedDataset, Record,
};
pub use grid::{Gridworld, ACTION_NAMES, GRIDWORLD_5X5, N_ACTIONS};
pub use member::{
    offline_train_member, selection_probs, softmax_probs, softmax_select, EnsembleMember, OfflineTrainConfig,
};
pub use online::{
    ablate, ablation_csv, mixture_policy, offline_phase, online_step, run_boorl, AblationRow, AgentKind,
    BoorlConfig, BoorlRun, BufferMode, EpisodeState, EpisodeSummary, ReplayMixer, StepOutcome, Variant,
    EARLY_FRACTION,
};
