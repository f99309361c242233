//! Bernoulli bandits with Beta-Bernoulli posteriors and the UCB, LCB,
//! Thompson sampling and LCB-to-UCB switching agents.

mod counterexample;
mod experiment;
mod model;
mod policy;
mod posterior;

pub use counterexample::{
    lcb_failure_experiment, make_counterexample_lcb, make_counterexample_ucb,
    ucb_failure_experiment, Counterexample, FailureMode, LcbFailureReport, UcbFailureReport,
};
pub use experiment::{run_bandit_experiment, AgentSpec, DEFAULT_K};
pub use model::{
    collect_offline_uniform, collect_offline_weighted, sample_bandit, BanditModel, PullLog,
    RewardKind,
};
pub use policy::{
    select_lcb, select_switch, select_ts, select_ucb, select_weighted, SwitchKind,
    SwitchSchedule,
};
pub use posterior::BetaPosterior;
