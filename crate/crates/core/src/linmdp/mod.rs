//! Finite-horizon linear MDPs, ridge-regression Gaussian posteriors and
//! least-squares value iteration agents.

mod agent;
pub mod dp;
mod mdp;
mod posterior;

pub use agent::{
    episode_policy, expert_buffer, plan, q_estimate, q_estimate_unclipped, rollout, run_lsvi,
    run_lsvi_episode, ts_sample_weights, warm_start_from_offline, AgentConfig, AgentMode, Plan,
    QMode,
};
pub use mdp::{make_tabular_linear, random_tabular, LinearMdp, LinearMdpDoc};
pub use posterior::{
    info_gain, info_gain_factored, posterior_fit, quad_form_inv, EpisodeBuffer, GaussianPosterior,
    LsviStats, PosteriorStep, Source, Transition,
};
