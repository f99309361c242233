use serde::{Deserialize, Serialize};

use super::policy::{select_lcb, select_switch, select_ts, select_ucb, SwitchKind, SwitchSchedule};
use super::{BanditModel, BetaPosterior, PullLog};
use crate::error::{invalid, Result};
use crate::rng::{stream_rng, Stream};
use crate::trace::RegretTrace;

pub const DEFAULT_K: f64 = 1.0;

fn default_k() -> f64 {
    DEFAULT_K
}

fn one() -> f64 {
    1.0
}

/// Which agent to run online.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentSpec {
    Ucb {
        #[serde(default = "default_k")]
        k: f64,
    },
    Lcb {
        #[serde(default = "default_k")]
        k: f64,
    },
    Ts {
        #[serde(default = "one")]
        prior_alpha: f64,
        #[serde(default = "one")]
        prior_beta: f64,
    },
    /// LCB-to-UCB switch with `k_t = min(A t / T - 1, 1)`.
    Soft {
        param: f64,
        #[serde(default = "default_k")]
        k: f64,
    },
    /// LCB-to-UCB switch with `k_t = 2 * 1{t >= T / B} - 1`.
    Hard {
        param: f64,
        #[serde(default = "default_k")]
        k: f64,
    },
}

impl AgentSpec {
    pub fn ucb() -> Self {
        AgentSpec::Ucb { k: DEFAULT_K }
    }

    pub fn lcb() -> Self {
        AgentSpec::Lcb { k: DEFAULT_K }
    }

    pub fn ts() -> Self {
        AgentSpec::Ts {
            prior_alpha: 1.0,
            prior_beta: 1.0,
        }
    }

    pub fn soft(param: f64) -> Self {
        AgentSpec::Soft { param, k: DEFAULT_K }
    }

    pub fn hard(param: f64) -> Self {
        AgentSpec::Hard { param, k: DEFAULT_K }
    }

    /// Short identifier used in file names and plot legends.
    pub fn tag(&self) -> String {
        match self {
            AgentSpec::Ucb { .. } => "ucb".into(),
            AgentSpec::Lcb { .. } => "lcb".into(),
            AgentSpec::Ts { .. } => "ts".into(),
            AgentSpec::Soft { param, .. } => format!("soft{param}"),
            AgentSpec::Hard { param, .. } => format!("hard{param}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64, what: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{what} must be positive, got {x}")))
            }
        };
        match *self {
            AgentSpec::Ucb { k } | AgentSpec::Lcb { k } => positive(k, "k"),
            AgentSpec::Ts {
                prior_alpha,
                prior_beta,
            } => positive(prior_alpha, "prior_alpha").and(positive(prior_beta, "prior_beta")),
            AgentSpec::Soft { param, k } | AgentSpec::Hard { param, k } => {
                positive(param, "switch parameter").and(positive(k, "k"))
            }
        }
    }
}

/// Runs `agent` online for `horizon` pulls, warm-started from `offline`.
///
/// Regret is the expected gap `p* - p(a_t)` of each pulled arm. Online
/// randomness (rewards and Thompson draws) comes from the run's agent stream.
pub fn run_bandit_experiment(
    bandit: &BanditModel,
    offline: &PullLog,
    agent: &AgentSpec,
    horizon: u64,
    seed: u64,
) -> Result<RegretTrace> {
    if horizon == 0 {
        return Err(invalid("horizon must be at least 1"));
    }
    if offline.n_arms() != bandit.n_arms() {
        return Err(invalid("offline log and bandit disagree on the number of arms"));
    }
    agent.validate()?;
    let mut rng = stream_rng(seed, Stream::Agent);
    let mut log = offline.clone();
    let mut trace = RegretTrace::with_capacity(seed, agent.tag(), horizon as usize);
    let mut posterior = match *agent {
        AgentSpec::Ts {
            prior_alpha,
            prior_beta,
        } => Some(BetaPosterior::from_log(prior_alpha, prior_beta, offline)?),
        _ => None,
    };
    let schedule = match *agent {
        AgentSpec::Soft { param, .. } => Some(SwitchSchedule::new(SwitchKind::Soft, param, horizon)?),
        AgentSpec::Hard { param, .. } => Some(SwitchSchedule::new(SwitchKind::Hard, param, horizon)?),
        _ => None,
    };
    let best = bandit.best();
    for t in 1..=horizon {
        let arm = match *agent {
            AgentSpec::Ucb { k } => select_ucb(&log, k),
            AgentSpec::Lcb { k } => select_lcb(&log, k),
            AgentSpec::Ts { .. } => select_ts(posterior.as_ref().expect("ts posterior"), &mut rng),
            AgentSpec::Soft { k, .. } | AgentSpec::Hard { k, .. } => {
                select_switch(&log, schedule.as_ref().expect("schedule"), t, k)
            }
        };
        let reward = bandit.pull(arm, &mut rng);
        log.record(arm, reward);
        if let Some(post) = posterior.as_mut() {
            post.update(arm, reward)?;
        }
        trace.push(best - bandit.probs()[arm]);
    }
    Ok(trace)
}
