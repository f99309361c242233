//! Versioned JSON experiment configs and named presets.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bandit::{AgentSpec, FailureMode};
use crate::boorl::{AgentKind, BoorlConfig, Variant, GRIDWORLD_5X5};
use crate::bounds::{InfoAlong, Theorem31Config};
use crate::error::{LabError, Result};
use crate::linmdp::{AgentConfig, AgentMode};

pub const SCHEMA_VERSION: u32 = 1;

fn config_err(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BanditParams {
    pub n_arms: usize,
    pub prior_alpha: f64,
    pub prior_beta: f64,
    pub offline_pulls: u64,
    pub horizon: u64,
    pub agents: Vec<AgentSpec>,
}

impl Default for BanditParams {
    fn default() -> Self {
        Self {
            n_arms: 10,
            prior_alpha: 1.0,
            prior_beta: 1.0,
            offline_pulls: 1000,
            horizon: 100_000,
            agents: vec![
                AgentSpec::ucb(),
                AgentSpec::lcb(),
                AgentSpec::ts(),
                AgentSpec::soft(2.0),
                AgentSpec::hard(2.0),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleParams {
    pub mode: FailureMode,
    pub epsilon: f64,
    pub n: u64,
    pub k: f64,
    pub draws: u64,
    /// Online steps, used by the LCB construction only.
    pub horizon: u64,
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        Self {
            mode: FailureMode::Ucb,
            epsilon: 0.04,
            n: 500,
            k: 1.0,
            draws: 100_000,
            horizon: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinmdpParams {
    pub n_states: usize,
    pub n_actions: usize,
    pub horizon: usize,
    pub vary_by_step: bool,
    pub theorem: Theorem31Config,
    pub agents: Vec<AgentMode>,
    pub agent: AgentConfig,
    pub episodes: u64,
}

impl Default for LinmdpParams {
    fn default() -> Self {
        Self {
            n_states: 3,
            n_actions: 2,
            horizon: 2,
            vary_by_step: true,
            theorem: Theorem31Config::default(),
            agents: vec![AgentMode::Ts, AgentMode::Ucb, AgentMode::Lcb],
            agent: AgentConfig::default(),
            episodes: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsParams {
    pub d: usize,
    pub horizon: usize,
    pub c_dagger: f64,
    pub c: f64,
    pub delta: f64,
    pub ns: Vec<f64>,
    pub ts: Vec<f64>,
}

impl Default for BoundsParams {
    fn default() -> Self {
        Self {
            d: 1,
            horizon: 1,
            c_dagger: 1.0,
            c: 1.0,
            delta: 0.05,
            ns: vec![0.0, 100.0, 1000.0, 10_000.0],
            ts: (0..=50).map(|i| (i * 2000) as f64).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoorlParams {
    pub map: String,
    pub horizon: usize,
    pub slip_prob: f64,
    pub dataset_size: usize,
    pub behavior_epsilon: f64,
    pub config: BoorlConfig,
    pub agents: Vec<AgentKind>,
    /// Ablation variants; skipped when empty.
    pub ablation: Vec<Variant>,
}

impl Default for BoorlParams {
    fn default() -> Self {
        Self {
            map: GRIDWORLD_5X5.to_string(),
            horizon: 10,
            slip_prob: 0.1,
            dataset_size: 2000,
            behavior_epsilon: 0.3,
            config: BoorlConfig::default(),
            agents: vec![AgentKind::Boorl, AgentKind::Optimistic, AgentKind::Pessimistic],
            ablation: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "suite", content = "params", rename_all = "snake_case")]
pub enum SuiteParams {
    Bandit(BanditParams),
    Counterexample(CounterexampleParams),
    Linmdp(LinmdpParams),
    Bounds(BoundsParams),
    Boorl(BoorlParams),
}

impl SuiteParams {
    pub fn name(&self) -> &'static str {
        match self {
            SuiteParams::Bandit(_) => "bandit",
            SuiteParams::Counterexample(_) => "counterexample",
            SuiteParams::Linmdp(_) => "linmdp",
            SuiteParams::Bounds(_) => "bounds",
            SuiteParams::Boorl(_) => "boorl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(flatten)]
    pub suite: SuiteParams,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(crate::error::io_err(path))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form without `output_dir`, so the same
    /// experiment hashes alike wherever it is written.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("output_dir");
        }
        let text = serde_json::to_string(&value).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_err(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.seeds.is_empty() {
            return Err(config_err("seed list is empty"));
        }
        if self.seeds.iter().collect::<HashSet<_>>().len() != self.seeds.len() {
            return Err(config_err("seed list has duplicates"));
        }
        let wrap = |r: Result<()>| r.map_err(|e| config_err(e.to_string()));
        match &self.suite {
            SuiteParams::Bandit(p) => {
                if p.n_arms < 2 || p.horizon == 0 || p.agents.is_empty() {
                    return Err(config_err("bandit suite needs >= 2 arms, a positive horizon and an agent"));
                }
                if !(p.prior_alpha > 0.0 && p.prior_beta > 0.0) {
                    return Err(config_err("Beta prior parameters must be positive"));
                }
                for a in &p.agents {
                    wrap(a.validate())?;
                }
            }
            SuiteParams::Counterexample(p) => {
                let made = match p.mode {
                    FailureMode::Ucb => crate::bandit::make_counterexample_ucb(p.epsilon, p.n),
                    FailureMode::Lcb => crate::bandit::make_counterexample_lcb(p.epsilon, p.n),
                };
                wrap(made.map(|_| ()))?;
                if p.draws == 0 || !(p.k > 0.0) {
                    return Err(config_err("counterexample suite needs draws >= 1 and k > 0"));
                }
            }
            SuiteParams::Linmdp(p) => {
                if p.n_states == 0 || p.n_actions == 0 || p.horizon == 0 {
                    return Err(config_err("linmdp suite needs non-empty state, action and step sets"));
                }
                if p.theorem.episodes == 0 || p.theorem.replays == 0 || p.theorem.info_samples == 0 {
                    return Err(config_err("theorem check needs positive episode, replay and sample counts"));
                }
                wrap(p.agent.validate())?;
            }
            SuiteParams::Bounds(p) => {
                if p.ns.is_empty() || p.ts.is_empty() {
                    return Err(config_err("bound grid must be non-empty"));
                }
                let template = crate::bounds::BoundInputs {
                    d: p.d,
                    horizon: p.horizon,
                    c_dagger: p.c_dagger,
                    c: p.c,
                    delta: p.delta,
                    ..Default::default()
                };
                wrap(template.validate())?;
            }
            SuiteParams::Boorl(p) => {
                wrap(crate::boorl::Gridworld::parse(&p.map, p.horizon, p.slip_prob).map(|_| ()))?;
                wrap(p.config.validate())?;
                if p.dataset_size == 0 || p.agents.is_empty() {
                    return Err(config_err("boorl suite needs a dataset and at least one agent"));
                }
                if !(0.0..=1.0).contains(&p.behavior_epsilon) {
                    return Err(config_err("behavior epsilon must lie in [0, 1]"));
                }
                if p.ablation.len() == 1 {
                    return Err(config_err("ablation needs at least two variants"));
                }
            }
        }
        Ok(())
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 8] = [
    "appendix_e",
    "switching",
    "ucb_counterexample",
    "lcb_counterexample",
    "regret_decomposition",
    "bound_curve",
    "gridworld5",
    "gridworld5_ablation",
];

fn seeds(n: u64) -> Vec<u64> {
    (1..=n).collect()
}

/// Built-in experiment configurations, writing under `out/<name>`.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let (suite, seeds) = match name {
        "appendix_e" => (SuiteParams::Bandit(BanditParams::default()), seeds(100)),
        "switching" => (
            SuiteParams::Bandit(BanditParams {
                agents: vec![
                    AgentSpec::ts(),
                    AgentSpec::soft(1.5),
                    AgentSpec::soft(2.0),
                    AgentSpec::soft(4.0),
                    AgentSpec::hard(2.0),
                    AgentSpec::hard(4.0),
                ],
                ..BanditParams::default()
            }),
            seeds(100),
        ),
        "ucb_counterexample" => (SuiteParams::Counterexample(CounterexampleParams::default()), seeds(1)),
        "lcb_counterexample" => (
            SuiteParams::Counterexample(CounterexampleParams {
                mode: FailureMode::Lcb,
                draws: 10_000,
                ..CounterexampleParams::default()
            }),
            seeds(1),
        ),
        "regret_decomposition" => (SuiteParams::Linmdp(LinmdpParams::default()), seeds(10)),
        "regret_decomposition_optimal" => (
            SuiteParams::Linmdp(LinmdpParams {
                theorem: Theorem31Config {
                    along: InfoAlong::Optimal,
                    ..Theorem31Config::default()
                },
                ..LinmdpParams::default()
            }),
            seeds(10),
        ),
        "bound_curve" => (SuiteParams::Bounds(BoundsParams::default()), seeds(1)),
        "gridworld5" => (SuiteParams::Boorl(BoorlParams::default()), seeds(20)),
        "gridworld5_ablation" => (
            SuiteParams::Boorl(BoorlParams {
                agents: vec![AgentKind::Boorl],
                ablation: vec![Variant::Full, Variant::Ensemble1, Variant::UniformBuffer],
                ..BoorlParams::default()
            }),
            seeds(20),
        ),
        other => {
            return Err(config_err(format!(
                "unknown preset {other:?}; known presets: {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        suite,
        seeds,
        output_dir: PathBuf::from("out").join(name),
    })
}
