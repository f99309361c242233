//! Per-episode check of the information-theoretic regret inequality
//! `E_k[Delta_k] <= sum_h Gamma_{k,h} sqrt(I_{k,h}) + 2 delta H^2`.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::info_ratio::{info_ratio_from_samples, sample_deviations};
use crate::error::{invalid, Result};
use crate::linmdp::{dp, info_gain_factored, plan, rollout, AgentMode, LinearMdp, LsviStats};
use crate::rng::{stream_rng, Stream};

/// One episode's ingredients. `sqrt_info[h]` is the expectation of
/// `sqrt(I_{k,h})` over the state-action pair visited at step `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub regret: f64,
    pub gamma: Vec<f64>,
    pub sqrt_info: Vec<f64>,
    pub delta: f64,
}

impl EpisodeRecord {
    pub fn bound(&self) -> f64 {
        let h = self.sqrt_info.len() as f64;
        let info: f64 = self.gamma.iter().zip(&self.sqrt_info).map(|(g, i)| g * i).sum();
        info + 2.0 * self.delta * h * h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlackRow {
    pub episode: usize,
    pub regret: f64,
    pub bound: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem31Report {
    pub rows: Vec<SlackRow>,
    pub negative_fraction: f64,
}

impl Theorem31Report {
    /// One JSON object per line: `{episode, regret, bound, slack}`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&serde_json::to_string(row).expect("plain numeric row"));
            out.push('\n');
        }
        out
    }
}

pub fn check_theorem31(records: &[EpisodeRecord]) -> Theorem31Report {
    let rows: Vec<SlackRow> = records
        .iter()
        .map(|r| {
            let bound = r.bound();
            SlackRow {
                episode: r.episode,
                regret: r.regret,
                bound,
                slack: bound - r.regret,
            }
        })
        .collect();
    let negative = rows.iter().filter(|r| r.slack < 0.0).count();
    let negative_fraction = if rows.is_empty() {
        0.0
    } else {
        negative as f64 / rows.len() as f64
    };
    Theorem31Report { rows, negative_fraction }
}

/// Which pairs the information term is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoAlong {
    /// Pairs visited by the played policy (Thompson sampling and UCB form).
    Played,
    /// Pairs visited by the true optimal policy (Thompson sampling and LCB
    /// form). Only available in simulation.
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Theorem31Config {
    pub episodes: usize,
    /// Posterior draws averaged to estimate `E_k[Delta_k]`.
    pub replays: usize,
    /// Joint posterior draws used to estimate `Gamma_k`.
    pub info_samples: usize,
    pub delta: f64,
    pub ridge: f64,
    pub scale: f64,
    pub along: InfoAlong,
}

impl Default for Theorem31Config {
    fn default() -> Self {
        Self {
            episodes: 500,
            replays: 200,
            info_samples: 500,
            delta: 0.05,
            ridge: 1.0,
            scale: 1.0,
            along: InfoAlong::Played,
        }
    }
}

/// Runs LSVI Thompson sampling on `mdp` and records, before every episode,
/// the replay-averaged regret of the current posterior together with the
/// inequality's right-hand-side ingredients.
pub fn theorem31_experiment(mdp: &LinearMdp, config: &Theorem31Config, seed: u64) -> Result<Vec<EpisodeRecord>> {
    if config.replays == 0 || config.info_samples == 0 {
        return Err(invalid("replays and info_samples must be positive"));
    }
    let (hz, d) = (mdp.horizon(), mdp.d());
    let mut stats = LsviStats::new(mdp, config.ridge)?;
    let sol = dp::solve(mdp);
    let optimal = sol.v[0][mdp.initial_state()];
    let optimal_occ = dp::visitation(mdp, &sol.policy);
    let features = mdp.features().to_vec();
    let mut agent_rng = stream_rng(seed, Stream::Agent);
    let mut env_rng = stream_rng(seed, Stream::Environment);
    let mut records = Vec::with_capacity(config.episodes);
    for episode in 0..config.episodes {
        let factors: Vec<_> = (0..hz).map(|h| stats.factor(h).clone()).collect();
        let (devs, info) = sample_deviations(&factors, &features, config.scale, config.info_samples, &mut agent_rng);
        let gamma = info_ratio_from_samples(&devs, &info, config.delta)?.gamma_hat;
        let sqrt_gain: Vec<Vec<f64>> = factors
            .iter()
            .map(|chol| features.iter().map(|phi| info_gain_factored(phi, chol).sqrt()).collect())
            .collect();
        let expected_sqrt = |occ: &[Vec<f64>]| -> Vec<f64> {
            (0..hz)
                .map(|h| occ[h].iter().zip(&sqrt_gain[h]).map(|(p, g)| p * g).sum())
                .collect()
        };

        let mut regret = 0.0;
        let mut sqrt_info = vec![0.0; hz];
        let mut played = None;
        for r in 0..config.replays {
            let noise: Vec<DVector<f64>> = (0..hz)
                .map(|_| DVector::from_fn(d, |_, _| agent_rng.sample(StandardNormal)))
                .collect();
            let policy = plan(mdp, &mut stats, AgentMode::Ts, 0.0, config.scale, Some(&noise)).policy;
            regret += dp::regret_of(mdp, optimal, &policy);
            if config.along == InfoAlong::Played {
                let occ = dp::visitation(mdp, &policy);
                for (acc, x) in sqrt_info.iter_mut().zip(expected_sqrt(&occ)) {
                    *acc += x;
                }
            }
            if r == 0 {
                played = Some(policy);
            }
        }
        regret /= config.replays as f64;
        match config.along {
            InfoAlong::Played => sqrt_info.iter_mut().for_each(|x| *x /= config.replays as f64),
            InfoAlong::Optimal => sqrt_info = expected_sqrt(&optimal_occ),
        }
        records.push(EpisodeRecord {
            episode,
            regret,
            gamma: vec![gamma; hz],
            sqrt_info,
            delta: config.delta,
        });

        let buf = rollout(mdp, &played.expect("at least one replay"), &mut env_rng);
        stats.absorb_all(mdp, &buf);
    }
    Ok(records)
}
