//! Two-arm constructions on which UCB (first pull) and LCB (every pull)
//! fail when the offline data barely covers the second arm.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::policy::{select_lcb, select_ucb};
use super::{collect_offline_weighted, BanditModel, RewardKind};
use crate::error::{invalid, Result};
use crate::par;
use crate::rng::{stream_rng, Stream};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    Ucb,
    Lcb,
}

/// A family of two-arm bandits with deterministic rewards.
///
/// Arm 0 always pays `first_arm`; arm 1 pays one of `second_arm` with equal
/// probability, resolved once per environment draw. Offline data comes from
/// the behavior `((n - 1) / n, 1 / n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub mode: FailureMode,
    pub epsilon: f64,
    pub n: u64,
    pub first_arm: f64,
    pub second_arm: [f64; 2],
}

fn check(epsilon: f64, n: u64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.05) {
        return Err(invalid(format!("epsilon must lie in (0, 0.05), got {epsilon}")));
    }
    if n < 500 {
        return Err(invalid(format!("offline size must be at least 500, got {n}")));
    }
    Ok(())
}

/// Arm 0 pays 2ε; arm 1 pays 2.1ε or 0.
pub fn make_counterexample_ucb(epsilon: f64, n: u64) -> Result<Counterexample> {
    check(epsilon, n)?;
    Ok(Counterexample {
        mode: FailureMode::Ucb,
        epsilon,
        n,
        first_arm: 2.0 * epsilon,
        second_arm: [2.1 * epsilon, 0.0],
    })
}

/// Arm 0 pays ε; arm 1 pays 4ε or 0.
pub fn make_counterexample_lcb(epsilon: f64, n: u64) -> Result<Counterexample> {
    check(epsilon, n)?;
    Ok(Counterexample {
        mode: FailureMode::Lcb,
        epsilon,
        n,
        first_arm: epsilon,
        second_arm: [4.0 * epsilon, 0.0],
    })
}

impl Counterexample {
    pub fn behavior(&self) -> [f64; 2] {
        let n = self.n as f64;
        [(n - 1.0) / n, 1.0 / n]
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> BanditModel {
        let second = self.second_arm[rng.random_range(0..2)];
        BanditModel::with_reward(vec![self.first_arm, second], RewardKind::Deterministic)
            .expect("construction stays in [0, 1]")
    }
}

/// Monte-Carlo summary of the UCB construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcbFailureReport {
    pub draws: u64,
    /// Fraction of draws whose offline data pulled arm 1 exactly once.
    pub p_rare_once: f64,
    pub p_rare_once_se: f64,
    /// Mean suboptimality of UCB's first online pull.
    pub mean_suboptimality: f64,
    pub suboptimality_se: f64,
}

/// Monte-Carlo summary of the LCB construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcbFailureReport {
    pub draws: u64,
    pub horizon: u64,
    pub p_rare_once: f64,
    pub mean_regret: f64,
    pub regret_se: f64,
}

pub fn ucb_failure_experiment(ce: &Counterexample, k: f64, draws: u64, seed: u64) -> UcbFailureReport {
    let behavior = ce.behavior();
    let outcomes = par::map_range(draws, |i| {
        let mut rng = stream_rng(seed, Stream::Replicate(i));
        let bandit = ce.draw(&mut rng);
        let log = collect_offline_weighted(&bandit, &behavior, ce.n, &mut rng)
            .expect("behavior is a distribution");
        let arm = select_ucb(&log, k);
        (log.counts[1] == 1, bandit.gap(arm))
    });
    let events: Vec<f64> = outcomes.iter().map(|o| if o.0 { 1.0 } else { 0.0 }).collect();
    let subopt: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
    UcbFailureReport {
        draws,
        p_rare_once: stats::mean(&events),
        p_rare_once_se: stats::std_error(&events),
        mean_suboptimality: stats::mean(&subopt),
        suboptimality_se: stats::std_error(&subopt),
    }
}

pub fn lcb_failure_experiment(
    ce: &Counterexample,
    k: f64,
    horizon: u64,
    draws: u64,
    seed: u64,
) -> LcbFailureReport {
    let behavior = ce.behavior();
    let outcomes = par::map_range(draws, |i| {
        let mut rng = stream_rng(seed, Stream::Replicate(i));
        let bandit = ce.draw(&mut rng);
        let mut log = collect_offline_weighted(&bandit, &behavior, ce.n, &mut rng)
            .expect("behavior is a distribution");
        let rare_once = log.counts[1] == 1;
        let mut regret = 0.0;
        for _ in 0..horizon {
            let arm = select_lcb(&log, k);
            let r = bandit.pull(arm, &mut rng);
            log.record(arm, r);
            regret += bandit.gap(arm);
        }
        (rare_once, regret)
    });
    let events: Vec<f64> = outcomes.iter().map(|o| if o.0 { 1.0 } else { 0.0 }).collect();
    let regrets: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
    LcbFailureReport {
        draws,
        horizon,
        p_rare_once: stats::mean(&events),
        mean_regret: stats::mean(&regrets),
        regret_se: stats::std_error(&regrets),
    }
}
