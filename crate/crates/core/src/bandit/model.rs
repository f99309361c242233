use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Beta;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// How a pull of arm `i` turns `probs[i]` into a reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKind {
    /// Binary reward, 1 with probability `probs[i]`.
    #[default]
    Bernoulli,
    /// The reward is exactly `probs[i]`.
    Deterministic,
}

/// Ground-truth arm means of a multi-armed bandit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditModel {
    probs: Vec<f64>,
    reward: RewardKind,
}

impl BanditModel {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_reward(probs, RewardKind::Bernoulli)
    }

    pub fn with_reward(probs: Vec<f64>, reward: RewardKind) -> Result<Self> {
        if probs.len() < 2 {
            return Err(invalid(format!("need at least 2 arms, got {}", probs.len())));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(invalid(format!("arm probability {p} outside [0, 1]")));
        }
        Ok(Self { probs, reward })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_arms(&self) -> usize {
        self.probs.len()
    }

    pub fn reward_kind(&self) -> RewardKind {
        self.reward
    }

    /// p* = max_i p_i.
    pub fn best(&self) -> f64 {
        self.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Expected regret of pulling `arm`.
    pub fn gap(&self, arm: usize) -> f64 {
        self.best() - self.probs[arm]
    }

    pub fn pull<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> f64 {
        match self.reward {
            RewardKind::Bernoulli => {
                if rng.random::<f64>() < self.probs[arm] {
                    1.0
                } else {
                    0.0
                }
            }
            RewardKind::Deterministic => self.probs[arm],
        }
    }
}

/// Draws every arm mean i.i.d. from Beta(prior_alpha, prior_beta).
pub fn sample_bandit<R: Rng + ?Sized>(
    n_arms: usize,
    prior_alpha: f64,
    prior_beta: f64,
    rng: &mut R,
) -> Result<BanditModel> {
    if n_arms < 2 {
        return Err(invalid(format!("need at least 2 arms, got {n_arms}")));
    }
    if !(prior_alpha > 0.0 && prior_beta > 0.0) {
        return Err(invalid("Beta prior parameters must be positive"));
    }
    let beta = Beta::new(prior_alpha, prior_beta).map_err(|e| invalid(e.to_string()))?;
    let probs = (0..n_arms).map(|_| beta.sample(rng)).collect();
    BanditModel::new(probs)
}

/// Per-arm pull counts and reward sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullLog {
    pub counts: Vec<u64>,
    pub sums: Vec<f64>,
    pub total: u64,
}

impl PullLog {
    pub fn empty(n_arms: usize) -> Self {
        Self {
            counts: vec![0; n_arms],
            sums: vec![0.0; n_arms],
            total: 0,
        }
    }

    /// Builds a log from counts and empirical means.
    pub fn from_means(counts: &[u64], means: &[f64]) -> Self {
        let sums = counts.iter().zip(means).map(|(&c, &m)| c as f64 * m).collect();
        Self {
            counts: counts.to_vec(),
            sums,
            total: counts.iter().sum(),
        }
    }

    pub fn n_arms(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        self.total += 1;
    }

    /// Empirical mean; 0 for an arm never pulled.
    pub fn mean(&self, arm: usize) -> f64 {
        match self.counts[arm] {
            0 => 0.0,
            c => self.sums[arm] / c as f64,
        }
    }
}

/// `n` pulls with the arm chosen uniformly at random.
pub fn collect_offline_uniform<R: Rng + ?Sized>(
    bandit: &BanditModel,
    n: u64,
    rng: &mut R,
) -> PullLog {
    let mut log = PullLog::empty(bandit.n_arms());
    for _ in 0..n {
        let arm = rng.random_range(0..bandit.n_arms());
        let r = bandit.pull(arm, rng);
        log.record(arm, r);
    }
    log
}

/// `n` pulls with arms drawn from the behavior distribution `weights`.
pub fn collect_offline_weighted<R: Rng + ?Sized>(
    bandit: &BanditModel,
    weights: &[f64],
    n: u64,
    rng: &mut R,
) -> Result<PullLog> {
    if weights.len() != bandit.n_arms() {
        return Err(invalid(format!(
            "{} weights for {} arms",
            weights.len(),
            bandit.n_arms()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(invalid("behavior weights must be finite and non-negative"));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("behavior weights sum to {sum}, not 1")));
    }
    let dist = WeightedIndex::new(weights).map_err(|e| invalid(e.to_string()))?;
    let mut log = PullLog::empty(bandit.n_arms());
    for _ in 0..n {
        let arm = dist.sample(rng);
        let r = bandit.pull(arm, rng);
        log.record(arm, r);
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn rejects_bad_models() {
        assert!(BanditModel::new(vec![0.5]).is_err());
        assert!(BanditModel::new(vec![0.5, 1.2]).is_err());
        assert!(sample_bandit(1, 1.0, 1.0, &mut seeded(0)).is_err());
        assert!(sample_bandit(3, 0.0, 1.0, &mut seeded(0)).is_err());
    }

    #[test]
    fn sample_is_seeded() {
        let a = sample_bandit(2, 1.0, 1.0, &mut seeded(0)).unwrap();
        let b = sample_bandit(2, 1.0, 1.0, &mut seeded(0)).unwrap();
        assert_eq!(a, b);
        let ten = sample_bandit(10, 1.0, 1.0, &mut seeded(7)).unwrap();
        assert_eq!(ten.n_arms(), 10);
        assert!(ten.probs().iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn beta_mean_matches_prior() {
        // Beta(100, 100): mean 0.5, variance 0.25 / 201.
        let mut rng = seeded(1);
        let mut draws = Vec::new();
        for _ in 0..10_000 / 3 + 1 {
            draws.extend_from_slice(sample_bandit(3, 100.0, 100.0, &mut rng).unwrap().probs());
        }
        let m = crate::stats::mean(&draws);
        let se = (0.25f64 / 201.0).sqrt() / (draws.len() as f64).sqrt();
        assert!((m - 0.5).abs() < 3.0 * se, "mean {m}");
    }

    #[test]
    fn empty_offline_log() {
        let b = BanditModel::new(vec![0.2, 0.8]).unwrap();
        let log = collect_offline_uniform(&b, 0, &mut seeded(0));
        assert_eq!(log, PullLog::empty(2));
    }

    #[test]
    fn uniform_counts_are_binomial() {
        let b = sample_bandit(10, 1.0, 1.0, &mut seeded(3)).unwrap();
        let log = collect_offline_uniform(&b, 1000, &mut seeded(4));
        assert_eq!(log.counts.iter().sum::<u64>(), 1000);
        assert_eq!(log.total, 1000);
        let sd = (1000.0f64 * 0.1 * 0.9).sqrt();
        for &c in &log.counts {
            assert!((c as f64 - 100.0).abs() <= 3.0 * sd, "count {c}");
        }
    }

    #[test]
    fn deterministic_rewards_sum_exactly() {
        let b = BanditModel::new(vec![1.0, 0.0]).unwrap();
        let log = collect_offline_uniform(&b, 100, &mut seeded(9));
        assert_eq!(log.sums[0], log.counts[0] as f64);
        assert_eq!(log.sums[1], 0.0);
    }

    #[test]
    fn weighted_collection() {
        let b = BanditModel::new(vec![0.3, 0.6]).unwrap();
        let log = collect_offline_weighted(&b, &[1.0, 0.0], 50, &mut seeded(0)).unwrap();
        assert_eq!(log.counts, vec![50, 0]);

        let log = collect_offline_weighted(&b, &[0.5, 0.5], 10_000, &mut seeded(1)).unwrap();
        let sd = (10_000.0f64 * 0.25).sqrt();
        assert!((log.counts[0] as f64 - 5_000.0).abs() <= 3.0 * sd);

        assert!(collect_offline_weighted(&b, &[0.5, 0.6], 1, &mut seeded(0)).is_err());
        assert!(collect_offline_weighted(&b, &[1.5, -0.5], 1, &mut seeded(0)).is_err());
        assert!(collect_offline_weighted(&b, &[1.0], 1, &mut seeded(0)).is_err());
    }

    #[test]
    fn rare_arm_seen_once_with_lemma_probability() {
        // P(N(a2) = 1) = (1 - 1/N)^(N - 1) for N pulls with mu(a2) = 1/N.
        let n = 500u64;
        let b = BanditModel::new(vec![0.1, 0.1]).unwrap();
        let w = [(n - 1) as f64 / n as f64, 1.0 / n as f64];
        let trials = 20_000;
        let mut rng = seeded(11);
        let hits = (0..trials)
            .filter(|_| collect_offline_weighted(&b, &w, n, &mut rng).unwrap().counts[1] == 1)
            .count();
        let p = (1.0 - 1.0 / n as f64).powi(n as i32 - 1);
        let phat = hits as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((phat - p).abs() < 3.0 * se, "phat {phat} p {p}");
        assert!(p > 0.368 && p < 0.369);
    }
}
