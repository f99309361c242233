use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::PullLog;
use crate::error::{invalid, LabError, Result};

/// Independent Beta posteriors over Bernoulli arm means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaPosterior {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl BetaPosterior {
    /// The same Beta(alpha, beta) prior on every arm.
    pub fn uniform_prior(n_arms: usize, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(invalid("Beta prior parameters must be positive"));
        }
        Ok(Self {
            alpha: vec![alpha; n_arms],
            beta: vec![beta; n_arms],
        })
    }

    /// Prior conditioned on every pull in `log`.
    pub fn from_log(prior_alpha: f64, prior_beta: f64, log: &PullLog) -> Result<Self> {
        let mut post = Self::uniform_prior(log.n_arms(), prior_alpha, prior_beta)?;
        for arm in 0..log.n_arms() {
            post.alpha[arm] += log.sums[arm];
            post.beta[arm] += log.counts[arm] as f64 - log.sums[arm];
        }
        Ok(post)
    }

    pub fn n_arms(&self) -> usize {
        self.alpha.len()
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.alpha[arm] / (self.alpha[arm] + self.beta[arm])
    }

    /// Conjugate update with a reward in [0, 1].
    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        if arm >= self.n_arms() {
            return Err(LabError::OutOfRange {
                what: "arms",
                index: arm,
                len: self.n_arms(),
            });
        }
        if !(0.0..=1.0).contains(&reward) {
            return Err(invalid(format!("reward {reward} outside [0, 1]")));
        }
        self.alpha[arm] += reward;
        self.beta[arm] += 1.0 - reward;
        Ok(())
    }

    /// Draws one mean per arm.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(&a, &b)| {
                Beta::new(a, b)
                    .expect("posterior parameters stay positive")
                    .sample(rng)
            })
            .collect()
    }
}
