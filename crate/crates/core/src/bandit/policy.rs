//! Arm-selection rules: UCB, LCB, Thompson sampling and LCB-to-UCB switches.
//!
//! The confidence width of arm `a` is `sqrt(log N / N_a)` where `N` counts
//! every pull so far, offline ones included, and `log N` is clamped below
//! at one. An arm never pulled is scored with empirical mean 0 and a
//! surrogate count of one.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BetaPosterior, PullLog};
use crate::error::{invalid, Result};

fn log_total(log: &PullLog) -> f64 {
    (log.total as f64).ln().max(1.0)
}

/// Confidence width of `arm` for a precomputed `log N`.
fn width(log: &PullLog, arm: usize, log_n: f64) -> f64 {
    let n_a = log.counts[arm].max(1) as f64;
    (log_n / n_a).sqrt()
}

/// Argmax of `mean + weight * k * width`; ties go to the lowest index.
pub fn select_weighted(log: &PullLog, weight: f64, k: f64) -> usize {
    let log_n = log_total(log);
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for arm in 0..log.n_arms() {
        let score = log.mean(arm) + weight * k * width(log, arm, log_n);
        if score > best_score {
            best = arm;
            best_score = score;
        }
    }
    best
}

pub fn select_ucb(log: &PullLog, k: f64) -> usize {
    select_weighted(log, 1.0, k)
}

pub fn select_lcb(log: &PullLog, k: f64) -> usize {
    select_weighted(log, -1.0, k)
}

/// Thompson sampling: one draw per arm, play the argmax.
pub fn select_ts<R: Rng + ?Sized>(post: &BetaPosterior, rng: &mut R) -> usize {
    crate::stats::argmax(&post.sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchKind {
    /// `k_t = min(A t / T - 1, 1)`.
    Soft,
    /// `k_t = 2 * 1{t >= T / B} - 1`.
    Hard,
}

/// Confidence weight schedule moving from LCB (-1) to UCB (+1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchSchedule {
    pub kind: SwitchKind,
    pub param: f64,
    pub horizon: u64,
}

impl SwitchSchedule {
    pub fn new(kind: SwitchKind, param: f64, horizon: u64) -> Result<Self> {
        if !(param > 0.0 && param.is_finite()) {
            return Err(invalid(format!("switch parameter must be positive, got {param}")));
        }
        if horizon == 0 {
            return Err(invalid("switch horizon must be positive"));
        }
        Ok(Self {
            kind,
            param,
            horizon,
        })
    }

    pub fn weight(&self, t: u64) -> f64 {
        let t = t as f64;
        let horizon = self.horizon as f64;
        match self.kind {
            SwitchKind::Soft => (self.param * t / horizon - 1.0).min(1.0),
            SwitchKind::Hard => {
                if t >= horizon / self.param {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    }
}

pub fn select_switch(log: &PullLog, schedule: &SwitchSchedule, t: u64, k: f64) -> usize {
    select_weighted(log, schedule.weight(t), k)
}
