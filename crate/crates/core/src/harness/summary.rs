//! Checkpoint grids and across-seed summaries of cumulative curves.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::stats::{mean, sample_std};

pub const N_CHECKPOINTS: usize = 50;

/// `min(50, len)` distinct 1-based steps in `[1, len]`, log-spaced where
/// rounding allows, always starting at 1 and ending at `len`.
pub fn checkpoints(len: usize) -> Vec<usize> {
    let n = N_CHECKPOINTS.min(len);
    let mut out: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        let x = if n == 1 {
            len
        } else {
            (len as f64).powf(i as f64 / (n - 1) as f64).round() as usize
        };
        let floor = out.last().map_or(1, |&p| p + 1);
        out.push(x.max(floor).min(len - (n - 1 - i)));
    }
    out
}

/// One seed's cumulative curve sampled at `steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub agent: String,
    pub seed: u64,
    pub steps: Vec<usize>,
    pub values: Vec<f64>,
}

/// Mean and sample standard deviation over seeds at each step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub agent: String,
    pub n_runs: usize,
    pub steps: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Aggregates curves agent by agent, keeping first-appearance order.
/// Curves of one agent must share their step grid.
pub fn summarize(curves: &[Curve]) -> Result<Vec<AgentSummary>> {
    if curves.is_empty() {
        return Err(invalid("nothing to summarize"));
    }
    let mut agents: Vec<&str> = Vec::new();
    for c in curves {
        if !agents.contains(&c.agent.as_str()) {
            agents.push(&c.agent);
        }
        if c.steps.len() != c.values.len() {
            return Err(invalid(format!("curve {} seed {} has ragged columns", c.agent, c.seed)));
        }
    }
    agents
        .into_iter()
        .map(|agent| {
            let group: Vec<&Curve> = curves.iter().filter(|c| c.agent == agent).collect();
            let steps = group[0].steps.clone();
            if group.iter().any(|c| c.steps != steps) {
                return Err(invalid(format!("curves of {agent} are misaligned")));
            }
            let mut m = Vec::with_capacity(steps.len());
            let mut s = Vec::with_capacity(steps.len());
            for i in 0..steps.len() {
                let column: Vec<f64> = group.iter().map(|c| c.values[i]).collect();
                m.push(mean(&column));
                s.push(sample_std(&column));
            }
            Ok(AgentSummary {
                agent: agent.to_string(),
                n_runs: group.len(),
                steps,
                mean: m,
                std: s,
            })
        })
        .collect()
}

pub fn summary_csv(summary: &[AgentSummary]) -> String {
    let mut out = String::from("agent,step,mean,std\n");
    for a in summary {
        for i in 0..a.steps.len() {
            out.push_str(&format!("{},{},{},{}\n", a.agent, a.steps[i], a.mean[i], a.std[i]));
        }
    }
    out
}
