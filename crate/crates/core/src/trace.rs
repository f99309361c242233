use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Per-step instantaneous and cumulative regret of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub instantaneous: Vec<f64>,
    pub cumulative: Vec<f64>,
    pub seed: u64,
    pub agent_tag: String,
}

impl RegretTrace {
    pub fn new(seed: u64, agent_tag: impl Into<String>) -> Self {
        Self {
            instantaneous: Vec::new(),
            cumulative: Vec::new(),
            seed,
            agent_tag: agent_tag.into(),
        }
    }

    pub fn with_capacity(seed: u64, agent_tag: impl Into<String>, n: usize) -> Self {
        Self {
            instantaneous: Vec::with_capacity(n),
            cumulative: Vec::with_capacity(n),
            seed,
            agent_tag: agent_tag.into(),
        }
    }

    pub fn push(&mut self, regret: f64) {
        let prev = self.cumulative.last().copied().unwrap_or(0.0);
        self.instantaneous.push(regret);
        self.cumulative.push(prev + regret);
    }

    pub fn len(&self) -> usize {
        self.instantaneous.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instantaneous.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Cumulative regret after `step` steps (1-based); 0 for step 0.
    pub fn cumulative_at(&self, step: usize) -> f64 {
        if step == 0 {
            0.0
        } else {
            self.cumulative[step - 1]
        }
    }

    /// CSV with header `step,instantaneous,cumulative`, steps 1-based.
    ///
    /// With `steps = Some(..)` only the listed (1-based) steps are written.
    pub fn to_csv(&self, steps: Option<&[usize]>) -> String {
        let mut out = String::from("step,instantaneous,cumulative\n");
        let mut row = |i: usize| {
            let _ = writeln!(
                out,
                "{},{},{}",
                i + 1,
                self.instantaneous[i],
                self.cumulative[i]
            );
        };
        match steps {
            Some(steps) => steps.iter().for_each(|&s| row(s - 1)),
            None => (0..self.len()).for_each(row),
        }
        out
    }
}

/// Parsed rows of a trace CSV: `(step, instantaneous, cumulative)`.
pub fn parse_trace_csv(text: &str) -> Result<Vec<(usize, f64, f64)>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some("step,instantaneous,cumulative") => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let mut it = line.split(',');
            let step = it.next().and_then(|s| s.parse().ok());
            let inst = it.next().and_then(|s| s.parse().ok());
            let cum = it.next().and_then(|s| s.parse().ok());
            match (step, inst, cum) {
                (Some(a), Some(b), Some(c)) => Ok((a, b, c)),
                _ => Err(format!("malformed row {line:?}")),
            }
        })
        .collect()
}
