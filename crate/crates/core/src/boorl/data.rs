//! Offline transition datasets and bootstrap masks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grid::{Gridworld, N_ACTIONS};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
    pub done: bool,
}

/// Collects `n` transitions from repeated episodes of an epsilon-greedy
/// version of the optimal policy. Episodes restart at the start state after
/// the goal or `H` steps; only goal arrivals are marked `done`.
pub fn collect_behavior_dataset<R: Rng + ?Sized>(
    grid: &Gridworld,
    n: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<Vec<Record>> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(invalid("behavior epsilon must lie in [0, 1]"));
    }
    let optimal = grid.optimal_actions();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut s = grid.start();
        for h in 0..grid.horizon() {
            if out.len() == n {
                break;
            }
            let a = if rng.random::<f64>() < epsilon {
                rng.random_range(0..N_ACTIONS)
            } else {
                optimal[h][s]
            };
            let (r, s_next, done) = grid.step(s, a, rng);
            out.push(Record { s, a, r, s_next, done });
            if done {
                break;
            }
            s = s_next;
        }
    }
    Ok(out)
}

pub fn dataset_to_csv(records: &[Record]) -> String {
    let mut out = String::from("s,a,r,s_next,done\n");
    for t in records {
        out.push_str(&format!("{},{},{},{},{}\n", t.s, t.a, t.r, t.s_next, u8::from(t.done)));
    }
    out
}

pub fn dataset_from_csv(text: &str) -> Result<Vec<Record>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("s,a,r,s_next,done") {
        return Err(invalid("dataset CSV must start with the header s,a,r,s_next,done"));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.trim().split(',').collect();
            let bad = || invalid(format!("malformed dataset row {}: {line:?}", i + 2));
            if f.len() != 5 {
                return Err(bad());
            }
            Ok(Record {
                s: f[0].parse().map_err(|_| bad())?,
                a: f[1].parse().map_err(|_| bad())?,
                r: f[2].parse().map_err(|_| bad())?,
                s_next: f[3].parse().map_err(|_| bad())?,
                done: match f[4] {
                    "0" | "false" => false,
                    "1" | "true" => true,
                    _ => return Err(bad()),
                },
            })
        })
        .collect()
}

/// Dataset plus one Bernoulli(`p`) inclusion mask per ensemble member.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedDataset {
    pub transitions: Vec<Record>,
    pub masks: Vec<Vec<bool>>,
    pub mask_ratio: f64,
}

impl MaskedDataset {
    pub fn n_members(&self) -> usize {
        self.masks.len()
    }

    pub fn member_records(&self, member: usize) -> impl Iterator<Item = &Record> {
        self.transitions
            .iter()
            .zip(&self.masks[member])
            .filter_map(|(t, &m)| m.then_some(t))
    }

    pub fn mask_mean(&self, member: usize) -> f64 {
        let row = &self.masks[member];
        row.iter().filter(|&&m| m).count() as f64 / row.len() as f64
    }
}

pub fn build_masked_dataset<R: Rng + ?Sized>(
    dataset: Vec<Record>,
    members: usize,
    p: f64,
    rng: &mut R,
) -> Result<MaskedDataset> {
    if dataset.is_empty() {
        return Err(invalid("cannot mask an empty dataset"));
    }
    if members == 0 {
        return Err(invalid("ensemble needs at least one member"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("mask ratio must lie in (0, 1], got {p}")));
    }
    let masks = (0..members)
        .map(|_| dataset.iter().map(|_| p >= 1.0 || rng.random::<f64>() < p).collect())
        .collect();
    Ok(MaskedDataset {
        transitions: dataset,
        masks,
        mask_ratio: p,
    })
}
