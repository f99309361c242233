//! Ensemble members: tabular critic plus behavior-regularized actor.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::{MaskedDataset, Record};
use super::grid::N_ACTIONS;
use crate::error::{invalid, Result};
use crate::stats::argmax;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleMember {
    pub member_id: usize,
    /// `q[s][a]`, kept in `[0, H]`.
    pub q: Vec<[f64; N_ACTIONS]>,
    /// Actions the member picks uniformly among at each state; a single
    /// entry for a greedy choice.
    pub policy: Vec<Vec<usize>>,
    /// States where the member's masked data held no record.
    pub unsupported: Vec<usize>,
}

impl EnsembleMember {
    /// Member with a constant table and Q-greedy policy.
    pub fn constant(member_id: usize, n_states: usize, value: f64) -> Self {
        let mut m = Self {
            member_id,
            q: vec![[value; N_ACTIONS]; n_states],
            policy: vec![Vec::new(); n_states],
            unsupported: Vec::new(),
        };
        m.make_greedy();
        m
    }

    /// `Q(s, pi(s))`, averaged over the policy's action set.
    pub fn policy_value(&self, s: usize) -> f64 {
        let acts = &self.policy[s];
        acts.iter().map(|&a| self.q[s][a]).sum::<f64>() / acts.len() as f64
    }

    pub fn action_probs(&self, s: usize) -> [f64; N_ACTIONS] {
        let mut p = [0.0; N_ACTIONS];
        let w = 1.0 / self.policy[s].len() as f64;
        for &a in &self.policy[s] {
            p[a] += w;
        }
        p
    }

    pub fn act<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> usize {
        let acts = &self.policy[s];
        if acts.len() == 1 {
            acts[0]
        } else {
            acts[rng.random_range(0..acts.len())]
        }
    }

    /// Switches to the unconstrained greedy policy of the critic.
    pub fn make_greedy(&mut self) {
        for (s, q) in self.q.iter().enumerate() {
            self.policy[s] = vec![argmax(q)];
        }
    }

    /// One clipped TD step towards `r + gamma (1 - done) max_a Q(s', a)`.
    pub fn td_update(&mut self, t: &Record, discount: f64, lr: f64, cap: f64) {
        let next = if t.done {
            0.0
        } else {
            self.q[t.s_next].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        };
        let target = (t.r + discount * next).clamp(0.0, cap);
        let q = &mut self.q[t.s][t.a];
        *q = (*q + lr * (target - *q)).clamp(0.0, cap);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfflineTrainConfig {
    /// Weight of the critic against the log behavior frequency.
    pub lambda_bc: f64,
    pub iters: usize,
    pub discount: f64,
    /// Upper clip of the table, the episode horizon.
    pub cap: f64,
}

/// Per-pair aggregates of a member's masked records.
struct Aggregate {
    count: Vec<[f64; N_ACTIONS]>,
    reward: Vec<[f64; N_ACTIONS]>,
    /// Non-terminal successors with multiplicity, per `(s, a)`.
    successors: Vec<[Vec<(usize, f64)>; N_ACTIONS]>,
}

impl Aggregate {
    fn new<'a>(n_states: usize, records: impl Iterator<Item = &'a Record>) -> Self {
        let mut agg = Self {
            count: vec![[0.0; N_ACTIONS]; n_states],
            reward: vec![[0.0; N_ACTIONS]; n_states],
            successors: (0..n_states).map(|_| Default::default()).collect(),
        };
        for t in records {
            agg.count[t.s][t.a] += 1.0;
            agg.reward[t.s][t.a] += t.r;
            if !t.done {
                let list = &mut agg.successors[t.s][t.a];
                match list.iter_mut().find(|(s, _)| *s == t.s_next) {
                    Some(entry) => entry.1 += 1.0,
                    None => list.push((t.s_next, 1.0)),
                }
            }
        }
        agg
    }
}

/// Actor choice `argmax_a lambda Q(s,a) + log(n(s,a)/n(s))` over actions
/// with masked data at `s`, lowest index on ties.
fn regularized_action(q: &[f64; N_ACTIONS], count: &[f64; N_ACTIONS], lambda_bc: f64) -> usize {
    let n_s: f64 = count.iter().sum();
    let mut best = None;
    let mut best_score = f64::NEG_INFINITY;
    for a in 0..N_ACTIONS {
        if count[a] > 0.0 {
            let score = lambda_bc * q[a] + (count[a] / n_s).ln();
            if score > best_score {
                best_score = score;
                best = Some(a);
            }
        }
    }
    best.expect("state has masked support")
}

/// Fits member `member_id` on its masked records by fitted Q iteration,
/// alternating a synchronous critic sweep with an actor update, until the
/// largest change of the table drops below `1e-6` or `iters` sweeps ran.
///
/// Pairs without masked data keep `Q = 0`. A state without any masked
/// record picks uniformly among the actions seen there in the full dataset,
/// or among all actions if none, and is listed in `unsupported`.
pub fn offline_train_member(
    member_id: usize,
    data: &MaskedDataset,
    n_states: usize,
    config: &OfflineTrainConfig,
) -> Result<EnsembleMember> {
    if !(config.lambda_bc > 0.0) {
        return Err(invalid("lambda_bc must be positive"));
    }
    if member_id >= data.n_members() {
        return Err(invalid(format!("member {member_id} has no mask row")));
    }
    if let Some(t) = data.transitions.iter().find(|t| t.s >= n_states || t.s_next >= n_states || t.a >= N_ACTIONS) {
        return Err(invalid(format!("record {t:?} is outside the state or action space")));
    }
    let agg = Aggregate::new(n_states, data.member_records(member_id));
    let full = Aggregate::new(n_states, data.transitions.iter());

    let mut unsupported = Vec::new();
    let mut policy = vec![Vec::new(); n_states];
    for s in 0..n_states {
        if agg.count[s].iter().any(|&c| c > 0.0) {
            policy[s] = vec![regularized_action(&[0.0; N_ACTIONS], &agg.count[s], config.lambda_bc)];
        } else {
            let seen: Vec<usize> = (0..N_ACTIONS).filter(|&a| full.count[s][a] > 0.0).collect();
            policy[s] = if seen.is_empty() { (0..N_ACTIONS).collect() } else { seen };
            unsupported.push(s);
        }
    }
    let mut member = EnsembleMember {
        member_id,
        q: vec![[0.0; N_ACTIONS]; n_states],
        policy,
        unsupported,
    };

    for _ in 0..config.iters {
        let v: Vec<f64> = (0..n_states).map(|s| member.policy_value(s)).collect();
        let mut residual = 0.0f64;
        for s in 0..n_states {
            for a in 0..N_ACTIONS {
                let n = agg.count[s][a];
                if n == 0.0 {
                    continue;
                }
                let future: f64 = agg.successors[s][a].iter().map(|&(s2, k)| k * v[s2]).sum();
                let target = ((agg.reward[s][a] + config.discount * future) / n).clamp(0.0, config.cap);
                residual = residual.max((target - member.q[s][a]).abs());
                member.q[s][a] = target;
            }
        }
        for s in 0..n_states {
            if !member.unsupported.contains(&s) {
                member.policy[s] = vec![regularized_action(&member.q[s], &agg.count[s], config.lambda_bc)];
            }
        }
        if residual < 1e-6 {
            break;
        }
    }
    Ok(member)
}

/// `softmax(logits / temperature)` with max subtraction.
pub fn softmax_probs(logits: &[f64], temperature: f64) -> Vec<f64> {
    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logits.iter().map(|&x| ((x - top) / temperature).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Selection probabilities `p_l` proportional to `exp(Q_l(s, pi_l(s)) / temperature)`.
pub fn selection_probs(members: &[EnsembleMember], s: usize, temperature: f64) -> Vec<f64> {
    let logits: Vec<f64> = members.iter().map(|m| m.policy_value(s)).collect();
    softmax_probs(&logits, temperature)
}

/// Samples a member index from [`selection_probs`]. A single member is
/// returned without consuming randomness.
pub fn softmax_select<R: Rng + ?Sized>(
    members: &[EnsembleMember],
    s: usize,
    temperature: f64,
    rng: &mut R,
) -> Result<usize> {
    if members.is_empty() {
        return Err(invalid("no ensemble members"));
    }
    if !(temperature > 0.0) {
        return Err(invalid("temperature must be positive"));
    }
    if members.len() == 1 {
        return Ok(0);
    }
    Ok(sample_index(&selection_probs(members, s, temperature), rng))
}

pub(crate) fn sample_index<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boorl::data::build_masked_dataset;
    use crate::boorl::grid::Gridworld;
    use crate::rng::seeded;

    fn cfg(lambda_bc: f64, discount: f64) -> OfflineTrainConfig {
        OfflineTrainConfig {
            lambda_bc,
            iters: 1000,
            discount,
            cap: 10.0,
        }
    }

    fn rec(s: usize, a: usize, s_next: usize, goal: bool) -> Record {
        Record {
            s,
            a,
            r: if goal { 1.0 } else { 0.0 },
            s_next,
            done: goal,
        }
    }

    /// Corridor `S . G`: states 0, 1, 2 and action 3 moves right.
    fn corridor() -> Gridworld {
        Gridworld::parse("S.G", 4, 0.0).unwrap()
    }

    #[test]
    fn large_lambda_follows_the_critic() {
        let g = corridor();
        // Behavior mostly pushes left (action 2), rarely right.
        let mut data = Vec::new();
        for _ in 0..9 {
            data.push(rec(0, 2, 0, false));
            data.push(rec(1, 2, 0, false));
        }
        data.push(rec(0, 3, 1, false));
        data.push(rec(1, 3, 2, true));
        let masked = build_masked_dataset(data, 1, 1.0, &mut seeded(0)).unwrap();
        let greedy = offline_train_member(0, &masked, g.n_states(), &cfg(100.0, 0.9)).unwrap();
        assert_eq!(greedy.policy[0], vec![3]);
        assert_eq!(greedy.policy[1], vec![3]);
        assert!((greedy.q[0][3] - 0.9).abs() < 1e-9);
        // Small lambda is dominated by the log behavior frequency.
        let cloned = offline_train_member(0, &masked, g.n_states(), &cfg(0.01, 0.9)).unwrap();
        assert_eq!(cloned.policy[0], vec![2]);
        assert_eq!(cloned.policy[1], vec![2]);
    }

    #[test]
    fn optimal_data_reaches_goal_with_unit_value() {
        let g = corridor();
        let data = vec![rec(0, 3, 1, false), rec(1, 3, 2, true)];
        let masked = build_masked_dataset(data, 1, 1.0, &mut seeded(0)).unwrap();
        let m = offline_train_member(0, &masked, g.n_states(), &cfg(0.1, 1.0)).unwrap();
        assert_eq!(m.policy[0], vec![3]);
        assert_eq!(m.q[0][3], 1.0);
        assert_eq!(m.unsupported, vec![2]);
        let probs: Vec<[f64; N_ACTIONS]> = (0..3).map(|s| m.action_probs(s)).collect();
        assert_eq!(g.evaluate(&probs), 1.0);
        // Discounting shortens the value by one factor per extra step.
        let d = offline_train_member(0, &masked, g.n_states(), &cfg(0.1, 0.9)).unwrap();
        assert!((d.q[0][3] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn never_selects_unmasked_actions() {
        let g = Gridworld::parse(crate::boorl::GRIDWORLD_5X5, 20, 0.1).unwrap();
        let data = crate::boorl::collect_behavior_dataset(&g, 2000, 0.3, &mut seeded(1)).unwrap();
        let masked = build_masked_dataset(data, 3, 0.9, &mut seeded(2)).unwrap();
        for l in 0..3 {
            let m = offline_train_member(l, &masked, g.n_states(), &cfg(2.5, 0.95)).unwrap();
            let mut seen = vec![[false; N_ACTIONS]; g.n_states()];
            for t in masked.member_records(l) {
                seen[t.s][t.a] = true;
            }
            for s in 0..g.n_states() {
                if !m.unsupported.contains(&s) {
                    assert!(m.policy[s].iter().all(|&a| seen[s][a]));
                }
                assert!(m.q[s].iter().all(|&q| (0.0..=10.0).contains(&q)));
            }
        }
    }

    #[test]
    fn disjoint_masks_give_distinct_tables() {
        // Two states; the members see different halves of the data.
        let data = vec![rec(0, 0, 1, true), rec(0, 1, 0, false)];
        let masked = MaskedDataset {
            transitions: data,
            masks: vec![vec![true, false], vec![false, true]],
            mask_ratio: 0.5,
        };
        let a = offline_train_member(0, &masked, 2, &cfg(1.0, 1.0)).unwrap();
        let b = offline_train_member(1, &masked, 2, &cfg(1.0, 1.0)).unwrap();
        assert_ne!(a.q, b.q);
        assert_eq!(a.q[0][0], 1.0);
        assert_eq!(b.q[0][0], 0.0);
    }

    #[test]
    fn unsupported_state_falls_back_to_dataset_support() {
        let data = vec![rec(0, 2, 1, false), rec(1, 1, 0, false)];
        let masked = MaskedDataset {
            transitions: data,
            masks: vec![vec![true, false]],
            mask_ratio: 0.5,
        };
        let m = offline_train_member(0, &masked, 3, &cfg(1.0, 1.0)).unwrap();
        assert_eq!(m.policy[1], vec![1]);
        assert_eq!(m.policy[2], vec![0, 1, 2, 3]);
        assert_eq!(m.unsupported, vec![1, 2]);
        assert!(offline_train_member(0, &masked, 3, &cfg(0.0, 1.0)).is_err());
        assert!(offline_train_member(1, &masked, 3, &cfg(1.0, 1.0)).is_err());
    }

    #[test]
    fn softmax_reference_values() {
        let p = softmax_probs(&[1.0, 0.0], 1.0);
        let e = std::f64::consts::E;
        assert!((p[0] - e / (e + 1.0)).abs() < 1e-15);
        assert!((p[0] - 0.731).abs() < 5e-4);
        let shifted = softmax_probs(&[101.0, 100.0], 1.0);
        assert!((p[0] - shifted[0]).abs() < 1e-12);
        let uniform = softmax_probs(&[0.3; 5], 1.0);
        assert!(uniform.iter().all(|&x| (x - 0.2).abs() < 1e-15));
    }

    #[test]
    fn softmax_sampling_frequency() {
        let mut a = EnsembleMember::constant(0, 1, 1.0);
        a.q[0] = [1.0; N_ACTIONS];
        let b = EnsembleMember::constant(1, 1, 0.0);
        let members = vec![a, b];
        let mut rng = seeded(4);
        let n = 100_000;
        let hits = (0..n).filter(|_| softmax_select(&members, 0, 1.0, &mut rng).unwrap() == 0).count();
        let p = std::f64::consts::E / (std::f64::consts::E + 1.0);
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 3.0 * sd);
    }

    #[test]
    fn single_member_and_bad_temperature() {
        let members = vec![EnsembleMember::constant(0, 2, 0.5)];
        assert_eq!(softmax_select(&members, 1, 1.0, &mut seeded(0)).unwrap(), 0);
        assert!(softmax_select(&members, 1, 0.0, &mut seeded(0)).is_err());
        assert!(softmax_select(&[], 0, 1.0, &mut seeded(0)).is_err());
    }

    #[test]
    fn td_update_stays_clipped() {
        let mut m = EnsembleMember::constant(0, 2, 0.0);
        m.q[1] = [50.0; N_ACTIONS];
        m.td_update(&rec(0, 0, 1, false), 1.0, 1.0, 3.0);
        assert_eq!(m.q[0][0], 3.0);
        m.td_update(&rec(0, 0, 1, true), 1.0, 0.5, 3.0);
        assert_eq!(m.q[0][0], 2.0);
    }
}
