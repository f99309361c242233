//! Exact dynamic programming on a known [`LinearMdp`].

use nalgebra::DVector;

use super::LinearMdp;
use crate::stats::argmax;

/// Deterministic time-dependent policy, `actions[h][s]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub actions: Vec<Vec<usize>>,
}

impl Policy {
    pub fn action(&self, h: usize, s: usize) -> usize {
        self.actions[h][s]
    }
}

/// Optimal action values `q[h][sa]` and state values `v[h][s]`, with
/// `v[H] = 0`.
#[derive(Debug, Clone)]
pub struct Solution {
    pub q: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub policy: Policy,
}

fn backup(mdp: &LinearMdp, h: usize, s: usize, a: usize, v_next: &[f64]) -> f64 {
    let row = mdp.transition(h, s, a);
    mdp.reward(h, s, a) + row.iter().zip(v_next).map(|(p, v)| p * v).sum::<f64>()
}

pub fn solve(mdp: &LinearMdp) -> Solution {
    let (hz, ns, na) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
    let mut v = vec![vec![0.0; ns]; hz + 1];
    let mut q = vec![vec![0.0; ns * na]; hz];
    let mut actions = vec![vec![0; ns]; hz];
    for h in (0..hz).rev() {
        for s in 0..ns {
            let qs: Vec<f64> = (0..na).map(|a| backup(mdp, h, s, a, &v[h + 1])).collect();
            let best = argmax(&qs);
            actions[h][s] = best;
            v[h][s] = qs[best];
            q[h][s * na..(s + 1) * na].copy_from_slice(&qs);
        }
    }
    Solution {
        q,
        v,
        policy: Policy { actions },
    }
}

/// `v[h][s]` of a deterministic policy, `v[H] = 0`.
pub fn evaluate(mdp: &LinearMdp, policy: &Policy) -> Vec<Vec<f64>> {
    let (hz, ns) = (mdp.horizon(), mdp.n_states());
    let mut v = vec![vec![0.0; ns]; hz + 1];
    for h in (0..hz).rev() {
        for s in 0..ns {
            let a = policy.action(h, s);
            v[h][s] = backup(mdp, h, s, a, &v[h + 1]);
        }
    }
    v
}

/// Suboptimality `V*_1(s_1) - V^pi_1(s_1)` from the initial state.
pub fn regret_of(mdp: &LinearMdp, optimal_value: f64, policy: &Policy) -> f64 {
    let v = evaluate(mdp, policy);
    (optimal_value - v[0][mdp.initial_state()]).max(0.0)
}

/// State-action occupancy `d_h(sa)` of a deterministic policy started at
/// the initial state.
pub fn visitation(mdp: &LinearMdp, policy: &Policy) -> Vec<Vec<f64>> {
    let (hz, ns, na) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
    let mut state_dist = vec![0.0; ns];
    state_dist[mdp.initial_state()] = 1.0;
    let mut out = Vec::with_capacity(hz);
    for h in 0..hz {
        let mut occ = vec![0.0; ns * na];
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            if state_dist[s] == 0.0 {
                continue;
            }
            let a = policy.action(h, s);
            occ[mdp.sa(s, a)] += state_dist[s];
            for (s2, p) in mdp.transition(h, s, a).iter().enumerate() {
                next[s2] += state_dist[s] * p;
            }
        }
        out.push(occ);
        state_dist = next;
    }
    out
}

/// Weights with `Q*_h(s, a) = <w_h, phi(s, a)>`: `w_h = theta_h + mu_h V*_{h+1}`.
pub fn optimal_weights(mdp: &LinearMdp) -> Vec<DVector<f64>> {
    let sol = solve(mdp);
    (0..mdp.horizon())
        .map(|h| mdp.theta(h) + mdp.mu(h) * DVector::from_column_slice(&sol.v[h + 1]))
        .collect()
}

/// Greedy policy of `Q_h(s, a) = <w_h, phi(s, a)>`.
pub fn greedy_from_weights(mdp: &LinearMdp, weights: &[DVector<f64>]) -> Policy {
    let actions = (0..mdp.horizon())
        .map(|h| {
            (0..mdp.n_states())
                .map(|s| {
                    let qs: Vec<f64> =
                        (0..mdp.n_actions()).map(|a| weights[h].dot(mdp.phi(s, a))).collect();
                    argmax(&qs)
                })
                .collect()
        })
        .collect();
    Policy { actions }
}

/// Greedy policy of an action-value table `q[h][sa]`.
pub fn greedy_from_table(mdp: &LinearMdp, q: &[Vec<f64>]) -> Policy {
    let na = mdp.n_actions();
    let actions = q
        .iter()
        .map(|qh| (0..mdp.n_states()).map(|s| argmax(&qh[s * na..(s + 1) * na])).collect())
        .collect();
    Policy { actions }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmdp::{make_tabular_linear, random_tabular};
    use crate::rng::seeded;

    #[test]
    fn optimal_weights_reproduce_q_star() {
        let mdp = random_tabular(4, 2, 3, true, &mut seeded(2)).unwrap();
        let sol = solve(&mdp);
        let w = optimal_weights(&mdp);
        for h in 0..3 {
            for s in 0..4 {
                for a in 0..2 {
                    let lin = w[h].dot(mdp.phi(s, a));
                    assert!((lin - sol.q[h][mdp.sa(s, a)]).abs() < 1e-12);
                }
            }
        }
        assert_eq!(greedy_from_weights(&mdp, &w), sol.policy);
        assert_eq!(regret_of(&mdp, sol.v[0][0], &sol.policy), 0.0);
    }

    #[test]
    fn visitation_is_a_distribution_per_step() {
        let mdp = random_tabular(5, 3, 4, true, &mut seeded(8)).unwrap();
        let sol = solve(&mdp);
        for occ in visitation(&mdp, &sol.policy) {
            assert!((occ.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn brute_force_policy_enumeration_agrees() {
        // 2 states, 2 actions, H = 2: enumerate all 2^(2*2) policies.
        let mdp = random_tabular(2, 2, 2, true, &mut seeded(5)).unwrap();
        let sol = solve(&mdp);
        let mut best = f64::NEG_INFINITY;
        for code in 0..16usize {
            let actions = vec![
                vec![code & 1, (code >> 1) & 1],
                vec![(code >> 2) & 1, (code >> 3) & 1],
            ];
            let v = evaluate(&mdp, &Policy { actions });
            best = best.max(v[0][0]);
        }
        assert!((best - sol.v[0][0]).abs() < 1e-12);
    }

    #[test]
    fn deterministic_chain_value() {
        let tab = vec![vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]];
        let rew = vec![0.0, 1.0, 0.5, 0.5];
        let mdp = make_tabular_linear(2, 2, &[tab.clone(), tab], &[rew.clone(), rew]).unwrap();
        let sol = solve(&mdp);
        assert_eq!(sol.v[0][0], 1.5);
        assert_eq!(sol.policy.action(0, 0), 1);
    }
}
