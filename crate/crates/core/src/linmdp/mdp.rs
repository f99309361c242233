use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

const TOL: f64 = 1e-9;

/// Finite-horizon linear MDP over finite state and action sets.
///
/// `P_h(. | s, a) = <phi(s, a), mu_h(.)>` and `r_h(s, a) = <phi(s, a), theta_h>`.
/// Steps are 0-based internally (`h` in `0..horizon`). Rewards are
/// deterministic given `(h, s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMdp {
    d: usize,
    horizon: usize,
    n_states: usize,
    n_actions: usize,
    initial_state: usize,
    features: Vec<DVector<f64>>,
    mu: Vec<DMatrix<f64>>,
    theta: Vec<DVector<f64>>,
    // [h][sa][s'] and [h][sa], derived from the linear parameters.
    p_table: Vec<Vec<Vec<f64>>>,
    r_table: Vec<Vec<f64>>,
}

impl LinearMdp {
    /// `features` are indexed by `s * n_actions + a`; `mu[h]` is `d x n_states`.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        features: Vec<DVector<f64>>,
        mu: Vec<DMatrix<f64>>,
        theta: Vec<DVector<f64>>,
        initial_state: usize,
    ) -> Result<Self> {
        let bad = |m: String| Err(LabError::InvalidModel(m));
        if n_states == 0 || n_actions == 0 {
            return bad("empty state or action set".into());
        }
        if features.len() != n_states * n_actions {
            return bad(format!(
                "expected {} feature vectors, got {}",
                n_states * n_actions,
                features.len()
            ));
        }
        let d = features[0].len();
        if d == 0 {
            return bad("feature dimension must be positive".into());
        }
        let horizon = mu.len();
        if horizon == 0 || theta.len() != horizon {
            return bad("need one transition measure and one reward vector per step".into());
        }
        if initial_state >= n_states {
            return bad(format!("initial state {initial_state} out of range"));
        }
        let sqrt_d = (d as f64).sqrt();
        for (i, phi) in features.iter().enumerate() {
            if phi.len() != d {
                return bad(format!("feature {i} has length {}, expected {d}", phi.len()));
            }
            if phi.norm() > 1.0 + TOL {
                return bad(format!("feature {i} has norm {} > 1", phi.norm()));
            }
        }
        let mut p_table = Vec::with_capacity(horizon);
        let mut r_table = Vec::with_capacity(horizon);
        for h in 0..horizon {
            if mu[h].nrows() != d || mu[h].ncols() != n_states {
                return bad(format!("mu[{h}] must be {d} x {n_states}"));
            }
            if theta[h].len() != d {
                return bad(format!("theta[{h}] must have length {d}"));
            }
            let mass: DVector<f64> = mu[h].column_sum();
            if mass.norm() > sqrt_d + TOL {
                return bad(format!("||mu_{h}(S)|| = {} exceeds sqrt(d)", mass.norm()));
            }
            if theta[h].norm() > sqrt_d + TOL {
                return bad(format!("||theta_{h}|| = {} exceeds sqrt(d)", theta[h].norm()));
            }
            let mut ph = Vec::with_capacity(features.len());
            let mut rh = Vec::with_capacity(features.len());
            for (sa, phi) in features.iter().enumerate() {
                let row: Vec<f64> = (0..n_states).map(|s| phi.dot(&mu[h].column(s))).collect();
                if row.iter().any(|&p| p < -TOL) {
                    return bad(format!("negative transition probability at h={h}, sa={sa}"));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > TOL {
                    return bad(format!("transition row h={h}, sa={sa} sums to {total}"));
                }
                let r = phi.dot(&theta[h]);
                if !(-TOL..=1.0 + TOL).contains(&r) {
                    return bad(format!("reward {r} outside [0, 1] at h={h}, sa={sa}"));
                }
                ph.push(row.into_iter().map(|p| p.max(0.0)).collect());
                rh.push(r.clamp(0.0, 1.0));
            }
            p_table.push(ph);
            r_table.push(rh);
        }
        Ok(Self {
            d,
            horizon,
            n_states,
            n_actions,
            initial_state,
            features,
            mu,
            theta,
            p_table,
            r_table,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn sa(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    pub fn phi(&self, s: usize, a: usize) -> &DVector<f64> {
        &self.features[self.sa(s, a)]
    }

    pub fn features(&self) -> &[DVector<f64>] {
        &self.features
    }

    pub fn mu(&self, h: usize) -> &DMatrix<f64> {
        &self.mu[h]
    }

    pub fn theta(&self, h: usize) -> &DVector<f64> {
        &self.theta[h]
    }

    pub fn transition(&self, h: usize, s: usize, a: usize) -> &[f64] {
        &self.p_table[h][self.sa(s, a)]
    }

    pub fn reward(&self, h: usize, s: usize, a: usize) -> f64 {
        self.r_table[h][self.sa(s, a)]
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, h: usize, s: usize, a: usize, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let row = self.transition(h, s, a);
        let mut acc = 0.0;
        for (s2, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return s2;
            }
        }
        // Rounding leaves u >= acc only at the very top; return the last
        // reachable state.
        row.iter().rposition(|&p| p > 0.0).unwrap_or(self.n_states - 1)
    }

    pub fn to_doc(&self) -> LinearMdpDoc {
        LinearMdpDoc {
            d: self.d,
            horizon: self.horizon,
            states: self.n_states,
            actions: self.n_actions,
            initial_state: self.initial_state,
            features: self.features.iter().flat_map(|f| f.iter().copied()).collect(),
            transitions: self
                .mu
                .iter()
                .map(|m| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
                .collect(),
            rewards: self.theta.iter().map(|t| t.iter().copied().collect()).collect(),
        }
    }

    pub fn from_doc(doc: &LinearMdpDoc) -> Result<Self> {
        let n_sa = doc.states * doc.actions;
        if doc.features.len() != n_sa * doc.d {
            return Err(LabError::InvalidModel(format!(
                "features must hold {} values (row-major, {} rows of length {})",
                n_sa * doc.d,
                n_sa,
                doc.d
            )));
        }
        let features = doc
            .features
            .chunks(doc.d)
            .map(DVector::from_column_slice)
            .collect();
        let mut mu = Vec::with_capacity(doc.transitions.len());
        for (h, rows) in doc.transitions.iter().enumerate() {
            if rows.len() != doc.d || rows.iter().any(|r| r.len() != doc.states) {
                return Err(LabError::InvalidModel(format!(
                    "transitions[{h}] must be {} x {}",
                    doc.d, doc.states
                )));
            }
            mu.push(DMatrix::from_fn(doc.d, doc.states, |i, j| rows[i][j]));
        }
        let theta = doc.rewards.iter().map(|r| DVector::from_column_slice(r)).collect();
        let mdp = Self::new(doc.states, doc.actions, features, mu, theta, doc.initial_state)?;
        if mdp.d != doc.d || mdp.horizon != doc.horizon {
            return Err(LabError::InvalidModel("declared d or H disagrees with the data".into()));
        }
        Ok(mdp)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("plain numbers serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LinearMdpDoc = serde_json::from_str(text)?;
        Self::from_doc(&doc)
    }
}

/// JSON layout of a [`LinearMdp`].
///
/// `features` is row-major with one row of length `d` per `(s, a)` pair in
/// `s * actions + a` order; `transitions[h]` is the `d x states` matrix of
/// `mu_h`; `rewards[h]` is `theta_h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearMdpDoc {
    pub d: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
    pub states: usize,
    pub actions: usize,
    #[serde(default)]
    pub initial_state: usize,
    pub features: Vec<f64>,
    pub transitions: Vec<Vec<Vec<f64>>>,
    pub rewards: Vec<Vec<f64>>,
}

/// Embeds a tabular MDP as a linear MDP with one-hot features, `d = |S||A|`.
///
/// `transitions[h][s * n_actions + a][s']` and `rewards[h][s * n_actions + a]`.
pub fn make_tabular_linear(
    n_states: usize,
    n_actions: usize,
    transitions: &[Vec<Vec<f64>>],
    rewards: &[Vec<f64>],
) -> Result<LinearMdp> {
    let d = n_states * n_actions;
    if transitions.len() != rewards.len() {
        return Err(LabError::InvalidModel("one transition and reward table per step".into()));
    }
    let mut mu = Vec::with_capacity(transitions.len());
    let mut theta = Vec::with_capacity(rewards.len());
    for (h, (tab, rew)) in transitions.iter().zip(rewards).enumerate() {
        if tab.len() != d || tab.iter().any(|row| row.len() != n_states) || rew.len() != d {
            return Err(LabError::InvalidModel(format!("step {h} tables have the wrong shape")));
        }
        for (sa, row) in tab.iter().enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > TOL {
                return Err(LabError::InvalidModel(format!(
                    "row h={h}, sa={sa} is not a probability distribution"
                )));
            }
        }
        mu.push(DMatrix::from_fn(d, n_states, |j, s| tab[j][s]));
        theta.push(DVector::from_column_slice(rew));
    }
    let features = (0..d)
        .map(|j| {
            let mut e = DVector::zeros(d);
            e[j] = 1.0;
            e
        })
        .collect();
    LinearMdp::new(n_states, n_actions, features, mu, theta, 0)
}

/// Random tabular MDP: exponential-normalized transition rows and uniform
/// rewards, the same tables at every step unless `vary_by_step`.
pub fn random_tabular<R: Rng + ?Sized>(
    n_states: usize,
    n_actions: usize,
    horizon: usize,
    vary_by_step: bool,
    rng: &mut R,
) -> Result<LinearMdp> {
    let d = n_states * n_actions;
    let draw = |rng: &mut R| {
        let tab: Vec<Vec<f64>> = (0..d)
            .map(|_| {
                let w: Vec<f64> = (0..n_states).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
                let total: f64 = w.iter().sum();
                w.into_iter().map(|x| x / total).collect()
            })
            .collect();
        let rew: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        (tab, rew)
    };
    let mut transitions = Vec::with_capacity(horizon);
    let mut rewards = Vec::with_capacity(horizon);
    let first = draw(rng);
    for h in 0..horizon {
        let (t, r) = if vary_by_step && h > 0 { draw(rng) } else { first.clone() };
        transitions.push(t);
        rewards.push(r);
    }
    // Renormalize against rounding so rows sum to 1 within tolerance.
    make_tabular_linear(n_states, n_actions, &transitions, &rewards)
}
