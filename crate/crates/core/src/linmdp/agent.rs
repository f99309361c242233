//! Least-squares value iteration with UCB, LCB or Thompson-sampling value
//! estimates.

use nalgebra::{Cholesky, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dp::{self, Policy};
use super::posterior::{info_gain_factored, GaussianPosterior, LsviStats, PosteriorStep};
use super::{EpisodeBuffer, LinearMdp, Source, Transition};
use crate::error::{invalid, LabError, Result};
use crate::rng::{stream_rng, Stream};
use crate::trace::RegretTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentMode {
    Ucb,
    Lcb,
    Ts,
}

impl AgentMode {
    pub fn tag(self) -> &'static str {
        match self {
            AgentMode::Ucb => "ucb",
            AgentMode::Lcb => "lcb",
            AgentMode::Ts => "ts",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QMode {
    Mean,
    Ucb,
    Lcb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    /// Stand-in for the absolute constant in `Gamma = 2 c H d sqrt(log(4dT/delta))`.
    pub c: f64,
    pub delta: f64,
    pub mode: AgentMode,
    pub ridge: f64,
    /// Thompson draws use covariance `ts_scale^2 * Lambda^{-1}`.
    pub ts_scale: f64,
    /// Draw fresh Thompson noise before every step instead of once per episode.
    pub ts_resample_per_step: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            c: 0.1,
            delta: 0.05,
            mode: AgentMode::Ts,
            ridge: 1.0,
            ts_scale: 1.0,
            ts_resample_per_step: false,
        }
    }
}

impl AgentConfig {
    pub fn with_mode(mode: AgentMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        for (name, x) in [("c", self.c), ("ridge", self.ridge), ("ts_scale", self.ts_scale)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {x}")));
            }
        }
        Ok(())
    }

    /// `Gamma = 2 c H d sqrt(log(4 d T / delta))` with `T` floored at 2.
    pub fn gamma(&self, d: usize, horizon: usize, total_steps: u64) -> f64 {
        let t = total_steps.max(2) as f64;
        2.0 * self.c * horizon as f64 * d as f64 * (4.0 * d as f64 * t / self.delta).ln().sqrt()
    }
}

/// Value estimate `<w_hat, phi> +/- (Gamma / 2) sqrt(I)` before clipping.
pub fn q_estimate_unclipped(step: &PosteriorStep, phi: &DVector<f64>, mode: QMode, gamma: f64) -> Result<f64> {
    if gamma < 0.0 {
        return Err(invalid("Gamma must be non-negative"));
    }
    let mean = step.mean.dot(phi);
    if mode == QMode::Mean {
        return Ok(mean);
    }
    let bonus = 0.5 * gamma * info_gain_factored(phi, &step.cholesky()?).sqrt();
    Ok(match mode {
        QMode::Ucb => mean + bonus,
        QMode::Lcb => mean - bonus,
        QMode::Mean => unreachable!(),
    })
}

/// [`q_estimate_unclipped`] clipped to `[0, cap]`, where `cap = H - h + 1`
/// is the largest achievable return from step `h`.
pub fn q_estimate(step: &PosteriorStep, phi: &DVector<f64>, mode: QMode, gamma: f64, cap: f64) -> Result<f64> {
    Ok(q_estimate_unclipped(step, phi, mode, gamma)?.clamp(0.0, cap))
}

fn normal_vec<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// `mean + scale * L^{-T} z`, distributed `N(mean, scale^2 Lambda^{-1})` for
/// `Lambda = L L^T` and standard normal `z`.
fn perturb(mean: &DVector<f64>, chol: &Cholesky<f64, Dyn>, scale: f64, z: &DVector<f64>) -> DVector<f64> {
    let offset = chol
        .l_dirty()
        .tr_solve_lower_triangular(z)
        .expect("Cholesky factor has a positive diagonal");
    mean + offset * scale
}

/// One draw `w_h ~ N(w_hat_h, scale^2 Lambda_h^{-1})` per step.
pub fn ts_sample_weights<R: Rng + ?Sized>(
    posterior: &GaussianPosterior,
    scale: f64,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    if !(scale >= 0.0) {
        return Err(invalid("sampling scale must be non-negative"));
    }
    posterior
        .steps
        .iter()
        .map(|step| {
            let chol = step.cholesky().map_err(|_| LabError::NotPositiveDefinite)?;
            let z = normal_vec(step.mean.len(), rng);
            Ok(perturb(&step.mean, &chol, scale, &z))
        })
        .collect()
}

/// Result of one backward-induction pass.
#[derive(Debug, Clone)]
pub struct Plan {
    /// Clipped value estimates `q[h][sa]`.
    pub q: Vec<Vec<f64>>,
    /// Ridge means `w_hat_h` under this pass's targets.
    pub means: Vec<DVector<f64>>,
    pub policy: Policy,
}

/// Backward induction from step `H` to 1 with the given value mode.
///
/// `noise[h]`, required for Thompson mode, is the standard normal vector that
/// perturbs step `h`.
pub fn plan(
    mdp: &LinearMdp,
    stats: &mut LsviStats,
    mode: AgentMode,
    gamma: f64,
    ts_scale: f64,
    noise: Option<&[DVector<f64>]>,
) -> Plan {
    let (hz, ns, na) = (mdp.horizon(), mdp.n_states(), mdp.n_actions());
    let mut v_next = vec![0.0; ns];
    let mut q = vec![Vec::new(); hz];
    let mut means = vec![DVector::zeros(mdp.d()); hz];
    let mut actions = vec![vec![0; ns]; hz];
    for h in (0..hz).rev() {
        let mean = stats.mean(h, &v_next);
        let chol = stats.factor(h);
        let weights = match mode {
            AgentMode::Ts => {
                let z = &noise.expect("Thompson planning needs noise")[h];
                perturb(&mean, chol, ts_scale, z)
            }
            _ => mean.clone(),
        };
        let cap = (hz - h) as f64;
        let mut qh = vec![0.0; ns * na];
        let mut v = vec![0.0; ns];
        for s in 0..ns {
            let mut best = f64::NEG_INFINITY;
            for a in 0..na {
                let phi = mdp.phi(s, a);
                let mut value = weights.dot(phi);
                match mode {
                    AgentMode::Ucb => value += 0.5 * gamma * info_gain_factored(phi, chol).sqrt(),
                    AgentMode::Lcb => value -= 0.5 * gamma * info_gain_factored(phi, chol).sqrt(),
                    AgentMode::Ts => {}
                }
                let value = value.clamp(0.0, cap);
                qh[s * na + a] = value;
                if value > best {
                    best = value;
                    actions[h][s] = a;
                }
            }
            v[s] = best;
        }
        q[h] = qh;
        means[h] = mean;
        v_next = v;
    }
    Plan {
        q,
        means,
        policy: Policy { actions },
    }
}

fn draw_noise<R: Rng + ?Sized>(mdp: &LinearMdp, rng: &mut R) -> Vec<DVector<f64>> {
    (0..mdp.horizon()).map(|_| normal_vec(mdp.d(), rng)).collect()
}

/// The policy the agent commits to for one episode.
pub fn episode_policy<R: Rng + ?Sized>(
    mdp: &LinearMdp,
    stats: &mut LsviStats,
    config: &AgentConfig,
    gamma: f64,
    rng: &mut R,
) -> Policy {
    match config.mode {
        AgentMode::Ts if config.ts_resample_per_step => {
            // Step h acts on a plan built from its own fresh draw.
            let mut actions = Vec::with_capacity(mdp.horizon());
            for h in 0..mdp.horizon() {
                let noise = draw_noise(mdp, rng);
                let p = plan(mdp, stats, config.mode, gamma, config.ts_scale, Some(&noise));
                actions.push(p.policy.actions[h].clone());
            }
            Policy { actions }
        }
        AgentMode::Ts => {
            let noise = draw_noise(mdp, rng);
            plan(mdp, stats, config.mode, gamma, config.ts_scale, Some(&noise)).policy
        }
        _ => plan(mdp, stats, config.mode, gamma, config.ts_scale, None).policy,
    }
}

/// Executes `policy` for one episode on the true MDP.
pub fn rollout<R: Rng + ?Sized>(mdp: &LinearMdp, policy: &Policy, rng: &mut R) -> EpisodeBuffer {
    let mut buf = EpisodeBuffer::new(Source::Online);
    let mut s = mdp.initial_state();
    for h in 0..mdp.horizon() {
        let a = policy.action(h, s);
        let s_next = mdp.sample_next(h, s, a, rng);
        buf.push(Transition {
            h,
            s,
            a,
            r: mdp.reward(h, s, a),
            s_next,
        });
        s = s_next;
    }
    buf
}

/// Plans, acts greedily for one episode and scores the episode's policy
/// against exact dynamic programming on the true MDP.
///
/// Returns the new transitions and `V*_1(s_1) - V^pi_1(s_1)`.
pub fn run_lsvi_episode<R: Rng + ?Sized>(
    mdp: &LinearMdp,
    stats: &mut LsviStats,
    config: &AgentConfig,
    gamma: f64,
    optimal_value: f64,
    rng: &mut R,
) -> (EpisodeBuffer, f64) {
    let policy = episode_policy(mdp, stats, config, gamma, rng);
    let regret = dp::regret_of(mdp, optimal_value, &policy);
    (rollout(mdp, &policy, rng), regret)
}

/// Posterior over step weights after regressing on `offline`, with targets
/// from the configured mode's own backward induction.
pub fn warm_start_from_offline<R: Rng + ?Sized>(
    mdp: &LinearMdp,
    offline: &EpisodeBuffer,
    config: &AgentConfig,
    gamma: f64,
    rng: &mut R,
) -> Result<GaussianPosterior> {
    if offline.source != Source::Offline {
        return Err(invalid("warm start expects an offline-tagged buffer"));
    }
    offline.validate(mdp.horizon())?;
    let mut stats = LsviStats::new(mdp, config.ridge)?;
    stats.absorb_all(mdp, offline);
    let noise = draw_noise(mdp, rng);
    let p = plan(mdp, &mut stats, config.mode, gamma, config.ts_scale, Some(&noise));
    let steps = p
        .means
        .into_iter()
        .enumerate()
        .map(|(h, mean)| PosteriorStep {
            mean,
            precision: stats.precision(h),
        })
        .collect();
    Ok(GaussianPosterior {
        ridge: config.ridge,
        steps,
    })
}

/// Full online run: optional offline warm start, then `episodes` LSVI
/// episodes. The trace holds per-episode regret.
pub fn run_lsvi(
    mdp: &LinearMdp,
    offline: Option<&EpisodeBuffer>,
    config: &AgentConfig,
    episodes: u64,
    seed: u64,
) -> Result<RegretTrace> {
    config.validate()?;
    let mut stats = LsviStats::new(mdp, config.ridge)?;
    if let Some(buf) = offline {
        buf.validate(mdp.horizon())?;
        stats.absorb_all(mdp, buf);
    }
    let gamma = config.gamma(mdp.d(), mdp.horizon(), episodes * mdp.horizon() as u64);
    let optimal = dp::solve(mdp).v[0][mdp.initial_state()];
    let mut rng = stream_rng(seed, Stream::Agent);
    let mut trace = RegretTrace::with_capacity(seed, config.mode.tag(), episodes as usize);
    for _ in 0..episodes {
        let (delta_buf, regret) = run_lsvi_episode(mdp, &mut stats, config, gamma, optimal, &mut rng);
        stats.absorb_all(mdp, &delta_buf);
        trace.push(regret);
    }
    Ok(trace)
}

/// `n` transitions from episodes of the optimal policy, tagged offline.
pub fn expert_buffer<R: Rng + ?Sized>(mdp: &LinearMdp, n: usize, rng: &mut R) -> EpisodeBuffer {
    let policy = dp::solve(mdp).policy;
    let mut buf = EpisodeBuffer::new(Source::Offline);
    while buf.len() < n {
        let ep = rollout(mdp, &policy, rng);
        buf.transitions.extend(ep.transitions.into_iter().take(n - buf.len()));
    }
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmdp::{make_tabular_linear, random_tabular};
    use crate::rng::seeded;
    use nalgebra::DMatrix;

    fn deterministic_mdp() -> LinearMdp {
        // 3 states, 2 actions, H = 3. Action 1 advances, action 0 stays.
        let tab = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0],
        ];
        let rew = vec![0.1, 0.0, 0.2, 0.0, 1.0, 0.5];
        make_tabular_linear(3, 2, &vec![tab; 3], &vec![rew; 3]).unwrap()
    }

    #[test]
    fn config_validation_and_gamma() {
        assert!(AgentConfig::default().validate().is_ok());
        let bad = AgentConfig {
            delta: 1.0,
            ..AgentConfig::default()
        };
        assert!(bad.validate().is_err());
        let cfg = AgentConfig {
            c: 1.0,
            ..AgentConfig::default()
        };
        let g = cfg.gamma(4, 2, 100);
        assert!((g - 2.0 * 2.0 * 4.0 * (4.0f64 * 4.0 * 100.0 / 0.05).ln().sqrt()).abs() < 1e-12);
        assert_eq!(cfg.gamma(4, 2, 0), cfg.gamma(4, 2, 2));
    }

    #[test]
    fn zero_gamma_collapses_modes() {
        let step = PosteriorStep {
            mean: DVector::from_vec(vec![0.3, 0.7]),
            precision: DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 3.0]),
        };
        let phi = DVector::from_vec(vec![0.6, 0.8]);
        let m = q_estimate(&step, &phi, QMode::Mean, 0.0, 10.0).unwrap();
        assert_eq!(q_estimate(&step, &phi, QMode::Ucb, 0.0, 10.0).unwrap(), m);
        assert_eq!(q_estimate(&step, &phi, QMode::Lcb, 0.0, 10.0).unwrap(), m);
        assert!(q_estimate(&step, &phi, QMode::Ucb, -1.0, 10.0).is_err());
    }

    #[test]
    fn bonus_width_and_ordering() {
        let step = PosteriorStep {
            mean: DVector::from_vec(vec![0.3, 0.7]),
            precision: DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 3.0]),
        };
        let phi = DVector::from_vec(vec![0.6, 0.8]);
        let gamma = 1.7;
        let up = q_estimate_unclipped(&step, &phi, QMode::Ucb, gamma).unwrap();
        let mid = q_estimate_unclipped(&step, &phi, QMode::Mean, gamma).unwrap();
        let lo = q_estimate_unclipped(&step, &phi, QMode::Lcb, gamma).unwrap();
        let ig = crate::linmdp::info_gain(&phi, &step.precision).unwrap();
        assert!(lo < mid && mid < up);
        assert!((up - lo - gamma * ig.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn prior_bonus_plug_in() {
        let ridge = 2.0;
        let step = PosteriorStep::prior(4, ridge);
        let mut phi = DVector::zeros(4);
        phi[2] = 1.0;
        let cfg = AgentConfig {
            c: 1.0,
            ridge,
            ..AgentConfig::default()
        };
        let gamma = cfg.gamma(4, 3, 300);
        let up = q_estimate_unclipped(&step, &phi, QMode::Ucb, gamma).unwrap();
        let expected = 0.5 * gamma * (0.5 * (1.0 + 1.0 / ridge).ln()).sqrt();
        assert!((up - expected).abs() < 1e-12);
    }

    #[test]
    fn ts_samples_collapse_and_repeat() {
        let mut post = GaussianPosterior::prior(3, 2, 1.0);
        post.steps[0].mean = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let tiny = ts_sample_weights(&post, 1e-12, &mut seeded(0)).unwrap();
        assert!((&tiny[0] - &post.steps[0].mean).norm() < 1e-10);
        let a = ts_sample_weights(&post, 1.0, &mut seeded(4)).unwrap();
        let b = ts_sample_weights(&post, 1.0, &mut seeded(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ts_sample_covariance_is_identity() {
        let post = GaussianPosterior::prior(3, 1, 1.0);
        let mut rng = seeded(9);
        let n = 10_000;
        let mut cov = DMatrix::<f64>::zeros(3, 3);
        for _ in 0..n {
            let w = &ts_sample_weights(&post, 1.0, &mut rng).unwrap()[0];
            cov.ger(1.0 / n as f64, w, w, 1.0);
        }
        // Wishart fluctuation of an entry: sd = sqrt((1 + [i == j]) / n).
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                let sd = ((1.0 + target) / n as f64).sqrt();
                assert!((cov[(i, j)] - target).abs() < 3.0 * sd, "cov[{i},{j}] = {}", cov[(i, j)]);
            }
        }
    }

    #[test]
    fn ts_sample_covariance_matches_inverse_precision() {
        let mut post = GaussianPosterior::prior(2, 1, 1.0);
        post.steps[0].precision = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]);
        let target = post.steps[0].precision.clone().try_inverse().unwrap();
        let mut rng = seeded(10);
        let n = 20_000;
        let mut cov = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n {
            let w = &ts_sample_weights(&post, 1.0, &mut rng).unwrap()[0];
            cov.ger(1.0 / n as f64, w, w, 1.0);
        }
        assert!((cov - target).abs().max() < 0.02);
    }

    #[test]
    fn known_dynamics_give_zero_regret() {
        let mdp = deterministic_mdp();
        let optimal = dp::solve(&mdp).v[0][0];
        // Saturate the statistics with every (h, s, a) so the ridge means
        // reproduce the true Q-function almost exactly.
        let mut stats = LsviStats::new(&mdp, 1e-9).unwrap();
        for h in 0..3 {
            for s in 0..3 {
                for a in 0..2 {
                    let s_next = mdp.sample_next(h, s, a, &mut seeded(0));
                    let t = Transition {
                        h,
                        s,
                        a,
                        r: mdp.reward(h, s, a),
                        s_next,
                    };
                    for _ in 0..100 {
                        stats.absorb(&mdp, &t);
                    }
                }
            }
        }
        let cfg = AgentConfig::with_mode(AgentMode::Ucb);
        let (buf, regret) = run_lsvi_episode(&mdp, &mut stats, &cfg, 0.0, optimal, &mut seeded(1));
        assert_eq!(regret, 0.0);
        assert_eq!(buf.len(), 3);
    }

    #[test]
    fn fresh_ts_regret_within_horizon() {
        let mdp = random_tabular(4, 2, 3, true, &mut seeded(2)).unwrap();
        let trace = run_lsvi(&mdp, None, &AgentConfig::default(), 50, 7).unwrap();
        assert!(trace.instantaneous.iter().all(|&r| (0.0..=3.0).contains(&r)));
        let again = run_lsvi(&mdp, None, &AgentConfig::default(), 50, 7).unwrap();
        assert_eq!(trace, again);
    }

    #[test]
    fn per_step_resampling_runs() {
        let mdp = random_tabular(3, 2, 3, false, &mut seeded(3)).unwrap();
        let cfg = AgentConfig {
            ts_resample_per_step: true,
            ..AgentConfig::default()
        };
        let trace = run_lsvi(&mdp, None, &cfg, 20, 1).unwrap();
        assert_eq!(trace.len(), 20);
    }

    #[test]
    fn plan_values_stay_clipped() {
        let mdp = random_tabular(4, 3, 4, true, &mut seeded(6)).unwrap();
        let mut stats = LsviStats::new(&mdp, 1.0).unwrap();
        let noise = draw_noise(&mdp, &mut seeded(1));
        for mode in [AgentMode::Ucb, AgentMode::Lcb, AgentMode::Ts] {
            let p = plan(&mdp, &mut stats, mode, 50.0, 3.0, Some(&noise));
            for (h, qh) in p.q.iter().enumerate() {
                let cap = (4 - h) as f64;
                assert!(qh.iter().all(|&q| (0.0..=cap).contains(&q)));
            }
        }
    }

    #[test]
    fn warm_start_edge_cases() {
        let mdp = deterministic_mdp();
        let cfg = AgentConfig::default();
        let empty = EpisodeBuffer::new(Source::Offline);
        let post = warm_start_from_offline(&mdp, &empty, &cfg, 1.0, &mut seeded(0)).unwrap();
        assert_eq!(post.steps[0].precision, DMatrix::identity(6, 6));
        let online = EpisodeBuffer::new(Source::Online);
        assert!(warm_start_from_offline(&mdp, &online, &cfg, 1.0, &mut seeded(0)).is_err());
    }
}
