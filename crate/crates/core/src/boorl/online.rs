//! Online phase: member selection, replay mixing and the full two-phase run.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::{build_masked_dataset, Record};
use super::grid::{Gridworld, N_ACTIONS};
use super::member::{offline_train_member, sample_index, selection_probs, EnsembleMember, OfflineTrainConfig};
use crate::error::{invalid, Result};
use crate::par;
use crate::rng::{stream_rng, Stream};
use crate::stats::{entropy, mean, sample_std};
use crate::trace::RegretTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BufferMode {
    /// Half of every batch from each buffer.
    Mixed,
    /// Offline and online records pooled in one buffer.
    Uniform,
    /// Online records only; offline data is ignored.
    OnlineOnly,
}

/// Replay over a fixed offline buffer and a growing online buffer. All
/// draws are with replacement.
#[derive(Debug, Clone)]
pub struct ReplayMixer<'a> {
    offline: &'a [Record],
    online: Vec<Record>,
    mode: BufferMode,
}

impl<'a> ReplayMixer<'a> {
    pub fn new(offline: &'a [Record], mode: BufferMode) -> Self {
        Self {
            offline,
            online: Vec::new(),
            mode,
        }
    }

    pub fn push(&mut self, t: Record) {
        self.online.push(t);
    }

    pub fn online(&self) -> &[Record] {
        &self.online
    }

    /// Batch of `b` records. In mixed mode `ceil(b/2)` come from the offline
    /// buffer and `floor(b/2)` from the online one, or all `b` from the
    /// offline buffer while the online buffer is empty.
    pub fn sample<R: Rng + ?Sized>(&self, b: usize, rng: &mut R) -> Vec<Record> {
        let pick = |buf: &[Record], rng: &mut R| buf[rng.random_range(0..buf.len())];
        let (off, on) = (self.offline, self.online.as_slice());
        match self.mode {
            BufferMode::Mixed if on.is_empty() => {
                if off.is_empty() {
                    return Vec::new();
                }
                (0..b).map(|_| pick(off, rng)).collect()
            }
            BufferMode::Mixed => {
                let n_on = b / 2;
                let mut batch: Vec<Record> = (0..b - n_on).map(|_| pick(off, rng)).collect();
                batch.extend((0..n_on).map(|_| pick(on, rng)));
                batch
            }
            BufferMode::Uniform => {
                let total = off.len() + on.len();
                if total == 0 {
                    return Vec::new();
                }
                (0..b)
                    .map(|_| {
                        let i = rng.random_range(0..total);
                        if i < off.len() {
                            off[i]
                        } else {
                            on[i - off.len()]
                        }
                    })
                    .collect()
            }
            BufferMode::OnlineOnly => {
                if on.is_empty() {
                    return Vec::new();
                }
                (0..b).map(|_| pick(on, rng)).collect()
            }
        }
    }
}

/// Which learner a run instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    /// Bootstrapped offline ensemble, fine-tuned online.
    Boorl,
    /// Single fresh learner with optimistic initial values, no offline data.
    Optimistic,
    /// Single offline member on the full dataset, never updated online.
    Pessimistic,
}

impl AgentKind {
    pub fn tag(self) -> &'static str {
        match self {
            AgentKind::Boorl => "boorl",
            AgentKind::Optimistic => "optimistic",
            AgentKind::Pessimistic => "pessimistic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoorlConfig {
    pub ensemble: usize,
    pub mask_ratio: f64,
    pub lambda_bc: f64,
    pub temperature: f64,
    pub epsilon: f64,
    pub total_steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub discount: f64,
    pub offline_iters: usize,
    pub buffer: BufferMode,
    /// Initial table value of the optimistic baseline.
    pub optimistic_init: f64,
}

impl Default for BoorlConfig {
    fn default() -> Self {
        Self {
            ensemble: 5,
            mask_ratio: 0.9,
            lambda_bc: 2.5,
            temperature: 1.0,
            epsilon: 0.05,
            total_steps: 3000,
            batch_size: 256,
            learning_rate: 0.1,
            discount: 0.95,
            offline_iters: 500,
            buffer: BufferMode::Mixed,
            optimistic_init: 1.0,
        }
    }
}

impl BoorlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ensemble == 0 {
            return Err(invalid("ensemble size must be at least 1"));
        }
        if !(self.mask_ratio > 0.0 && self.mask_ratio <= 1.0) {
            return Err(invalid("mask ratio must lie in (0, 1]"));
        }
        if !(self.lambda_bc > 0.0 && self.temperature > 0.0) {
            return Err(invalid("lambda_bc and temperature must be positive"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(invalid("epsilon must lie in [0, 1]"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(invalid("learning rate must lie in (0, 1]"));
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(invalid("discount must lie in (0, 1]"));
        }
        if !(self.optimistic_init >= 0.0) {
            return Err(invalid("optimistic_init must be non-negative"));
        }
        Ok(())
    }

    fn offline(&self, grid: &Gridworld) -> OfflineTrainConfig {
        OfflineTrainConfig {
            lambda_bc: self.lambda_bc,
            iters: self.offline_iters,
            discount: self.discount,
            cap: grid.horizon() as f64,
        }
    }
}

/// Trains `L` members on bootstrap-masked copies of `dataset`.
pub fn offline_phase<R: Rng + ?Sized>(
    grid: &Gridworld,
    dataset: &[Record],
    members: usize,
    mask_ratio: f64,
    config: &BoorlConfig,
    rng: &mut R,
) -> Result<Vec<EnsembleMember>> {
    let masked = build_masked_dataset(dataset.to_vec(), members, mask_ratio, rng)?;
    let train = config.offline(grid);
    par::map_range(members as u64, |l| offline_train_member(l as usize, &masked, grid.n_states(), &train))
        .into_iter()
        .collect()
}

/// Position inside the current episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeState {
    pub s: usize,
    pub h: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub record: Record,
    pub member: usize,
    pub selection_entropy: f64,
}

/// Acts once and learns once: picks a member by softmax over
/// `Q_l(s, pi_l(s))`, plays its action with epsilon-greedy noise, stores the
/// transition, then applies one clipped TD update per batch record to every
/// member. With `learn = false` the members stay frozen.
#[allow(clippy::too_many_arguments)]
pub fn online_step<R: Rng + ?Sized>(
    members: &mut [EnsembleMember],
    mixer: &mut ReplayMixer<'_>,
    grid: &Gridworld,
    config: &BoorlConfig,
    state: EpisodeState,
    learn: bool,
    rng: &mut R,
    env_rng: &mut R,
) -> StepOutcome {
    let (member, selection_entropy) = if members.len() == 1 {
        (0, 0.0)
    } else {
        let p = selection_probs(members, state.s, config.temperature);
        (sample_index(&p, rng), entropy(&p))
    };
    let a = if config.epsilon > 0.0 && rng.random::<f64>() < config.epsilon {
        rng.random_range(0..N_ACTIONS)
    } else {
        members[member].act(state.s, rng)
    };
    let (r, s_next, done) = grid.step(state.s, a, env_rng);
    let record = Record {
        s: state.s,
        a,
        r,
        s_next,
        done,
    };
    mixer.push(record);
    if learn {
        let batch = mixer.sample(config.batch_size, rng);
        let cap = grid.horizon() as f64;
        for m in members.iter_mut() {
            for t in &batch {
                m.td_update(t, config.discount, config.learning_rate, cap);
            }
            m.make_greedy();
        }
    }
    StepOutcome {
        record,
        member,
        selection_entropy,
    }
}

/// Stationary policy of the softmax mixture without exploration noise.
pub fn mixture_policy(members: &[EnsembleMember], n_states: usize, temperature: f64) -> Vec<[f64; N_ACTIONS]> {
    (0..n_states)
        .map(|s| {
            let p = selection_probs(members, s, temperature);
            let mut out = [0.0; N_ACTIONS];
            for (m, w) in members.iter().zip(p) {
                for (o, x) in out.iter_mut().zip(m.action_probs(s)) {
                    *o += w * x;
                }
            }
            out
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpisodeSummary {
    pub episode: usize,
    /// 1-based online step at which the episode ended.
    pub end_step: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoorlRun {
    pub agent: AgentKind,
    /// Per online step; an episode's regret `V* - return` is booked at the
    /// step where the episode ends.
    pub trace: RegretTrace,
    pub episodes: Vec<EpisodeSummary>,
    /// Exact `H`-step value of the final noise-free policy.
    pub final_return: f64,
    pub optimal_return: f64,
    pub mean_selection_entropy: f64,
    pub online_records: usize,
}

impl BoorlRun {
    /// Cumulative regret over the first `ceil(fraction * T)` online steps.
    pub fn early_regret(&self, fraction: f64) -> f64 {
        let n = ((fraction * self.trace.len() as f64).ceil() as usize).min(self.trace.len());
        self.trace.cumulative_at(n)
    }

    pub fn episodes_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.episodes {
            out.push_str(&serde_json::to_string(e).expect("plain numeric row"));
            out.push('\n');
        }
        out
    }
}

/// Offline phase followed by `total_steps` online steps.
pub fn run_boorl(
    grid: &Gridworld,
    dataset: &[Record],
    config: &BoorlConfig,
    agent: AgentKind,
    seed: u64,
) -> Result<BoorlRun> {
    config.validate()?;
    if agent != AgentKind::Optimistic && dataset.is_empty() {
        return Err(invalid("offline dataset is empty"));
    }
    let mut mask_rng = stream_rng(seed, Stream::Mask);
    let mut rng = stream_rng(seed, Stream::Agent);
    let mut env_rng = stream_rng(seed, Stream::Environment);

    let (mut members, mode, learn) = match agent {
        AgentKind::Boorl => (
            offline_phase(grid, dataset, config.ensemble, config.mask_ratio, config, &mut mask_rng)?,
            config.buffer,
            true,
        ),
        AgentKind::Optimistic => (
            vec![EnsembleMember::constant(0, grid.n_states(), config.optimistic_init.min(grid.horizon() as f64))],
            BufferMode::OnlineOnly,
            true,
        ),
        AgentKind::Pessimistic => (
            offline_phase(grid, dataset, 1, 1.0, config, &mut mask_rng)?,
            BufferMode::Mixed,
            false,
        ),
    };
    // Online learning drops the support constraint and behavior bonus.
    if learn && config.total_steps > 0 {
        members.iter_mut().for_each(EnsembleMember::make_greedy);
    }
    let step_config = BoorlConfig {
        epsilon: if learn { config.epsilon } else { 0.0 },
        ..*config
    };

    let optimal_return = grid.optimal_values()[grid.start()];
    let mut mixer = ReplayMixer::new(dataset, mode);
    let mut trace = RegretTrace::with_capacity(seed, agent.tag(), config.total_steps);
    let mut episodes = Vec::new();
    let mut state = EpisodeState { s: grid.start(), h: 0 };
    let mut ret = 0.0;
    let mut entropy_sum = 0.0;
    for t in 0..config.total_steps {
        let out = online_step(&mut members, &mut mixer, grid, &step_config, state, learn, &mut rng, &mut env_rng);
        entropy_sum += out.selection_entropy;
        ret += out.record.r;
        state = EpisodeState {
            s: out.record.s_next,
            h: state.h + 1,
        };
        if out.record.done || state.h == grid.horizon() {
            let regret = optimal_return - ret;
            episodes.push(EpisodeSummary {
                episode: episodes.len(),
                end_step: t + 1,
                ret,
                regret,
            });
            trace.push(regret);
            state = EpisodeState { s: grid.start(), h: 0 };
            ret = 0.0;
        } else {
            trace.push(0.0);
        }
    }
    let final_return = grid.evaluate(&mixture_policy(&members, grid.n_states(), config.temperature));
    Ok(BoorlRun {
        agent,
        trace,
        episodes,
        final_return,
        optimal_return,
        mean_selection_entropy: if config.total_steps == 0 {
            0.0
        } else {
            entropy_sum / config.total_steps as f64
        },
        online_records: mixer.online().len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    Ensemble1,
    UniformBuffer,
}

impl Variant {
    pub fn tag(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Ensemble1 => "ensemble1",
            Variant::UniformBuffer => "uniform_buffer",
        }
    }

    pub fn apply(self, base: &BoorlConfig) -> BoorlConfig {
        match self {
            Variant::Full => *base,
            Variant::Ensemble1 => BoorlConfig { ensemble: 1, ..*base },
            Variant::UniformBuffer => BoorlConfig {
                buffer: BufferMode::Uniform,
                ..*base
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub variant: Variant,
    pub early_regret_mean: f64,
    pub early_regret_std: f64,
    pub final_return_mean: f64,
    pub final_return_std: f64,
    pub selection_entropy_mean: f64,
}

/// Fraction of online steps counted as the early phase.
pub const EARLY_FRACTION: f64 = 0.1;

/// Runs every variant over every seed, with datasets supplied per seed.
pub fn ablate(
    grid: &Gridworld,
    datasets: &[(u64, Vec<Record>)],
    variants: &[Variant],
    base: &BoorlConfig,
) -> Result<Vec<AblationRow>> {
    if variants.len() < 2 {
        return Err(invalid("ablation needs at least two variants"));
    }
    variants
        .iter()
        .map(|&v| {
            let cfg = v.apply(base);
            let runs = par::map(datasets, |(seed, data)| run_boorl(grid, data, &cfg, AgentKind::Boorl, *seed))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let early: Vec<f64> = runs.iter().map(|r| r.early_regret(EARLY_FRACTION)).collect();
            let finals: Vec<f64> = runs.iter().map(|r| r.final_return).collect();
            let ent: Vec<f64> = runs.iter().map(|r| r.mean_selection_entropy).collect();
            Ok(AblationRow {
                variant: v,
                early_regret_mean: mean(&early),
                early_regret_std: sample_std(&early),
                final_return_mean: mean(&finals),
                final_return_std: sample_std(&finals),
                selection_entropy_mean: mean(&ent),
            })
        })
        .collect()
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from(
        "variant,early_regret_mean,early_regret_std,final_return_mean,final_return_std,selection_entropy_mean\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.variant.tag(),
            r.early_regret_mean,
            r.early_regret_std,
            r.final_return_mean,
            r.final_return_std,
            r.selection_entropy_mean
        ));
    }
    out
}
