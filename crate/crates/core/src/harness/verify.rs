//! Executable acceptance checks. Each criterion measures something, compares
//! it with a threshold and reports both.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{preset, BanditParams, BoorlParams, BoundsParams, CounterexampleParams, LinmdpParams, SuiteParams};
use super::suite::{bandit_digests, boorl_runs, counterexample_report, run_suite, theorem_report, CounterexampleReport, TraceDigest};
use crate::boorl::{
    build_masked_dataset, collect_behavior_dataset, run_boorl, softmax_probs, softmax_select, AgentKind, BoorlConfig,
    BufferMode, EnsembleMember, Gridworld, Record, ReplayMixer, EARLY_FRACTION, GRIDWORLD_5X5,
};
use crate::bounds::{bound_curve, coverage_coefficient, iota, scale, WeightSampler};
use crate::error::{LabError, Result};
use crate::linmdp::{dp, info_gain, random_tabular};
use crate::rng::{seeded, stream_rng, Stream};
use crate::stats::{lower_confidence_95, mean};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtLeast,
    AtMost,
}

/// One measured quantity against its threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub relation: Relation,
    pub threshold: f64,
}

impl Check {
    pub fn at_least(label: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            label: label.into(),
            measured,
            relation: Relation::AtLeast,
            threshold,
        }
    }

    pub fn at_most(label: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            label: label.into(),
            measured,
            relation: Relation::AtMost,
            threshold,
        }
    }

    pub fn passed(&self) -> bool {
        match self.relation {
            Relation::AtLeast => self.measured >= self.threshold,
            Relation::AtMost => self.measured <= self.threshold,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.relation {
            Relation::AtLeast => ">=",
            Relation::AtMost => "<=",
        };
        write!(f, "{} = {:.6e} {op} {:.6e}", self.label, self.measured, self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub checks: Vec<Check>,
    /// Set when the measurement itself could not be carried out.
    pub error: Option<String>,
    pub seconds: f64,
    pub budget_seconds: f64,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(Check::passed) && self.seconds <= self.budget_seconds
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{tag} criterion {:>2} {}: ", self.id, self.name)?;
        if let Some(e) = &self.error {
            write!(f, "error: {e}; ")?;
        }
        for c in &self.checks {
            let mark = if c.passed() { "" } else { " [failed]" };
            write!(f, "{c}{mark}; ")?;
        }
        write!(f, "runtime {:.1} s (budget {:.0} s)", self.seconds, self.budget_seconds)
    }
}

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub budget_seconds: f64,
    /// Preset whose parameters the criterion uses, if any.
    pub preset: Option<&'static str>,
}

pub const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, name: "ucb_first_pull_failure", budget_seconds: 60.0, preset: Some("ucb_counterexample") },
    Criterion { id: 2, name: "lcb_linear_regret", budget_seconds: 120.0, preset: Some("lcb_counterexample") },
    Criterion { id: 3, name: "bandit_dilemma", budget_seconds: 600.0, preset: Some("appendix_e") },
    Criterion { id: 4, name: "switching_schemes", budget_seconds: 900.0, preset: Some("switching") },
    Criterion { id: 5, name: "info_gain_determinant_identity", budget_seconds: 10.0, preset: None },
    Criterion { id: 6, name: "bayesian_regret_decomposition", budget_seconds: 600.0, preset: Some("regret_decomposition") },
    Criterion { id: 7, name: "bound_shape", budget_seconds: 1.0, preset: Some("bound_curve") },
    Criterion { id: 8, name: "coverage_oracle", budget_seconds: 30.0, preset: None },
    Criterion { id: 9, name: "boorl_dilemma", budget_seconds: 300.0, preset: Some("gridworld5") },
    Criterion { id: 10, name: "boorl_structure", budget_seconds: 30.0, preset: None },
    Criterion { id: 11, name: "golden_files", budget_seconds: 60.0, preset: None },
];

pub fn criterion(id: u8) -> Option<&'static Criterion> {
    CRITERIA.iter().find(|c| c.id == id)
}

/// Criteria evaluated by `verify --preset <name>`.
pub fn criteria_for_preset(name: &str) -> Vec<u8> {
    CRITERIA.iter().filter(|c| c.preset == Some(name)).map(|c| c.id).collect()
}

fn timed(id: u8, f: impl FnOnce() -> Result<Vec<Check>>) -> CriterionReport {
    let c = criterion(id).expect("known criterion");
    let start = Instant::now();
    let (checks, error) = match f() {
        Ok(checks) => (checks, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    CriterionReport {
        id,
        name: c.name,
        checks,
        error,
        seconds: start.elapsed().as_secs_f64(),
        budget_seconds: c.budget_seconds,
    }
}

fn params<T>(name: &str, pick: impl FnOnce(SuiteParams) -> Option<T>) -> Result<T> {
    pick(preset(name)?.suite).ok_or_else(|| LabError::Config(format!("preset {name} has the wrong suite")))
}

/// Evaluates criterion `id` with the preset parameters. `seeds` overrides
/// the preset seed list; `golden_dir` hosts the reruns of criterion 11.
pub fn run_criterion(id: u8, seeds: Option<&[u64]>, golden_dir: &Path) -> CriterionReport {
    let seeds_of = |name: &str| -> Result<Vec<u64>> {
        Ok(match seeds {
            Some(s) => s.to_vec(),
            None => preset(name)?.seeds,
        })
    };
    match id {
        1 => timed(1, || {
            let p = params("ucb_counterexample", |s| match s {
                SuiteParams::Counterexample(p) => Some(p),
                _ => None,
            })?;
            ucb_failure_checks(&p, seeds_of("ucb_counterexample")?[0])
        }),
        2 => timed(2, || {
            let p = params("lcb_counterexample", |s| match s {
                SuiteParams::Counterexample(p) => Some(p),
                _ => None,
            })?;
            lcb_failure_checks(&p, seeds_of("lcb_counterexample")?[0])
        }),
        3 => timed(3, || {
            let p = bandit_params("appendix_e")?;
            Ok(dilemma_checks(&bandit_digests(&p, &seeds_of("appendix_e")?, &[DILEMMA_PROBE])?))
        }),
        4 => timed(4, || {
            let p = bandit_params("switching")?;
            Ok(switching_checks(&bandit_digests(&p, &seeds_of("switching")?, &[])?))
        }),
        5 => timed(5, || determinant_checks(100, 500, 10, 5)),
        6 => timed(6, || {
            let p = params("regret_decomposition", |s| match s {
                SuiteParams::Linmdp(p) => Some(p),
                _ => None,
            })?;
            theorem_checks(&p, &seeds_of("regret_decomposition")?)
        }),
        7 => timed(7, || {
            let p = params("bound_curve", |s| match s {
                SuiteParams::Bounds(p) => Some(p),
                _ => None,
            })?;
            bound_shape_checks(&p, 50)
        }),
        8 => timed(8, || coverage_checks(50, 8)),
        9 => timed(9, || {
            let p = params("gridworld5", |s| match s {
                SuiteParams::Boorl(p) => Some(p),
                _ => None,
            })?;
            boorl_dilemma_checks(&p, &seeds_of("gridworld5")?)
        }),
        10 => timed(10, || boorl_structure_checks(10)),
        11 => timed(11, || golden_checks(golden_dir, &super::config::PRESETS, &[1])),
        other => CriterionReport {
            id: other,
            name: "unknown",
            checks: Vec::new(),
            error: Some(format!("no criterion {other}")),
            seconds: 0.0,
            budget_seconds: 0.0,
        },
    }
}

/// Runs criteria 3 and 4 off one shared set of bandit runs.
pub fn run_bandit_criteria(seeds: Option<&[u64]>) -> Vec<CriterionReport> {
    let start = Instant::now();
    let shared = (|| -> Result<_> {
        let mut p = bandit_params("appendix_e")?;
        for a in bandit_params("switching")?.agents {
            if !p.agents.contains(&a) {
                p.agents.push(a);
            }
        }
        let seeds = match seeds {
            Some(s) => s.to_vec(),
            None => preset("appendix_e")?.seeds,
        };
        bandit_digests(&p, &seeds, &[DILEMMA_PROBE])
    })();
    let shared_secs = start.elapsed().as_secs_f64();
    let mut out = Vec::new();
    for id in [3u8, 4] {
        let mut r = timed(id, || {
            let d = shared.as_ref().map_err(|e| LabError::Config(e.to_string()))?;
            Ok(if id == 3 { dilemma_checks(d) } else { switching_checks(d) })
        });
        // Both criteria pay for the shared runs.
        r.seconds += shared_secs;
        out.push(r);
    }
    out
}

/// Every criterion in order.
pub fn run_all(seeds: Option<&[u64]>, golden_dir: &Path) -> Vec<CriterionReport> {
    let mut out = Vec::new();
    for c in &CRITERIA {
        match c.id {
            3 => out.extend(run_bandit_criteria(seeds)),
            4 => {}
            id => out.push(run_criterion(id, seeds, golden_dir)),
        }
    }
    out
}

fn bandit_params(name: &str) -> Result<BanditParams> {
    params(name, |s| match s {
        SuiteParams::Bandit(p) => Some(p),
        _ => None,
    })
}

pub fn ucb_failure_checks(p: &CounterexampleParams, seed: u64) -> Result<Vec<Check>> {
    let p = CounterexampleParams { mode: crate::bandit::FailureMode::Ucb, ..p.clone() };
    let CounterexampleReport::Ucb(r) = counterexample_report(&p, seed)? else {
        unreachable!("mode forced to ucb")
    };
    Ok(vec![
        Check::at_least("P(rare arm seen once)", r.p_rare_once, 0.36),
        Check::at_least(
            "E[first-pull suboptimality]",
            r.mean_suboptimality,
            0.1 * p.epsilon - 3.0 * r.suboptimality_se,
        ),
    ])
}

pub fn lcb_failure_checks(p: &CounterexampleParams, seed: u64) -> Result<Vec<Check>> {
    let p = CounterexampleParams { mode: crate::bandit::FailureMode::Lcb, ..p.clone() };
    let CounterexampleReport::Lcb(r) = counterexample_report(&p, seed)? else {
        unreachable!("mode forced to lcb")
    };
    Ok(vec![Check::at_least(
        "E[cumulative regret]",
        r.mean_regret,
        0.1 * p.epsilon * p.horizon as f64 - 3.0 * r.regret_se,
    )])
}

/// Early probe step for the bandit dilemma.
pub const DILEMMA_PROBE: usize = 1000;

fn of_agent<'a>(digests: &'a [TraceDigest], tag: &str) -> Vec<&'a TraceDigest> {
    digests.iter().filter(|d| d.agent == tag).collect()
}

pub fn dilemma_checks(digests: &[TraceDigest]) -> Vec<Check> {
    let (ts, lcb, ucb) = (of_agent(digests, "ts"), of_agent(digests, "lcb"), of_agent(digests, "ucb"));
    let probe = |v: &[&TraceDigest]| mean(&v.iter().map(|d| d.probes[0]).collect::<Vec<_>>());
    let total = |v: &[&TraceDigest]| mean(&v.iter().map(|d| d.total()).collect::<Vec<_>>());
    let slope = |v: &[&TraceDigest]| mean(&v.iter().map(|d| d.last_half_slope).collect::<Vec<_>>());
    vec![
        Check::at_most("TS regret at t=1000 / LCB's", probe(&ts) / probe(&lcb), 1.5),
        Check::at_most("TS final regret / UCB's", total(&ts) / total(&ucb), 1.5),
        Check::at_least("LCB last-half slope / TS's", slope(&lcb) / slope(&ts), 5.0),
    ]
}

/// Per-seed paired differences `a - b` of a statistic.
fn paired<'a, T>(a: &[&'a T], b: &[&'a T], seed: impl Fn(&T) -> u64, stat: impl Fn(&T) -> f64) -> Vec<f64> {
    a.iter()
        .filter_map(|x| b.iter().find(|y| seed(y) == seed(x)).map(|y| stat(x) - stat(y)))
        .collect()
}

pub fn switching_checks(digests: &[TraceDigest]) -> Vec<Check> {
    let ts = of_agent(digests, "ts");
    let mut tags: Vec<&str> = Vec::new();
    for d in digests {
        if (d.agent.starts_with("soft") || d.agent.starts_with("hard")) && !tags.contains(&d.agent.as_str()) {
            tags.push(&d.agent);
        }
    }
    tags.iter()
        .map(|tag| {
            let diff = paired(&of_agent(digests, tag), &ts, |d| d.seed, TraceDigest::total);
            Check::at_least(format!("95% LCB of {tag} - TS final regret"), lower_confidence_95(&diff), 0.0)
        })
        .collect()
}

/// Random streams of `d <= max_d` features of length `<= max_len`: the sum
/// of sequential information gains against half the log-determinant ratio,
/// and each gain against the determinant-lemma form.
pub fn determinant_checks(streams: usize, max_len: usize, max_d: usize, seed: u64) -> Result<Vec<Check>> {
    let mut rng = seeded(seed);
    let (mut worst_sum, mut worst_step) = (0.0f64, 0.0f64);
    for _ in 0..streams {
        let d = rng.random_range(1..=max_d);
        let len = rng.random_range(1..=max_len);
        let ridge = rng.random_range(0.1..2.0);
        let init = DMatrix::<f64>::identity(d, d) * ridge;
        let mut lambda = init.clone();
        let mut total = 0.0;
        for _ in 0..len {
            let phi = DVector::<f64>::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal) / (d as f64).sqrt());
            let gain = info_gain(&phi, &lambda)?;
            // det(L + phi phi^T) = det(L) (1 + phi^T L^{-1} phi), with the
            // solve done by LU rather than the Cholesky factor.
            let solved = lambda.clone().lu().solve(&phi).ok_or(LabError::NotPositiveDefinite)?;
            let lemma = 0.5 * phi.dot(&solved).ln_1p();
            if lemma > 0.0 {
                worst_step = worst_step.max(((gain - lemma) / lemma).abs());
            }
            let mut next = lambda.clone();
            next.ger(1.0, &phi, &phi, 1.0);
            total += gain;
            lambda = next;
        }
        let oracle = 0.5 * (lambda.lu().determinant() / init.lu().determinant()).ln();
        worst_sum = worst_sum.max(((total - oracle) / oracle).abs());
    }
    Ok(vec![
        Check::at_most("max relative error, summed gains", worst_sum, 1e-9),
        Check::at_most("max relative error, per-step lemma", worst_step, 1e-9),
    ])
}

pub fn theorem_checks(p: &LinmdpParams, seeds: &[u64]) -> Result<Vec<Check>> {
    let reports = crate::par::map(seeds, |&s| theorem_report(p, s));
    let (mut violations, mut episodes, mut worst) = (0usize, 0usize, 0.0f64);
    for r in reports {
        let r = r?;
        episodes += r.rows.len();
        violations += r.rows.iter().filter(|row| row.slack < 0.0).count();
        worst = worst.max(r.negative_fraction);
    }
    Ok(vec![
        Check::at_most("fraction of episodes above the bound", violations as f64 / episodes.max(1) as f64, 0.05),
        Check::at_most("worst per-MDP fraction", worst, 0.05),
    ])
}

/// Shape of the bound on an `n x n` grid of `(N, T)`, with the N grid
/// log-spaced from 0 and the T grid linear up to the preset budget.
pub fn bound_shape_checks(p: &BoundsParams, n: usize) -> Result<Vec<Check>> {
    let n_max = p.ns.iter().cloned().fold(1.0, f64::max);
    let t_max = p.ts.iter().cloned().fold(2.0, f64::max);
    let ns: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { n_max.powf(i as f64 / (n - 1) as f64) }).collect();
    let ts: Vec<f64> = (0..n).map(|i| 1.0 + (t_max - 1.0) * i as f64 / (n - 1) as f64).collect();
    let template = super::suite::bound_template(p);
    let rows = bound_curve(&template, &ns, &ts)?;
    let at = |i: usize, j: usize| rows[i * n + j].bound;
    let s = scale(p.c, p.d, p.horizon, iota(p.d, t_max, p.delta));

    let (mut not_inc, mut convex, mut not_dec, mut over34, mut over33) = (0usize, 0usize, 0usize, 0.0f64, 0.0f64);
    for i in 0..n {
        for j in 0..n {
            if j + 1 < n && at(i, j + 1) <= at(i, j) {
                not_inc += 1;
            }
            if j + 2 < n {
                let (s0, s1) = (at(i, j + 1) - at(i, j), at(i, j + 2) - at(i, j + 1));
                if s1 > s0 {
                    convex += 1;
                }
            }
            if i + 1 < n && at(i + 1, j) >= at(i, j) {
                not_dec += 1;
            }
        }
        if ns[i] == 0.0 {
            for (j, &t) in ts.iter().enumerate() {
                over34 = over34.max(at(i, j) / (2.0 * s * t.sqrt()));
            }
        } else {
            over33 = over33.max(at(i, 0) / (s / (2.0 * (ns[i] / p.c_dagger).sqrt())));
        }
    }
    Ok(vec![
        Check::at_most("non-increasing steps in T", not_inc as f64, 0.0),
        Check::at_most("convex triples in T", convex as f64, 0.0),
        Check::at_most("non-decreasing steps in N", not_dec as f64, 0.0),
        Check::at_most("max bound(0, T) / 2c sqrt(d^3 H^3 T iota)", over34, 1.0),
        Check::at_most("max bound(N, 1) / (c sqrt(d^3 H^3 iota) / 2 sqrt(N/C))", over33, 1.0),
    ])
}

/// Direct ratio `max_h max_sa d_h(sa) / rho_h(sa)` for one-hot features.
pub fn visitation_ratio(occ: &[Vec<f64>], rho: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for (o, r) in occ.iter().zip(rho) {
        for (&p, &q) in o.iter().zip(r) {
            if p > 0.0 {
                best = best.max(if q > 0.0 { p / q } else { f64::INFINITY });
            }
        }
    }
    best
}

pub fn coverage_checks(n_mdps: usize, seed: u64) -> Result<Vec<Check>> {
    let mut rng = seeded(seed);
    let (mut worst_oracle, mut worst_self) = (0.0f64, 0.0f64);
    for _ in 0..n_mdps {
        let ns = rng.random_range(2..=5);
        let na = rng.random_range(2..=3);
        let hz = rng.random_range(1..=3);
        let mdp = random_tabular(ns, na, hz, true, &mut rng)?;
        let d = mdp.d();
        let rho: Vec<Vec<f64>> = (0..hz)
            .map(|_| {
                let raw: Vec<f64> = (0..ns * na).map(|_| rng.random::<f64>() + 0.01).collect();
                let total: f64 = raw.iter().sum();
                raw.iter().map(|x| x / total).collect()
            })
            .collect();
        let w: Vec<DVector<f64>> = (0..hz)
            .map(|_| DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let policy = dp::greedy_from_weights(&mdp, &w);
        let occ = dp::visitation(&mdp, &policy);
        let c = coverage_coefficient(&mdp, &rho, &WeightSampler::PointMass(w), 1, &mut rng)?;
        let oracle = visitation_ratio(&occ, &rho);
        worst_oracle = worst_oracle.max((c.value - oracle).abs());

        let sol = dp::solve(&mdp);
        let star = dp::visitation(&mdp, &sol.policy);
        let own = coverage_coefficient(&mdp, &star, &WeightSampler::PointMass(dp::optimal_weights(&mdp)), 1, &mut rng)?;
        worst_self = worst_self.max((own.value - 1.0).abs());
    }
    Ok(vec![
        Check::at_most("max |C - visitation ratio|", worst_oracle, 1e-8),
        Check::at_most("max |C(rho = d*) - 1|", worst_self, 1e-10),
    ])
}

pub fn boorl_dilemma_checks(p: &BoorlParams, seeds: &[u64]) -> Result<Vec<Check>> {
    let p = BoorlParams {
        agents: vec![AgentKind::Boorl, AgentKind::Optimistic, AgentKind::Pessimistic],
        ..p.clone()
    };
    let runs = boorl_runs(&p, seeds)?;
    let pick = |k: AgentKind| runs.iter().map(|r| &r.0).filter(|r| r.agent == k).collect::<Vec<_>>();
    let (boorl, opt, pess) = (pick(AgentKind::Boorl), pick(AgentKind::Optimistic), pick(AgentKind::Pessimistic));
    let seed = |r: &crate::boorl::BoorlRun| r.trace.seed;
    let early = paired(&opt, &boorl, seed, |r| r.early_regret(EARLY_FRACTION));
    let fin = paired(&boorl, &pess, seed, |r| r.final_return);
    Ok(vec![
        Check::at_least("95% LCB of optimistic - BOORL early regret", lower_confidence_95(&early), 0.0),
        Check::at_least("95% LCB of BOORL - pessimistic final return", lower_confidence_95(&fin), 0.0),
    ])
}

pub fn boorl_structure_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = seeded(seed);
    let (mut norm_err, mut shift_err) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let k = rng.random_range(1..=8);
        let logits: Vec<f64> = (0..k).map(|_| rng.random_range(-20.0..20.0)).collect();
        let temp = rng.random_range(0.1..5.0);
        let p = softmax_probs(&logits, temp);
        if p.iter().any(|&x| x < 0.0) {
            norm_err = f64::INFINITY;
        }
        norm_err = norm_err.max((p.iter().sum::<f64>() - 1.0).abs());
        let c = rng.random_range(-100.0..100.0);
        let shifted: Vec<f64> = logits.iter().map(|x| x + c).collect();
        let q = softmax_probs(&shifted, temp);
        shift_err = shift_err.max(p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }

    let grid = Gridworld::parse(GRIDWORLD_5X5, 10, 0.1)?;
    let single = vec![EnsembleMember::constant(0, grid.n_states(), 0.5)];
    let mut a = seeded(seed);
    let b = a.clone();
    let picks: Vec<usize> = (0..100)
        .map(|s| softmax_select(&single, s % grid.n_states(), 1.0, &mut a))
        .collect::<Result<_>>()?;
    let l1_deviation = picks.iter().filter(|&&i| i != 0).count() + usize::from(a != b);

    let data = collect_behavior_dataset(&grid, 10_000, 0.3, &mut stream_rng(seed, Stream::Offline))?;
    let n = data.len() as f64;
    let masked = build_masked_dataset(data.clone(), 5, 0.9, &mut stream_rng(seed, Stream::Mask))?;
    let sigma = (0.9 * 0.1 / n).sqrt();
    let mask_z = (0..5).map(|m| (masked.mask_mean(m) - 0.9).abs() / sigma).fold(0.0, f64::max);

    let offline: Vec<Record> = data.iter().map(|r| Record { r: 0.0, ..*r }).collect();
    let mut mixer = ReplayMixer::new(&offline, BufferMode::Mixed);
    mixer.push(Record { r: 1.0, ..data[0] });
    let mut batch_dev = 0usize;
    for b in [1usize, 2, 255, 256, 257] {
        let batch = mixer.sample(b, &mut rng);
        let from_offline = batch.iter().filter(|r| r.r == 0.0).count();
        batch_dev = batch_dev.max(from_offline.abs_diff(b.div_ceil(2)) + batch.len().abs_diff(b));
    }

    let cfg = BoorlConfig {
        total_steps: 500,
        ..BoorlConfig::default()
    };
    let small = &data[..2000];
    let run1 = run_boorl(&grid, small, &cfg, AgentKind::Boorl, seed)?;
    let run2 = run_boorl(&grid, small, &cfg, AgentKind::Boorl, seed)?;
    let identical = run1 == run2
        && run1.trace.cumulative.iter().zip(&run2.trace.cumulative).all(|(x, y)| x.to_bits() == y.to_bits())
        && run1.final_return.to_bits() == run2.final_return.to_bits();

    Ok(vec![
        Check::at_most("max |sum softmax - 1|", norm_err, 1e-12),
        Check::at_most("max softmax change under logit shift", shift_err, 1e-12),
        Check::at_most("L = 1 selections deviating from member 0", l1_deviation as f64, 0.0),
        Check::at_most("max |mask mean - 0.9| in sigmas", mask_z, 3.0),
        Check::at_most("max offline-count deviation from ceil(B/2)", batch_dev as f64, 0.0),
        Check::at_least("two-phase rerun bit-identical", if identical { 1.0 } else { 0.0 }, 1.0),
    ])
}

/// Runs every preset twice with `seeds` under `dir/<preset>/run{1,2}` and
/// counts CSV/SVG/JSONL files whose bytes differ.
pub fn golden_checks(dir: &Path, presets: &[&str], seeds: &[u64]) -> Result<Vec<Check>> {
    let mut compared = 0usize;
    let mut differing = 0usize;
    for name in presets {
        let mut manifests = Vec::new();
        for run in ["run1", "run2"] {
            let mut cfg = preset(name)?;
            cfg.seeds = seeds.to_vec();
            cfg.output_dir = dir.join(name).join(run);
            manifests.push(run_suite(&cfg)?);
        }
        let m = &manifests[0];
        let names = m.files.iter().map(|f| f.path.clone()).chain(m.summary_file.clone()).chain(m.plot_file.clone());
        for rel in names {
            let read = |run: &str| {
                let path = dir.join(name).join(run).join(&rel);
                std::fs::read(&path).map_err(crate::error::io_err(path))
            };
            compared += 1;
            if read("run1")? != read("run2")? {
                differing += 1;
            }
        }
        if manifests[0].files.len() != manifests[1].files.len() {
            differing += 1;
        }
    }
    Ok(vec![
        Check::at_least("files compared", compared as f64, 1.0),
        Check::at_most("files differing between reruns", differing as f64, 0.0),
    ])
}
