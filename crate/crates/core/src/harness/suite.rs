//! Seeded multi-run execution, per-run files and the run manifest.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{BanditParams, BoorlParams, BoundsParams, CounterexampleParams, ExperimentConfig, LinmdpParams, SuiteParams};
use super::summary::{checkpoints, summarize, summary_csv, AgentSummary, Curve};
use super::svg::{render_curves, PlotStyle};
use crate::bandit::{
    collect_offline_uniform, lcb_failure_experiment, make_counterexample_lcb, make_counterexample_ucb,
    run_bandit_experiment, sample_bandit, ucb_failure_experiment, FailureMode, LcbFailureReport, UcbFailureReport,
};
use crate::boorl::{
    ablate, ablation_csv, collect_behavior_dataset, dataset_from_csv, dataset_to_csv, run_boorl, BoorlRun, Gridworld,
    Record, EARLY_FRACTION,
};
use crate::bounds::{bound_curve, bound_curve_csv, check_theorem31, theorem31_experiment, BoundInputs, Theorem31Report};
use crate::error::{io_err, LabError, Result};
use crate::linmdp::{random_tabular, run_lsvi, AgentConfig, LinearMdp};
use crate::par;
use crate::rng::{stream_rng, Stream};
use crate::stats::half_slopes;
use crate::trace::{parse_trace_csv, RegretTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    /// Regret trace CSV `step,instantaneous,cumulative` at checkpoints.
    Trace,
    /// Plain CSV table with a header row.
    Table,
    /// One JSON object per line.
    Records,
    /// Offline transitions `s,a,r,s_next,done`.
    Dataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub kind: FileKind,
    pub agent: Option<String>,
    pub seed: Option<u64>,
    pub wall_clock_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub artifact_version: String,
    pub suite: String,
    pub config_hash: String,
    pub files: Vec<FileEntry>,
    pub summary_file: Option<String>,
    pub plot_file: Option<String>,
    pub summary: Vec<AgentSummary>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn elapsed_ms(start: Instant) -> f64 {
    (start.elapsed().as_secs_f64() * 1e6).round() / 1e3
}

/// Digest of one regret trace: the checkpoint CSV plus the quantities the
/// acceptance checks read from the full trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceDigest {
    pub agent: String,
    pub seed: u64,
    pub csv: String,
    pub steps: Vec<usize>,
    pub cumulative: Vec<f64>,
    /// Cumulative regret at the requested probe steps.
    pub probes: Vec<f64>,
    pub first_half_slope: f64,
    pub last_half_slope: f64,
    pub wall_clock_ms: f64,
}

impl TraceDigest {
    pub fn new(trace: &RegretTrace, probes: &[usize], wall_clock_ms: f64) -> Self {
        let steps = checkpoints(trace.len());
        let (first, last) = if trace.len() >= 4 {
            half_slopes(&trace.cumulative)
        } else {
            (f64::NAN, f64::NAN)
        };
        Self {
            agent: trace.agent_tag.clone(),
            seed: trace.seed,
            csv: trace.to_csv(Some(&steps)),
            cumulative: steps.iter().map(|&s| trace.cumulative_at(s)).collect(),
            steps,
            probes: probes.iter().map(|&s| trace.cumulative_at(s.min(trace.len()))).collect(),
            first_half_slope: first,
            last_half_slope: last,
            wall_clock_ms,
        }
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    fn curve(&self) -> Curve {
        Curve {
            agent: self.agent.clone(),
            seed: self.seed,
            steps: self.steps.clone(),
            values: self.cumulative.clone(),
        }
    }
}

/// Bandit runs for every `(agent, seed)`, agent-major. All agents of a seed
/// share the environment draw and the offline log.
pub fn bandit_digests(p: &BanditParams, seeds: &[u64], probes: &[usize]) -> Result<Vec<TraceDigest>> {
    let jobs: Vec<(usize, u64)> = (0..p.agents.len()).flat_map(|a| seeds.iter().map(move |&s| (a, s))).collect();
    par::map(&jobs, |&(a, seed)| {
        let start = Instant::now();
        let bandit = sample_bandit(p.n_arms, p.prior_alpha, p.prior_beta, &mut stream_rng(seed, Stream::Environment))?;
        let offline = collect_offline_uniform(&bandit, p.offline_pulls, &mut stream_rng(seed, Stream::Offline));
        let trace = run_bandit_experiment(&bandit, &offline, &p.agents[a], p.horizon, seed)?;
        Ok(TraceDigest::new(&trace, probes, elapsed_ms(start)))
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum CounterexampleReport {
    Ucb(UcbFailureReport),
    Lcb(LcbFailureReport),
}

impl CounterexampleReport {
    pub fn to_csv(&self) -> String {
        match self {
            CounterexampleReport::Ucb(r) => format!(
                "draws,p_rare_once,p_rare_once_se,mean_suboptimality,suboptimality_se\n{},{},{},{},{}\n",
                r.draws, r.p_rare_once, r.p_rare_once_se, r.mean_suboptimality, r.suboptimality_se
            ),
            CounterexampleReport::Lcb(r) => format!(
                "draws,horizon,p_rare_once,mean_regret,regret_se\n{},{},{},{},{}\n",
                r.draws, r.horizon, r.p_rare_once, r.mean_regret, r.regret_se
            ),
        }
    }
}

pub fn counterexample_report(p: &CounterexampleParams, seed: u64) -> Result<CounterexampleReport> {
    Ok(match p.mode {
        FailureMode::Ucb => {
            let ce = make_counterexample_ucb(p.epsilon, p.n)?;
            CounterexampleReport::Ucb(ucb_failure_experiment(&ce, p.k, p.draws, seed))
        }
        FailureMode::Lcb => {
            let ce = make_counterexample_lcb(p.epsilon, p.n)?;
            CounterexampleReport::Lcb(lcb_failure_experiment(&ce, p.k, p.horizon, p.draws, seed))
        }
    })
}

pub fn linmdp_for_seed(p: &LinmdpParams, seed: u64) -> Result<LinearMdp> {
    random_tabular(
        p.n_states,
        p.n_actions,
        p.horizon,
        p.vary_by_step,
        &mut stream_rng(seed, Stream::Environment),
    )
}

/// Theorem check on the seed's random MDP.
pub fn theorem_report(p: &LinmdpParams, seed: u64) -> Result<Theorem31Report> {
    let mdp = linmdp_for_seed(p, seed)?;
    Ok(check_theorem31(&theorem31_experiment(&mdp, &p.theorem, seed)?))
}

pub fn gridworld(p: &BoorlParams) -> Result<Gridworld> {
    Gridworld::parse(&p.map, p.horizon, p.slip_prob)
}

pub fn boorl_dataset(grid: &Gridworld, p: &BoorlParams, seed: u64) -> Result<Vec<Record>> {
    collect_behavior_dataset(grid, p.dataset_size, p.behavior_epsilon, &mut stream_rng(seed, Stream::Offline))
}

/// Runs of every `(agent, seed)`, agent-major, each with the seed's dataset.
pub fn boorl_runs(p: &BoorlParams, seeds: &[u64]) -> Result<Vec<(BoorlRun, f64)>> {
    let grid = gridworld(p)?;
    let datasets: Vec<Vec<Record>> = seeds.iter().map(|&s| boorl_dataset(&grid, p, s)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..p.agents.len()).flat_map(|a| (0..seeds.len()).map(move |i| (a, i))).collect();
    par::map(&jobs, |&(a, i)| {
        let start = Instant::now();
        let run = run_boorl(&grid, &datasets[i], &p.config, p.agents[a], seeds[i])?;
        Ok((run, elapsed_ms(start)))
    })
    .into_iter()
    .collect()
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<FileEntry>,
}

impl Writer<'_> {
    fn write(&mut self, rel: &str, text: &str) -> Result<()> {
        let path = self.dir.join(rel);
        fs::write(&path, text).map_err(io_err(&path))
    }

    fn add(&mut self, rel: String, kind: FileKind, agent: Option<&str>, seed: Option<u64>, ms: Option<f64>, text: &str) -> Result<()> {
        self.write(&rel, text)?;
        self.files.push(FileEntry {
            path: rel,
            kind,
            agent: agent.map(str::to_string),
            seed,
            wall_clock_ms: ms,
        });
        Ok(())
    }
}

/// Executes every run of the config, writes per-run files, `summary.csv`,
/// `curves.svg` (for suites with curves) and `manifest.json` under
/// `output_dir`. The config is validated before anything runs.
pub fn run_suite(config: &ExperimentConfig) -> Result<RunManifest> {
    config.validate()?;
    let dir = config.output_dir.as_path();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut w = Writer { dir, files: Vec::new() };
    let mut curves: Vec<Curve> = Vec::new();

    match &config.suite {
        SuiteParams::Bandit(p) => {
            for d in bandit_digests(p, &config.seeds, &[])? {
                let rel = format!("{}_seed{}.csv", d.agent, d.seed);
                w.add(rel, FileKind::Trace, Some(&d.agent), Some(d.seed), Some(d.wall_clock_ms), &d.csv)?;
                curves.push(d.curve());
            }
        }
        SuiteParams::Counterexample(p) => {
            for &seed in &config.seeds {
                let start = Instant::now();
                let report = counterexample_report(p, seed)?;
                let tag = match p.mode {
                    FailureMode::Ucb => "ucb",
                    FailureMode::Lcb => "lcb",
                };
                let rel = format!("{tag}_failure_seed{seed}.csv");
                w.add(rel, FileKind::Table, Some(tag), Some(seed), Some(elapsed_ms(start)), &report.to_csv())?;
            }
        }
        SuiteParams::Linmdp(p) => {
            let reports = par::map(&config.seeds, |&seed| {
                let start = Instant::now();
                theorem_report(p, seed).map(|r| (r, elapsed_ms(start)))
            });
            for (&seed, rep) in config.seeds.iter().zip(reports) {
                let (rep, ms) = rep?;
                let rel = format!("decomposition_seed{seed}.jsonl");
                w.add(rel, FileKind::Records, None, Some(seed), Some(ms), &rep.to_jsonl())?;
            }
            let jobs: Vec<(usize, u64)> =
                (0..p.agents.len()).flat_map(|a| config.seeds.iter().map(move |&s| (a, s))).collect();
            let digests = par::map(&jobs, |&(a, seed)| {
                let start = Instant::now();
                let mdp = linmdp_for_seed(p, seed)?;
                let cfg = AgentConfig { mode: p.agents[a], ..p.agent };
                let trace = run_lsvi(&mdp, None, &cfg, p.episodes, seed)?;
                Ok::<_, LabError>(TraceDigest::new(&trace, &[], elapsed_ms(start)))
            });
            for d in digests {
                let d: TraceDigest = d?;
                let rel = format!("lsvi_{}_seed{}.csv", d.agent, d.seed);
                w.add(rel, FileKind::Trace, Some(&d.agent), Some(d.seed), Some(d.wall_clock_ms), &d.csv)?;
                curves.push(d.curve());
            }
        }
        SuiteParams::Bounds(p) => {
            let template = bound_template(p);
            let rows = bound_curve(&template, &p.ns, &p.ts)?;
            w.add("bound_curve.csv".into(), FileKind::Table, None, None, None, &bound_curve_csv(&rows))?;
            for &n in &p.ns {
                let mut steps = Vec::new();
                let mut values = Vec::new();
                for r in rows.iter().filter(|r| r.n == n) {
                    steps.push(r.t as usize);
                    values.push(r.bound);
                }
                curves.push(Curve {
                    agent: format!("N={n}"),
                    seed: 0,
                    steps,
                    values,
                });
            }
        }
        SuiteParams::Boorl(p) => {
            let grid = gridworld(p)?;
            for &seed in &config.seeds {
                let data = boorl_dataset(&grid, p, seed)?;
                w.add(format!("dataset_seed{seed}.csv"), FileKind::Dataset, None, Some(seed), None, &dataset_to_csv(&data))?;
            }
            let runs = boorl_runs(p, &config.seeds)?;
            let mut table = String::from("agent,seed,early_regret,final_return,optimal_return\n");
            for (run, ms) in &runs {
                let d = TraceDigest::new(&run.trace, &[], *ms);
                let tag = run.agent.tag();
                let seed = run.trace.seed;
                w.add(format!("{tag}_seed{seed}.csv"), FileKind::Trace, Some(tag), Some(seed), Some(*ms), &d.csv)?;
                w.add(
                    format!("{tag}_seed{seed}_episodes.jsonl"),
                    FileKind::Records,
                    Some(tag),
                    Some(seed),
                    None,
                    &run.episodes_jsonl(),
                )?;
                table.push_str(&format!(
                    "{tag},{seed},{},{},{}\n",
                    run.early_regret(EARLY_FRACTION),
                    run.final_return,
                    run.optimal_return
                ));
                curves.push(d.curve());
            }
            w.add("returns.csv".into(), FileKind::Table, None, None, None, &table)?;
            if !p.ablation.is_empty() {
                let sets: Vec<(u64, Vec<Record>)> = config
                    .seeds
                    .iter()
                    .map(|&s| boorl_dataset(&grid, p, s).map(|d| (s, d)))
                    .collect::<Result<_>>()?;
                let rows = ablate(&grid, &sets, &p.ablation, &p.config)?;
                w.add("ablation.csv".into(), FileKind::Table, None, None, None, &ablation_csv(&rows))?;
            }
        }
    }

    let (summary, summary_file, plot_file) = if curves.is_empty() {
        (Vec::new(), None, None)
    } else {
        let summary = summarize(&curves)?;
        w.write("summary.csv", &summary_csv(&summary))?;
        w.write("curves.svg", &render_curves(&summary, &plot_style(&config.suite))?)?;
        (summary, Some("summary.csv".to_string()), Some("curves.svg".to_string()))
    };
    let manifest = RunManifest {
        schema_version: super::config::SCHEMA_VERSION,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        suite: config.suite.name().to_string(),
        config_hash: config.hash(),
        files: w.files,
        summary_file,
        plot_file,
        summary,
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(io_err(&path))?;
    Ok(manifest)
}

/// Titles and axis labels for a suite's `curves.svg`.
pub fn plot_style(suite: &SuiteParams) -> PlotStyle {
    let mut style = PlotStyle::default();
    match suite {
        SuiteParams::Bandit(p) => {
            style.title = format!("{}-armed Bernoulli bandit, {} offline pulls", p.n_arms, p.offline_pulls);
            style.log_x = true;
        }
        SuiteParams::Counterexample(_) => {}
        SuiteParams::Linmdp(p) => {
            style.title = format!("LSVI on random {}-state, {}-action MDPs, H = {}", p.n_states, p.n_actions, p.horizon);
            style.x_label = "episode".into();
        }
        SuiteParams::Bounds(_) => {
            style.title = "Offline-to-online regret bound".into();
            style.x_label = "online steps T".into();
            style.y_label = "bound".into();
        }
        SuiteParams::Boorl(_) => {
            style.title = "Tabular offline-to-online ensemble on a gridworld".into();
        }
    }
    style
}

pub fn bound_template(p: &BoundsParams) -> BoundInputs {
    BoundInputs {
        d: p.d,
        horizon: p.horizon,
        c_dagger: p.c_dagger,
        c: p.c,
        delta: p.delta,
        ..BoundInputs::default()
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> LabError {
    LabError::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Re-reads a finished run directory: every listed file must exist and
/// parse, and the summary recomputed from the trace files must equal the
/// manifest's summary bit for bit.
pub fn check_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| parse_err(&path, e.to_string()))?;
    let mut curves = Vec::new();
    for entry in &manifest.files {
        let file = dir.join(&entry.path);
        let body = fs::read_to_string(&file).map_err(io_err(&file))?;
        match entry.kind {
            FileKind::Trace => {
                let rows = parse_trace_csv(&body).map_err(|m| parse_err(&file, m))?;
                curves.push(Curve {
                    agent: entry.agent.clone().unwrap_or_default(),
                    seed: entry.seed.unwrap_or(0),
                    steps: rows.iter().map(|r| r.0).collect(),
                    values: rows.iter().map(|r| r.2).collect(),
                });
            }
            FileKind::Table => {
                let mut lines = body.lines();
                let width = lines.next().map(|h| h.split(',').count()).unwrap_or(0);
                if width == 0 || lines.any(|l| l.split(',').count() != width) {
                    return Err(parse_err(&file, "ragged or empty table"));
                }
            }
            FileKind::Records => {
                for line in body.lines() {
                    serde_json::from_str::<serde_json::Value>(line).map_err(|e| parse_err(&file, e.to_string()))?;
                }
            }
            FileKind::Dataset => {
                dataset_from_csv(&body).map_err(|e| parse_err(&file, e.to_string()))?;
            }
        }
    }
    let recomputed = if manifest.summary_file.is_some() && !curves.is_empty() {
        summarize(&curves)?
    } else {
        Vec::new()
    };
    // Suites whose curves are not run files (bound tables) are checked
    // against the summary CSV instead.
    if !curves.is_empty() && recomputed != manifest.summary {
        return Err(parse_err(&path, "summary does not match the per-run files"));
    }
    if let Some(rel) = &manifest.summary_file {
        let file = dir.join(rel);
        let body = fs::read_to_string(&file).map_err(io_err(&file))?;
        if body != summary_csv(&manifest.summary) {
            return Err(parse_err(&file, "summary CSV does not match the manifest"));
        }
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::preset;

    fn small(name: &str, dir: &Path) -> ExperimentConfig {
        let mut cfg = preset(name).unwrap();
        cfg.output_dir = dir.to_path_buf();
        cfg.seeds = vec![1, 2];
        match &mut cfg.suite {
            SuiteParams::Bandit(p) => p.horizon = 2000,
            SuiteParams::Counterexample(p) => p.draws = 500,
            SuiteParams::Linmdp(p) => {
                p.theorem.episodes = 20;
                p.theorem.replays = 10;
                p.episodes = 30;
            }
            SuiteParams::Bounds(_) => cfg.seeds = vec![1],
            SuiteParams::Boorl(p) => p.config.total_steps = 200,
        }
        cfg
    }

    #[test]
    fn every_suite_writes_a_consistent_manifest() {
        for name in ["appendix_e", "ucb_counterexample", "lcb_counterexample", "regret_decomposition", "bound_curve", "gridworld5", "gridworld5_ablation"] {
            let tmp = tempfile::tempdir().unwrap();
            let cfg = small(name, tmp.path());
            let m = run_suite(&cfg).unwrap();
            assert_eq!(m.config_hash, cfg.hash());
            let back = check_manifest(tmp.path()).unwrap();
            assert_eq!(back, m, "{name}");
        }
    }

    #[test]
    fn bounds_suite_lists_one_file() {
        let tmp = tempfile::tempdir().unwrap();
        let m = run_suite(&small("bound_curve", tmp.path())).unwrap();
        assert_eq!(m.files.len(), 1);
        assert_eq!(m.summary.len(), 4);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = run_suite(&small("appendix_e", a.path())).unwrap();
        let mb = run_suite(&small("appendix_e", b.path())).unwrap();
        assert_eq!(ma.files.len(), 10);
        for f in ma.files.iter().map(|f| f.path.clone()).chain(["summary.csv".into(), "curves.svg".into()]) {
            assert_eq!(fs::read(a.path().join(&f)).unwrap(), fs::read(b.path().join(&f)).unwrap(), "{f}");
        }
        assert_eq!(ma.summary, mb.summary);
    }

    #[test]
    fn tampering_is_detected() {
        let tmp = tempfile::tempdir().unwrap();
        let m = run_suite(&small("appendix_e", tmp.path())).unwrap();
        let victim = tmp.path().join(&m.files[0].path);
        let text = fs::read_to_string(&victim).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let last = lines.len() - 1;
        lines[last] = format!("{},0,12345", lines[last].split(',').next().unwrap());
        fs::write(&victim, lines.join("\n") + "\n").unwrap();
        assert!(check_manifest(tmp.path()).is_err());
        fs::remove_file(&victim).unwrap();
        assert!(matches!(check_manifest(tmp.path()), Err(LabError::Io { .. })));
    }

    #[test]
    fn invalid_config_writes_nothing() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = small("appendix_e", &tmp.path().join("never"));
        cfg.seeds.clear();
        assert!(matches!(run_suite(&cfg), Err(LabError::Config(_))));
        assert!(!tmp.path().join("never").exists());
    }
}
