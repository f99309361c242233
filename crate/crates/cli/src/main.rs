use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use o2o_lab::harness::verify::{criteria_for_preset, run_all, run_bandit_criteria, run_criterion};
use o2o_lab::harness::{
    check_manifest, plot_style, preset, render_curves, run_suite, CriterionReport, ExperimentConfig, RunManifest,
};
use o2o_lab::LabError;

#[derive(Parser)]
#[command(name = "o2o-lab", version, about = "Offline-to-online RL experiment suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bernoulli bandit agents warm-started from offline pulls.
    Bandit(Common),
    /// Two-arm constructions where UCB and LCB fail.
    Counterexample(Common),
    /// Regret decomposition and LSVI runs on tabular linear MDPs.
    Linmdp(Common),
    /// Closed-form regret bound table.
    Bounds(Common),
    /// Bootstrapped ensemble on a gridworld.
    Boorl(Common),
    /// Evaluate acceptance criteria (all of them without --preset).
    Verify(VerifyArgs),
    /// Check a finished run directory and redraw its curves.svg.
    Plot(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seeds overriding the config's list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output directory overriding the config's.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Built-in config name.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Only these criterion ids.
    #[arg(long, value_delimiter = ',')]
    criterion: Option<Vec<u8>>,
}

/// Default preset per run subcommand.
fn default_preset(suite: &str) -> &'static str {
    match suite {
        "bandit" => "appendix_e",
        "counterexample" => "ucb_counterexample",
        "linmdp" => "regret_decomposition",
        "bounds" => "bound_curve",
        _ => "gridworld5",
    }
}

fn resolve(args: &Common, fallback: Option<&str>) -> Result<ExperimentConfig, LabError> {
    let mut config = match (&args.config, &args.preset, fallback) {
        (Some(_), Some(_), _) => return Err(LabError::Config("pass either --config or --preset, not both".into())),
        (Some(path), None, _) => ExperimentConfig::load(path).map_err(|e| LabError::Config(e.to_string()))?,
        (None, Some(name), _) => preset(name)?,
        (None, None, Some(name)) => preset(name)?,
        (None, None, None) => return Err(LabError::Config("pass --config or --preset".into())),
    };
    if let Some(seeds) = &args.seeds {
        config.seeds = seeds.clone();
    }
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn run(suite: &str, args: &Common) -> Result<(PathBuf, RunManifest), LabError> {
    let config = resolve(args, Some(default_preset(suite)))?;
    if config.suite.name() != suite {
        return Err(LabError::Config(format!(
            "config describes a {} suite, not {suite}",
            config.suite.name()
        )));
    }
    Ok((config.output_dir.clone(), run_suite(&config)?))
}

fn print_manifest(dir: &Path, m: &RunManifest) {
    println!("{} suite, config {}", m.suite, &m.config_hash[..12]);
    println!("{} run files in {}", m.files.len(), dir.display());
    for s in &m.summary {
        let last = s.mean.len() - 1;
        println!(
            "  {:<12} n={:<4} step {:>8}: mean {:.4} std {:.4}",
            s.agent, s.n_runs, s.steps[last], s.mean[last], s.std[last]
        );
    }
}

fn verify(args: &VerifyArgs) -> Result<Vec<CriterionReport>, LabError> {
    let c = &args.common;
    if c.config.is_some() {
        return Err(LabError::Config("verify runs built-in presets; use --preset".into()));
    }
    let seeds = c.seeds.as_deref();
    let golden = c.out.clone().unwrap_or_else(|| PathBuf::from("out/golden"));
    let ids: Option<Vec<u8>> = match (&args.criterion, &c.preset) {
        (Some(ids), _) => Some(ids.clone()),
        (None, Some(name)) => {
            preset(name)?;
            Some(criteria_for_preset(name))
        }
        (None, None) => None,
    };
    Ok(match ids {
        None => run_all(seeds, &golden),
        Some(ids) if ids.contains(&3) && ids.contains(&4) => {
            let mut out: Vec<CriterionReport> =
                ids.iter().filter(|&&i| i != 3 && i != 4).map(|&i| run_criterion(i, seeds, &golden)).collect();
            out.extend(run_bandit_criteria(seeds));
            out.sort_by_key(|r| r.id);
            out
        }
        Some(ids) => ids.iter().map(|&i| run_criterion(i, seeds, &golden)).collect(),
    })
}

fn plot(args: &Common) -> Result<PathBuf, LabError> {
    let config = resolve(args, None)?;
    let dir = &config.output_dir;
    let manifest = check_manifest(dir)?;
    if manifest.summary.is_empty() {
        return Err(LabError::Config(format!("{} suite has no curves to plot", manifest.suite)));
    }
    let path = dir.join(manifest.plot_file.as_deref().unwrap_or("curves.svg"));
    let svg = render_curves(&manifest.summary, &plot_style(&config.suite))?;
    std::fs::write(&path, svg).map_err(|source| LabError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn exit_for(e: &LabError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        LabError::Config(_) | LabError::Json(_) | LabError::InvalidArgument(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (suite, args) = match &cli.command {
        Command::Bandit(a) => ("bandit", a),
        Command::Counterexample(a) => ("counterexample", a),
        Command::Linmdp(a) => ("linmdp", a),
        Command::Bounds(a) => ("bounds", a),
        Command::Boorl(a) => ("boorl", a),
        Command::Verify(v) => {
            return match verify(v) {
                Ok(reports) => {
                    reports.iter().for_each(|r| println!("{r}"));
                    let failed = reports.iter().filter(|r| !r.passed()).count();
                    println!("{} of {} criteria passed", reports.len() - failed, reports.len());
                    if failed == 0 && !reports.is_empty() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => exit_for(&e),
            };
        }
        Command::Plot(a) => {
            return match plot(a) {
                Ok(path) => {
                    println!("wrote {}", path.display());
                    ExitCode::SUCCESS
                }
                Err(e) => exit_for(&e),
            };
        }
    };
    match run(suite, args) {
        Ok((dir, m)) => {
            print_manifest(&dir, &m);
            ExitCode::SUCCESS
        }
        Err(e) => exit_for(&e),
    }
}
