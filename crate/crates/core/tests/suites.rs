//! End-to-end suite runs: file schemas, determinism and manifest integrity.

use std::fs;

use o2o_lab::harness::{check_manifest, preset, run_suite, ExperimentConfig, SuiteParams};
use o2o_lab::LabError;

fn small(name: &str, dir: &std::path::Path) -> ExperimentConfig {
    let mut cfg = preset(name).unwrap();
    cfg.output_dir = dir.to_path_buf();
    cfg.seeds = vec![1, 2, 3];
    match &mut cfg.suite {
        SuiteParams::Bandit(p) => p.horizon = 3000,
        SuiteParams::Counterexample(p) => p.draws = 1000,
        SuiteParams::Linmdp(p) => {
            p.theorem.episodes = 10;
            p.theorem.replays = 8;
            p.theorem.info_samples = 100;
            p.episodes = 20;
        }
        SuiteParams::Bounds(_) => cfg.seeds = vec![1],
        SuiteParams::Boorl(p) => {
            p.config.total_steps = 300;
            p.dataset_size = 400;
        }
    }
    cfg
}

fn header(dir: &std::path::Path, file: &str) -> String {
    fs::read_to_string(dir.join(file)).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn csv_headers_are_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [(&str, &[(&str, &str)]); 5] = [
        ("appendix_e", &[("ucb_seed1.csv", "step,instantaneous,cumulative"), ("summary.csv", "agent,step,mean,std")]),
        ("ucb_counterexample", &[("ucb_failure_seed1.csv", "draws,p_rare_once,p_rare_once_se,mean_suboptimality,suboptimality_se")]),
        ("lcb_counterexample", &[("lcb_failure_seed1.csv", "draws,horizon,p_rare_once,mean_regret,regret_se")]),
        ("bound_curve", &[("bound_curve.csv", "N,T,bound")]),
        (
            "gridworld5",
            &[
                ("dataset_seed1.csv", "s,a,r,s_next,done"),
                ("returns.csv", "agent,seed,early_regret,final_return,optimal_return"),
                ("boorl_seed1.csv", "step,instantaneous,cumulative"),
            ],
        ),
    ];
    for (name, files) in cases {
        let dir = tmp.path().join(name);
        run_suite(&small(name, &dir)).unwrap();
        for (file, expected) in files {
            assert_eq!(header(&dir, file), *expected, "{name}/{file}");
        }
    }
}

#[test]
fn theorem_records_are_json_lines() {
    let tmp = tempfile::tempdir().unwrap();
    run_suite(&small("regret_decomposition", tmp.path())).unwrap();
    let text = fs::read_to_string(tmp.path().join("decomposition_seed2.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 10);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["episode", "regret", "bound", "slack"] {
            assert!(v.get(key).is_some(), "{key} missing in {line}");
        }
    }
    assert!(tmp.path().join("lsvi_ts_seed1.csv").exists());
}

#[test]
fn identical_configs_give_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run_suite(&small("gridworld5", a.path())).unwrap();
    let mb = run_suite(&small("gridworld5", b.path())).unwrap();
    assert_eq!(ma.config_hash, mb.config_hash);
    assert_eq!(ma.summary, mb.summary);
    for f in &ma.files {
        assert_eq!(fs::read(a.path().join(&f.path)).unwrap(), fs::read(b.path().join(&f.path)).unwrap(), "{}", f.path);
    }
}

#[test]
fn different_seeds_give_different_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut ca = small("appendix_e", a.path());
    ca.seeds = vec![1];
    let mut cb = small("appendix_e", b.path());
    cb.seeds = vec![2];
    assert_ne!(ca.hash(), cb.hash());
    let (ma, mb) = (run_suite(&ca).unwrap(), run_suite(&cb).unwrap());
    assert_ne!(ma.summary, mb.summary);
}

#[test]
fn manifest_survives_reload_and_catches_edits() {
    let tmp = tempfile::tempdir().unwrap();
    let m = run_suite(&small("regret_decomposition", tmp.path())).unwrap();
    assert_eq!(check_manifest(tmp.path()).unwrap(), m);
    fs::write(tmp.path().join("summary.csv"), "agent,step,mean,std\n").unwrap();
    assert!(matches!(check_manifest(tmp.path()), Err(LabError::Parse { .. })));
}

#[test]
fn bounds_seed_list_of_one_lists_one_file() {
    let tmp = tempfile::tempdir().unwrap();
    let m = run_suite(&small("bound_curve", tmp.path())).unwrap();
    assert_eq!(m.files.len(), 1);
    assert_eq!(m.files[0].path, "bound_curve.csv");
}

#[test]
fn config_json_round_trips_through_disk() {
    let tmp = tempfile::tempdir().unwrap();
    for name in o2o_lab::harness::PRESETS {
        let cfg = preset(name).unwrap();
        let path = tmp.path().join(format!("{name}.json"));
        fs::write(&path, cfg.to_json()).unwrap();
        let back = ExperimentConfig::load(&path).unwrap();
        assert_eq!(back.hash(), cfg.hash(), "{name}");
    }
}
