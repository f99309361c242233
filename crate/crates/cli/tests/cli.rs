use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_o2o-lab")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bounds_preset_writes_table_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["bounds", "--preset", "bound_curve", "--out", path(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["bound_curve.csv", "summary.csv", "curves.svg", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("bound_curve.csv")).unwrap();
    assert!(csv.starts_with("N,T,bound\n"));

    std::fs::remove_file(dir.path().join("curves.svg")).unwrap();
    let out = lab(&["plot", "--preset", "bound_curve", "--out", path(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("curves.svg").exists());
}

#[test]
fn seeds_flag_overrides_the_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["counterexample", "--preset", "lcb_counterexample", "--seeds", "3,4", "--out", path(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("lcb_failure_seed3.csv").exists());
    assert!(dir.path().join("lcb_failure_seed4.csv").exists());
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let config = serde_json::json!({
        "schema_version": 1,
        "suite": "boorl",
        "params": {"config": {"total_steps": 300}, "dataset_size": 500},
        "seeds": [7],
        "output_dir": out_dir,
    });
    let cfg_path = dir.path().join("boorl.json");
    std::fs::write(&cfg_path, config.to_string()).unwrap();
    let out = lab(&["boorl", "--config", path(&cfg_path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["dataset_seed7.csv", "boorl_seed7.csv", "boorl_seed7_episodes.jsonl", "returns.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    // A boorl config handed to another subcommand is a config error.
    assert_eq!(code(&lab(&["bandit", "--config", path(&cfg_path)])), 2);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema_version": 1, "suite": "bandit", "params": {"n_arms": 1}, "seeds": [1], "output_dir": "x"}"#).unwrap();
    assert_eq!(code(&lab(&["bandit", "--config", path(&bad)])), 2);
    std::fs::write(&bad, r#"{"schema_version": 1, "suite": "bandit", "params": {"arms": 3}, "seeds": [1], "output_dir": "x"}"#).unwrap();
    assert_eq!(code(&lab(&["bandit", "--config", path(&bad)])), 2);
    assert_eq!(code(&lab(&["bandit", "--config", path(&dir.path().join("missing.json"))])), 2);
    assert_eq!(code(&lab(&["bandit", "--preset", "nope"])), 2);
    assert_eq!(code(&lab(&["bounds", "--preset", "bound_curve", "--seeds", "1,1"])), 2);
    assert_eq!(code(&lab(&["bounds", "--preset", "bound_curve", "--config", path(&bad)])), 2);
    assert!(!Path::new("x").exists());
}

#[test]
fn verify_selected_criteria() {
    let out = lab(&["verify", "--criterion", "5,7,8"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS criterion")).count(), 3);
    assert!(text.contains("3 of 3 criteria passed"));
}

#[test]
fn verify_preset_and_unknown_criterion() {
    let out = lab(&["verify", "--preset", "ucb_counterexample"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("criterion  1"));
    assert_eq!(code(&lab(&["verify", "--criterion", "99"])), 1);
}
