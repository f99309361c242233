//! Longer Monte-Carlo properties of the agents, averaged over many seeds.

use o2o_lab::bandit::{collect_offline_uniform, run_bandit_experiment, sample_bandit, AgentSpec};
use o2o_lab::boorl::{softmax_select, EnsembleMember};
use o2o_lab::linmdp::{expert_buffer, random_tabular, run_lsvi, AgentConfig, AgentMode};
use o2o_lab::par;
use o2o_lab::rng::{seeded, stream_rng, Stream};
use o2o_lab::stats::{half_slopes, mean};

/// Half-slope ratio of an OLS fit to `sqrt(t)`: `0.8 / sqrt(L)` on `[0, L]`
/// against `(sqrt 2 - 1) / sqrt(L)` on `[L, 2L]`, about 0.518. Linear regret
/// gives 1, logarithmic regret about 0.23.
const SQRT_RATIO: f64 = 0.518;

fn mean_curve(curves: &[Vec<f64>]) -> Vec<f64> {
    (0..curves[0].len()).map(|i| mean(&curves.iter().map(|c| c[i]).collect::<Vec<_>>())).collect()
}

#[test]
fn bandit_ts_regret_flattens() {
    let seeds: Vec<u64> = (1..=20).collect();
    let curves = par::map(&seeds, |&seed| {
        let bandit = sample_bandit(10, 1.0, 1.0, &mut stream_rng(seed, Stream::Environment)).unwrap();
        let offline = collect_offline_uniform(&bandit, 1000, &mut stream_rng(seed, Stream::Offline));
        run_bandit_experiment(&bandit, &offline, &AgentSpec::ts(), 100_000, seed)
            .unwrap()
            .cumulative
    });
    let (first, last) = half_slopes(&mean_curve(&curves));
    assert!(last < (SQRT_RATIO + 0.08) * first, "first {first} last {last}");
}

#[test]
fn sqrt_reference_ratio() {
    let curve: Vec<f64> = (1..=100_000).map(|t| (t as f64).sqrt()).collect();
    let (first, last) = half_slopes(&curve);
    assert!((last / first - SQRT_RATIO).abs() < 5e-3, "{}", last / first);
    let log: Vec<f64> = (1..=100_000).map(|t| (t as f64).ln()).collect();
    let (first, last) = half_slopes(&log);
    assert!(last / first < 0.25);
}

#[test]
fn lsvi_ts_regret_is_sublinear() {
    let mdp = random_tabular(5, 2, 3, true, &mut seeded(2024)).unwrap();
    let seeds: Vec<u64> = (1..=200).collect();
    let cfg = AgentConfig::with_mode(AgentMode::Ts);
    let curves = par::map(&seeds, |&seed| run_lsvi(&mdp, None, &cfg, 2000, seed).unwrap().cumulative);
    let (first, last) = half_slopes(&mean_curve(&curves));
    assert!(last < (SQRT_RATIO + 0.08) * first, "first {first} last {last}");
}

#[test]
fn expert_warm_start_lowers_first_episode_regret() {
    let mdp = random_tabular(5, 2, 3, true, &mut seeded(77)).unwrap();
    let cfg = AgentConfig::with_mode(AgentMode::Ts);
    let seeds: Vec<u64> = (1..=200).collect();
    let pairs = par::map(&seeds, |&seed| {
        let buffer = expert_buffer(&mdp, 5000, &mut stream_rng(seed, Stream::Offline));
        let warm = run_lsvi(&mdp, Some(&buffer), &cfg, 1, seed).unwrap().total();
        let fresh = run_lsvi(&mdp, None, &cfg, 1, seed).unwrap().total();
        (warm, fresh)
    });
    let warm = mean(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let fresh = mean(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    assert!(warm < fresh, "warm {warm} fresh {fresh}");
}

#[test]
fn hot_softmax_selects_uniformly() {
    let members: Vec<EnsembleMember> = (0..4).map(|i| EnsembleMember::constant(i, 1, i as f64 * 0.3)).collect();
    let mut rng = seeded(9);
    let n = 100_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        counts[softmax_select(&members, 0, 1e9, &mut rng).unwrap()] += 1;
    }
    let expected = n as f64 / 4.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 99.9% quantile of chi-squared with 3 degrees of freedom.
    assert!(chi2 < 16.27, "chi2 {chi2} counts {counts:?}");
}
