//! Bayesian coverage coefficient of a behavior distribution.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::linmdp::{dp, ts_sample_weights, GaussianPosterior, LinearMdp};

/// Eigenvalues below `SPAN_TOL * max_eigenvalue` count as outside the span.
const SPAN_TOL: f64 = 1e-12;

/// Distribution over step weights `w = (w_1, .., w_H)`.
#[derive(Debug, Clone)]
pub enum WeightSampler {
    PointMass(Vec<DVector<f64>>),
    Gaussian { posterior: GaussianPosterior, scale: f64 },
}

impl WeightSampler {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<DVector<f64>>> {
        match self {
            WeightSampler::PointMass(w) => Ok(w.clone()),
            WeightSampler::Gaussian { posterior, scale } => ts_sample_weights(posterior, *scale, rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageResult {
    pub value: f64,
    pub per_h: Vec<f64>,
    pub n_posterior_samples: usize,
}

/// `E[phi phi^T]` under an occupancy `dist[sa]`.
pub fn feature_covariance(mdp: &LinearMdp, dist: &[f64]) -> DMatrix<f64> {
    let d = mdp.d();
    let na = mdp.n_actions();
    let mut sigma = DMatrix::zeros(d, d);
    for (sa, &p) in dist.iter().enumerate() {
        if p != 0.0 {
            let phi = mdp.phi(sa / na, sa % na);
            sigma.ger(p, phi, phi, 1.0);
        }
    }
    sigma
}

/// Whitening of a PSD matrix restricted to its positive eigenspace.
struct Whitener {
    /// `U_+ diag(lambda_+^{-1/2})`, `d x r`.
    map: DMatrix<f64>,
    /// Orthonormal basis `U_+` of the span.
    basis: DMatrix<f64>,
}

impl Whitener {
    fn new(sigma: &DMatrix<f64>) -> Result<Self> {
        let eig = SymmetricEigen::new(sigma.clone());
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        if !(top > 0.0) {
            return Err(invalid("behavior feature covariance is zero"));
        }
        let keep: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&i| eig.eigenvalues[i] > SPAN_TOL * top)
            .collect();
        let d = sigma.nrows();
        let mut map = DMatrix::zeros(d, keep.len());
        let mut basis = DMatrix::zeros(d, keep.len());
        for (j, &i) in keep.iter().enumerate() {
            let u = eig.eigenvectors.column(i);
            basis.set_column(j, &u);
            map.set_column(j, &(u / eig.eigenvalues[i].sqrt()));
        }
        Ok(Self { map, basis })
    }

    /// Largest generalized eigenvalue of `(target, sigma)` on the span, or
    /// infinity when `target` has mass off the span.
    fn ratio(&self, target: &DMatrix<f64>) -> f64 {
        let d = target.nrows();
        let off = DMatrix::identity(d, d) - &self.basis * self.basis.transpose();
        let leak = (&off * target * &off).abs().max();
        let scale = target.abs().max().max(1.0);
        if leak > 1e-10 * scale {
            return f64::INFINITY;
        }
        let m = self.map.transpose() * target * &self.map;
        SymmetricEigen::new(m).eigenvalues.iter().cloned().fold(0.0, f64::max)
    }
}

/// `C = max_h E_w sup_x (x^T S_{pi*_w,h} x) / (x^T S_{rho_h} x)`, with the
/// sup over the span of `S_{rho_h}`.
///
/// `rho[h][sa]` is the behavior occupancy at step `h`. Each draw of `w` is
/// turned into its greedy policy, whose exact occupancy gives `S_{pi*_w,h}`.
pub fn coverage_coefficient<R: Rng + ?Sized>(
    mdp: &LinearMdp,
    rho: &[Vec<f64>],
    sampler: &WeightSampler,
    n_samples: usize,
    rng: &mut R,
) -> Result<CoverageResult> {
    let hz = mdp.horizon();
    if rho.len() != hz || rho.iter().any(|r| r.len() != mdp.n_states() * mdp.n_actions()) {
        return Err(invalid("behavior occupancy must be H rows of |S||A| entries"));
    }
    if n_samples == 0 {
        return Err(invalid("need at least one posterior sample"));
    }
    let whiteners = rho
        .iter()
        .map(|r| Whitener::new(&feature_covariance(mdp, r)))
        .collect::<Result<Vec<_>>>()?;
    let mut per_h = vec![0.0; hz];
    for _ in 0..n_samples {
        let w = sampler.draw(rng)?;
        let occ = dp::visitation(mdp, &dp::greedy_from_weights(mdp, &w));
        for h in 0..hz {
            per_h[h] += whiteners[h].ratio(&feature_covariance(mdp, &occ[h]));
        }
    }
    for v in &mut per_h {
        *v /= n_samples as f64;
    }
    let value = per_h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(CoverageResult {
        value,
        per_h,
        n_posterior_samples: n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmdp::{make_tabular_linear, random_tabular};
    use crate::rng::seeded;

    /// Direct ratio `max_h max_sa d_h(sa) / rho_h(sa)` for one-hot features.
    fn ratio_oracle(occ: &[Vec<f64>], rho: &[Vec<f64>]) -> f64 {
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

    #[test]
    fn optimal_behavior_gives_one() {
        let mdp = random_tabular(4, 3, 3, true, &mut seeded(1)).unwrap();
        let sol = dp::solve(&mdp);
        let rho = dp::visitation(&mdp, &sol.policy);
        let sampler = WeightSampler::PointMass(dp::optimal_weights(&mdp));
        let c = coverage_coefficient(&mdp, &rho, &sampler, 1, &mut seeded(0)).unwrap();
        assert!((c.value - 1.0).abs() < 1e-10, "{}", c.value);
    }

    #[test]
    fn uniform_behavior_two_by_two() {
        // Deterministic: every action keeps state 0; action 0 pays.
        let tab = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]];
        let rew = vec![1.0, 0.0, 0.0, 0.0];
        let mdp = make_tabular_linear(2, 2, &[tab], &[rew]).unwrap();
        let rho = vec![vec![0.25; 4]];
        let sampler = WeightSampler::PointMass(dp::optimal_weights(&mdp));
        let c = coverage_coefficient(&mdp, &rho, &sampler, 1, &mut seeded(0)).unwrap();
        assert!((c.value - 4.0).abs() < 1e-10);
    }

    #[test]
    fn matches_ratio_oracle_on_random_mdps() {
        let mut rng = seeded(3);
        for _ in 0..10 {
            let mdp = random_tabular(3, 2, 2, true, &mut rng).unwrap();
            let rho: Vec<Vec<f64>> = (0..2)
                .map(|_| {
                    let raw: Vec<f64> = (0..6).map(|_| rng.random::<f64>() + 0.05).collect();
                    let total: f64 = raw.iter().sum();
                    raw.iter().map(|x| x / total).collect()
                })
                .collect();
            let sampler = WeightSampler::PointMass(dp::optimal_weights(&mdp));
            let c = coverage_coefficient(&mdp, &rho, &sampler, 1, &mut rng).unwrap();
            let occ = dp::visitation(&mdp, &dp::solve(&mdp).policy);
            assert!((c.value - ratio_oracle(&occ, &rho)).abs() < 1e-8);
        }
    }

    #[test]
    fn uncovered_pair_is_infinite() {
        let tab = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]];
        let mdp = make_tabular_linear(2, 2, &[tab], &[vec![1.0, 0.0, 0.0, 0.0]]).unwrap();
        let rho = vec![vec![0.0, 1.0, 0.0, 0.0]];
        let sampler = WeightSampler::PointMass(dp::optimal_weights(&mdp));
        let c = coverage_coefficient(&mdp, &rho, &sampler, 1, &mut seeded(0)).unwrap();
        assert!(c.value.is_infinite());
    }

    #[test]
    fn rejects_zero_behavior_and_bad_shapes() {
        let mdp = random_tabular(2, 2, 1, false, &mut seeded(0)).unwrap();
        let sampler = WeightSampler::PointMass(dp::optimal_weights(&mdp));
        assert!(coverage_coefficient(&mdp, &[vec![0.0; 4]], &sampler, 1, &mut seeded(0)).is_err());
        assert!(coverage_coefficient(&mdp, &[vec![0.25; 3]], &sampler, 1, &mut seeded(0)).is_err());
    }

    #[test]
    fn gaussian_sampler_averages_and_maxes() {
        let mdp = random_tabular(3, 2, 2, true, &mut seeded(8)).unwrap();
        let rho = vec![vec![1.0 / 6.0; 6]; 2];
        let sampler = WeightSampler::Gaussian {
            posterior: GaussianPosterior::prior(6, 2, 1.0),
            scale: 1.0,
        };
        let c = coverage_coefficient(&mdp, &rho, &sampler, 64, &mut seeded(2)).unwrap();
        assert_eq!(c.per_h.len(), 2);
        assert_eq!(c.value, c.per_h.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        // Every deterministic policy puts at most mass 1 on one pair: ratio <= 6.
        assert!(c.per_h.iter().all(|&v| (1.0..=6.0 + 1e-9).contains(&v)));
    }
}
