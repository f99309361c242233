//! Monte-Carlo estimate of the information ratio of a Gaussian weight
//! posterior.

use nalgebra::{Cholesky, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{invalid, LabError, Result};
use crate::linmdp::{info_gain_factored, GaussianPosterior};

/// Ratio of consecutive candidate values of `Gamma`.
pub const GRID_RATIO: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoRatioEstimate {
    pub gamma_hat: f64,
    pub n_samples: usize,
    pub violation_rate: f64,
}

/// Smallest `1.1^j` (integer `j`) that is `>= x`; 0 for `x = 0`.
pub fn grid_ceil(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut j = (x.ln() / GRID_RATIO.ln()).ceil() as i32;
    // Guard the rounding of ln in both directions.
    while GRID_RATIO.powi(j) < x {
        j += 1;
    }
    while GRID_RATIO.powi(j - 1) >= x {
        j -= 1;
    }
    GRID_RATIO.powi(j)
}

/// Grid-minimal `Gamma` such that `|dev| <= Gamma/2 * sqrt(info)` holds for
/// at least a `1 - delta/2` fraction of the paired samples.
pub fn info_ratio_from_samples(deviations: &[f64], info: &[f64], delta: f64) -> Result<InfoRatioEstimate> {
    if deviations.len() != info.len() {
        return Err(invalid("deviation and information samples differ in length"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta must lie in (0, 1)"));
    }
    let n = deviations.len();
    if n == 0 {
        return Err(invalid("no samples"));
    }
    let mut ratios = Vec::with_capacity(n);
    for (&dev, &ig) in deviations.iter().zip(info) {
        let dev = dev.abs();
        if dev == 0.0 {
            ratios.push(0.0);
        } else if ig <= 0.0 {
            return Err(LabError::ZeroInformation);
        } else {
            ratios.push(2.0 * dev / ig.sqrt());
        }
    }
    ratios.sort_by(f64::total_cmp);
    let k = ((1.0 - delta / 2.0) * n as f64).ceil() as usize;
    let gamma_hat = grid_ceil(ratios[k.clamp(1, n) - 1]);
    let violations = ratios.iter().filter(|&&r| r > gamma_hat).count();
    Ok(InfoRatioEstimate {
        gamma_hat,
        n_samples: n,
        violation_rate: violations as f64 / n as f64,
    })
}

/// Per-draw deviations `|<w_h - w_hat_h, phi>|` and information gains for
/// every step `h` and every feature, for `w_h ~ N(w_hat_h, scale^2 Lambda_h^{-1})`.
///
/// The deviation does not depend on the posterior mean, so only the
/// factors of the precisions are needed.
pub fn sample_deviations<R: Rng + ?Sized>(
    factors: &[Cholesky<f64, Dyn>],
    features: &[DVector<f64>],
    scale: f64,
    n_draws: usize,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut devs = Vec::with_capacity(n_draws * factors.len() * features.len());
    let mut info = Vec::with_capacity(devs.capacity());
    let gains: Vec<Vec<f64>> = factors
        .iter()
        .map(|chol| features.iter().map(|phi| info_gain_factored(phi, chol)).collect())
        .collect();
    for _ in 0..n_draws {
        for (chol, gains_h) in factors.iter().zip(&gains) {
            let d = chol.l_dirty().nrows();
            let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let offset = chol
                .l_dirty()
                .tr_solve_lower_triangular(&z)
                .expect("Cholesky factor has a positive diagonal");
            for (phi, &ig) in features.iter().zip(gains_h) {
                devs.push(scale * offset.dot(phi));
                info.push(ig);
            }
        }
    }
    (devs, info)
}

/// Estimates `Gamma` for a Gaussian posterior over the weights of every
/// step, sampling `n_samples` joint draws and scoring every `(h, s, a)`.
pub fn estimate_info_ratio<R: Rng + ?Sized>(
    posterior: &GaussianPosterior,
    features: &[DVector<f64>],
    scale: f64,
    n_samples: usize,
    delta: f64,
    rng: &mut R,
) -> Result<InfoRatioEstimate> {
    if !(scale >= 0.0) {
        return Err(invalid("posterior scale must be non-negative"));
    }
    let factors = posterior
        .steps
        .iter()
        .map(|s| s.cholesky())
        .collect::<Result<Vec<_>>>()?;
    let (devs, info) = sample_deviations(&factors, features, scale, n_samples, rng);
    info_ratio_from_samples(&devs, &info, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use nalgebra::DMatrix;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn one_hot_1d() -> Vec<DVector<f64>> {
        vec![DVector::from_vec(vec![1.0])]
    }

    #[test]
    fn grid_rounding() {
        assert_eq!(grid_ceil(0.0), 0.0);
        assert_eq!(grid_ceil(1.0), 1.0);
        assert!((grid_ceil(1.05) - 1.1).abs() < 1e-15);
        for x in [0.01, 0.5, 3.3, 17.0, 1234.5] {
            let g = grid_ceil(x);
            assert!(g >= x && g / GRID_RATIO < x);
        }
    }

    #[test]
    fn point_mass_gives_zero() {
        let post = GaussianPosterior::prior(1, 2, 1.0);
        let est = estimate_info_ratio(&post, &one_hot_1d(), 0.0, 100, 0.05, &mut seeded(0)).unwrap();
        assert_eq!(est.gamma_hat, 0.0);
        assert_eq!(est.violation_rate, 0.0);
    }

    #[test]
    fn zero_information_with_spread_is_an_error() {
        let err = info_ratio_from_samples(&[0.5], &[0.0], 0.05).unwrap_err();
        assert!(matches!(err, LabError::ZeroInformation));
        assert!(info_ratio_from_samples(&[0.0], &[0.0], 0.05).is_ok());
    }

    /// `2 z_{1 - delta/4} sigma_post / sqrt(I)` for a one-dimensional
    /// Gaussian: `P(|Z| > z_{1-delta/4}) = delta/2`.
    fn analytic_gamma(precision: f64, delta: f64) -> f64 {
        let z = Normal::standard().inverse_cdf(1.0 - delta / 4.0);
        let sd = precision.powf(-0.5);
        let ig = 0.5 * (1.0 / precision).ln_1p();
        2.0 * z * sd / ig.sqrt()
    }

    #[test]
    fn one_dimensional_gaussian_matches_analytic_ratio() {
        for precision in [1.0, 4.0, 30.0] {
            let mut post = GaussianPosterior::prior(1, 1, 1.0);
            post.steps[0].precision = DMatrix::from_element(1, 1, precision);
            let est = estimate_info_ratio(&post, &one_hot_1d(), 1.0, 100_000, 0.05, &mut seeded(5)).unwrap();
            let target = analytic_gamma(precision, 0.05);
            assert!((est.gamma_hat / target - 1.0).abs() < 0.10, "{} vs {target}", est.gamma_hat);
            assert!(est.violation_rate <= 0.025);
        }
    }

    #[test]
    fn doubling_data_shrinks_product_like_posterior_std() {
        let product = |precision: f64| {
            let mut post = GaussianPosterior::prior(1, 1, 1.0);
            post.steps[0].precision = DMatrix::from_element(1, 1, precision);
            let est = estimate_info_ratio(&post, &one_hot_1d(), 1.0, 100_000, 0.05, &mut seeded(6)).unwrap();
            est.gamma_hat * (0.5 * (1.0 / precision).ln_1p()).sqrt()
        };
        let ratio = product(200.0) / product(100.0);
        // Grid rounding moves each estimate by at most 10%.
        assert!((ratio - 0.5f64.sqrt()).abs() < 0.1, "{ratio}");
    }
}
