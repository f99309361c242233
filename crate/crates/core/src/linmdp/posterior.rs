//! Ridge-regression Gaussian posteriors over per-step value weights.
//!
//! With prior `w_h ~ N(0, I / lambda)` and unit observation noise, the
//! posterior after regressing targets `y = r + V(s')` on `phi(s, a)` is
//! `N(w_hat_h, Lambda_h^{-1})` with `Lambda_h = sum phi phi^T + lambda I` and
//! `w_hat_h = Lambda_h^{-1} sum phi y`.

use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::LinearMdp;
use crate::error::{invalid, LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Offline,
    Online,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub h: usize,
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeBuffer {
    pub source: Source,
    pub transitions: Vec<Transition>,
}

impl EpisodeBuffer {
    pub fn new(source: Source) -> Self {
        Self {
            source,
            transitions: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    /// Checks steps lie in `0..horizon` and rewards in [0, 1].
    pub fn validate(&self, horizon: usize) -> Result<()> {
        for t in &self.transitions {
            if t.h >= horizon {
                return Err(invalid(format!("transition step {} outside horizon {horizon}", t.h)));
            }
            if !(0.0..=1.0).contains(&t.r) {
                return Err(invalid(format!("reward {} outside [0, 1]", t.r)));
            }
        }
        Ok(())
    }
}

/// Posterior of one step: mean `w_hat_h` and precision `Lambda_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorStep {
    pub mean: DVector<f64>,
    pub precision: DMatrix<f64>,
}

impl PosteriorStep {
    pub fn prior(d: usize, ridge: f64) -> Self {
        Self {
            mean: DVector::zeros(d),
            precision: DMatrix::identity(d, d) * ridge,
        }
    }

    pub fn cholesky(&self) -> Result<Cholesky<f64, Dyn>> {
        Cholesky::new(self.precision.clone()).ok_or(LabError::NotPositiveDefinite)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub ridge: f64,
    pub steps: Vec<PosteriorStep>,
}

impl GaussianPosterior {
    pub fn prior(d: usize, horizon: usize, ridge: f64) -> Self {
        Self {
            ridge,
            steps: vec![PosteriorStep::prior(d, ridge); horizon],
        }
    }

    /// CSV dump `h,row,mean,p0..p{d-1}`: one row of `Lambda_h` per line.
    pub fn to_csv(&self) -> String {
        let d = self.steps.first().map_or(0, |s| s.mean.len());
        let mut out = String::from("h,row,mean");
        for j in 0..d {
            let _ = write!(out, ",p{j}");
        }
        out.push('\n');
        for (h, step) in self.steps.iter().enumerate() {
            for i in 0..d {
                let _ = write!(out, "{},{},{}", h + 1, i, step.mean[i]);
                for j in 0..d {
                    let _ = write!(out, ",{}", step.precision[(i, j)]);
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Batch ridge fit of step `h` over every step-`h` transition in `buffer`.
///
/// `value_next[s']` is the value estimate `V_{h+1}(s')` used in the targets.
pub fn posterior_fit(
    mdp: &LinearMdp,
    buffer: &EpisodeBuffer,
    value_next: &[f64],
    h: usize,
    ridge: f64,
) -> Result<PosteriorStep> {
    if !(ridge > 0.0) {
        return Err(invalid("ridge must be positive"));
    }
    if value_next.len() != mdp.n_states() {
        return Err(invalid("value_next must have one entry per state"));
    }
    let d = mdp.d();
    let mut precision = DMatrix::identity(d, d) * ridge;
    let mut rhs = DVector::zeros(d);
    for t in buffer.transitions.iter().filter(|t| t.h == h) {
        let phi = mdp.phi(t.s, t.a);
        precision.ger(1.0, phi, phi, 1.0);
        rhs.axpy(t.r + value_next[t.s_next], phi, 1.0);
    }
    let chol = Cholesky::new(precision.clone()).ok_or(LabError::NotPositiveDefinite)?;
    Ok(PosteriorStep {
        mean: chol.solve(&rhs),
        precision,
    })
}

/// Mutual information `1/2 log(1 + phi^T Lambda^{-1} phi)` between the
/// weights and one observation at feature `phi`.
pub fn info_gain(phi: &DVector<f64>, precision: &DMatrix<f64>) -> Result<f64> {
    let chol = Cholesky::new(precision.clone()).ok_or(LabError::NotPositiveDefinite)?;
    Ok(info_gain_factored(phi, &chol))
}

/// [`info_gain`] with a precomputed Cholesky factor of the precision.
pub fn info_gain_factored(phi: &DVector<f64>, chol: &Cholesky<f64, Dyn>) -> f64 {
    0.5 * quad_form_inv(phi, chol).ln_1p()
}

/// `phi^T Lambda^{-1} phi` via the factor `Lambda = L L^T`.
pub fn quad_form_inv(phi: &DVector<f64>, chol: &Cholesky<f64, Dyn>) -> f64 {
    let x = chol
        .l_dirty()
        .solve_lower_triangular(phi)
        .expect("Cholesky factor has a positive diagonal");
    x.norm_squared()
}

/// Per-step sufficient statistics for repeated ridge fits with changing
/// value targets over a finite state space.
///
/// Keeps `Gram_h = sum phi phi^T`, `b_h = sum phi r` and
/// `M_h = sum phi e_{s'}^T`, so `w_hat_h = Lambda_h^{-1} (b_h + M_h V_{h+1})`.
#[derive(Debug, Clone)]
pub struct LsviStats {
    ridge: f64,
    gram: Vec<DMatrix<f64>>,
    reward_sum: Vec<DVector<f64>>,
    next_state: Vec<DMatrix<f64>>,
    factors: Vec<Option<Cholesky<f64, Dyn>>>,
    count: usize,
}

impl LsviStats {
    pub fn new(mdp: &LinearMdp, ridge: f64) -> Result<Self> {
        if !(ridge > 0.0) {
            return Err(invalid("ridge must be positive"));
        }
        let (d, hz, ns) = (mdp.d(), mdp.horizon(), mdp.n_states());
        Ok(Self {
            ridge,
            gram: vec![DMatrix::zeros(d, d); hz],
            reward_sum: vec![DVector::zeros(d); hz],
            next_state: vec![DMatrix::zeros(d, ns); hz],
            factors: vec![None; hz],
            count: 0,
        })
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn absorb(&mut self, mdp: &LinearMdp, t: &Transition) {
        let phi = mdp.phi(t.s, t.a);
        self.gram[t.h].ger(1.0, phi, phi, 1.0);
        self.reward_sum[t.h].axpy(t.r, phi, 1.0);
        let mut col = self.next_state[t.h].column_mut(t.s_next);
        col += phi;
        self.factors[t.h] = None;
        self.count += 1;
    }

    pub fn absorb_all(&mut self, mdp: &LinearMdp, buffer: &EpisodeBuffer) {
        for t in &buffer.transitions {
            self.absorb(mdp, t);
        }
    }

    pub fn precision(&self, h: usize) -> DMatrix<f64> {
        let d = self.gram[h].nrows();
        &self.gram[h] + DMatrix::identity(d, d) * self.ridge
    }

    /// Cholesky factor of `Lambda_h`, cached until the next absorb.
    pub fn factor(&mut self, h: usize) -> &Cholesky<f64, Dyn> {
        if self.factors[h].is_none() {
            let chol = Cholesky::new(self.precision(h)).expect("gram + ridge * I is positive definite");
            self.factors[h] = Some(chol);
        }
        self.factors[h].as_ref().expect("just filled")
    }

    pub fn mean(&mut self, h: usize, value_next: &[f64]) -> DVector<f64> {
        let rhs = &self.reward_sum[h] + &self.next_state[h] * DVector::from_column_slice(value_next);
        self.factor(h).solve(&rhs)
    }
}
