//! Closed-form offline-to-online regret bounds.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Inputs to the regret bound. The logarithmic factor is always derived
/// from `(d, t, delta)` through [`BoundInputs::iota`], never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: f64,
    pub t: f64,
    pub d: usize,
    pub horizon: usize,
    pub c_dagger: f64,
    pub c: f64,
    pub delta: f64,
}

impl Default for BoundInputs {
    fn default() -> Self {
        Self {
            n: 0.0,
            t: 0.0,
            d: 1,
            horizon: 1,
            c_dagger: 1.0,
            c: 1.0,
            delta: 0.05,
        }
    }
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.n >= 0.0 && self.t >= 0.0) || !self.n.is_finite() || !self.t.is_finite() {
            return Err(invalid("N and T must be finite and non-negative"));
        }
        if self.d == 0 || self.horizon == 0 {
            return Err(invalid("d and H must be positive"));
        }
        if !(self.c_dagger >= 1.0) {
            return Err(invalid(format!("coverage coefficient must be >= 1, got {}", self.c_dagger)));
        }
        if !(self.c > 0.0) {
            return Err(invalid("c must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta must lie in (0, 1)"));
        }
        Ok(())
    }

    /// `log(4 d T / delta)` with `T` floored at 2, so the factor stays
    /// above 1 for `T` in {0, 1}.
    pub fn iota(&self) -> f64 {
        iota(self.d, self.t, self.delta)
    }

    /// `c sqrt(d^3 H^3 iota)`.
    pub fn scale(&self) -> f64 {
        scale(self.c, self.d, self.horizon, self.iota())
    }
}

pub fn iota(d: usize, t: f64, delta: f64) -> f64 {
    (4.0 * d as f64 * t.max(2.0) / delta).ln()
}

pub fn scale(c: f64, d: usize, horizon: usize, iota: f64) -> f64 {
    c * ((d * d * d) as f64 * (horizon * horizon * horizon) as f64 * iota).sqrt()
}

/// `scale * (sqrt(N/C + T) - sqrt(N/C))`, written as
/// `scale * T / (sqrt(N/C + T) + sqrt(N/C))` to avoid cancellation.
pub fn bound_formula(scale: f64, n: f64, t: f64, c_dagger: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let a = n / c_dagger;
    scale * t / ((a + t).sqrt() + a.sqrt())
}

/// Bayesian offline-to-online regret bound
/// `c sqrt(d^3 H^3 iota) (sqrt(N/C + T) - sqrt(N/C))`.
pub fn bound_eval(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(bound_formula(inputs.scale(), inputs.n, inputs.t, inputs.c_dagger))
}

/// First-step suboptimality bound `c sqrt(C d^3 H^3 iota / N)`.
pub fn suboptimality_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    if inputs.n < 1.0 {
        return Err(invalid("suboptimality bound needs N >= 1"));
    }
    Ok(inputs.scale() * (inputs.c_dagger / inputs.n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub n: f64,
    pub t: f64,
    pub bound: f64,
}

/// Tabulates the bound over every `(N, T)` pair of the grid, N-major.
///
/// A curve describes one experiment with online budget `max(ts)`, so the
/// logarithmic factor is evaluated once at that budget and shared by every
/// row. With a per-row factor the curve is no longer concave in `T` once
/// `N / C` dominates `T`.
pub fn bound_curve(template: &BoundInputs, ns: &[f64], ts: &[f64]) -> Result<Vec<BoundRow>> {
    if ns.is_empty() || ts.is_empty() {
        return Err(invalid("bound grid must be non-empty"));
    }
    let t_max = ts.iter().cloned().fold(0.0, f64::max);
    let budget = BoundInputs { t: t_max, ..*template };
    budget.validate()?;
    let s = budget.scale();
    let mut rows = Vec::with_capacity(ns.len() * ts.len());
    for &n in ns {
        for &t in ts {
            BoundInputs { n, t, ..budget }.validate()?;
            rows.push(BoundRow {
                n,
                t,
                bound: bound_formula(s, n, t, template.c_dagger),
            });
        }
    }
    Ok(rows)
}

pub fn bound_curve_csv(rows: &[BoundRow]) -> String {
    let mut out = String::from("N,T,bound\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.n, r.t, r.bound));
    }
    out
}
