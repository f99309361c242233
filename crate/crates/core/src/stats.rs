//! Small descriptive statistics used by the suites and checks.

/// Arithmetic mean; `NaN` for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    sample_std(xs) / (xs.len() as f64).sqrt()
}

/// One-sided 95% standard normal quantile.
pub const Z_95_ONE_SIDED: f64 = 1.644_853_626_951_472_2;

/// Lower one-sided 95% confidence bound on the mean of `xs`.
pub fn lower_confidence_95(xs: &[f64]) -> f64 {
    mean(xs) - Z_95_ONE_SIDED * std_error(xs)
}

/// Upper one-sided 95% confidence bound on the mean of `xs`.
pub fn upper_confidence_95(xs: &[f64]) -> f64 {
    mean(xs) + Z_95_ONE_SIDED * std_error(xs)
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Slopes of a linear fit over the first and the second half of `series`,
/// indexed by position.
pub fn half_slopes(series: &[f64]) -> (f64, f64) {
    let n = series.len();
    let mid = n / 2;
    let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let first = ols_slope(&xs[..mid], &series[..mid]);
    let second = ols_slope(&xs[mid..], &series[mid..]);
    (first, second)
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..xs.len() {
        if xs[i] > xs[best] {
            best = i;
        }
    }
    best
}

/// Shannon entropy (nats) of a probability vector.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}
