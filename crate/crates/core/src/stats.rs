//! Estimators, confidence checks, two-sample tests and small fits.

use serde::{Deserialize, Serialize};

/// Mean with its standard error `sd/√n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MCEstimate {
    /// Sample mean and standard error (unbiased variance). `n = 1` gives an
    /// infinite standard error.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        assert!(n >= 1, "MCEstimate needs at least one sample");
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return MCEstimate { mean, stderr: f64::INFINITY, n };
        }
        let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
        let sd = (ss / (n - 1) as f64).sqrt();
        MCEstimate { mean, stderr: sd / (n as f64).sqrt(), n }
    }

    pub fn exact(value: f64) -> Self {
        MCEstimate { mean: value, stderr: 0.0, n: 1 }
    }

    /// Frequency estimate of `k` successes out of `n`.
    pub fn proportion(k: usize, n: usize) -> Self {
        assert!(n >= 1);
        let p = k as f64 / n as f64;
        let var = if n > 1 { p * (1.0 - p) * n as f64 / (n - 1) as f64 } else { f64::INFINITY };
        MCEstimate { mean: p, stderr: (var / n as f64).sqrt(), n }
    }

    /// `|mean − target| ≤ k·stderr + slack`.
    pub fn within(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr + slack
    }

    pub fn ci(&self, k: f64) -> (f64, f64) {
        (self.mean - k * self.stderr, self.mean + k * self.stderr)
    }

    pub fn scale(&self, c: f64) -> Self {
        MCEstimate { mean: c * self.mean, stderr: c.abs() * self.stderr, n: self.n }
    }

    pub fn shift(&self, c: f64) -> Self {
        MCEstimate { mean: self.mean + c, ..*self }
    }
}

/// `|a − b| ≤ k·sqrt(se_a² + se_b²)`, for independent estimates.
pub fn agree(a: &MCEstimate, b: &MCEstimate, k: f64) -> bool {
    (a.mean - b.mean).abs() <= k * a.stderr.hypot(b.stderr)
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty());
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let s = ne.sqrt();
    let lambda = (s + 0.12 + 0.11 / s) * d;
    KsResult { statistic: d, p_value: kolmogorov_q(lambda) }
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Ordinary least-squares line with slope standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
}

pub fn line_fit(x: &[f64], y: &[f64]) -> LineFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    assert!(n >= 2.0);
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let slope_stderr = if n > 2.0 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    LineFit { slope, intercept, slope_stderr, r_squared }
}

/// Weighted least squares through the origin, `y ≈ c·x`, with
/// per-point standard errors `sy`; returns `(c, stderr(c))`.
pub fn origin_fit(x: &[f64], y: &[f64], sy: &[f64]) -> (f64, f64) {
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut var = 0.0;
    for i in 0..x.len() {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        var += x[i] * x[i] * sy[i] * sy[i];
    }
    (sxy / sxx, var.sqrt() / sxx)
}
