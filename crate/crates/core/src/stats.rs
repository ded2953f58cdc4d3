//! Small statistics helpers for Monte Carlo pass/fail margins.

use serde::{Deserialize, Serialize};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); zero for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Linear-interpolation quantile, `q` in `[0, 1]`.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

/// Summary of a sample with a normal-approximation 95% interval for the mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let m = mean(xs);
    let sd = std_dev(xs);
    let half = 1.96 * sd / (xs.len().max(1) as f64).sqrt();
    Summary {
        count: xs.len(),
        mean: m,
        std_dev: sd,
        ci_low: m - half,
        ci_high: m + half,
    }
}

/// Standard deviation of a binomial frequency.
pub fn binomial_sigma(prob: f64, trials: u64) -> f64 {
    (prob * (1.0 - prob) / trials as f64).sqrt()
}

/// Chernoff upper tail `P[X >= E X + zeta] <= exp(-zeta^2 / (2 (E X + zeta / 3)))`
/// for a sum of i.i.d. Bernoulli variables.
pub fn chernoff_upper_tail(mean: f64, zeta: f64) -> f64 {
    if zeta <= 0.0 {
        return 1.0;
    }
    (-(zeta * zeta) / (2.0 * (mean + zeta / 3.0))).exp()
}

/// Chernoff lower tail `P[X <= E X - zeta] <= exp(-zeta^2 / (2 E X))`.
pub fn chernoff_lower_tail(mean: f64, zeta: f64) -> f64 {
    if zeta <= 0.0 {
        return 1.0;
    }
    if mean <= 0.0 {
        return 0.0;
    }
    (-(zeta * zeta) / (2.0 * mean)).exp()
}

/// Smallest `zeta` with both Chernoff tails at most `alpha / 2`: a two-sided
/// margin around `mean` holding with probability at least `1 - alpha`.
pub fn chernoff_margin(mean: f64, alpha: f64) -> f64 {
    let a = 2.0 * (2.0 / alpha).ln();
    // upper tail: zeta^2 - (a/3) zeta - a mean = 0; it dominates the lower one
    (a / 3.0 + (a * a / 9.0 + 4.0 * a * mean).sqrt()) / 2.0
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level `alpha`.
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}
