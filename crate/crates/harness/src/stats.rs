//! Trial summaries and one-sided comparisons.

use serde::Serialize;

/// Sample mean and standard error of the mean (0 for a single value).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Running first and second moments, folded in a fixed order.
#[derive(Debug, Clone, Default)]
pub struct Moments {
    pub count: usize,
    pub sum: Vec<f64>,
    pub sum_sq: Vec<f64>,
}

impl Moments {
    pub fn new(len: usize) -> Self {
        Self {
            count: 0,
            sum: vec![0.0; len],
            sum_sq: vec![0.0; len],
        }
    }

    pub fn push(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.sum.len(), "moment accumulator length mismatch");
        self.count += 1;
        for ((s, q), &v) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(values) {
            *s += v;
            *q += v * v;
        }
    }

    /// Mean and standard error of entry `k`.
    pub fn mean_se(&self, k: usize) -> (f64, f64) {
        let n = self.count as f64;
        let mean = self.sum[k] / n;
        if self.count < 2 {
            return (mean, 0.0);
        }
        let var = ((self.sum_sq[k] - n * mean * mean) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    }

    /// Entry with the largest mean in `range`, as `(mean, se)`.
    pub fn max_mean(&self, range: std::ops::Range<usize>) -> (f64, f64) {
        range
            .map(|k| self.mean_se(k))
            .fold((f64::NEG_INFINITY, 0.0), |best, cur| if cur.0 > best.0 { cur } else { best })
    }
}

/// Median with a distribution-free standard error: half the width of the
/// order-statistic interval `x_(M/2 - sqrt(M)/2) .. x_(M/2 + sqrt(M)/2)`,
/// which covers the median with probability about 68%.
pub fn median_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    if n == 1 {
        return (median, 0.0);
    }
    let half = 0.5 * (n as f64).sqrt();
    let lo = ((n as f64 / 2.0 - half).floor().max(1.0) as usize) - 1;
    let hi = ((n as f64 / 2.0 + half).ceil() as usize).min(n) - 1;
    (median, 0.5 * (v[hi] - v[lo]))
}

/// Standard error of a frequency estimated from `trials` Bernoulli draws.
pub fn bernoulli_se(freq: f64, trials: usize) -> f64 {
    (freq * (1.0 - freq) / trials as f64).sqrt()
}

/// One pass/fail comparison in an experiment report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub estimate: f64,
    pub stderr: f64,
    /// The value the estimate is compared against.
    pub bound: f64,
}

impl Check {
    /// `estimate <= bound + tolerance`.
    pub fn at_most(name: impl Into<String>, estimate: f64, stderr: f64, bound: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            pass: estimate <= bound + tolerance,
            estimate,
            stderr,
            bound,
        }
    }

    pub fn at_least(name: impl Into<String>, estimate: f64, stderr: f64, bound: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            pass: estimate >= bound - tolerance,
            estimate,
            stderr,
            bound,
        }
    }
}

/// Checks that `series[k + 1] <= series[k]` up to `se_factor` combined
/// standard errors. `labels[k]` names entry `k`.
pub fn nonincreasing(what: &str, labels: &[String], series: &[(f64, f64)], se_factor: f64) -> Vec<Check> {
    series
        .windows(2)
        .zip(labels.windows(2))
        .map(|(w, l)| {
            let (a, b) = (w[0], w[1]);
            let se = (a.1 * a.1 + b.1 * b.1).sqrt();
            Check::at_most(format!("{what}: {} -> {}", l[0], l[1]), b.0, se, a.0, se_factor * se)
        })
        .collect()
}

/// Whether point estimates strictly decrease along the series.
pub fn strictly_decreasing(series: &[(f64, f64)]) -> bool {
    series.windows(2).all(|w| w[1].0 < w[0].0)
}
