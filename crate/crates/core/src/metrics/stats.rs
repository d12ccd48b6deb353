use crate::dynamics::TimeSeries;
use crate::error::{invalid_input, invalid_param, Result};
use crate::objectives::ObjectiveSpec;
use crate::points::Points;

/// `sup_t exp(kappa t) V_p(t)` over the recorded times of one trial.
pub fn weighted_sup(ts: &TimeSeries, kappa: f64) -> f64 {
    ts.records
        .iter()
        .map(|r| (kappa * r.t).exp() * r.vp)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Fraction of trials whose `sup_t exp(kappa t) V_p(t)` reaches the mean
/// initial `V_p` over all trials plus `threshold_a`.
pub fn concentration_frequency(trials: &[TimeSeries], p: f64, kappa: f64, threshold_a: f64) -> Result<f64> {
    if trials.is_empty() {
        return Err(invalid_input("no trials"));
    }
    if trials.iter().any(|ts| ts.p != p) {
        return Err(invalid_param(format!("trials were not recorded with p = {p}")));
    }
    if trials.iter().any(|ts| ts.records.is_empty()) {
        return Err(invalid_input("a trial has no records"));
    }
    let baseline = trials.iter().map(|ts| ts.records[0].vp).sum::<f64>() / trials.len() as f64;
    Ok(frequency_above(trials.iter().map(|ts| weighted_sup(ts, kappa)), baseline + threshold_a))
}

/// Fraction of `sups` at or above `level`.
pub fn frequency_above(sups: impl ExactSizeIterator<Item = f64>, level: f64) -> f64 {
    let n = sups.len();
    sups.filter(|&s| s >= level).count() as f64 / n as f64
}

/// `-(1/alpha) ln((1/n) sum_k exp(-alpha f(x_k)))`, evaluated after
/// shifting by `min_k f(x_k)` so it never overflows and always lies in
/// `[min f, min f + ln(n) / alpha]`.
pub fn laplace_value(samples: &Points, f: &ObjectiveSpec, alpha: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid_input("laplace value of an empty sample"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid_param(format!("alpha must be positive, got {alpha}")));
    }
    let values: Vec<f64> = samples.iter().map(|x| f.eval(x)).collect();
    Ok(laplace_from_values(&values, alpha))
}

pub fn laplace_from_values(values: &[f64], alpha: f64) -> f64 {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let n = values.len() as f64;
    // Every term is in (0, 1] and the minimizer contributes exactly 1, so
    // the sum is in [1, n] and the correction in [0, ln(n) / alpha].
    let sum: f64 = values.iter().map(|v| (-alpha * (v - min)).exp()).sum();
    let correction = ((n.ln() - sum.ln()) / alpha).clamp(0.0, n.ln() / alpha);
    min + correction
}
