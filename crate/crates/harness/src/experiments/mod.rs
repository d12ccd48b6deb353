//! Experiment drivers. Each takes a validated configuration and returns an
//! [`ExperimentReport`]: pass/fail checks, a JSON-ready summary and the long
//! CSV rows `(t, statistic, estimate, stderr)`.

mod chaos;
mod concentration;
mod decay;
mod laplace;
mod meanfield;
mod noise_variants;
mod simulate;

use cbo_core::metrics::{decay_fit, DecayFit};
use cbo_core::theory::ThresholdReport;
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind, Governing, Resolved};
use crate::error::{config_err, HarnessError, Result};
use crate::stats::Check;
use crate::trials::Diverged;

/// One line of the long-format CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub t: f64,
    pub statistic: String,
    pub estimate: f64,
    pub stderr: f64,
}

impl Row {
    pub fn new(t: f64, statistic: impl Into<String>, estimate: f64, stderr: f64) -> Self {
        Self {
            t,
            statistic: statistic.into(),
            estimate,
            stderr,
        }
    }
}

/// A threshold report together with what it was computed for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledThresholds {
    pub label: String,
    #[serde(flatten)]
    pub report: ThresholdReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub pass: bool,
    /// Set when the configuration admits nothing to measure.
    pub degenerate: bool,
    pub trials: usize,
    pub divergences: usize,
    pub diverged_trials: Vec<u64>,
    pub thresholds: Vec<LabeledThresholds>,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
    pub details: serde_json::Value,
    #[serde(skip)]
    pub rows: Vec<Row>,
}

impl ExperimentReport {
    fn new(kind: ExperimentKind, trials: usize) -> Self {
        Self {
            experiment: kind.name().to_string(),
            pass: false,
            degenerate: false,
            trials,
            divergences: 0,
            diverged_trials: vec![],
            thresholds: vec![],
            warnings: vec![],
            checks: vec![],
            details: serde_json::Value::Null,
            rows: vec![],
        }
    }

    fn add_diverged(&mut self, diverged: &Diverged) {
        self.divergences += diverged.len();
        self.diverged_trials.extend_from_slice(diverged);
        self.diverged_trials.sort_unstable();
        self.diverged_trials.dedup();
    }

    /// Pass iff every check passes. Runs in which every trial diverged add
    /// a failing check of their own.
    fn finish(mut self, details: impl Serialize) -> Result<Self> {
        self.details = serde_json::to_value(details)?;
        self.pass = self.checks.iter().all(|c| c.pass);
        Ok(self)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Options that are not part of the configuration file.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Abort on unmet threshold conditions instead of warning.
    pub strict: bool,
}

/// Run the experiment selected by `config.experiment.kind`.
pub fn run(config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentReport> {
    config.validate()?;
    match config.experiment.kind {
        ExperimentKind::Simulate => simulate::run(config, opts),
        ExperimentKind::Decay => decay::run(config, opts),
        ExperimentKind::Chaos => chaos::run(config, opts),
        ExperimentKind::Laplace => laplace::run(config, opts),
        ExperimentKind::Meanfield => meanfield::run(config, opts),
        ExperimentKind::NoiseVariants => noise_variants::run(config, opts),
        ExperimentKind::Concentration => concentration::run(config, opts),
    }
}

/// Every threshold report the experiment would check, without running it.
pub fn thresholds(config: &ExperimentConfig) -> Result<Vec<LabeledThresholds>> {
    let kind = config.experiment.kind;
    let m = &config.model;
    let mut out = vec![];
    match kind {
        ExperimentKind::NoiseVariants => {
            for noise in cbo_core::dynamics::NoiseModel::ALL {
                let r = config.resolve(m.alpha, noise, Governing::Particle)?;
                out.push(labeled(noise.name(), r.thresholds));
            }
        }
        ExperimentKind::Meanfield | ExperimentKind::Laplace if config.experiment.alphas.is_some() => {
            for &alpha in config.experiment.alphas.as_deref().unwrap_or_default() {
                let r = config.resolve(alpha, m.noise, kind.governing())?;
                out.push(labeled(format!("alpha={alpha}"), r.thresholds));
            }
        }
        _ => {
            let r = config.resolve(m.alpha, m.noise, kind.governing())?;
            out.push(labeled(kind.name(), r.thresholds));
        }
    }
    Ok(out)
}

fn labeled(label: impl Into<String>, report: ThresholdReport) -> LabeledThresholds {
    LabeledThresholds {
        label: label.into(),
        report,
    }
}

/// Record `resolved` in the report and enforce or warn about the governing
/// condition.
fn gate(
    report: &mut ExperimentReport,
    label: &str,
    resolved: &Resolved,
    governing: Governing,
    opts: RunOptions,
) -> Result<bool> {
    let thr = &resolved.thresholds;
    report.thresholds.push(labeled(label, thr.clone()));
    let ok = match governing {
        Governing::Particle => thr.satisfied.noise_variant,
        Governing::MeanField => thr.satisfied.meanfield,
        Governing::Chaos => thr
            .satisfied
            .chaos
            .ok_or_else(|| config_err("the propagation-of-chaos threshold needs model.q"))?,
    };
    if !ok {
        let msg = format!(
            "{label}: lambda = {} does not exceed the {} threshold {}",
            thr.lambda,
            governing.label(),
            governing.threshold(thr).unwrap_or(f64::NAN)
        );
        if opts.strict {
            return Err(HarnessError::Strict(msg));
        }
        report.warnings.push(msg);
    }
    Ok(ok)
}

/// Log-linear fit together with the standard error of its slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub rate: f64,
    pub rate_se: f64,
    pub intercept: f64,
    pub r2: f64,
    pub samples: usize,
    pub t_start: f64,
}

/// Fit `ln value = c + rate t` over `t >= t_start`; the default start skips
/// the first 10% of the horizon.
fn fit_rate(series: &[(f64, f64)], t_start: Option<f64>) -> Result<RateFit> {
    let (t0, t1) = match (series.first(), series.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => return Err(config_err("nothing recorded to fit")),
    };
    let t_start = t_start.unwrap_or(t0 + cbo_core::metrics::DEFAULT_SKIP_FRACTION * (t1 - t0));
    let DecayFit {
        rate,
        intercept,
        r2,
        samples,
    } = decay_fit(series, t_start)?;
    let window: Vec<(f64, f64)> = series.iter().copied().filter(|&(t, _)| t >= t_start).collect();
    let n = window.len() as f64;
    let t_bar = window.iter().map(|w| w.0).sum::<f64>() / n;
    let stt: f64 = window.iter().map(|w| (w.0 - t_bar).powi(2)).sum();
    let ss_res: f64 = window
        .iter()
        .map(|&(t, v)| (v.ln() - intercept - rate * t).powi(2))
        .sum();
    let rate_se = if window.len() > 2 && stt > 0.0 {
        (ss_res / (n - 2.0) / stt).sqrt()
    } else {
        0.0
    };
    Ok(RateFit {
        rate,
        rate_se,
        intercept,
        r2,
        samples,
        t_start,
    })
}

/// One-sided rate check: `rate <= bound + slack * |bound|`, plus the r^2
/// floor.
fn rate_checks(name: &str, fit: &RateFit, bound: f64, slack: f64, r2_min: f64) -> [Check; 2] {
    [
        Check::at_most(format!("{name} decay rate"), fit.rate, fit.rate_se, bound, slack * bound.abs()),
        Check::at_least(format!("{name} fit r2"), fit.r2, 0.0, r2_min, 0.0),
    ]
}

/// Recording times of a run with these parameters.
fn record_times(params: &cbo_core::dynamics::ModelParams) -> Vec<f64> {
    (0..=params.n_steps())
        .filter(|&k| params.records(k))
        .map(|k| k as f64 * params.dt)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_an_exact_exponential_with_zero_slope_error() {
        let series: Vec<(f64, f64)> = (0..=50).map(|k| (k as f64 * 0.1, 3.0 * (-1.7 * k as f64 * 0.1).exp())).collect();
        let fit = fit_rate(&series, None).unwrap();
        assert!((fit.rate + 1.7).abs() < 1e-12);
        assert!(fit.rate_se < 1e-10);
        assert!((fit.t_start - 0.5).abs() < 1e-12);
        let [rate, r2] = rate_checks("x", &fit, -1.5, 0.0, 0.95);
        assert!(rate.pass && r2.pass);
        let [rate, _] = rate_checks("x", &fit, -2.0, 0.1, 0.95);
        assert!(!rate.pass);
    }
}
