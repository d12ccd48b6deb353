//! Pairwise and consensus decay of an interacting ensemble.

use cbo_core::dynamics::{run_with, InitLaw, ModelParams, TrialKey};
use cbo_core::objectives::ObjectiveSpec;
use serde::Serialize;

use super::{fit_rate, gate, rate_checks, record_times, ExperimentReport, RateFit, RunOptions, Row};
use crate::config::{ExperimentConfig, Governing};
use crate::error::Result;
use crate::stats::{Check, Moments};
use crate::trials::{fold_trials, Diverged};

/// Trial-averaged decay statistics of one parameter set.
#[derive(Debug, Clone)]
pub(super) struct DecaySeries {
    pub times: Vec<f64>,
    /// `max_{i<j}` of the trial mean of `|X^i - X^j|^p`, with its SE.
    pub pair: Vec<(f64, f64)>,
    /// `max_i` of the trial mean of `|X^i - m_h|^p`, with its SE.
    pub consensus: Vec<(f64, f64)>,
    pub diverged: Diverged,
    pub completed: usize,
}

pub(super) fn decay_series(
    f: &ObjectiveSpec,
    params: &ModelParams,
    n: usize,
    init: &InitLaw,
    seed: u64,
    trials: usize,
) -> Result<DecaySeries> {
    let times = record_times(params);
    let pairs = n * (n - 1) / 2;
    let width = pairs + n;
    let p = params.p;
    let run = |trial: u64| {
        let mut buf = Vec::with_capacity(times.len() * width);
        run_with(f, params, n, init, TrialKey::new(seed, trial), |snap| {
            let pts = snap.points;
            for i in 0..n {
                for j in i + 1..n {
                    buf.push(dist_pow(pts.get(i), pts.get(j), p));
                }
            }
            for i in 0..n {
                buf.push(dist_pow(pts.get(i), &snap.consensus.m_h, p));
            }
            Ok(())
        })?;
        Ok(buf)
    };
    let init_acc = vec![Moments::new(width); times.len()];
    let (acc, diverged) = fold_trials(trials, run, init_acc, |acc, _, buf| {
        for (m, row) in acc.iter_mut().zip(buf.chunks_exact(width)) {
            m.push(row);
        }
    })?;
    let completed = trials - diverged.len();
    let (pair, consensus) = if completed == 0 {
        (vec![], vec![])
    } else {
        (
            acc.iter().map(|m| m.max_mean(0..pairs)).collect(),
            acc.iter().map(|m| m.max_mean(pairs..width)).collect(),
        )
    };
    Ok(DecaySeries {
        times,
        pair,
        consensus,
        diverged,
        completed,
    })
}

fn dist_pow(a: &[f64], b: &[f64], p: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    if p == 2.0 {
        sq
    } else {
        sq.sqrt().powf(p)
    }
}

/// Fitted rates and checks of one decay run against `bound`.
#[derive(Debug, Clone, Serialize)]
pub(super) struct DecaySummary {
    pub lambda: f64,
    pub threshold: f64,
    pub bound: f64,
    pub pair_fit: Option<RateFit>,
    pub consensus_fit: Option<RateFit>,
    /// Largest `(estimate - se_factor SE) / (initial estimate * exp(bound t))`.
    pub envelope_ratio: Option<f64>,
}

pub(super) fn summarize(
    series: &DecaySeries,
    config: &ExperimentConfig,
    lambda: f64,
    threshold: f64,
    label: &str,
    checks: &mut Vec<Check>,
    warnings: &mut Vec<String>,
) -> DecaySummary {
    let e = &config.experiment;
    let bound = -config.model.p * (lambda - threshold);
    let mut summary = DecaySummary {
        lambda,
        threshold,
        bound,
        pair_fit: None,
        consensus_fit: None,
        envelope_ratio: None,
    };
    if series.completed == 0 {
        warnings.push(format!("{label}: every trial diverged"));
        checks.push(Check::at_least(format!("{label} completed trials"), 0.0, 0.0, 1.0, 0.0));
        return summary;
    }
    let fit_of = |s: &[(f64, f64)]| {
        let pts: Vec<(f64, f64)> = series.times.iter().zip(s).map(|(&t, &(v, _))| (t, v)).collect();
        fit_rate(&pts, e.t_start)
    };
    match fit_of(&series.pair) {
        Ok(fit) => {
            checks.extend(rate_checks(&format!("{label} pairwise"), &fit, bound, e.rate_slack, e.r2_min));
            summary.pair_fit = Some(fit);
        }
        Err(err) => {
            warnings.push(format!("{label}: pairwise fit failed: {err}"));
            checks.push(Check::at_least(format!("{label} pairwise fit"), 0.0, 0.0, 1.0, 0.0));
        }
    }
    summary.consensus_fit = fit_of(&series.consensus).ok();
    let v0 = series.pair[0].0;
    if v0 > 0.0 {
        let ratio = series
            .times
            .iter()
            .zip(&series.pair)
            .map(|(&t, &(v, se))| (v - e.se_factor * se) / (v0 * (bound * t).exp()))
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::at_most(format!("{label} pairwise envelope"), ratio, 0.0, 1.0, 0.0));
        summary.envelope_ratio = Some(ratio);
    }
    summary
}

pub(super) fn rows(series: &DecaySeries, suffix: &str) -> Vec<Row> {
    let mut out = Vec::with_capacity(2 * series.times.len());
    for (k, &t) in series.times.iter().enumerate() {
        if let (Some(pair), Some(cons)) = (series.pair.get(k), series.consensus.get(k)) {
            out.push(Row::new(t, format!("pair_max{suffix}"), pair.0, pair.1));
            out.push(Row::new(t, format!("consensus_max{suffix}"), cons.0, cons.1));
        }
    }
    out
}

#[derive(Serialize)]
struct Details {
    particles: usize,
    p: f64,
    dt: f64,
    t_end: f64,
    #[serde(flatten)]
    summary: Option<DecaySummary>,
    note: Option<String>,
}

pub(super) fn run(config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentReport> {
    let f = config.objective()?;
    let m = &config.model;
    let resolved = config.resolve(m.alpha, m.noise, Governing::Particle)?;
    let params = &resolved.params;
    let trials = config.monte_carlo.trials;
    let n = config.ensemble.n;
    let mut report = ExperimentReport::new(config.experiment.kind, trials);
    gate(&mut report, m.noise.name(), &resolved, Governing::Particle, opts)?;
    let mut details = Details {
        particles: n,
        p: params.p,
        dt: params.dt,
        t_end: params.t_end,
        summary: None,
        note: None,
    };
    if n < 2 {
        report.degenerate = true;
        details.note = Some("a single particle has no pairs; nothing to measure".into());
        return report.finish(details);
    }
    let series = decay_series(&f, params, n, &config.ensemble.init, config.monte_carlo.seed, trials)?;
    report.add_diverged(&series.diverged);
    details.summary = Some(summarize(
        &series,
        config,
        params.lambda,
        resolved.thresholds.noise_threshold,
        m.noise.name(),
        &mut report.checks,
        &mut report.warnings,
    ));
    report.rows = rows(&series, "");
    report.finish(details)
}
