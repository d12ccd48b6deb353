//! Variance decay and consensus location of the large-ensemble proxy.

use cbo_core::dynamics::{simulate_meanfield, TrialKey};
use serde::Serialize;

use super::{fit_rate, gate, rate_checks, ExperimentReport, RateFit, RunOptions, Row};
use crate::config::{ExperimentConfig, Governing};
use crate::error::{config_err, Result};
use crate::stats::{mean_se, nonincreasing, strictly_decreasing, Check, Moments};
use crate::trials::fold_trials;

#[derive(Serialize)]
struct AlphaResult {
    alpha: f64,
    lambda: f64,
    threshold: f64,
    bound: f64,
    fit: Option<RateFit>,
    /// Variance identically zero (point-mass start): no rate to fit.
    var_vanishes: bool,
    /// Trial average of the final ensemble mean.
    x_inf: Vec<f64>,
    f_x_inf: f64,
    /// Trial mean and SE of `f(x_inf) - f_min`.
    gap: f64,
    gap_se: f64,
    distance_to_argmin: Option<f64>,
}

#[derive(Serialize)]
struct Details {
    n_ref: usize,
    alphas: Vec<AlphaResult>,
    gap_strictly_decreasing: bool,
}

pub(super) fn run(config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentReport> {
    let f = config.objective()?;
    let e = &config.experiment;
    let n_ref = config
        .ensemble
        .n_ref
        .ok_or_else(|| config_err("meanfield needs ensemble.n_ref"))?;
    let alphas = e.alphas.clone().unwrap_or_else(|| vec![config.model.alpha]);
    let trials = config.monte_carlo.trials;
    let seed = config.monte_carlo.seed;
    let init = &config.ensemble.init;
    let d = f.dim();
    let mut report = ExperimentReport::new(e.kind, trials);
    let mut results = vec![];
    for &alpha in &alphas {
        let resolved = config.resolve(alpha, config.model.noise, Governing::MeanField)?;
        let label = format!("alpha={alpha}");
        gate(&mut report, &label, &resolved, Governing::MeanField, opts)?;
        let params = &resolved.params;
        // Per trial: the variance series and the final mean.
        let run = |trial: u64| {
            let ts = simulate_meanfield(&f, params, n_ref, init, TrialKey::new(seed, trial))?;
            let mut row = ts.column(|r| r.v2);
            row.extend_from_slice(&ts.last().mean);
            Ok((ts.times(), row))
        };
        let (acc, diverged) = fold_trials(trials, run, None::<(Vec<f64>, Moments, Vec<f64>)>, |acc, _, (times, row)| {
            let state = acc.get_or_insert_with(|| (times, Moments::new(row.len()), vec![]));
            state.1.push(&row);
            let x = &row[row.len() - d..];
            state.2.push(f.eval(x) - f.f_min);
        })?;
        report.add_diverged(&diverged);
        let Some((times, moments, gaps)) = acc else {
            report.warnings.push(format!("{label}: every trial diverged"));
            report
                .checks
                .push(Check::at_least(format!("{label} completed trials"), 0.0, 0.0, 1.0, 0.0));
            continue;
        };
        let var: Vec<(f64, f64)> = (0..times.len()).map(|k| moments.mean_se(k)).collect();
        for (&t, &(v, se)) in times.iter().zip(&var) {
            report.rows.push(Row::new(t, format!("var[{label}]"), v, se));
        }
        let x_inf: Vec<f64> = (0..d).map(|k| moments.mean_se(times.len() + k).0).collect();
        let (gap, gap_se) = mean_se(&gaps);
        let bound = -2.0 * (params.lambda - resolved.thresholds.meanfield_threshold);
        let var_vanishes = var.iter().all(|v| v.0 == 0.0);
        let mut fit = None;
        if var_vanishes {
            report
                .checks
                .push(Check::at_most(format!("{label} variance stays zero"), 0.0, 0.0, 0.0, 0.0));
        } else {
            let pts: Vec<(f64, f64)> = times.iter().zip(&var).map(|(&t, &(v, _))| (t, v)).collect();
            match fit_rate(&pts, e.t_start) {
                Ok(r) => {
                    report
                        .checks
                        .extend(rate_checks(&format!("{label} variance"), &r, bound, e.rate_slack, e.r2_min));
                    fit = Some(r);
                }
                Err(err) => {
                    report.warnings.push(format!("{label}: variance fit failed: {err}"));
                    report
                        .checks
                        .push(Check::at_least(format!("{label} variance fit"), 0.0, 0.0, 1.0, 0.0));
                }
            }
        }
        let t_end = *times.last().unwrap_or(&0.0);
        report.rows.push(Row::new(t_end, format!("gap[{label}]"), gap, gap_se));
        results.push(AlphaResult {
            alpha,
            lambda: params.lambda,
            threshold: resolved.thresholds.meanfield_threshold,
            bound,
            fit,
            var_vanishes,
            f_x_inf: f.eval(&x_inf),
            distance_to_argmin: f
                .argmin
                .as_ref()
                .map(|a| a.iter().zip(&x_inf).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()),
            x_inf,
            gap,
            gap_se,
        });
    }
    let gaps: Vec<(f64, f64)> = results.iter().map(|r| (r.gap, r.gap_se)).collect();
    let labels: Vec<String> = results.iter().map(|r| format!("alpha={}", r.alpha)).collect();
    report
        .checks
        .extend(nonincreasing("gap to minimum along alpha", &labels, &gaps, e.se_factor));
    if let (Some(max), Some(last)) = (e.max_final_gap, results.last()) {
        report.checks.push(Check::at_most(
            format!("final gap at alpha={}", last.alpha),
            last.gap,
            last.gap_se,
            max,
            e.se_factor * last.gap_se,
        ));
    }
    report.finish(Details {
        n_ref,
        gap_strictly_decreasing: strictly_decreasing(&gaps),
        alphas: results,
    })
}
