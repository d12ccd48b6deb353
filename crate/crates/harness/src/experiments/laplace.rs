//! Gap between the Laplace-weighted value and the minimum along an alpha
//! ladder.

use cbo_core::dynamics::{simulate, TrialKey};
use cbo_core::metrics::laplace_from_values;
use serde::Serialize;

use super::{gate, ExperimentReport, RunOptions, Row};
use crate::config::{ExperimentConfig, Governing, LaplaceMode};
use crate::error::{config_err, Result};
use crate::stats::{mean_se, nonincreasing, strictly_decreasing, Check};
use crate::trials::collect_trials;

/// Default size of the static sample.
pub const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Serialize)]
struct AlphaGap {
    alpha: f64,
    gap: f64,
    stderr: f64,
    /// Static mode: `ln(n) / alpha + (min sampled f - f_min)`.
    upper_bracket: Option<f64>,
}

#[derive(Serialize)]
struct Details {
    mode: LaplaceMode,
    samples: Option<usize>,
    min_sampled_gap: Option<f64>,
    gaps: Vec<AlphaGap>,
    strictly_decreasing: bool,
    argmin_in_support: Option<bool>,
}

pub(super) fn run(config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentReport> {
    let f = config.objective()?;
    let e = &config.experiment;
    let alphas = e
        .alphas
        .clone()
        .ok_or_else(|| config_err("laplace needs experiment.alphas"))?;
    if alphas[0] <= 0.0 {
        return Err(config_err("laplace alphas must be positive"));
    }
    let mode = e.mode.unwrap_or(LaplaceMode::Static);
    let init = &config.ensemble.init;
    let seed = config.monte_carlo.seed;
    let mut report = ExperimentReport::new(e.kind, config.monte_carlo.trials);
    let mut details = Details {
        mode,
        samples: None,
        min_sampled_gap: None,
        gaps: vec![],
        strictly_decreasing: false,
        argmin_in_support: f.argmin.as_ref().map(|a| init.support_contains(a)),
    };
    match mode {
        LaplaceMode::Static => {
            report.trials = 1;
            let n = e.samples.unwrap_or(DEFAULT_SAMPLES);
            let sample = init.sample(n, TrialKey::new(seed, 0))?;
            let values: Vec<f64> = sample.iter().map(|x| f.eval(x)).collect();
            let min_gap = values.iter().copied().fold(f64::INFINITY, f64::min) - f.f_min;
            details.samples = Some(n);
            details.min_sampled_gap = Some(min_gap);
            for &alpha in &alphas {
                let gap = laplace_from_values(&values, alpha) - f.f_min;
                let upper = (n as f64).ln() / alpha + min_gap;
                report
                    .checks
                    .push(Check::at_most(format!("bracket at alpha={alpha}"), gap, 0.0, upper, 0.0));
                report
                    .checks
                    .push(Check::at_least(format!("floor at alpha={alpha}"), gap, 0.0, min_gap, 0.0));
                details.gaps.push(AlphaGap {
                    alpha,
                    gap,
                    stderr: 0.0,
                    upper_bracket: Some(upper),
                });
            }
        }
        LaplaceMode::Dynamic => {
            if details.argmin_in_support == Some(false) {
                report
                    .warnings
                    .push("the minimizer lies outside the support of the initial law".into());
            }
            let n = config.ensemble.n;
            for &alpha in &alphas {
                let resolved = config.resolve(alpha, config.model.noise, Governing::Particle)?;
                gate(&mut report, &format!("alpha={alpha}"), &resolved, Governing::Particle, opts)?;
                let params = &resolved.params;
                let (gaps, diverged) = collect_trials(config.monte_carlo.trials, |trial| {
                    let ts = simulate(&f, params, n, init, TrialKey::new(seed, trial))?;
                    Ok(f.eval(&ts.last().mean) - f.f_min)
                })?;
                report.add_diverged(&diverged);
                if gaps.is_empty() {
                    report.warnings.push(format!("alpha={alpha}: every trial diverged"));
                    report
                        .checks
                        .push(Check::at_least(format!("alpha={alpha} completed trials"), 0.0, 0.0, 1.0, 0.0));
                    continue;
                }
                let (gap, stderr) = mean_se(&gaps);
                details.gaps.push(AlphaGap {
                    alpha,
                    gap,
                    stderr,
                    upper_bracket: None,
                });
            }
            if let (Some(max), Some(last)) = (e.max_final_gap, details.gaps.last()) {
                report.checks.push(Check::at_most(
                    format!("final gap at alpha={}", last.alpha),
                    last.gap,
                    last.stderr,
                    max,
                    e.se_factor * last.stderr,
                ));
            }
        }
    }
    let t = match mode {
        LaplaceMode::Static => 0.0,
        LaplaceMode::Dynamic => config.model.t_end,
    };
    for g in &details.gaps {
        report.rows.push(Row::new(t, format!("gap[alpha={}]", g.alpha), g.gap, g.stderr));
    }
    let series: Vec<(f64, f64)> = details.gaps.iter().map(|g| (g.gap, g.stderr)).collect();
    let labels: Vec<String> = details.gaps.iter().map(|g| format!("alpha={}", g.alpha)).collect();
    report
        .checks
        .extend(nonincreasing("gap along alpha", &labels, &series, e.se_factor));
    details.strictly_decreasing = strictly_decreasing(&series);
    report.finish(details)
}
