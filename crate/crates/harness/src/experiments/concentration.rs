//! Frequency of large excursions of `exp(kappa t) V_p(t)` over a grid of
//! thresholds `A` and ensemble sizes `N`.

use cbo_core::dynamics::{simulate, TrialKey};
use cbo_core::metrics::{concentration_frequency, moments, EmpiricalMeasure};
use serde::Serialize;

use super::{gate, ExperimentReport, RunOptions, Row};
use crate::config::{ExperimentConfig, Governing};
use crate::error::{config_err, Result};
use crate::stats::{bernoulli_se, nonincreasing, Check};
use crate::trials::collect_trials;

/// Largest admissible `kappa / kappa_max`.
pub const MAX_KAPPA_FRACTION: f64 = 0.9;
/// Sample size used when `V_p` of the initial law has no closed form.
const REFERENCE_SAMPLE: usize = 100_000;

#[derive(Serialize)]
struct Cell {
    n: usize,
    a_multiple: f64,
    a: f64,
    frequency: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct Details {
    kappa: f64,
    kappa_max: f64,
    v_p_initial: f64,
    grid: Vec<Cell>,
}

pub(super) fn run(config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentReport> {
    let f = config.objective()?;
    let e = &config.experiment;
    let fraction = e.kappa_fraction.unwrap_or(0.5);
    if !(fraction > 0.0 && fraction <= MAX_KAPPA_FRACTION) {
        return Err(config_err(format!(
            "experiment.kappa_fraction must lie in (0, {MAX_KAPPA_FRACTION}], got {fraction}"
        )));
    }
    let n_ladder = e
        .n_ladder
        .clone()
        .ok_or_else(|| config_err("concentration needs experiment.n_ladder"))?;
    let a_ladder = e
        .a_ladder
        .clone()
        .ok_or_else(|| config_err("concentration needs experiment.a_ladder"))?;
    if n_ladder.is_empty() || n_ladder.windows(2).any(|w| w[1] <= w[0]) || n_ladder[0] == 0 {
        return Err(config_err("experiment.n_ladder must be positive and strictly ascending"));
    }
    if a_ladder.is_empty() || a_ladder.windows(2).any(|w| w[1] <= w[0]) || a_ladder[0] < 0.0 {
        return Err(config_err("experiment.a_ladder must be nonnegative and strictly ascending"));
    }
    let m = &config.model;
    let resolved = config.resolve(m.alpha, m.noise, Governing::Chaos)?;
    let params = &resolved.params;
    let trials = config.monte_carlo.trials;
    let mut report = ExperimentReport::new(e.kind, trials);
    let label = m.noise.name();
    gate(&mut report, label, &resolved, Governing::Chaos, opts)?;
    let kappa_max = resolved.thresholds.kappa_max.ok_or_else(|| {
        config_err("kappa_max is undefined: lambda does not exceed the propagation-of-chaos threshold")
    })?;
    let kappa = fraction * kappa_max;
    let init = &config.ensemble.init;
    let seed = config.monte_carlo.seed;
    let p = params.p;
    let v_ref = match (p == 2.0, init.variance()) {
        (true, Some(v)) => v,
        _ => {
            let sample = init.sample(REFERENCE_SAMPLE, TrialKey::new(seed, u64::MAX))?;
            moments(&EmpiricalMeasure::uniform(sample)?, p)?.v_p
        }
    };
    let mut grid = vec![];
    for &n in &n_ladder {
        // Same trial keys for every N: the smaller ensembles are prefixes
        // of the larger ones at t = 0.
        let (series, diverged) = collect_trials(trials, |trial| {
            simulate(&f, params, n, init, TrialKey::new(seed, trial))
        })?;
        report.add_diverged(&diverged);
        if series.is_empty() {
            report.warnings.push(format!("N={n}: every trial diverged"));
            report
                .checks
                .push(Check::at_least(format!("N={n} completed trials"), 0.0, 0.0, 1.0, 0.0));
            continue;
        }
        for &mult in &a_ladder {
            let a = mult * v_ref;
            let freq = concentration_frequency(&series, p, kappa, a)?;
            let stderr = bernoulli_se(freq, series.len());
            report
                .rows
                .push(Row::new(params.t_end, format!("frequency[N={n},A={mult}]"), freq, stderr));
            grid.push(Cell {
                n,
                a_multiple: mult,
                a,
                frequency: freq,
                stderr,
            });
        }
    }
    let cell = |n: usize, mult: f64| grid.iter().find(|c| c.n == n && c.a_multiple == mult);
    for &n in &n_ladder {
        let cells: Vec<&Cell> = a_ladder.iter().filter_map(|&a| cell(n, a)).collect();
        let series: Vec<(f64, f64)> = cells.iter().map(|c| (c.frequency, c.stderr)).collect();
        let labels: Vec<String> = cells.iter().map(|c| format!("A={}", c.a_multiple)).collect();
        report
            .checks
            .extend(nonincreasing(&format!("frequency along A at N={n}"), &labels, &series, e.se_factor));
    }
    for &mult in &a_ladder {
        let cells: Vec<&Cell> = n_ladder.iter().filter_map(|&n| cell(n, mult)).collect();
        let series: Vec<(f64, f64)> = cells.iter().map(|c| (c.frequency, c.stderr)).collect();
        let labels: Vec<String> = cells.iter().map(|c| format!("N={}", c.n)).collect();
        report.checks.extend(nonincreasing(
            &format!("frequency along N at A={mult}"),
            &labels,
            &series,
            e.se_factor,
        ));
    }
    report.finish(Details {
        kappa,
        kappa_max,
        v_p_initial: v_ref,
        grid,
    })
}
