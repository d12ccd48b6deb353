//! Finite ensembles synchronously coupled to a large reference ensemble:
//! coupling gap and Wasserstein distance as functions of `N`.

use cbo_core::dynamics::{CoupledSystem, TrialKey};
use cbo_core::metrics::{wasserstein_p, EmpiricalMeasure, WassersteinMethod, ASSIGNMENT_MAX};
use cbo_core::Points;
use serde::Serialize;

use super::{gate, ExperimentReport, RunOptions, Row};
use crate::config::{ExperimentConfig, Governing};
use crate::error::{config_err, Result};
use crate::stats::{median_se, nonincreasing, strictly_decreasing};
use crate::trials::collect_trials;

/// Default size of the matched subsamples.
pub const DEFAULT_MATCH_SIZE: usize = 256;

struct Trial {
    /// `[rung][record]`
    gap: Vec<Vec<f64>>,
    /// `[rung][selected time]`
    gap_at: Vec<Vec<f64>>,
    w_at: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct RungSummary {
    n: usize,
    gap_median: f64,
    gap_se: f64,
    w_median: f64,
    w_se: f64,
}

#[derive(Serialize)]
struct TimeSummary {
    t: f64,
    rungs: Vec<RungSummary>,
    gap_strictly_decreasing: bool,
    w_strictly_decreasing: bool,
}

#[derive(Serialize)]
struct Details {
    ladder: Vec<usize>,
    n_ref: usize,
    match_size: usize,
    p: f64,
    lambda: f64,
    completed: usize,
    times: Vec<TimeSummary>,
}

/// `N` points as a uniform measure on `m` atoms: replicated when `N < m`,
/// truncated to the first `m` when `N >= m`.
fn matched(points: &Points, m: usize) -> cbo_core::Result<EmpiricalMeasure> {
    let n = points.len();
    let pts = if n >= m { points.head(m) } else { points.replicate(m / n) };
    EmpiricalMeasure::uniform(pts)
}

pub(super) fn run(config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentReport> {
    let f = config.objective()?;
    let e = &config.experiment;
    let ladder = e.ladder.clone().ok_or_else(|| config_err("chaos needs experiment.ladder"))?;
    let n_ref = config
        .ensemble
        .n_ref
        .ok_or_else(|| config_err("chaos needs ensemble.n_ref"))?;
    let match_size = e.match_size.unwrap_or(DEFAULT_MATCH_SIZE.min(n_ref));
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_err("experiment.ladder must be nonempty and strictly ascending"));
    }
    if match_size == 0 || match_size > n_ref || match_size > ASSIGNMENT_MAX {
        return Err(config_err(format!(
            "experiment.match_size must lie in 1..={}",
            n_ref.min(ASSIGNMENT_MAX)
        )));
    }
    for &n in &ladder {
        if n == 0 || n > n_ref {
            return Err(config_err(format!("ladder size {n} must lie in 1..={n_ref}")));
        }
        if n < match_size && !match_size.is_multiple_of(n) {
            return Err(config_err(format!("ladder size {n} must divide match_size {match_size}")));
        }
    }
    let m = &config.model;
    let resolved = config.resolve(m.alpha, m.noise, Governing::Chaos)?;
    let params = &resolved.params;
    let trials = config.monte_carlo.trials;
    let mut report = ExperimentReport::new(e.kind, trials);
    gate(&mut report, m.noise.name(), &resolved, Governing::Chaos, opts)?;

    let n_steps = params.n_steps();
    let times = e.times.clone().unwrap_or_else(|| vec![params.t_end]);
    let selected: Vec<usize> = times
        .iter()
        .map(|&t| {
            let k = (t / params.dt).round();
            if t < 0.0 || k as usize > n_steps || (k * params.dt - t).abs() > 1e-9 * t.max(1.0) {
                Err(config_err(format!("time {t} is not a step of the dt = {} grid", params.dt)))
            } else {
                Ok(k as usize)
            }
        })
        .collect::<Result<_>>()?;
    let record_steps: Vec<usize> = (0..=n_steps).filter(|&k| params.records(k)).collect();
    let p = params.p;
    let init = &config.ensemble.init;
    let seed = config.monte_carlo.seed;
    let rungs = ladder.len();

    let run = |trial: u64| -> cbo_core::Result<Trial> {
        let mut sys = CoupledSystem::new(&f, params, &ladder, n_ref, init, TrialKey::new(seed, trial))?;
        let mut out = Trial {
            gap: vec![Vec::with_capacity(record_steps.len()); rungs],
            gap_at: vec![vec![0.0; times.len()]; rungs],
            w_at: vec![vec![0.0; times.len()]; rungs],
        };
        loop {
            let k = sys.step_index();
            if params.records(k) {
                for r in 0..rungs {
                    out.gap[r].push(sys.gap(r, p));
                }
            }
            for (j, _) in selected.iter().enumerate().filter(|(_, &s)| s == k) {
                let reference = matched(sys.reference().points(), match_size)?;
                for r in 0..rungs {
                    out.gap_at[r][j] = sys.gap(r, p);
                    let fin = matched(sys.finite(r).points(), match_size)?;
                    out.w_at[r][j] = wasserstein_p(&fin, &reference, p, WassersteinMethod::ExactAssignment)?.value;
                }
            }
            if k == n_steps {
                return Ok(out);
            }
            sys.step()?;
        }
    };
    let (results, diverged) = collect_trials(trials, run)?;
    report.add_diverged(&diverged);
    let completed = results.len();
    let mut details = Details {
        ladder: ladder.clone(),
        n_ref,
        match_size,
        p,
        lambda: params.lambda,
        completed,
        times: vec![],
    };
    if completed == 0 {
        report.warnings.push("every trial diverged".into());
        report
            .checks
            .push(crate::stats::Check::at_least("completed trials", 0.0, 0.0, 1.0, 0.0));
        return report.finish(details);
    }
    let column = |get: &dyn Fn(&Trial) -> f64| median_se(&results.iter().map(get).collect::<Vec<_>>());
    for (k, &step) in record_steps.iter().enumerate() {
        let t = step as f64 * params.dt;
        for (r, &n) in ladder.iter().enumerate() {
            let (med, se) = column(&|tr| tr.gap[r][k]);
            report.rows.push(Row::new(t, format!("gap[N={n}]"), med, se));
        }
    }
    let labels: Vec<String> = ladder.iter().map(|n| format!("N={n}")).collect();
    for (j, &step) in selected.iter().enumerate() {
        let t = step as f64 * params.dt;
        let gaps: Vec<(f64, f64)> = (0..rungs).map(|r| column(&|tr| tr.gap_at[r][j])).collect();
        let ws: Vec<(f64, f64)> = (0..rungs).map(|r| column(&|tr| tr.w_at[r][j])).collect();
        for (r, &n) in ladder.iter().enumerate() {
            report.rows.push(Row::new(t, format!("w{p}[N={n}]"), ws[r].0, ws[r].1));
        }
        report
            .checks
            .extend(nonincreasing(&format!("median gap at t={t}"), &labels, &gaps, e.se_factor));
        report.checks.extend(nonincreasing(
            &format!("median W{p} at t={t}"),
            &labels,
            &ws,
            e.se_factor,
        ));
        details.times.push(TimeSummary {
            t,
            gap_strictly_decreasing: strictly_decreasing(&gaps),
            w_strictly_decreasing: strictly_decreasing(&ws),
            rungs: ladder
                .iter()
                .enumerate()
                .map(|(r, &n)| RungSummary {
                    n,
                    gap_median: gaps[r].0,
                    gap_se: gaps[r].1,
                    w_median: ws[r].0,
                    w_se: ws[r].1,
                })
                .collect(),
        });
    }
    report.finish(details)
}
