//! Plain simulation: trial-averaged diagnostics over time.

use cbo_core::dynamics::{simulate, Record, TrialKey};
use serde::Serialize;

use super::{gate, ExperimentReport, RunOptions, Row};
use crate::config::{ExperimentConfig, Governing};
use crate::error::Result;
use crate::stats::{Check, Moments};
use crate::trials::fold_trials;

#[derive(Serialize)]
struct Details {
    particles: usize,
    lambda: f64,
    dt: f64,
    completed: usize,
    final_mean: Vec<f64>,
    final_best_f: f64,
}

fn flatten(r: &Record) -> Vec<f64> {
    let mut v = vec![r.v2, r.vp, r.weighted_energy, r.best_f, r.beta];
    v.extend_from_slice(&r.mean);
    v.extend_from_slice(&r.m_h);
    v
}

pub(super) fn run(config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentReport> {
    let f = config.objective()?;
    let m = &config.model;
    let resolved = config.resolve(m.alpha, m.noise, Governing::Particle)?;
    let params = &resolved.params;
    let trials = config.monte_carlo.trials;
    let n = config.ensemble.n;
    let d = f.dim();
    let mut report = ExperimentReport::new(config.experiment.kind, trials);
    gate(&mut report, m.noise.name(), &resolved, Governing::Particle, opts)?;
    let seed = config.monte_carlo.seed;
    let run = |trial: u64| simulate(&f, params, n, &config.ensemble.init, TrialKey::new(seed, trial));
    let (acc, diverged) = fold_trials(trials, run, None::<(Vec<f64>, Vec<Moments>)>, |acc, _, ts| {
        let state = acc.get_or_insert_with(|| {
            let width = 5 + 2 * d;
            (ts.times(), vec![Moments::new(width); ts.records.len()])
        });
        for (m, r) in state.1.iter_mut().zip(&ts.records) {
            m.push(&flatten(r));
        }
    })?;
    report.add_diverged(&diverged);
    let mut names: Vec<String> = ["v2", "vp", "weighted_energy", "best_f", "beta"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((0..d).map(|k| format!("mean[{k}]")));
    names.extend((0..d).map(|k| format!("m_h[{k}]")));
    let completed = trials - diverged.len();
    let mut details = Details {
        particles: n,
        lambda: params.lambda,
        dt: params.dt,
        completed,
        final_mean: vec![],
        final_best_f: f64::NAN,
    };
    report.checks.push(Check::at_least("completed trials", completed as f64, 0.0, 1.0, 0.0));
    if let Some((times, moments)) = acc {
        for (t, m) in times.iter().zip(&moments) {
            for (k, name) in names.iter().enumerate() {
                let (v, se) = m.mean_se(k);
                report.rows.push(Row::new(*t, name.clone(), v, se));
            }
        }
        let last = moments.last().expect("at least one record");
        details.final_mean = (0..d).map(|k| last.mean_se(5 + k).0).collect();
        details.final_best_f = last.mean_se(3).0;
    }
    report.finish(details)
}
