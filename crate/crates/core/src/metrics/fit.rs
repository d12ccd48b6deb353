use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Result};

/// Least-squares fit of `ln value = c + rate * t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    /// Coefficient of determination; 1 for an exactly log-linear series
    /// (including a constant one).
    pub r2: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 5;

/// Fraction of the horizon skipped by default before fitting.
pub const DEFAULT_SKIP_FRACTION: f64 = 0.1;

/// Fit over the samples with `t >= t_start`.
pub fn decay_fit(ts: &[(f64, f64)], t_start: f64) -> Result<DecayFit> {
    let window: Vec<(f64, f64)> = ts.iter().copied().filter(|&(t, _)| t >= t_start).collect();
    if window.len() < MIN_FIT_SAMPLES {
        return Err(invalid_input(format!(
            "decay fit needs at least {MIN_FIT_SAMPLES} samples after t = {t_start}, got {}",
            window.len()
        )));
    }
    if let Some(&(t, v)) = window.iter().find(|&&(_, v)| !(v > 0.0 && v.is_finite())) {
        return Err(invalid_input(format!("decay fit needs positive finite values, got {v} at t = {t}")));
    }
    let first = window[0].1.ln();
    if window.iter().all(|w| w.1.ln() == first) {
        return Ok(DecayFit {
            rate: 0.0,
            intercept: first,
            r2: 1.0,
            samples: window.len(),
        });
    }
    let n = window.len() as f64;
    let t_bar = window.iter().map(|w| w.0).sum::<f64>() / n;
    let y_bar = window.iter().map(|w| w.1.ln()).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, v) in &window {
        let (dt, dy) = (t - t_bar, v.ln() - y_bar);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if stt == 0.0 {
        return Err(invalid_input("decay fit needs at least two distinct times"));
    }
    let rate = sty / stt;
    let intercept = y_bar - rate * t_bar;
    let ss_res: f64 = window
        .iter()
        .map(|&(t, v)| {
            let e = v.ln() - intercept - rate * t;
            e * e
        })
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(DecayFit {
        rate,
        intercept,
        r2,
        samples: window.len(),
    })
}

/// [`decay_fit`] skipping the first [`DEFAULT_SKIP_FRACTION`] of the span.
pub fn decay_fit_default(ts: &[(f64, f64)]) -> Result<DecayFit> {
    let (t0, t1) = match (ts.first(), ts.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => return Err(invalid_input("empty series")),
    };
    decay_fit(ts, t0 + DEFAULT_SKIP_FRACTION * (t1 - t0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_exponential() {
        let ts: Vec<(f64, f64)> = (0..50).map(|k| (k as f64 * 0.1, (-3.0 * k as f64 * 0.1).exp())).collect();
        let fit = decay_fit(&ts, 0.0).unwrap();
        assert_relative_eq!(fit.rate, -3.0, max_relative = 1e-12);
        assert_relative_eq!(fit.r2, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn constant_series() {
        let ts: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 2.5)).collect();
        let fit = decay_fit(&ts, 0.0).unwrap();
        assert_eq!(fit.rate, 0.0);
        assert_eq!(fit.r2, 1.0);
    }

    #[test]
    fn noisy_exponential() {
        // Deterministic pseudo-noise with amplitude 1%.
        let ts: Vec<(f64, f64)> = (0..200)
            .map(|k| {
                let t = k as f64 * 0.02;
                let noise = 0.01 * ((k as f64 * 12.9898).sin() * 43758.5453).fract();
                (t, (-3.0 * t).exp() * (1.0 + noise))
            })
            .collect();
        let fit = decay_fit(&ts, 0.0).unwrap();
        assert!((-3.1..=-2.9).contains(&fit.rate), "{fit:?}");
    }

    #[test]
    fn window_and_errors() {
        let ts: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, (-(k as f64)).exp())).collect();
        assert_eq!(decay_fit(&ts, 5.0).unwrap().samples, 5);
        assert!(decay_fit(&ts, 6.0).is_err());
        let mut bad = ts.clone();
        bad[7].1 = 0.0;
        assert!(decay_fit(&bad, 0.0).is_err());
        assert_eq!(decay_fit_default(&ts).unwrap().samples, 9);
    }
}
