//! The regularized consensus point and its interpolation decomposition.
//!
//! With `omega_i = exp(-alpha f(x_i))` and `psi_i = omega_i + h(alpha)`,
//!
//! ```text
//! m_h  = sum x_i psi_i / sum psi_i
//!      = beta * m_0 + (1 - beta) * mean,     beta = sum omega_i / sum psi_i
//! ```
//!
//! All weights are computed after factoring out `exp(-s)` with
//! `s = min(alpha * min_i f(x_i), -ln h(alpha))`, so the largest scaled
//! weight is exactly one and the normalizer can never underflow to zero.

use serde::Serialize;

use crate::error::{invalid_input, Result};
use crate::objectives::ObjectiveSpec;
use crate::points::Points;
use crate::theory::RegularizerSchedule;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedConsensus {
    /// Regularized consensus point.
    pub m_h: Vec<f64>,
    /// Classical Gibbs consensus; `None` when every Gibbs weight underflows.
    pub m_0: Option<Vec<f64>>,
    /// Plain (sample-weighted) average.
    pub mean: Vec<f64>,
    /// Interpolation coefficient `sum omega / sum psi`.
    pub beta: f64,
}

/// Consensus from precomputed objective values.
///
/// `sample_weights`, when given, are nonnegative masses of the points (an
/// empirical measure); otherwise every point has mass one.
pub fn consensus_from_values(
    points: &Points,
    values: &[f64],
    alpha: f64,
    h: &RegularizerSchedule,
    sample_weights: Option<&[f64]>,
) -> Result<WeightedConsensus> {
    let n = points.len();
    if n == 0 {
        return Err(invalid_input("consensus of an empty ensemble"));
    }
    if values.len() != n {
        return Err(invalid_input("one objective value per point is required"));
    }
    if let Some(w) = sample_weights {
        if w.len() != n {
            return Err(invalid_input("one sample weight per point is required"));
        }
        if w.iter().any(|&v| !(v >= 0.0)) {
            return Err(invalid_input("sample weights must be nonnegative"));
        }
        if !(w.iter().sum::<f64>() > 0.0) {
            return Err(invalid_input("sample weights sum to zero"));
        }
    }
    let d = points.dim();
    let ln_h = h.ln_value(alpha);
    let min_exponent = values
        .iter()
        .map(|&v| alpha * v)
        .fold(f64::INFINITY, f64::min);
    let shift = min_exponent.min(-ln_h);
    let h_scaled = (shift + ln_h).exp();

    // Accumulate offsets from the first point, so coincident particles give
    // their common position exactly.
    let origin = points.get(0);
    let mut num_psi = vec![0.0; d];
    let mut num_omega = vec![0.0; d];
    let mut num_mean = vec![0.0; d];
    let (mut sum_psi, mut sum_omega, mut sum_mass) = (0.0, 0.0, 0.0);
    for (i, (x, &v)) in points.iter().zip(values).enumerate() {
        let mass = sample_weights.map_or(1.0, |w| w[i]);
        let omega = mass * (shift - alpha * v).exp();
        let psi = omega + mass * h_scaled;
        for k in 0..d {
            let dx = x[k] - origin[k];
            num_psi[k] += psi * dx;
            num_omega[k] += omega * dx;
            num_mean[k] += mass * dx;
        }
        sum_psi += psi;
        sum_omega += omega;
        sum_mass += mass;
    }
    let average = |num: &[f64], total: f64| -> Vec<f64> { num.iter().zip(origin).map(|(v, o)| o + v / total).collect() };
    let m_h = average(&num_psi, sum_psi);
    let mean = average(&num_mean, sum_mass);
    let m_0 = (sum_omega > 0.0).then(|| average(&num_omega, sum_omega));
    Ok(WeightedConsensus {
        m_h,
        m_0,
        mean,
        beta: sum_omega / sum_psi,
    })
}

/// Regularized consensus `m_h` of a particle ensemble.
pub fn weighted_mean(
    positions: &Points,
    f: &ObjectiveSpec,
    alpha: f64,
    h: &RegularizerSchedule,
) -> Result<WeightedConsensus> {
    let values: Vec<f64> = positions.iter().map(|x| f.eval(x)).collect();
    consensus_from_values(positions, &values, alpha, h, None)
}

/// `m_h[rho]` for a weighted sample cloud approximating `rho`.
pub fn weighted_mean_measure(
    samples: &Points,
    sample_weights: &[f64],
    f: &ObjectiveSpec,
    alpha: f64,
    h: &RegularizerSchedule,
) -> Result<Vec<f64>> {
    let values: Vec<f64> = samples.iter().map(|x| f.eval(x)).collect();
    Ok(consensus_from_values(samples, &values, alpha, h, Some(sample_weights))?.m_h)
}

/// Convex-combination coefficients `theta_i = psi_i / sum psi` behind `m_h`.
pub fn consensus_coefficients(values: &[f64], alpha: f64, h: &RegularizerSchedule) -> Vec<f64> {
    let ln_h = h.ln_value(alpha);
    let shift = values
        .iter()
        .map(|&v| alpha * v)
        .fold(f64::INFINITY, f64::min)
        .min(-ln_h);
    let h_scaled = (shift + ln_h).exp();
    let psi: Vec<f64> = values
        .iter()
        .map(|&v| (shift - alpha * v).exp() + h_scaled)
        .collect();
    let total: f64 = psi.iter().sum();
    psi.into_iter().map(|p| p / total).collect()
}
