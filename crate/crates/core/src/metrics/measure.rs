use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_param, Result};
use crate::points::{dist_pow, norm, Points};

/// A finite, optionally weighted point cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    points: Points,
    weights: Option<Vec<f64>>,
}

const WEIGHT_SUM_TOL: f64 = 1e-12;

impl EmpiricalMeasure {
    /// Uniform weights `1/n`.
    pub fn uniform(points: Points) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid_input("empirical measure needs at least one point"));
        }
        Ok(Self { points, weights: None })
    }

    /// Explicit nonnegative weights summing to one.
    pub fn weighted(points: Points, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid_input("empirical measure needs at least one point"));
        }
        if weights.len() != points.len() {
            return Err(invalid_input("one weight per point is required"));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(invalid_input("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(invalid_input(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            points,
            weights: Some(weights),
        })
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn is_uniform(&self) -> bool {
        self.weights.is_none()
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.points.len() as f64,
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: Vec<f64>,
    /// Centered moment `sum w_i |x_i - mean|^p`.
    pub v_p: f64,
    /// Absolute moment `sum w_i |x_i|^p`.
    pub m_p: f64,
}

pub fn moments(mu: &EmpiricalMeasure, p: f64) -> Result<MomentSummary> {
    if !(p >= 1.0) {
        return Err(invalid_param(format!("moment order must be at least 1, got {p}")));
    }
    let d = mu.dim();
    let mut mean = vec![0.0; d];
    if mu.is_uniform() {
        mean = spread(mu.points(), p).0;
    } else {
        for (i, x) in mu.points().iter().enumerate() {
            let w = mu.weight(i);
            for k in 0..d {
                mean[k] += w * x[k];
            }
        }
    }
    let mut v_p = 0.0;
    let mut m_p = 0.0;
    for (i, x) in mu.points().iter().enumerate() {
        let w = mu.weight(i);
        v_p += w * dist_pow(x, &mean, p);
        m_p += w * norm(x).powf(p);
    }
    Ok(MomentSummary { mean, v_p, m_p })
}

/// Mean, `V_2` and `V_p` of a uniformly weighted cloud in one pass over the
/// centered points.
pub(crate) fn spread(points: &Points, p: f64) -> (Vec<f64>, f64, f64) {
    let d = points.dim();
    let n = points.len() as f64;
    let mut mean = vec![0.0; d];
    for x in points.iter() {
        for k in 0..d {
            mean[k] += x[k];
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let (mut v2, mut vp) = (0.0, 0.0);
    for x in points.iter() {
        let sq = dist_pow(x, &mean, 2.0);
        v2 += sq;
        vp += if p == 2.0 { sq } else { sq.sqrt().powf(p) };
    }
    (mean, v2 / n, vp / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(rows: &[[f64; 1]]) -> EmpiricalMeasure {
        EmpiricalMeasure::uniform(Points::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn hand_computed_moments() {
        let m = moments(&uniform(&[[-1.0], [1.0]]), 2.0).unwrap();
        assert_eq!(m.mean, vec![0.0]);
        assert_eq!(m.v_p, 1.0);
        assert_eq!(m.m_p, 1.0);
        let m = moments(&uniform(&[[0.0], [2.0]]), 2.0).unwrap();
        assert_eq!(m.mean, vec![1.0]);
        assert_eq!(m.v_p, 1.0);
        assert_eq!(m.m_p, 2.0);
    }

    #[test]
    fn single_point_has_zero_spread() {
        let mu = EmpiricalMeasure::uniform(Points::from_rows(&[[3.0, 4.0]]).unwrap()).unwrap();
        let m = moments(&mu, 3.0).unwrap();
        assert_eq!(m.v_p, 0.0);
        assert!((m.m_p - 125.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_moments() {
        let pts = Points::from_rows(&[[0.0], [3.0]]).unwrap();
        let mu = EmpiricalMeasure::weighted(pts, vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let m = moments(&mu, 2.0).unwrap();
        assert!((m.mean[0] - 1.0).abs() < 1e-15);
        assert!((m.v_p - (2.0 / 3.0 + 4.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn invalid_measures() {
        assert!(EmpiricalMeasure::uniform(Points::zeros(1, 0)).is_err());
        let pts = Points::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(EmpiricalMeasure::weighted(pts.clone(), vec![0.5, 0.6]).is_err());
        assert!(EmpiricalMeasure::weighted(pts.clone(), vec![1.5, -0.5]).is_err());
        assert!(moments(&EmpiricalMeasure::uniform(pts).unwrap(), 0.5).is_err());
    }

    #[test]
    fn spread_agrees_with_moments() {
        let pts = Points::from_rows(&[[0.1, 2.0], [-1.0, 0.5], [3.0, 3.0]]).unwrap();
        let mu = EmpiricalMeasure::uniform(pts.clone()).unwrap();
        let (mean, v2, v3) = spread(&pts, 3.0);
        let m2 = moments(&mu, 2.0).unwrap();
        let m3 = moments(&mu, 3.0).unwrap();
        assert_eq!(mean, m2.mean);
        assert!((v2 - m2.v_p).abs() < 1e-14);
        assert!((v3 - m3.v_p).abs() < 1e-13);
    }
}
