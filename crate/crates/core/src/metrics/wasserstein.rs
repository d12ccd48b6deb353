use serde::{Deserialize, Serialize};

use super::assignment::min_cost_assignment;
use super::measure::EmpiricalMeasure;
use crate::dynamics::rng::{StreamTag, TrialKey};
use crate::error::{invalid_input, invalid_param, Result};
use crate::points::dist_pow;

/// Largest measure size handled by the `O(n^3)` assignment solver.
pub const ASSIGNMENT_MAX: usize = 512;

/// Default number of random directions for the sliced estimator.
pub const SLICED_PROJECTIONS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WassersteinMethod {
    /// Quantile coupling; `d = 1` only.
    Exact1d,
    /// Optimal assignment between equal-size uniform measures.
    ExactAssignment,
    /// Monte Carlo average over random one-dimensional projections. An
    /// estimator of the sliced distance, not of `W_p` itself.
    Sliced { projections: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WassersteinEstimate {
    pub value: f64,
    /// Monte Carlo standard error; zero for the exact methods.
    pub stderr: f64,
}

pub fn wasserstein_p(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    p: f64,
    method: WassersteinMethod,
) -> Result<WassersteinEstimate> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid_param(format!("p must be at least 1, got {p}")));
    }
    if mu.dim() != nu.dim() {
        return Err(invalid_input("measures live in different dimensions"));
    }
    let exact = |cost: f64| WassersteinEstimate {
        value: cost.powf(1.0 / p),
        stderr: 0.0,
    };
    match method {
        WassersteinMethod::Exact1d => {
            if mu.dim() != 1 {
                return Err(invalid_input("exact_1d requires one-dimensional measures"));
            }
            let xs: Vec<f64> = mu.points().iter().map(|x| x[0]).collect();
            let ys: Vec<f64> = nu.points().iter().map(|y| y[0]).collect();
            Ok(exact(transport_cost_1d(&xs, &mu.weights(), mu.is_uniform(), &ys, &nu.weights(), nu.is_uniform(), p)))
        }
        WassersteinMethod::ExactAssignment => {
            let n = mu.len();
            if nu.len() != n || !mu.is_uniform() || !nu.is_uniform() {
                return Err(invalid_input("exact_assignment needs equal-size uniform measures"));
            }
            if n > ASSIGNMENT_MAX {
                return Err(invalid_input(format!(
                    "exact_assignment is limited to {ASSIGNMENT_MAX} points, got {n}"
                )));
            }
            let mut cost = Vec::with_capacity(n * n);
            for x in mu.points().iter() {
                for y in nu.points().iter() {
                    cost.push(dist_pow(x, y, p));
                }
            }
            let (_, total) = min_cost_assignment(&cost, n);
            Ok(exact(total / n as f64))
        }
        WassersteinMethod::Sliced { projections, seed } => {
            if mu.dim() < 2 {
                return Err(invalid_input("sliced estimation needs d >= 2; use exact_1d"));
            }
            if projections < 2 {
                return Err(invalid_param("sliced estimation needs at least two projections"));
            }
            Ok(sliced(mu, nu, p, projections, seed))
        }
    }
}

/// `W_p^p` between two weighted samples on the line via the quantile coupling.
fn transport_cost_1d(xs: &[f64], wx: &[f64], ux: bool, ys: &[f64], wy: &[f64], uy: bool, p: f64) -> f64 {
    let order = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        idx
    };
    let ix = order(xs);
    let iy = order(ys);
    let pow = |a: f64, b: f64| {
        let d = (a - b).abs();
        if p == 2.0 {
            d * d
        } else {
            d.powf(p)
        }
    };
    if ux && uy && xs.len() == ys.len() {
        let total: f64 = ix.iter().zip(&iy).map(|(&a, &b)| pow(xs[a], ys[b])).sum();
        return total / xs.len() as f64;
    }
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (wx[ix[0]], wy[iy[0]]);
    let mut total = 0.0;
    while i < ix.len() && j < iy.len() {
        let mass = ra.min(rb);
        total += mass * pow(xs[ix[i]], ys[iy[j]]);
        // One of the two remainders is now exactly zero.
        ra -= mass;
        rb -= mass;
        if ra == 0.0 {
            i += 1;
            if i < ix.len() {
                ra = wx[ix[i]];
            }
        }
        if rb == 0.0 {
            j += 1;
            if j < iy.len() {
                rb = wy[iy[j]];
            }
        }
    }
    total
}

fn sliced(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, p: f64, k: usize, seed: u64) -> WassersteinEstimate {
    let d = mu.dim();
    let mut rng = TrialKey::new(seed, 0).stream(StreamTag::Aux, 0);
    let (wx, wy) = (mu.weights(), nu.weights());
    let mut costs = Vec::with_capacity(k);
    let mut dir = vec![0.0; d];
    for _ in 0..k {
        loop {
            rng.fill_normals(&mut dir);
            let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if len > 0.0 {
                dir.iter_mut().for_each(|v| *v /= len);
                break;
            }
        }
        let project = |m: &EmpiricalMeasure| -> Vec<f64> {
            m.points().iter().map(|x| x.iter().zip(&dir).map(|(a, b)| a * b).sum()).collect()
        };
        costs.push(transport_cost_1d(&project(mu), &wx, mu.is_uniform(), &project(nu), &wy, nu.is_uniform(), p));
    }
    let kf = k as f64;
    let mean = costs.iter().sum::<f64>() / kf;
    let var = costs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (kf - 1.0);
    let se_cost = (var / kf).sqrt();
    let value = mean.powf(1.0 / p);
    // Delta method for the map c -> c^(1/p).
    let stderr = if mean > 0.0 {
        se_cost * mean.powf(1.0 / p - 1.0) / p
    } else {
        0.0
    };
    WassersteinEstimate { value, stderr }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::Points;

    fn cloud(rows: &[&[f64]]) -> EmpiricalMeasure {
        EmpiricalMeasure::uniform(Points::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn dirac_distance_is_the_point_distance() {
        let a = cloud(&[&[1.0, 2.0]]);
        let b = cloud(&[&[4.0, 6.0]]);
        let w = wasserstein_p(&a, &b, 2.0, WassersteinMethod::ExactAssignment).unwrap();
        assert!((w.value - 5.0).abs() < 1e-14);
        let w = wasserstein_p(&a, &b, 1.0, WassersteinMethod::ExactAssignment).unwrap();
        assert!((w.value - 5.0).abs() < 1e-14);
        let x = cloud(&[&[0.5]]);
        let y = cloud(&[&[-2.0]]);
        assert_eq!(wasserstein_p(&x, &y, 3.0, WassersteinMethod::Exact1d).unwrap().value, 2.5);
    }

    #[test]
    fn sorted_coupling_example() {
        let a = cloud(&[&[0.0], &[1.0]]);
        let b = cloud(&[&[2.0], &[1.0]]);
        let w = wasserstein_p(&a, &b, 2.0, WassersteinMethod::Exact1d).unwrap();
        assert!((w.value - 1.0).abs() < 1e-15);
        let w = wasserstein_p(&a, &b, 2.0, WassersteinMethod::ExactAssignment).unwrap();
        assert!((w.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identical_measures_are_at_distance_zero() {
        let a = cloud(&[&[0.0, 1.0], &[2.0, -1.0], &[0.3, 0.3]]);
        for m in [WassersteinMethod::ExactAssignment, WassersteinMethod::Sliced { projections: 16, seed: 1 }] {
            assert_eq!(wasserstein_p(&a, &a, 2.0, m).unwrap().value, 0.0);
        }
        let b = cloud(&[&[0.0], &[5.0]]);
        assert_eq!(wasserstein_p(&b, &b, 1.0, WassersteinMethod::Exact1d).unwrap().value, 0.0);
    }

    #[test]
    fn weighted_quantile_coupling() {
        // mu = 0.5 d0 + 0.5 d1, nu = d0.5: each half of mu moves by 0.5.
        let mu = cloud(&[&[0.0], &[1.0]]);
        let nu = cloud(&[&[0.5]]);
        let w = wasserstein_p(&mu, &nu, 1.0, WassersteinMethod::Exact1d).unwrap();
        assert!((w.value - 0.5).abs() < 1e-15);
        // mu = 0.25 d0 + 0.75 d2, nu = 0.5 d0 + 0.5 d2: mass 0.25 moves by 2.
        let mu = EmpiricalMeasure::weighted(Points::from_rows(&[[0.0], [2.0]]).unwrap(), vec![0.25, 0.75]).unwrap();
        let nu = cloud(&[&[2.0], &[0.0]]);
        let w = wasserstein_p(&mu, &nu, 1.0, WassersteinMethod::Exact1d).unwrap();
        assert!((w.value - 0.5).abs() < 1e-15, "{w:?}");
        let w2 = wasserstein_p(&nu, &mu, 2.0, WassersteinMethod::Exact1d).unwrap();
        assert!((w2.value - 1.0).abs() < 1e-15, "{w2:?}");
    }

    #[test]
    fn unequal_uniform_sizes_in_one_dimension() {
        // Three atoms against two: quantile coupling by hand.
        let mu = cloud(&[&[0.0], &[1.0], &[2.0]]);
        let nu = cloud(&[&[0.0], &[2.0]]);
        // Masses: 1/3 of 0->0, 1/6 of 1->0, 1/6 of 1->2, 1/3 of 2->2.
        let w = wasserstein_p(&mu, &nu, 1.0, WassersteinMethod::Exact1d).unwrap();
        assert!((w.value - 1.0 / 3.0).abs() < 1e-15, "{w:?}");
    }

    #[test]
    fn sliced_reports_uncertainty() {
        let a = cloud(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let b = cloud(&[&[3.0, 0.0], &[1.0, 4.0], &[2.0, 1.0]]);
        let w = wasserstein_p(&a, &b, 2.0, WassersteinMethod::Sliced { projections: SLICED_PROJECTIONS, seed: 7 }).unwrap();
        let exact = wasserstein_p(&a, &b, 2.0, WassersteinMethod::ExactAssignment).unwrap();
        assert!(w.stderr > 0.0);
        assert!(w.value <= exact.value + 1e-12);
        let again = wasserstein_p(&a, &b, 2.0, WassersteinMethod::Sliced { projections: SLICED_PROJECTIONS, seed: 7 }).unwrap();
        assert_eq!(w, again);
    }

    #[test]
    fn shape_errors() {
        let a = cloud(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let b = cloud(&[&[0.0, 0.0]]);
        assert!(wasserstein_p(&a, &b, 2.0, WassersteinMethod::ExactAssignment).is_err());
        assert!(wasserstein_p(&a, &a, 2.0, WassersteinMethod::Exact1d).is_err());
        let c = cloud(&[&[0.0]]);
        assert!(wasserstein_p(&c, &c, 2.0, WassersteinMethod::Sliced { projections: 8, seed: 0 }).is_err());
        assert!(wasserstein_p(&a, &c, 2.0, WassersteinMethod::ExactAssignment).is_err());
        assert!(wasserstein_p(&a, &a, 0.5, WassersteinMethod::ExactAssignment).is_err());
    }
}
