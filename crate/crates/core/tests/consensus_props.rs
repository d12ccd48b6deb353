use cbo_core::consensus::{consensus_coefficients, consensus_from_values, weighted_mean, weighted_mean_measure};
use cbo_core::metrics::{moments, EmpiricalMeasure};
use cbo_core::objectives::{rastrigin, shifted_quadratic, ObjectiveSpec};
use cbo_core::theory::{lambda_alpha, RegularizerSchedule};
use cbo_core::Points;
use proptest::prelude::*;

fn ensemble() -> impl Strategy<Value = Points> {
    (1usize..=5, 1usize..=64).prop_flat_map(|(d, n)| {
        prop::collection::vec(-4.0f64..4.0, d * n).prop_map(move |data| Points::new(d, data).unwrap())
    })
}

fn schedule() -> impl Strategy<Value = RegularizerSchedule> {
    prop_oneof![
        (1e-3f64..10.0).prop_map(|eta| RegularizerSchedule::Constant { eta }),
        (1e-3f64..10.0, 0.0f64..1.0).prop_map(|(eta, f_lo)| RegularizerSchedule::ExpFloor { eta, f_lo }),
    ]
}

fn scale(v: &[f64]) -> f64 {
    1.0 + v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn convex_hull_reconstruction(pts in ensemble(), alpha in 0.0f64..20.0, h in schedule()) {
        let f = rastrigin(pts.dim(), 0.3, 1.0).unwrap();
        let values: Vec<f64> = pts.iter().map(|x| f.eval(x)).collect();
        let c = consensus_from_values(&pts, &values, alpha, &h, None).unwrap();
        let theta = consensus_coefficients(&values, alpha, &h);
        prop_assert!(theta.iter().all(|&t| t >= 0.0));
        prop_assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for k in 0..pts.dim() {
            let rebuilt: f64 = pts.iter().zip(&theta).map(|(x, t)| t * x[k]).sum();
            prop_assert!((rebuilt - c.m_h[k]).abs() < 1e-12 * scale(&c.m_h));
            let lo = pts.iter().map(|x| x[k]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|x| x[k]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(c.m_h[k] >= lo - 1e-12 && c.m_h[k] <= hi + 1e-12);
        }
        prop_assert!(c.beta > 0.0 && c.beta < 1.0 || c.beta == 0.0);
    }

    #[test]
    fn interpolation_identity(pts in ensemble(), alpha in 0.0f64..40.0, h in schedule()) {
        let f = rastrigin(pts.dim(), 0.0, 1.0).unwrap();
        let c = weighted_mean(&pts, &f, alpha, &h).unwrap();
        match &c.m_0 {
            Some(m0) => {
                for ((mh, m0k), mk) in c.m_h.iter().zip(m0).zip(&c.mean) {
                    let rhs = c.beta * m0k + (1.0 - c.beta) * mk;
                    prop_assert!((mh - rhs).abs() <= 1e-12 * scale(&c.m_h));
                }
            }
            None => {
                for k in 0..pts.dim() {
                    prop_assert!((c.m_h[k] - c.mean[k]).abs() <= 1e-12 * scale(&c.m_h));
                }
            }
        }
    }

    #[test]
    fn translation_equivariance(
        pts in ensemble(),
        alpha in 0.0f64..10.0,
        h in schedule(),
        shift in prop::collection::vec(-3.0f64..3.0, 5),
    ) {
        let d = pts.dim();
        let c: Vec<f64> = shift[..d].to_vec();
        let f = rastrigin(d, 0.0, 1.0).unwrap();
        let f_shift = rastrigin(d, 0.0, 1.0).unwrap();
        let c2 = c.clone();
        let g = ObjectiveSpec::custom("shifted", d, 1.0, move |x: &[f64]| {
            let y: Vec<f64> = x.iter().zip(&c2).map(|(a, b)| a - b).collect();
            f_shift.eval(&y)
        }).unwrap();
        let moved = Points::new(d, pts.iter().flat_map(|x| x.iter().zip(&c).map(|(a, b)| a + b).collect::<Vec<_>>()).collect()).unwrap();
        let base = weighted_mean(&pts, &f, alpha, &h).unwrap();
        let shifted = weighted_mean(&moved, &g, alpha, &h).unwrap();
        for ((sk, bk), ck) in shifted.m_h.iter().zip(&base.m_h).zip(&c) {
            prop_assert!((sk - bk - ck).abs() < 1e-10 * scale(&shifted.m_h));
        }
    }

    #[test]
    fn stabilized_matches_naive_for_moderate_exponents(
        pts in ensemble(),
        alpha in 0.0f64..1.0,
        eta in 0.01f64..10.0,
    ) {
        let d = pts.dim();
        let f = shifted_quadratic(vec![0.0; d], 0.5, 1.0).unwrap();
        let values: Vec<f64> = pts.iter().map(|x| f.eval(x)).collect();
        prop_assume!(values.iter().all(|v| alpha * v <= 30.0));
        let h = RegularizerSchedule::Constant { eta };
        let c = weighted_mean(&pts, &f, alpha, &h).unwrap();
        let psi: Vec<f64> = values.iter().map(|v| (-alpha * v).exp() + eta).collect();
        let total: f64 = psi.iter().sum();
        for k in 0..d {
            let naive: f64 = pts.iter().zip(&psi).map(|(x, w)| x[k] * w).sum::<f64>() / total;
            prop_assert!((c.m_h[k] - naive).abs() <= 1e-12 * naive.abs().max(1.0));
        }
    }

    #[test]
    fn moment_bound_with_weight_ratio(pts in ensemble(), alpha in 0.01f64..20.0, h in schedule(), p in 2.0f64..4.0) {
        let d = pts.dim();
        let f = rastrigin(d, 0.0, 1.0).unwrap();
        let c = weighted_mean(&pts, &f, alpha, &h).unwrap();
        let big_lambda = lambda_alpha(1.0, &h, alpha).unwrap();
        let mu = EmpiricalMeasure::uniform(pts.clone()).unwrap();
        let m = moments(&mu, p).unwrap();
        let dev: f64 = c.m_h.iter().zip(&m.mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt().powf(p);
        prop_assert!(dev <= big_lambda * m.v_p * (1.0 + 1e-10) + 1e-14, "{dev} > {big_lambda} * {}", m.v_p);
    }

    #[test]
    fn uniform_sample_weights_reduce_to_plain_consensus(pts in ensemble(), alpha in 0.0f64..10.0, h in schedule()) {
        let f = rastrigin(pts.dim(), 0.0, 1.0).unwrap();
        let w = vec![1.0 / pts.len() as f64; pts.len()];
        let a = weighted_mean_measure(&pts, &w, &f, alpha, &h).unwrap();
        let b = weighted_mean(&pts, &f, alpha, &h).unwrap().m_h;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-14 * scale(&b));
        }
    }
}

#[test]
fn double_weighting_by_hand() {
    let f = shifted_quadratic(vec![0.0], 1.0, 1.0).unwrap();
    let pts = Points::from_rows(&[[-1.5], [1.5]]).unwrap();
    let h = RegularizerSchedule::ExpFloor { eta: 1.0, f_lo: 1.0 };
    let m = weighted_mean_measure(&pts, &[2.0, 1.0], &f, 3.0, &h).unwrap();
    assert!((m[0] - (2.0 * -1.5 + 1.5) / 3.0).abs() < 1e-15);
}
