use cbo_core::metrics::{laplace_value, wasserstein_p, EmpiricalMeasure, WassersteinMethod};
use cbo_core::objectives::rastrigin;
use cbo_core::Points;
use proptest::prelude::*;

const EXACT: WassersteinMethod = WassersteinMethod::ExactAssignment;

fn cloud(d: usize, n: usize) -> impl Strategy<Value = EmpiricalMeasure> {
    prop::collection::vec(-5.0f64..5.0, d * n)
        .prop_map(move |v| EmpiricalMeasure::uniform(Points::new(d, v).unwrap()).unwrap())
}

fn w(a: &EmpiricalMeasure, b: &EmpiricalMeasure, p: f64) -> f64 {
    wasserstein_p(a, b, p, EXACT).unwrap().value
}

fn brute_force(a: &EmpiricalMeasure, b: &EmpiricalMeasure, p: f64) -> f64 {
    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = vec![];
        for perm in permutations(n - 1) {
            for pos in 0..=perm.len() {
                let mut q = perm.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }
    let n = a.len();
    let cost = |i: usize, j: usize| -> f64 {
        a.points().get(i).iter().zip(b.points().get(j)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt().powf(p)
    };
    let best = permutations(n)
        .iter()
        .map(|perm| perm.iter().enumerate().map(|(i, &j)| cost(i, j)).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    (best / n as f64).powf(1.0 / p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn assignment_equals_permutation_brute_force(a in cloud(2, 5), b in cloud(2, 5), p in prop::sample::select(vec![1.0, 2.0])) {
        let exact = w(&a, &b, p);
        prop_assert!((exact - brute_force(&a, &b, p)).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_methods_agree(n in 1usize..=256, seed in any::<u64>()) {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 10.0 - 5.0
        };
        let a = EmpiricalMeasure::uniform(Points::new(1, (0..n).map(|_| next()).collect()).unwrap()).unwrap();
        let b = EmpiricalMeasure::uniform(Points::new(1, (0..n).map(|_| next()).collect()).unwrap()).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let sorted = wasserstein_p(&a, &b, p, WassersteinMethod::Exact1d).unwrap().value;
            prop_assert!((sorted - w(&a, &b, p)).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn metric_axioms(a in cloud(2, 6), b in cloud(2, 6), c in cloud(2, 6), p in 1.0f64..3.0) {
        let ab = w(&a, &b, p);
        let ba = w(&b, &a, p);
        let bc = w(&b, &c, p);
        let ac = w(&a, &c, p);
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ac <= ab + bc + 1e-10);
        prop_assert_eq!(w(&a, &a, p), 0.0);
        prop_assert!(ab > 0.0);
    }

    #[test]
    fn laplace_bracket_is_exact(
        xs in prop::collection::vec(-3.0f64..3.0, 1..200),
        alpha in 0.01f64..500.0,
    ) {
        let f = rastrigin(1, 0.0, 1.0).unwrap();
        let pts = Points::new(1, xs).unwrap();
        let v = laplace_value(&pts, &f, alpha).unwrap();
        let min = pts.iter().map(|x| f.eval(x)).fold(f64::INFINITY, f64::min);
        prop_assert!(v >= min);
        prop_assert!(v <= min + (pts.len() as f64).ln() / alpha);
    }
}
