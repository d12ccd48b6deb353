//! Synchronous coupling of finite systems with a mean-field proxy.
//!
//! The proxy holds `n_ref` copies, and every finite system in a ladder holds
//! `N <= n_ref` particles. All of them share one [`TrialKey`], so particle
//! `i` of each finite system starts where proxy copy `i` starts and receives
//! exactly the same Wiener increments. The two differ only through their
//! consensus points.

use serde::{Deserialize, Serialize};

use super::init::InitLaw;
use super::params::ModelParams;
use super::rng::TrialKey;
use super::system::{System, TimeSeries};
use crate::error::{invalid_param, Result};
use crate::objectives::ObjectiveSpec;
use crate::points::{dist_pow, Points};

#[derive(Debug, Clone)]
pub struct CoupledSystem<'a> {
    reference: System<'a>,
    finite: Vec<System<'a>>,
}

impl<'a> CoupledSystem<'a> {
    pub fn new(
        f: &'a ObjectiveSpec,
        params: &'a ModelParams,
        ladder: &[usize],
        n_ref: usize,
        init: &InitLaw,
        key: TrialKey,
    ) -> Result<Self> {
        if n_ref == 0 {
            return Err(invalid_param("reference ensemble is empty"));
        }
        if let Some(&n) = ladder.iter().find(|&&n| n == 0 || n > n_ref) {
            return Err(invalid_param(format!("ladder size {n} must lie in 1..={n_ref}")));
        }
        let start = init.sample(n_ref, key)?;
        let finite = ladder
            .iter()
            .map(|&n| System::new(f, params, start.head(n), key))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            reference: System::new(f, params, start, key)?,
            finite,
        })
    }

    pub fn reference(&self) -> &System<'a> {
        &self.reference
    }

    pub fn finite(&self, rung: usize) -> &System<'a> {
        &self.finite[rung]
    }

    pub fn rungs(&self) -> usize {
        self.finite.len()
    }

    pub fn step_index(&self) -> usize {
        self.reference.step_index()
    }

    pub fn t(&self) -> f64 {
        self.reference.t()
    }

    pub fn step(&mut self) -> Result<()> {
        self.reference.step()?;
        for s in &mut self.finite {
            s.step()?;
        }
        Ok(())
    }

    /// `(1/N) sum_i |X^i - Xbar^i|^p` for one rung.
    pub fn gap(&self, rung: usize, p: f64) -> f64 {
        let fin = self.finite[rung].points();
        let reference = self.reference.points();
        let n = fin.len();
        (0..n).map(|i| dist_pow(fin.get(i), reference.get(i), p)).sum::<f64>() / n as f64
    }
}

/// Step a coupled ladder to `t_end`, calling `observe` at each recording time.
#[allow(clippy::too_many_arguments)]
pub fn coupled_run_with<F>(
    f: &ObjectiveSpec,
    params: &ModelParams,
    ladder: &[usize],
    n_ref: usize,
    init: &InitLaw,
    key: TrialKey,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(&CoupledSystem<'_>) -> Result<()>,
{
    let mut sys = CoupledSystem::new(f, params, ladder, n_ref, init, key)?;
    let n_steps = params.n_steps();
    loop {
        if params.records(sys.step_index()) {
            observe(&sys)?;
        }
        if sys.step_index() == n_steps {
            return Ok(());
        }
        sys.step()?;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledSeries {
    pub finite: TimeSeries,
    pub reference: TimeSeries,
    /// `(t, gap)` at each recording time.
    pub gap: Vec<(f64, f64)>,
    pub finite_final: Points,
    pub reference_final: Points,
}

/// One finite system of size `n` synchronously coupled to an `n_ref` proxy.
pub fn coupled_run(
    f: &ObjectiveSpec,
    params: &ModelParams,
    n: usize,
    n_ref: usize,
    init: &InitLaw,
    key: TrialKey,
) -> Result<CoupledSeries> {
    let p = params.p;
    let mut finite = TimeSeries { p, records: vec![] };
    let mut reference = TimeSeries { p, records: vec![] };
    let mut gap = vec![];
    let mut last = None;
    coupled_run_with(f, params, &[n], n_ref, init, key, |sys| {
        finite.records.push(sys.finite(0).snapshot().record(p));
        reference.records.push(sys.reference().snapshot().record(p));
        gap.push((sys.t(), sys.gap(0, p)));
        if sys.step_index() == params.n_steps() {
            last = Some((sys.finite(0).points().clone(), sys.reference().points().clone()));
        }
        Ok(())
    })?;
    let (finite_final, reference_final) = last.expect("the final step is always recorded");
    Ok(CoupledSeries {
        finite,
        reference,
        gap,
        finite_final,
        reference_final,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::rastrigin;
    use crate::theory::RegularizerSchedule;

    const H: RegularizerSchedule = RegularizerSchedule::ExpFloor { eta: 1.0, f_lo: 1.0 };

    #[test]
    fn equal_sizes_give_identical_systems() {
        let f = rastrigin(2, 0.0, 1.0).unwrap();
        let params = ModelParams::new(2.0, 0.5, 5.0, H, 0.5);
        let run = coupled_run(&f, &params, 32, 32, &InitLaw::uniform_cube(2, -2.0, 2.0), TrialKey::new(1, 0)).unwrap();
        assert!(run.gap.iter().all(|&(_, g)| g == 0.0));
        assert_eq!(run.finite, run.reference);
    }

    #[test]
    fn synchronous_start_has_zero_gap() {
        let f = rastrigin(1, 0.0, 1.0).unwrap();
        let params = ModelParams::new(2.0, 0.5, 5.0, H, 0.2);
        let run = coupled_run(&f, &params, 8, 64, &InitLaw::uniform_cube(1, -2.0, 2.0), TrialKey::new(3, 0)).unwrap();
        assert_eq!(run.gap[0], (0.0, 0.0));
        assert!(run.gap.last().unwrap().1 > 0.0);
    }

    #[test]
    fn deterministic_gap_matches_linear_ode() {
        // sigma = 0, alpha = 0: both systems contract toward their own
        // (conserved) means, so after k steps
        // X^i - Xbar^i = (mean_N - mean_ref) (1 - (1 - lambda dt)^k).
        let f = rastrigin(2, 0.0, 1.0).unwrap();
        let lambda = 1.5;
        let params = ModelParams::new(lambda, 0.0, 0.0, H, 1.0).with_dt(0.01).with_record_every(10);
        let key = TrialKey::new(8, 2);
        let init = InitLaw::uniform_cube(2, -3.0, 3.0);
        let start = init.sample(40, key).unwrap();
        let mean = |pts: &Points| -> Vec<f64> {
            let n = pts.len() as f64;
            (0..2).map(|k| pts.iter().map(|x| x[k]).sum::<f64>() / n).collect()
        };
        let mismatch = dist_pow(&mean(&start.head(10)), &mean(&start), 2.0);
        let run = coupled_run(&f, &params, 10, 40, &init, key).unwrap();
        for &(t, g) in &run.gap {
            let k = (t / params.dt).round();
            let factor = 1.0 - (1.0 - lambda * params.dt).powf(k);
            let expected = mismatch * factor * factor;
            assert!((g - expected).abs() <= 1e-10 * (1.0 + expected), "t={t}: {g} vs {expected}");
        }
    }

    #[test]
    fn ladder_rungs_share_noise_with_the_reference() {
        let f = rastrigin(1, 0.0, 1.0).unwrap();
        let params = ModelParams::new(2.0, 0.5, 5.0, H, 0.3);
        let init = InitLaw::uniform_cube(1, -2.0, 2.0);
        let key = TrialKey::new(4, 4);
        let mut gaps = vec![];
        coupled_run_with(&f, &params, &[4, 16], 16, &init, key, |s| {
            gaps.push(s.gap(1, 2.0));
            Ok(())
        })
        .unwrap();
        assert!(gaps.iter().all(|&g| g == 0.0));
        let single = coupled_run(&f, &params, 4, 16, &init, key).unwrap();
        let mut ladder_gap = vec![];
        coupled_run_with(&f, &params, &[4, 16], 16, &init, key, |s| {
            ladder_gap.push(s.gap(0, 2.0));
            Ok(())
        })
        .unwrap();
        assert_eq!(ladder_gap, single.gap.iter().map(|g| g.1).collect::<Vec<_>>());
    }

    #[test]
    fn oversized_rung_is_rejected() {
        let f = rastrigin(1, 0.0, 1.0).unwrap();
        let params = ModelParams::new(2.0, 0.5, 5.0, H, 0.3);
        let init = InitLaw::uniform_cube(1, -2.0, 2.0);
        assert!(coupled_run(&f, &params, 20, 16, &init, TrialKey::new(0, 0)).is_err());
    }
}
