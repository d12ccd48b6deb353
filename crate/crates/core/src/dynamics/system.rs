use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::init::InitLaw;
use super::params::{ModelParams, NoiseModel};
use super::rng::{ParticleStream, StreamTag, TrialKey};
use crate::consensus::{consensus_from_values, WeightedConsensus};
use crate::error::{invalid_input, invalid_param, CboError, Result};
use crate::metrics::spread;
use crate::objectives::ObjectiveSpec;
use crate::points::Points;

/// Ensembles at least this large update particles in parallel. Reductions
/// stay sequential, so results do not depend on the thread count.
const PARALLEL_MIN: usize = 2048;

/// Smallest ensemble accepted as a mean-field proxy.
pub const MIN_REFERENCE_SIZE: usize = 1024;

/// Particle positions at one time instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub points: Points,
    pub t: f64,
    /// Steps taken so far; selects the noise draws of the next step.
    pub step: usize,
}

impl Ensemble {
    pub fn new(points: Points) -> Self {
        Self { points, t: 0.0, step: 0 }
    }
}

fn evaluate(f: &ObjectiveSpec, points: &Points, out: &mut [f64]) {
    let d = points.dim();
    if points.len() >= PARALLEL_MIN {
        out.par_iter_mut()
            .zip(points.as_slice().par_chunks_exact(d))
            .for_each(|(v, x)| *v = f.eval(x));
    } else {
        for (v, x) in out.iter_mut().zip(points.iter()) {
            *v = f.eval(x);
        }
    }
}

/// Apply one Euler-Maruyama increment to a single particle. `z` holds the
/// particle's `d` standard normals for this step.
#[inline]
fn advance(x: &mut [f64], m: &[f64], z: &[f64], params: &ModelParams) {
    let drift = params.lambda * params.dt;
    let diffusion = params.sigma * params.dt.sqrt();
    let radius = || x.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    match params.noise {
        NoiseModel::BaselineScalar => {
            let s = diffusion * z[0];
            for (xk, mk) in x.iter_mut().zip(m) {
                let diff = *xk - mk;
                *xk -= drift * diff - s * diff;
            }
        }
        NoiseModel::CommonDirection => {
            let s = diffusion * radius() * z[0];
            for (xk, mk) in x.iter_mut().zip(m) {
                *xk += -drift * (*xk - mk) + s;
            }
        }
        NoiseModel::AnisotropicHadamard => {
            for ((xk, mk), zk) in x.iter_mut().zip(m).zip(z) {
                let diff = *xk - mk;
                *xk += -drift * diff + diffusion * diff * zk;
            }
        }
        NoiseModel::Isotropic => {
            let s = diffusion * radius();
            for ((xk, mk), zk) in x.iter_mut().zip(m).zip(z) {
                *xk += -drift * (*xk - mk) + s * zk;
            }
        }
    }
}

fn first_non_finite(points: &Points) -> Option<usize> {
    points.iter().position(|x| x.iter().any(|v| !v.is_finite()))
}

/// Consensus of the current positions, treating an overflowing weighted
/// average as divergence (the positions themselves may still be finite).
fn finite_consensus(points: &Points, values: &[f64], params: &ModelParams, t: f64) -> Result<WeightedConsensus> {
    let c = consensus_from_values(points, values, params.alpha, &params.h, None)?;
    if c.m_h.iter().all(|v| v.is_finite()) {
        return Ok(c);
    }
    let particle = points
        .iter()
        .position(|x| !x.iter().map(|v| v * v).sum::<f64>().is_finite())
        .unwrap_or(0);
    Err(CboError::Diverged { t, particle })
}

/// One Euler-Maruyama step of the whole ensemble, with every normal drawn
/// by random access from `key`.
///
/// Equivalent to [`System::step`] but stateless; mainly useful for tests and
/// for restarting from a stored ensemble.
pub fn em_step(ens: &Ensemble, f: &ObjectiveSpec, params: &ModelParams, key: TrialKey) -> Result<Ensemble> {
    params.validate()?;
    check_ensemble(&ens.points, f)?;
    let d = ens.points.dim();
    let mut values = vec![0.0; ens.points.len()];
    evaluate(f, &ens.points, &mut values);
    let c = finite_consensus(&ens.points, &values, params, ens.t)?;
    let mut next = ens.points.clone();
    let mut z = vec![0.0; d];
    for i in 0..next.len() {
        let mut stream = key.stream(StreamTag::Noise, i as u64);
        stream.seek_normal((ens.step * d) as u64);
        stream.fill_normals(&mut z);
        advance(next.get_mut(i), &c.m_h, &z, params);
    }
    let step = ens.step + 1;
    let t = step as f64 * params.dt;
    if let Some(particle) = first_non_finite(&next) {
        return Err(CboError::Diverged { t, particle });
    }
    Ok(Ensemble { points: next, t, step })
}

fn check_ensemble(points: &Points, f: &ObjectiveSpec) -> Result<()> {
    if points.is_empty() {
        return Err(invalid_input("ensemble has no particles"));
    }
    if points.dim() != f.dim() {
        return Err(invalid_input(format!(
            "ensemble dimension {} differs from objective dimension {}",
            points.dim(),
            f.dim()
        )));
    }
    if let Some(particle) = first_non_finite(points) {
        return Err(CboError::Diverged { t: 0.0, particle });
    }
    Ok(())
}

/// A running particle system: positions, per-particle noise streams and the
/// consensus of the current positions.
#[derive(Debug, Clone)]
pub struct System<'a> {
    f: &'a ObjectiveSpec,
    params: &'a ModelParams,
    points: Points,
    step: usize,
    streams: Vec<ParticleStream>,
    values: Vec<f64>,
    consensus: WeightedConsensus,
}

impl<'a> System<'a> {
    pub fn new(f: &'a ObjectiveSpec, params: &'a ModelParams, points: Points, key: TrialKey) -> Result<Self> {
        params.validate()?;
        check_ensemble(&points, f)?;
        let streams = (0..points.len() as u64)
            .map(|i| key.stream(StreamTag::Noise, i))
            .collect();
        let mut values = vec![0.0; points.len()];
        evaluate(f, &points, &mut values);
        let consensus = finite_consensus(&points, &values, params, 0.0)?;
        Ok(Self {
            f,
            params,
            points,
            step: 0,
            streams,
            values,
            consensus,
        })
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn consensus(&self) -> &WeightedConsensus {
        &self.consensus
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn t(&self) -> f64 {
        self.step as f64 * self.params.dt
    }

    pub fn ensemble(&self) -> Ensemble {
        Ensemble {
            points: self.points.clone(),
            t: self.t(),
            step: self.step,
        }
    }

    pub fn snapshot(&self) -> Snapshot<'_> {
        Snapshot {
            step: self.step,
            t: self.t(),
            points: &self.points,
            values: &self.values,
            consensus: &self.consensus,
            alpha: self.params.alpha,
        }
    }

    /// Advance by one step and refresh the consensus.
    pub fn step(&mut self) -> Result<()> {
        let d = self.points.dim();
        let m = &self.consensus.m_h;
        let params = self.params;
        if self.points.len() >= PARALLEL_MIN {
            self.points
                .as_mut_slice()
                .par_chunks_exact_mut(d)
                .zip(self.streams.par_iter_mut())
                .for_each_init(
                    || vec![0.0; d],
                    |z, (x, s)| {
                        s.fill_normals(z);
                        advance(x, m, z, params);
                    },
                );
        } else {
            let mut z = vec![0.0; d];
            for (x, s) in self.points.as_mut_slice().chunks_exact_mut(d).zip(&mut self.streams) {
                s.fill_normals(&mut z);
                advance(x, m, &z, params);
            }
        }
        self.step += 1;
        if let Some(particle) = first_non_finite(&self.points) {
            return Err(CboError::Diverged { t: self.t(), particle });
        }
        evaluate(self.f, &self.points, &mut self.values);
        self.consensus = finite_consensus(&self.points, &self.values, params, self.t())?;
        Ok(())
    }
}

/// Read-only view of a system at a recording time.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'s> {
    pub step: usize,
    pub t: f64,
    pub points: &'s Points,
    pub values: &'s [f64],
    pub consensus: &'s WeightedConsensus,
    pub alpha: f64,
}

impl Snapshot<'_> {
    pub fn record(&self, p: f64) -> Record {
        let (mean, v2, vp) = spread(self.points, p);
        let n = self.values.len() as f64;
        Record {
            t: self.t,
            mean,
            v2,
            vp,
            m_h: self.consensus.m_h.clone(),
            beta: self.consensus.beta,
            weighted_energy: self.values.iter().map(|v| (-self.alpha * v).exp()).sum::<f64>() / n,
            best_f: self.values.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

/// Diagnostics at one recording time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub mean: Vec<f64>,
    /// Centered second moment of the empirical measure.
    pub v2: f64,
    /// Centered `p`-th moment of the empirical measure.
    pub vp: f64,
    pub m_h: Vec<f64>,
    pub beta: f64,
    /// `(1/N) sum exp(-alpha f(X_i))`.
    pub weighted_energy: f64,
    pub best_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub p: f64,
    pub records: Vec<Record>,
}

impl TimeSeries {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, get: impl Fn(&Record) -> f64) -> Vec<f64> {
        self.records.iter().map(get).collect()
    }

    pub fn last(&self) -> &Record {
        self.records.last().expect("a time series has at least the initial record")
    }
}

/// Run the particle system and call `observe` at every recording time
/// (including `t = 0` and the final step).
pub fn run_with<F>(
    f: &ObjectiveSpec,
    params: &ModelParams,
    n: usize,
    init: &InitLaw,
    key: TrialKey,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(&Snapshot<'_>) -> Result<()>,
{
    if n == 0 {
        return Err(invalid_param("at least one particle is required"));
    }
    let mut sys = System::new(f, params, init.sample(n, key)?, key)?;
    let n_steps = params.n_steps();
    loop {
        if params.records(sys.step_index()) {
            observe(&sys.snapshot())?;
        }
        if sys.step_index() == n_steps {
            return Ok(());
        }
        sys.step()?;
    }
}

/// Simulate `n` particles from `init` and record the standard diagnostics.
pub fn simulate(f: &ObjectiveSpec, params: &ModelParams, n: usize, init: &InitLaw, key: TrialKey) -> Result<TimeSeries> {
    let mut records = Vec::new();
    run_with(f, params, n, init, key, |s| {
        records.push(s.record(params.p));
        Ok(())
    })?;
    Ok(TimeSeries { p: params.p, records })
}

/// Self-consistent particle proxy of the mean-field law: `n_ref` copies
/// driven by independent noise, each coupled only through the consensus
/// of the full proxy ensemble. The final mean estimates the consensus limit.
pub fn simulate_meanfield(
    f: &ObjectiveSpec,
    params: &ModelParams,
    n_ref: usize,
    init: &InitLaw,
    key: TrialKey,
) -> Result<TimeSeries> {
    if n_ref < MIN_REFERENCE_SIZE {
        return Err(invalid_param(format!(
            "mean-field proxy needs at least {MIN_REFERENCE_SIZE} copies, got {n_ref}"
        )));
    }
    simulate(f, params, n_ref, init, key)
}
