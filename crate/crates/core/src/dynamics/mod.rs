//! Euler-Maruyama integration of the regularized CBO particle system.
//!
//! Each step computes `m_h` once from the current ensemble and then moves
//! every particle by `-lambda (X - m_h) dt` plus the noise term selected by
//! [`NoiseModel`], scaled by `sigma sqrt(dt)`. Noise is drawn from keyed
//! per-particle streams (see [`rng`]), so results are independent of
//! scheduling and thread count.

mod coupled;
mod exchange;
mod init;
mod params;
pub mod rng;
mod system;

pub use coupled::{coupled_run, coupled_run_with, CoupledSeries, CoupledSystem};
pub use exchange::{exchangeability_probe, ExchangeabilityReport, EXCHANGEABILITY_Z};
pub use init::InitLaw;
pub use params::{default_dt, ModelParams, NoiseModel};
pub use rng::{RngKey, TrialKey};
pub use system::{
    em_step, run_with, simulate, simulate_meanfield, Ensemble, Record, Snapshot, System, TimeSeries,
    MIN_REFERENCE_SIZE,
};
