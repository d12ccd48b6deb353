//! Counter-based random streams.
//!
//! Every draw is addressed by `(seed, trial, stream tag, particle, position)`.
//! A ChaCha8 key is built from `(seed, trial, tag)`, the particle selects the
//! ChaCha stream and the position is the word offset inside that stream.
//! Standard normals use Box-Muller with exactly two `u64` per draw, so the
//! normal for `(step, axis)` always sits at word `4 * (step * dim + axis)`
//! no matter which other draws were made before it.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Which family of draws a stream serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamTag {
    Noise = 0,
    Init = 1,
    Aux = 2,
}

/// Base key for one Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrialKey {
    pub seed: u64,
    pub trial: u64,
}

impl TrialKey {
    pub fn new(seed: u64, trial: u64) -> Self {
        Self { seed, trial }
    }

    /// Sequential generator for one particle, positioned at word zero.
    pub fn stream(&self, tag: StreamTag, particle: u64) -> ParticleStream {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.trial.to_le_bytes());
        key[16..24].copy_from_slice(&(tag as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(particle);
        ParticleStream { rng }
    }

    pub fn at(&self, particle: u64, step: u64, axis: u64) -> RngKey {
        RngKey {
            seed: self.seed,
            trial: self.trial,
            particle,
            step,
            axis,
        }
    }
}

/// Address of a single standard-normal noise draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngKey {
    pub seed: u64,
    pub trial: u64,
    pub particle: u64,
    pub step: u64,
    pub axis: u64,
}

impl RngKey {
    /// The noise normal at this key for an ensemble of dimension `dim`.
    ///
    /// Stateless: equal keys always give equal draws, and the value matches
    /// what a sequential [`ParticleStream`] produces at the same position.
    pub fn normal(&self, dim: usize) -> f64 {
        let mut s = TrialKey::new(self.seed, self.trial).stream(StreamTag::Noise, self.particle);
        s.seek_normal(self.step * dim as u64 + self.axis);
        s.normal()
    }
}

/// One particle's sequential generator.
#[derive(Debug, Clone)]
pub struct ParticleStream {
    rng: ChaCha8Rng,
}

impl ParticleStream {
    /// Jump to the `index`-th normal of the stream.
    pub fn seek_normal(&mut self, index: u64) {
        self.rng.set_word_pos(u128::from(index) * 4);
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller (cosine branch only).
    pub fn normal(&mut self) -> f64 {
        // (0, 1] so the logarithm stays finite.
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn fill_normals(&mut self, out: &mut [f64]) {
        for z in out {
            *z = self.normal();
        }
    }
}
