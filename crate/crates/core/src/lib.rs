//! Regularized consensus-based optimization (CBO).
//!
//! Particles drift toward a consensus point weighted by the regularized Gibbs
//! weight `psi_h(x) = exp(-alpha f(x)) + h(alpha)` and diffuse with noise
//! proportional to their distance from it. This crate contains the particle
//! integrator, a self-consistent mean-field proxy, a synchronous coupling of
//! the two, the explicit consensus thresholds, and the statistics used to
//! check them numerically.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod consensus;
pub mod dynamics;
mod error;
pub mod metrics;
pub mod objectives;
mod points;
pub mod theory;

pub use error::{CboError, Result};
pub use points::Points;
