//! Verification experiments for the regularized CBO particle system.
//!
//! A TOML configuration selects an objective, model parameters, an initial
//! law and an experiment. [`experiments::run`] executes it on the current
//! rayon pool and returns a report of one-sided statistical checks;
//! [`output`] writes the CSV/JSON data and a manifest that replays the run.

pub mod config;
mod error;
pub mod experiments;
pub mod invoke;
pub mod output;
pub mod report;
pub mod stats;
pub mod trials;

pub use error::{HarnessError, Result};
