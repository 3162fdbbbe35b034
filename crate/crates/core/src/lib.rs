//! Risk-averse reinforcement learning built around the Gini deviation of the
//! return distribution.
//!
//! The crate has three layers:
//!
//! - Measure layer: [`risk`] computes Gini deviation, variance, and general
//!   signed Choquet integrals of sample sets and finite distributions.
//! - Gradient layer: [`gini_grad`] estimates the Gini-deviation policy
//!   gradient from sorted trajectory batches, with importance-sampling reuse;
//!   [`baselines`] holds the variance-based methods it is compared against;
//!   [`oracle`] enumerates small MDPs exactly so every estimator can be
//!   checked against ground truth.
//! - Experiment layer: [`env`] provides desk-scale environments with
//!   controllable risk structure, and [`harness`] runs seeded training loops
//!   and writes metrics.

pub mod baselines;
pub mod env;
pub mod error;
pub mod gini_grad;
pub mod harness;
pub mod oracle;
pub mod policy;
pub mod risk;
pub mod rng;
pub mod trajectory;

pub use error::{Error, Result};
