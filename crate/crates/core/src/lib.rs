#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

//! Stochastic gradient Barker dynamics (SGBD) and stochastic gradient Langevin
//! dynamics (SGLD) samplers.
//!
//! The crate is organised around six pieces:
//!
//! - [`estimators`]: closed-form flipping probabilities (vanilla, corrected,
//!   extreme), the noise shrinkage factor, breaking point and noise tolerance.
//! - [`gradients`]: the [`TargetModel`] abstraction, minibatch gradient
//!   estimation, injected gradient noise and the online noise-scale tracker.
//! - [`samplers`]: one-step kernels for the eight sampler variants and the
//!   chain loop.
//! - [`models`]: skew-normal, standard normal and logistic regression targets.
//! - [`diagnostics`]: ESS, standardized biases, quantiles, log-loss, KS tests.
//! - [`experiments`]: the seeded studies driven by the command line tool.
//!
//! ```
//! use sgbd::models::StdNormal;
//! use sgbd::samplers::{run_chain, SamplerConfig, Variant};
//!
//! let model = StdNormal::new(1);
//! let config = SamplerConfig::new(Variant::ExactBarker, 0.5, 2_000).with_seed(7);
//! let out = run_chain(&model, &config, &[0.0]).unwrap();
//! assert_eq!(out.samples.nrows(), 2_000);
//! ```

pub mod diagnostics;
mod error;
pub mod estimators;
pub mod experiments;
pub mod gradients;
pub mod models;
pub mod rng;
pub mod samplers;

pub use error::{Error, Result};
pub use gradients::TargetModel;
