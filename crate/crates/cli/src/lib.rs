#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Experiment runner for the `sgbd` samplers.
//!
//! An experiment is described by a TOML file ([`config`]), executed by
//! [`commands::execute`], and leaves CSV tables plus a `manifest.json` in an
//! output directory. All randomness derives from the config's root seed.

pub mod commands;
pub mod config;
pub mod csvio;
mod error;

pub use commands::{execute, Outcome};
pub use config::{ExperimentConfig, Kind};
pub use error::{CliError, CliResult};
