//! Config-driven runner for the Bessel-Gauss heralded-photon simulations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyze;
pub mod config;
pub mod error;
pub mod manifest;
pub mod report;
pub mod run;
pub mod units;

pub use config::{RunConfig, Scenario};
pub use error::CliError;
pub use run::{run, Outcome};
