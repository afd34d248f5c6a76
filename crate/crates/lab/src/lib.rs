//! Config-driven experiment runner for the ISS laboratory.
// `!(x > 0.0)` style checks reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod config;
pub mod criteria;
pub mod error;
pub mod manifest;
pub mod scenarios;

pub use config::ScenarioConfig;
pub use error::CliError;
