//! Experiment runner for zeroth-order slice MCMC: spec files, sweeps, tables,
//! figures and the property battery behind the `zoslice` binary.

pub mod commands;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod plot;
pub mod report;
pub mod spec;
pub mod verify;

pub use error::{CliError, CliResult};
