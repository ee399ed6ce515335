//! Config-driven runner for the Dirac-geodesic flow simulator.
//!
//! A run reads one TOML file, executes a scenario and writes CSV outputs plus
//! a `summary.toml` into the output directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod run;

pub use config::{RunConfig, Scenario};
pub use error::CliError;
pub use run::{emit_plot_data, run, Overrides, RunSummary, Status};
