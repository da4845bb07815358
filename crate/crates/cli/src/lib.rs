//! Experiment runner behind the `polaron-lab` binary.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod report;
pub mod runner;

pub use config::Config;
pub use error::{CliError, CliResult};
pub use experiments::Kind;
pub use runner::{run, ExperimentSpec, RunResult, Sweep};
