//! Experiment harness: JSON configs, seeded parallel Monte Carlo, CSV output.

// `!(x > y)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod runner;
pub mod scaling;
pub mod seeds;
pub mod sweep;
pub mod table1;

use std::path::PathBuf;

use config::ExperimentConfig;
use error::Result;
use runner::ExperimentOutcome;

/// Run a config and write its per-policy and summary CSVs.
pub fn cmd_run(config: &ExperimentConfig, threads: usize) -> Result<(ExperimentOutcome, Vec<PathBuf>)> {
    let outcome = runner::run_experiment(config, threads)?;
    let written = output::write_experiment(&config.output_path, &outcome)?;
    Ok((outcome, written))
}
