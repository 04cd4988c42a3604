//! The nine published regret comparisons, replayed at a chosen run count.

use std::path::{Path, PathBuf};

use crate::config::{ExperimentConfig, ModelConfig, PolicyConfig, PolicyKindConfig};
use crate::error::{HarnessError, Result};
use crate::output::{ensure_dir, fmt_sig10, write_lines};
use crate::runner::{run_experiment, ExperimentOutcome};

pub const HORIZON: usize = 1000;
pub const MIN_RUNS: usize = 1000;
pub const DEFAULT_RUNS: usize = 20_000;

pub const TABLE1_HEADER: &str =
    "row,policy,epsilon,theta_c,published_regret,measured_regret,stderr,relative_error,diverged_runs";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Plant {
    Scalar145,
    Coupled1211,
    Coupled1509,
}

impl Plant {
    pub fn model(self) -> ModelConfig {
        let (a, c, q) = match self {
            Plant::Scalar145 => (vec![vec![1.45]], vec![vec![1.0]], vec![vec![1.0]]),
            Plant::Coupled1211 => (
                vec![vec![1.2, 0.1], vec![0.2, 1.1]],
                vec![vec![1.0, 1.0]],
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            ),
            Plant::Coupled1509 => (
                vec![vec![1.5, 0.2], vec![0.3, 0.9]],
                vec![vec![1.0, 1.0]],
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            ),
        };
        ModelConfig {
            a,
            c,
            q,
            r: vec![vec![1.0]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    /// 1-based, as published.
    pub number: usize,
    pub thetas: [f64; 4],
    pub plant: Plant,
    pub theta_c: f64,
    pub epsilon: f64,
    /// ε-greedy, TS, OBS, SBS.
    pub published: [f64; 4],
}

pub const ROWS: [Row; 9] = [
    Row {
        number: 1,
        thetas: [0.8, 0.75, 0.55, 0.5],
        plant: Plant::Scalar145,
        theta_c: 0.524,
        epsilon: 0.12,
        published: [263.0, 143.0, 136.0, 135.0],
    },
    Row {
        number: 2,
        thetas: [0.7, 0.6, 0.5, 0.4],
        plant: Plant::Scalar145,
        theta_c: 0.524,
        epsilon: 0.18,
        published: [996.0, 679.0, 596.0, 603.0],
    },
    Row {
        number: 3,
        thetas: [0.6, 0.5, 0.4, 0.3],
        plant: Plant::Scalar145,
        theta_c: 0.524,
        epsilon: 0.22,
        published: [10319.0, 8253.0, 6823.0, 6276.0],
    },
    Row {
        number: 4,
        thetas: [0.7, 0.6, 0.4, 0.3],
        plant: Plant::Coupled1211,
        theta_c: 0.408,
        epsilon: 0.10,
        published: [582.0, 295.0, 274.0, 273.0],
    },
    Row {
        number: 5,
        thetas: [0.65, 0.55, 0.45, 0.35],
        plant: Plant::Coupled1211,
        theta_c: 0.408,
        epsilon: 0.12,
        published: [886.0, 517.0, 473.0, 483.0],
    },
    Row {
        number: 6,
        thetas: [0.55, 0.45, 0.35, 0.25],
        plant: Plant::Coupled1211,
        theta_c: 0.408,
        epsilon: 0.18,
        published: [4723.0, 3424.0, 2727.0, 2430.0],
    },
    Row {
        number: 7,
        thetas: [0.9, 0.8, 0.7, 0.5],
        plant: Plant::Coupled1509,
        theta_c: 0.603,
        epsilon: 0.14,
        published: [290.0, 104.0, 98.0, 97.0],
    },
    Row {
        number: 8,
        thetas: [0.8, 0.7, 0.6, 0.5],
        plant: Plant::Coupled1509,
        theta_c: 0.603,
        epsilon: 0.18,
        published: [803.0, 403.0, 354.0, 363.0],
    },
    Row {
        number: 9,
        thetas: [0.7, 0.6, 0.5, 0.4],
        plant: Plant::Coupled1509,
        theta_c: 0.603,
        epsilon: 0.22,
        published: [7185.0, 6178.0, 3903.0, 3106.0],
    },
];

pub fn row(number: usize) -> Result<&'static Row> {
    ROWS.iter()
        .find(|r| r.number == number)
        .ok_or_else(|| HarnessError::config("rows", format!("no row {number}; rows are 1 to 9")))
}

impl Row {
    /// ε-greedy, TS, OBS and SBS on this row's plant and bank.
    pub fn config(&self, runs: usize, seed: u64, output_path: PathBuf) -> ExperimentConfig {
        ExperimentConfig {
            model: self.plant.model(),
            thetas: self.thetas.to_vec(),
            allow_tied_channels: false,
            policies: vec![
                PolicyConfig::epsilon_greedy(self.epsilon),
                PolicyConfig::of_kind(PolicyKindConfig::Ts),
                PolicyConfig::of_kind(PolicyKindConfig::Obs),
                PolicyConfig::of_kind(PolicyKindConfig::Sbs),
            ],
            horizon: HORIZON,
            runs,
            seed,
            trace_cap: chansel_core::DEFAULT_TRACE_CAP,
            output_path,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RowOutcome {
    pub row: Row,
    pub outcome: ExperimentOutcome,
}

impl RowOutcome {
    /// Measured final regret per policy, in published column order.
    pub fn measured(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (o, p) in out.iter_mut().zip(&self.outcome.policies) {
            *o = p.report.final_regret();
        }
        out
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.outcome
            .policies
            .iter()
            .zip(self.row.published)
            .map(|(p, published)| {
                let measured = p.report.final_regret();
                format!(
                    "{},{},{},{},{},{},{},{},{}",
                    self.row.number,
                    p.spec.kind().label(),
                    p.spec.epsilon().map(fmt_sig10).unwrap_or_default(),
                    fmt_sig10(self.outcome.theta_c),
                    fmt_sig10(published),
                    fmt_sig10(measured),
                    fmt_sig10(p.report.final_stderr()),
                    fmt_sig10((measured - published) / published),
                    p.report.diverged_runs,
                )
            })
            .collect()
    }
}

pub fn run_row(row: &Row, runs: usize, seed: u64, threads: usize) -> Result<RowOutcome> {
    if runs < MIN_RUNS {
        return Err(HarnessError::config("runs", format!("must be at least {MIN_RUNS}")));
    }
    let config = row.config(runs, seed, PathBuf::new());
    Ok(RowOutcome {
        row: *row,
        outcome: run_experiment(&config, threads)?,
    })
}

/// Run the selected rows and write `table1.csv` into `out_dir`.
pub fn cmd_table1(rows: &[usize], runs: usize, seed: u64, out_dir: &Path, threads: usize) -> Result<Vec<RowOutcome>> {
    if rows.is_empty() {
        return Err(HarnessError::config("rows", "select at least one row"));
    }
    let selected = rows.iter().map(|&n| row(n)).collect::<Result<Vec<_>>>()?;
    if runs < MIN_RUNS {
        return Err(HarnessError::config("runs", format!("must be at least {MIN_RUNS}")));
    }
    ensure_dir(out_dir)?;
    let outcomes = selected
        .into_iter()
        .map(|r| run_row(r, runs, seed, threads))
        .collect::<Result<Vec<_>>>()?;
    let lines = std::iter::once(TABLE1_HEADER.to_string()).chain(outcomes.iter().flat_map(|o| o.csv_rows()));
    write_lines(&out_dir.join("table1.csv"), lines)?;
    Ok(outcomes)
}
