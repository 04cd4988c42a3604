//! ε-greedy across the stability boundary: simulated against analytic.

use chansel_core::{epsilon_greedy_asymptotic_theta, epsilon_stability_bound, PolicySpec};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::output::{ensure_dir, fmt_sig10, write_lines};
use crate::runner::{for_each_run, thread_pool, RunContext};
use crate::seeds::RunPlan;

pub const SWEEP_HEADER: &str = "epsilon,final_mean_trace,diverged_fraction,analytic_theta,analytic_label,\
empirical_theta,simulated_label,bound";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
}

impl Stability {
    pub fn label(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
        }
    }

    fn from_bool(stable: bool) -> Self {
        if stable {
            Stability::Stable
        } else {
            Stability::Unstable
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub final_mean_trace: f64,
    pub diverged_fraction: f64,
    /// Long-run reception probability `θ̃(ε)`.
    pub analytic_theta: f64,
    pub analytic: Stability,
    /// Pooled reception rate over the second half of the horizon.
    pub empirical_theta: f64,
    pub simulated: Stability,
    pub bound: f64,
}

impl SweepPoint {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            fmt_sig10(self.epsilon),
            fmt_sig10(self.final_mean_trace),
            fmt_sig10(self.diverged_fraction),
            fmt_sig10(self.analytic_theta),
            self.analytic.label(),
            fmt_sig10(self.empirical_theta),
            self.simulated.label(),
            fmt_sig10(self.bound),
        )
    }
}

/// Run ε-greedy for each `ε` with the config's plant, bank, horizon, runs
/// and seed. The config's own policy list is not used.
///
/// A point is labelled stable by simulation when no run saturated and the
/// late-horizon reception rate exceeds `θ_c`; analytically when `θ̃(ε)` does.
pub fn epsilon_sweep(config: &ExperimentConfig, epsilons: &[f64], threads: usize) -> Result<Vec<SweepPoint>> {
    if epsilons.is_empty() {
        return Err(HarnessError::config("epsilons", "at least one value required"));
    }
    let resolved = config.resolve()?;
    let (plant, bank) = (resolved.plant, resolved.bank);
    let theta_c = plant.theta_c();
    if !bank.is_stabilizable(theta_c) {
        return Err(HarnessError::config(
            "thetas",
            format!("no channel exceeds the critical probability {theta_c:.6}"),
        ));
    }
    let bound = epsilon_stability_bound(&bank, theta_c)?;
    let ctx = RunContext::new(plant, bank, config.horizon, config.trace_cap)?;
    let pool = thread_pool(threads)?;
    let plan = RunPlan {
        master_seed: config.seed,
        policies: epsilons.len(),
        runs: config.runs,
    };
    let late = config.horizon / 2;

    epsilons
        .iter()
        .enumerate()
        .map(|(i, &epsilon)| {
            let spec = PolicySpec::EpsilonGreedy { epsilon };
            spec.validate()
                .map_err(|e| HarnessError::config(format!("epsilons[{i}]"), e.to_string()))?;
            let analytic_theta = epsilon_greedy_asymptotic_theta(&ctx.bank, epsilon)?;

            let mut trace_sum = 0.0;
            let mut diverged = 0usize;
            let mut received = 0usize;
            let mut attempts = 0usize;
            for_each_run(&ctx, &spec, &plan, i, &pool, |_, rec| {
                trace_sum += *rec.traces.last().expect("horizon >= 1");
                diverged += rec.diverged as usize;
                received += rec.gammas[late..].iter().filter(|&&g| g).count();
                attempts += rec.gammas.len() - late;
                Ok(())
            })?;

            let runs = config.runs as f64;
            let empirical_theta = received as f64 / attempts as f64;
            Ok(SweepPoint {
                epsilon,
                final_mean_trace: trace_sum / runs,
                diverged_fraction: diverged as f64 / runs,
                analytic_theta,
                analytic: Stability::from_bool(analytic_theta > theta_c),
                empirical_theta,
                simulated: Stability::from_bool(diverged == 0 && empirical_theta > theta_c),
                bound,
            })
        })
        .collect()
}

/// Sweep and write `epsilon_sweep.csv` into the config's output directory.
pub fn cmd_epsilon_sweep(config: &ExperimentConfig, epsilons: &[f64], threads: usize) -> Result<Vec<SweepPoint>> {
    let points = epsilon_sweep(config, epsilons, threads)?;
    ensure_dir(&config.output_path)?;
    let lines = std::iter::once(SWEEP_HEADER.to_string()).chain(points.iter().map(SweepPoint::csv_row));
    write_lines(&config.output_path.join("epsilon_sweep.csv"), lines)?;
    Ok(points)
}
