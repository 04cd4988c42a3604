//! Cumulative regret against horizon, with a log-vs-linear classification.

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::output::{ensure_dir, fmt_sig10, write_lines};
use crate::runner::{run_experiment, ExperimentOutcome};

pub const SCALING_HEADER: &str = "ordinal,policy,T,cum_regret,stderr_regret";
pub const FIT_HEADER: &str =
    "ordinal,policy,class,rss_log,rss_linear,log_slope,log_intercept,linear_slope,linear_intercept";

pub fn check_horizons(horizons: &[usize]) -> Result<()> {
    if horizons.is_empty() {
        return Err(HarnessError::config("horizons", "at least one value required"));
    }
    if horizons[0] == 0 {
        return Err(HarnessError::config("horizons[0]", "must be at least 1"));
    }
    if let Some(i) = horizons.windows(2).position(|w| w[1] <= w[0]) {
        return Err(HarnessError::config(format!("horizons[{}]", i + 1), "must be strictly increasing"));
    }
    Ok(())
}

/// One experiment at the largest horizon; cumulative regret is read off at
/// each requested `T` and the fit uses the whole series.
pub fn scaling(config: &ExperimentConfig, horizons: &[usize], threads: usize) -> Result<ExperimentOutcome> {
    check_horizons(horizons)?;
    let mut config = config.clone();
    config.horizon = *horizons.last().expect("non-empty");
    run_experiment(&config, threads)
}

pub fn scaling_rows(outcome: &ExperimentOutcome, horizons: &[usize]) -> Vec<String> {
    let mut rows = vec![SCALING_HEADER.to_string()];
    for (i, p) in outcome.policies.iter().enumerate() {
        for &t in horizons {
            rows.push(format!(
                "{i},{},{t},{},{}",
                p.spec.kind().label(),
                fmt_sig10(p.report.cum_regret[t - 1]),
                fmt_sig10(p.report.stderr_regret[t - 1]),
            ));
        }
    }
    rows
}

pub fn fit_rows(outcome: &ExperimentOutcome) -> Vec<String> {
    let mut rows = vec![FIT_HEADER.to_string()];
    for (i, p) in outcome.policies.iter().enumerate() {
        let f = &p.scaling;
        rows.push(format!(
            "{i},{},{},{},{},{},{},{},{}",
            p.spec.kind().label(),
            f.class.label(),
            fmt_sig10(f.rss_log),
            fmt_sig10(f.rss_linear),
            fmt_sig10(f.log_slope),
            fmt_sig10(f.log_intercept),
            fmt_sig10(f.linear_slope),
            fmt_sig10(f.linear_intercept),
        ));
    }
    rows
}

/// Run and write `scaling.csv` and `scaling_fit.csv` into the config's
/// output directory.
pub fn cmd_scaling(config: &ExperimentConfig, horizons: &[usize], threads: usize) -> Result<ExperimentOutcome> {
    let outcome = scaling(config, horizons, threads)?;
    ensure_dir(&config.output_path)?;
    write_lines(&config.output_path.join("scaling.csv"), scaling_rows(&outcome, horizons))?;
    write_lines(&config.output_path.join("scaling_fit.csv"), fit_rows(&outcome))?;
    Ok(outcome)
}
