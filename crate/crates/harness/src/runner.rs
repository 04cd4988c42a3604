//! Closed-loop Monte Carlo runs and their deterministic parallel aggregation.

use chansel_core::{
    oracle_trace_series, scaling_fit, ChannelBankF64, LossRunTracesF64, PlantF64, Policy, PolicySpecF64,
    PosteriorStateF64, RegretAccumulator, RegretReportF64, RunRecordF64, ScalingClass, ScalingFit,
};
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::config::{ExperimentConfig, Resolved};
use crate::error::{HarnessError, Result};
use crate::seeds::{stream_rng, RunPlan};

/// Runs are generated this many at a time before being folded in order.
const CHUNK: usize = 256;

/// Everything a run needs that does not change between runs.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub plant: PlantF64,
    pub bank: ChannelBankF64,
    pub horizon: usize,
    table: LossRunTracesF64,
}

impl RunContext {
    pub fn new(plant: PlantF64, bank: ChannelBankF64, horizon: usize, trace_cap: f64) -> Result<Self> {
        let table = LossRunTracesF64::new(&plant, horizon, trace_cap)?;
        Ok(Self {
            plant,
            bank,
            horizon,
            table,
        })
    }

    pub fn trace_cap(&self) -> f64 {
        self.table.cap()
    }

    /// `tr E[P_k*]` over the horizon.
    pub fn oracle_traces(&self) -> Result<Vec<f64>> {
        Ok(oracle_trace_series(
            &self.plant,
            self.bank.theta_star(),
            self.horizon,
        )?)
    }
}

/// One closed-loop run: select, transmit, update the posterior and the
/// remote covariance, for `k = 1..=T`.
pub fn run_single(ctx: &RunContext, spec: &PolicySpecF64, seed: u64) -> Result<RunRecordF64> {
    let mut rng = stream_rng(seed);
    let mut policy = Policy::new(*spec, Some(&ctx.bank))?;
    let mut posterior = PosteriorStateF64::new(ctx.bank.len());
    let t = ctx.horizon;
    let mut selections = Vec::with_capacity(t);
    let mut gammas = Vec::with_capacity(t);
    let mut traces = Vec::with_capacity(t);
    let mut streak = 0usize;
    let mut diverged = false;
    for _ in 0..t {
        let m = policy.select(&posterior, &mut rng);
        let received = ctx.bank.draw(m, &mut rng)?;
        posterior.update(m, received)?;
        streak = if received { 0 } else { streak + 1 };
        let (trace, saturated) = ctx.table.get(streak);
        diverged |= saturated;
        selections.push(m);
        gammas.push(received);
        traces.push(trace);
    }
    Ok(RunRecordF64 {
        selections,
        gammas,
        traces,
        diverged,
    })
}

/// Build a pool with `threads` workers; zero lets rayon decide.
pub fn thread_pool(threads: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::config("threads", e.to_string()))
}

/// Generate `runs` records in parallel and hand them to `visit` in run-index
/// order.
pub fn for_each_run<F>(
    ctx: &RunContext,
    spec: &PolicySpecF64,
    plan: &RunPlan,
    policy_ordinal: usize,
    pool: &ThreadPool,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, &RunRecordF64) -> Result<()>,
{
    let mut start = 0;
    while start < plan.runs {
        let end = (start + CHUNK).min(plan.runs);
        let records = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|r| run_single(ctx, spec, plan.seed(policy_ordinal, r)))
                .collect::<Result<Vec<_>>>()
        })?;
        for (offset, rec) in records.iter().enumerate() {
            visit(start + offset, rec)?;
        }
        start = end;
    }
    Ok(())
}

/// Monte Carlo regret report for one policy.
pub fn run_policy(
    ctx: &RunContext,
    spec: &PolicySpecF64,
    plan: &RunPlan,
    policy_ordinal: usize,
    oracle: &[f64],
    pool: &ThreadPool,
) -> Result<RegretReportF64> {
    let mut acc = RegretAccumulator::new(oracle.to_vec(), &ctx.bank)?;
    for_each_run(ctx, spec, plan, policy_ordinal, pool, |_, rec| {
        acc.push(rec).map_err(HarnessError::from)
    })?;
    Ok(acc.finish()?)
}

/// Scaling classification with the default burn-in of `T / 10`; series too
/// short to fit are indeterminate.
pub fn default_scaling(cum_regret: &[f64]) -> ScalingFit<f64> {
    scaling_fit(cum_regret, cum_regret.len() / 10).unwrap_or(ScalingFit {
        class: ScalingClass::Indeterminate,
        rss_log: f64::NAN,
        rss_linear: f64::NAN,
        log_slope: f64::NAN,
        log_intercept: f64::NAN,
        linear_slope: f64::NAN,
        linear_intercept: f64::NAN,
    })
}

/// As [`default_scaling`], but a final regret within three standard errors
/// of zero has no growth to classify.
pub fn classify(report: &RegretReportF64) -> ScalingFit<f64> {
    let mut fit = default_scaling(&report.cum_regret);
    if report.final_regret().abs() <= 3.0 * report.final_stderr() {
        fit.class = ScalingClass::Indeterminate;
    }
    fit
}

#[derive(Debug, Clone)]
pub struct PolicyOutcome {
    pub spec: PolicySpecF64,
    pub report: RegretReportF64,
    pub scaling: ScalingFit<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub theta_c: f64,
    pub policies: Vec<PolicyOutcome>,
}

/// Run every configured policy; policy ordinals are their config positions.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<ExperimentOutcome> {
    let Resolved {
        plant,
        bank,
        policies,
    } = config.resolve()?;
    if policies.is_empty() {
        return Err(HarnessError::config("policies", "at least one policy required"));
    }
    let theta_c = plant.theta_c();
    if !bank.is_stabilizable(theta_c) {
        return Err(HarnessError::config(
            "thetas",
            format!("no channel exceeds the critical probability {theta_c:.6}"),
        ));
    }
    let ctx = RunContext::new(plant, bank, config.horizon, config.trace_cap)?;
    let oracle = ctx.oracle_traces()?;
    let pool = thread_pool(threads)?;
    let plan = RunPlan {
        master_seed: config.seed,
        policies: policies.len(),
        runs: config.runs,
    };
    let policies = policies
        .iter()
        .enumerate()
        .map(|(ordinal, spec)| {
            let report = run_policy(&ctx, spec, &plan, ordinal, &oracle, &pool)?;
            let scaling = classify(&report);
            Ok(PolicyOutcome {
                spec: *spec,
                report,
                scaling,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentOutcome { theta_c, policies })
}
