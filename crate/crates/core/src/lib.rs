//! Multi-armed-bandit channel selection for remote state estimation.
//!
//! A sensor runs a steady-state Kalman filter on a Gauss-Markov plant and
//! ships its estimate over one of `M` Bernoulli packet-loss channels with
//! unknown reception probabilities. The remote error covariance resets on
//! reception and grows through `h(X) = A X Aᵀ + Q` on loss; bandit policies
//! learn which channel to use while keeping the expected covariance bounded.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`). The `*F64`
//! aliases below name the double-precision instantiations used by the
//! experiment harness.

// `!(x > y)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod model;
pub mod policies;
pub mod regret;
pub mod scalar;

pub use channels::ChannelBank;
pub use error::{Error, Result};
pub use estimator::{
    epsilon_greedy_asymptotic_theta, epsilon_stability_bound, expected_series, expected_step,
    remote_step, ExpectedCovarianceSeries, LossRunTraces, RemoteCovariance, DEFAULT_TRACE_CAP,
};
pub use model::{
    critical_probability, h_operator, simulate_process, spectral_radius, steady_state_kalman, Plant,
    SteadyState, SystemModel, Trajectory,
};
pub use policies::{
    posterior_mean, sample_beta, select_epsilon_greedy, select_obs, select_sbs, select_ts, Policy,
    PolicyKind, PolicySpec, PosteriorState,
};
pub use regret::{
    classical_regret, count_suboptimal, estimation_regret, oracle_trace_series, scaling_fit,
    RegretAccumulator, RegretReport, RunRecord, ScalingClass, ScalingFit,
};
pub use scalar::Scalar;

pub type SystemModelF64 = SystemModel<f64>;
pub type PlantF64 = Plant<f64>;
pub type SteadyStateF64 = SteadyState<f64>;
pub type ChannelBankF64 = ChannelBank<f64>;
pub type PosteriorStateF64 = PosteriorState<f64>;
pub type PolicySpecF64 = PolicySpec<f64>;
pub type PolicyF64 = Policy<f64>;
pub type RunRecordF64 = RunRecord<f64>;
pub type RegretReportF64 = RegretReport<f64>;
pub type LossRunTracesF64 = LossRunTraces<f64>;

pub type SystemModelF32 = SystemModel<f32>;
pub type PlantF32 = Plant<f32>;
pub type ChannelBankF32 = ChannelBank<f32>;
pub type PosteriorStateF32 = PosteriorState<f32>;
