//! Remote estimator covariance dynamics.
//!
//! On reception the remote error covariance resets to `P̄`; on a loss it
//! grows through `h`. Averaging over a reception probability `θ` gives the
//! expected-covariance recursion `E[P_{k+1}] = θ P̄ + (1 - θ) h(E[P_k])`.

use nalgebra::DMatrix;

use crate::channels::ChannelBank;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{h_operator, Plant};
use crate::scalar::Scalar;

/// Realized traces above this are saturated and the run flagged diverged.
pub const DEFAULT_TRACE_CAP: f64 = 1e12;

/// Tolerance for the expected-covariance fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_MAX_ITER: usize = 1_000_000;

/// One step of the remote covariance: `P̄` if received, `h(P)` otherwise.
///
/// Callers must keep `P ≥ P̄`; this is not checked.
pub fn remote_step<T: Scalar>(
    p: &DMatrix<T>,
    received: bool,
    pbar: &DMatrix<T>,
    a: &DMatrix<T>,
    q: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    if received {
        if p.shape() != pbar.shape() {
            return Err(Error::Dimension("P and Pbar differ in shape".into()));
        }
        Ok(pbar.clone())
    } else {
        h_operator(p, a, q)
    }
}

/// `θ P̄ + (1 - θ) h(EP)`.
pub fn expected_step<T: Scalar>(
    ep: &DMatrix<T>,
    theta: T,
    pbar: &DMatrix<T>,
    a: &DMatrix<T>,
    q: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    check_probability(theta)?;
    if ep.shape() != pbar.shape() {
        return Err(Error::Dimension("E[P] and Pbar differ in shape".into()));
    }
    let grown = h_operator(ep, a, q)?;
    Ok(linalg::symmetrize(
        &(pbar * theta + grown * (T::one() - theta)),
    ))
}

fn check_probability<T: Scalar>(theta: T) -> Result<()> {
    if theta >= T::zero() && theta <= T::one() {
        Ok(())
    } else {
        Err(Error::Probability(theta.as_f64()))
    }
}

/// Remote error covariance carried along one realized run.
#[derive(Debug, Clone, PartialEq)]
pub struct RemoteCovariance<T: Scalar> {
    p: DMatrix<T>,
    k: usize,
    saturated: bool,
    diverged: bool,
    cap: T,
}

impl<T: Scalar> RemoteCovariance<T> {
    /// Starts at `P_0 = P̄`.
    pub fn new(pbar: &DMatrix<T>, cap: T) -> Self {
        Self {
            p: pbar.clone(),
            k: 0,
            saturated: false,
            diverged: false,
            cap,
        }
    }

    /// Advance one step and return the reported trace.
    ///
    /// Once `tr P` would exceed the cap, the matrix is held at its last value
    /// below the cap, the reported trace is the cap and the run is flagged
    /// diverged. A reception still resets to `P̄`.
    pub fn step(&mut self, received: bool, plant: &Plant<T>) -> Result<T> {
        let next = remote_step(&self.p, received, plant.pbar(), plant.model.a(), plant.model.q())?;
        self.k += 1;
        let tr = linalg::trace(&next);
        if tr.is_finite() && tr <= self.cap {
            self.p = next;
            self.saturated = false;
            Ok(tr)
        } else {
            self.saturated = true;
            self.diverged = true;
            Ok(self.cap)
        }
    }

    pub fn p(&self) -> &DMatrix<T> {
        &self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn diverged(&self) -> bool {
        self.diverged
    }

    pub fn trace(&self) -> T {
        if self.saturated {
            self.cap
        } else {
            linalg::trace(&self.p)
        }
    }
}

/// Traces `tr h^τ(P̄)` indexed by the number `τ` of consecutive losses.
///
/// Every realized remote covariance equals `h^τ(P̄)` for the current loss
/// streak, so one table per plant replaces per-step matrix arithmetic in the
/// Monte Carlo loop. Entries are produced with [`remote_step`] and therefore
/// agree exactly with stepping [`RemoteCovariance`].
#[derive(Debug, Clone, PartialEq)]
pub struct LossRunTraces<T: Scalar> {
    traces: Vec<T>,
    /// Streak length at which the cap is first exceeded, if within the table.
    saturates_at: Option<usize>,
    cap: T,
}

impl<T: Scalar> LossRunTraces<T> {
    /// Tabulate streaks `0..=max_streak`.
    pub fn new(plant: &Plant<T>, max_streak: usize, cap: T) -> Result<Self> {
        let mut traces = Vec::with_capacity(max_streak + 1);
        let mut p = plant.pbar().clone();
        traces.push(linalg::trace(&p).min(cap));
        let mut saturates_at = None;
        for tau in 1..=max_streak {
            p = remote_step(&p, false, plant.pbar(), plant.model.a(), plant.model.q())?;
            let tr = linalg::trace(&p);
            if !(tr.is_finite() && tr <= cap) {
                saturates_at = Some(tau);
                break;
            }
            traces.push(tr);
        }
        Ok(Self {
            traces,
            saturates_at,
            cap,
        })
    }

    /// Trace after `streak` consecutive losses and whether it is saturated.
    #[inline]
    pub fn get(&self, streak: usize) -> (T, bool) {
        match self.traces.get(streak) {
            Some(&t) => (t, false),
            None => {
                debug_assert!(
                    self.saturates_at.is_some(),
                    "streak {streak} beyond tabulated range"
                );
                (self.cap, true)
            }
        }
    }

    pub fn saturates_at(&self) -> Option<usize> {
        self.saturates_at
    }

    pub fn cap(&self) -> T {
        self.cap
    }
}

/// Deterministic `tr E[P_k]`, `k = 1..=T`, for a constant reception probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedCovarianceSeries<T: Scalar> {
    pub traces: Vec<T>,
    /// `(1 - θ) ρ(A)² < 1`, i.e. `θ > θ_c` for unstable `A`.
    pub converged: bool,
    /// Whether the trace hit the cap within the horizon.
    pub saturated: bool,
    /// `tr` of the fixed point of the recursion, when it converges.
    pub fixed_point_trace: Option<T>,
}

/// Iterate the expected-covariance recursion from `P_0 = P̄`.
pub fn expected_series<T: Scalar>(
    plant: &Plant<T>,
    theta: T,
    horizon: usize,
    cap: T,
) -> Result<ExpectedCovarianceSeries<T>> {
    check_probability(theta)?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let pbar = plant.pbar();
    if !(cap > linalg::trace(pbar)) {
        return Err(Error::InvalidArgument("cap must exceed tr(Pbar)".into()));
    }
    let (a, q) = (plant.model.a(), plant.model.q());
    let rho = plant.steady.rho;
    let converged = (T::one() - theta) * rho * rho < T::one();

    let mut traces = Vec::with_capacity(horizon);
    let mut ep = pbar.clone();
    let mut saturated = false;
    for _ in 0..horizon {
        if saturated {
            traces.push(cap);
            continue;
        }
        ep = expected_step(&ep, theta, pbar, a, q)?;
        let tr = linalg::trace(&ep);
        if tr.is_finite() && tr <= cap {
            traces.push(tr);
        } else {
            saturated = true;
            traces.push(cap);
        }
    }

    let fixed_point_trace = if converged {
        Some(expected_fixed_point(plant, theta)?)
    } else {
        None
    };

    Ok(ExpectedCovarianceSeries {
        traces,
        converged,
        saturated,
        fixed_point_trace,
    })
}

/// Trace of the fixed point of the expected recursion, by iteration to
/// [`FIXED_POINT_TOL`] in max-abs norm.
pub fn expected_fixed_point<T: Scalar>(plant: &Plant<T>, theta: T) -> Result<T> {
    let pbar = plant.pbar();
    let (a, q) = (plant.model.a(), plant.model.q());
    let tol = T::lit(FIXED_POINT_TOL);
    let mut ep = pbar.clone();
    let mut residual = T::zero();
    for _ in 0..FIXED_POINT_MAX_ITER {
        let next = expected_step(&ep, theta, pbar, a, q)?;
        residual = linalg::max_abs(&(&next - &ep));
        ep = next;
        if !residual.is_finite() {
            break;
        }
        if residual < tol {
            return Ok(linalg::trace(&ep));
        }
    }
    Err(Error::NonConvergence {
        what: "expected covariance recursion",
        iterations: FIXED_POINT_MAX_ITER,
        residual: residual.as_f64(),
    })
}

/// Asymptotic reception probability of ε-greedy once the estimates have
/// converged: `(1 - ε) θ* + (ε / M) Σ θ_m`.
pub fn epsilon_greedy_asymptotic_theta<T: Scalar>(bank: &ChannelBank<T>, epsilon: T) -> Result<T> {
    check_probability(epsilon)?;
    Ok((T::one() - epsilon) * bank.theta_star() + epsilon * bank.mean_theta())
}

/// Largest exploration rate for which ε-greedy keeps `E[P_k]` bounded:
/// `(θ* - θ_c) / (θ* - mean θ)`. Values above one mean every ε is stabilizing.
pub fn epsilon_stability_bound<T: Scalar>(bank: &ChannelBank<T>, theta_c: T) -> Result<T> {
    let theta_star = bank.theta_star();
    if !(theta_star > theta_c) {
        return Err(Error::NotStabilizable {
            theta_star: theta_star.as_f64(),
            theta_c: theta_c.as_f64(),
        });
    }
    Ok((theta_star - theta_c) / (theta_star - bank.mean_theta()))
}
