//! Estimation regret and its diagnostics.
//!
//! The estimation regret of a policy over horizon `T` is
//! `Σ_{k=1}^{T} tr(E[P_k] - E[P_k*])`, where `E[P_k*]` is the expected remote
//! covariance when the best channel is always used. `E[P_k*]` comes from the
//! deterministic recursion; `E[P_k]` under a learning policy is a Monte Carlo
//! mean over [`RunRecord`]s.

use crate::channels::ChannelBank;
use crate::error::{Error, Result};
use crate::estimator::{expected_series, DEFAULT_TRACE_CAP};
use crate::model::Plant;
use crate::scalar::Scalar;

/// Everything one closed-loop run produced, for `k = 1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord<T: Scalar> {
    pub selections: Vec<usize>,
    pub gammas: Vec<bool>,
    pub traces: Vec<T>,
    pub diverged: bool,
}

impl<T: Scalar> RunRecord<T> {
    pub fn horizon(&self) -> usize {
        self.traces.len()
    }
}

/// Monte Carlo regret summary for one policy; every series is indexed by
/// `k - 1` for `k = 1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport<T: Scalar> {
    pub mean_trace: Vec<T>,
    pub oracle_trace: Vec<T>,
    pub cum_regret: Vec<T>,
    pub stderr_regret: Vec<T>,
    /// Mean number of sub-optimal pulls up to `k`.
    pub n_sub: Vec<T>,
    /// Mean of `Σ_{j≤k} (θ* - θ_{m_j})`.
    pub classical_regret: Vec<T>,
    pub runs: usize,
    pub diverged_runs: usize,
}

impl<T: Scalar> RegretReport<T> {
    pub fn horizon(&self) -> usize {
        self.cum_regret.len()
    }

    pub fn final_regret(&self) -> T {
        *self.cum_regret.last().expect("horizon >= 1")
    }

    pub fn final_stderr(&self) -> T {
        *self.stderr_regret.last().expect("horizon >= 1")
    }
}

/// `tr E[P_k*]` for `k = 1..=T` when channel `θ*` is always used.
pub fn oracle_trace_series<T: Scalar>(plant: &Plant<T>, theta_star: T, horizon: usize) -> Result<Vec<T>> {
    let theta_c = plant.theta_c();
    if !(theta_star > theta_c) {
        return Err(Error::NotStabilizable {
            theta_star: theta_star.as_f64(),
            theta_c: theta_c.as_f64(),
        });
    }
    Ok(expected_series(plant, theta_star, horizon, T::lit(DEFAULT_TRACE_CAP))?.traces)
}

/// `N_sub(k) = #{j ≤ k : m_j ≠ m*}`.
pub fn count_suboptimal(selections: &[usize], m_star: usize) -> Vec<usize> {
    selections
        .iter()
        .scan(0usize, |n, &m| {
            *n += usize::from(m != m_star);
            Some(*n)
        })
        .collect()
}

/// Cumulative `Σ_{j≤k} (θ* - θ_{m_j})` for one run.
pub fn classical_regret<T: Scalar>(selections: &[usize], bank: &ChannelBank<T>) -> Result<Vec<T>> {
    let theta_star = bank.theta_star();
    let mut acc = T::zero();
    selections
        .iter()
        .map(|&m| {
            acc += theta_star - bank.theta(m)?;
            Ok(acc)
        })
        .collect()
}

/// Order-sensitive fold of [`RunRecord`]s into a [`RegretReport`].
///
/// Push records in run-index order to get bit-reproducible output.
#[derive(Debug, Clone)]
pub struct RegretAccumulator<'a, T: Scalar> {
    oracle: Vec<T>,
    bank: &'a ChannelBank<T>,
    runs: usize,
    diverged_runs: usize,
    trace_sum: Vec<T>,
    n_sub_sum: Vec<u64>,
    classical_sum: Vec<T>,
    // Welford state of the per-run cumulative gap at each k
    gap_mean: Vec<T>,
    gap_m2: Vec<T>,
}

impl<'a, T: Scalar> RegretAccumulator<'a, T> {
    pub fn new(oracle: Vec<T>, bank: &'a ChannelBank<T>) -> Result<Self> {
        let t = oracle.len();
        if t == 0 {
            return Err(Error::InvalidArgument("oracle series is empty".into()));
        }
        Ok(Self {
            oracle,
            bank,
            runs: 0,
            diverged_runs: 0,
            trace_sum: vec![T::zero(); t],
            n_sub_sum: vec![0; t],
            classical_sum: vec![T::zero(); t],
            gap_mean: vec![T::zero(); t],
            gap_m2: vec![T::zero(); t],
        })
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn push(&mut self, record: &RunRecord<T>) -> Result<()> {
        let t = self.oracle.len();
        if record.traces.len() != t || record.selections.len() != t || record.gammas.len() != t {
            return Err(Error::Dimension(format!(
                "run record horizon does not match oracle length {t}"
            )));
        }
        let m_star = self.bank.best_channel();
        let theta_star = self.bank.theta_star();
        self.runs += 1;
        self.diverged_runs += usize::from(record.diverged);
        let n = T::from_count(self.runs);

        let mut gap = T::zero();
        let mut n_sub = 0u64;
        let mut classical = T::zero();
        for k in 0..t {
            let m = record.selections[k];
            let theta = self.bank.theta(m)?;
            let tr = record.traces[k];

            self.trace_sum[k] += tr;
            n_sub += u64::from(m != m_star);
            self.n_sub_sum[k] += n_sub;
            classical += theta_star - theta;
            self.classical_sum[k] += classical;

            gap += tr - self.oracle[k];
            let delta = gap - self.gap_mean[k];
            self.gap_mean[k] += delta / n;
            self.gap_m2[k] += delta * (gap - self.gap_mean[k]);
        }
        Ok(())
    }

    pub fn finish(self) -> Result<RegretReport<T>> {
        if self.runs == 0 {
            return Err(Error::InvalidArgument("no run records".into()));
        }
        let n = T::from_count(self.runs);
        let mean_trace: Vec<T> = self.trace_sum.iter().map(|&s| s / n).collect();
        let mut acc = T::zero();
        let cum_regret = mean_trace
            .iter()
            .zip(&self.oracle)
            .map(|(&m, &o)| {
                acc += m - o;
                acc
            })
            .collect();
        let stderr_regret = self
            .gap_m2
            .iter()
            .map(|&m2| {
                if self.runs > 1 {
                    (m2 / T::from_count(self.runs - 1)).sqrt() / n.sqrt()
                } else {
                    T::zero()
                }
            })
            .collect();
        Ok(RegretReport {
            mean_trace,
            oracle_trace: self.oracle,
            cum_regret,
            stderr_regret,
            n_sub: self.n_sub_sum.iter().map(|&s| T::lit(s as f64) / n).collect(),
            classical_regret: self.classical_sum.iter().map(|&s| s / n).collect(),
            runs: self.runs,
            diverged_runs: self.diverged_runs,
        })
    }
}

/// Aggregate a set of runs against the oracle series.
///
/// With a single run the standard error is reported as zero.
pub fn estimation_regret<T: Scalar>(
    records: &[RunRecord<T>],
    oracle: &[T],
    bank: &ChannelBank<T>,
) -> Result<RegretReport<T>> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("no run records".into()));
    }
    let mut acc = RegretAccumulator::new(oracle.to_vec(), bank)?;
    for r in records {
        acc.push(r)?;
    }
    acc.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalingClass {
    Logarithmic,
    Linear,
    Indeterminate,
}

impl ScalingClass {
    pub fn label(self) -> &'static str {
        match self {
            ScalingClass::Logarithmic => "logarithmic",
            ScalingClass::Linear => "linear",
            ScalingClass::Indeterminate => "indeterminate",
        }
    }
}

impl std::fmt::Display for ScalingClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Least-squares comparison of `a·ln T + b` against `c·T + d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit<T: Scalar> {
    pub class: ScalingClass,
    pub rss_log: T,
    pub rss_linear: T,
    pub log_slope: T,
    pub log_intercept: T,
    pub linear_slope: T,
    pub linear_intercept: T,
}

/// RSS ratios inside `[LOW, HIGH]` are too close to call.
pub const INDETERMINATE_BAND: (f64, f64) = (0.8, 1.25);

/// Classify the growth of a cumulative regret series, `cum[i]` being the
/// value at `T = i + 1`, using only `T > burn_in`.
pub fn scaling_fit<T: Scalar>(cum: &[T], burn_in: usize) -> Result<ScalingFit<T>> {
    if cum.len() < 10 * burn_in || cum.len() < burn_in + 3 {
        return Err(Error::InvalidArgument(format!(
            "series of length {} too short for burn-in {burn_in}",
            cum.len()
        )));
    }
    let window: Vec<(T, T)> = cum
        .iter()
        .enumerate()
        .skip(burn_in)
        .map(|(i, &y)| (T::from_count(i + 1), y))
        .collect();

    let (log_slope, log_intercept, rss_log) = least_squares(window.iter().map(|&(t, y)| (t.ln(), y)));
    let (linear_slope, linear_intercept, rss_linear) = least_squares(window.iter().copied());

    let (lo, hi) = window
        .iter()
        .fold((T::max_value().unwrap(), T::min_value().unwrap()), |(lo, hi), &(_, y)| {
            (lo.min(y), hi.max(y))
        });
    let scale = lo.abs().max(hi.abs()).max(T::one());
    let constant = hi - lo <= T::lit(1e-12) * scale;

    let class = if constant || (rss_log == T::zero() && rss_linear == T::zero()) {
        ScalingClass::Indeterminate
    } else if rss_linear == T::zero() {
        ScalingClass::Linear
    } else {
        let ratio = rss_log / rss_linear;
        if ratio < T::lit(INDETERMINATE_BAND.0) {
            ScalingClass::Logarithmic
        } else if ratio > T::lit(INDETERMINATE_BAND.1) {
            ScalingClass::Linear
        } else {
            ScalingClass::Indeterminate
        }
    };

    Ok(ScalingFit {
        class,
        rss_log,
        rss_linear,
        log_slope,
        log_intercept,
        linear_slope,
        linear_intercept,
    })
}

/// Simple regression `y ≈ slope·x + intercept`; returns `(slope, intercept, rss)`.
fn least_squares<T: Scalar>(points: impl Iterator<Item = (T, T)> + Clone) -> (T, T, T) {
    let (n, sx, sy) = points
        .clone()
        .fold((0usize, T::zero(), T::zero()), |(n, sx, sy), (x, y)| (n + 1, sx + x, sy + y));
    let nf = T::from_count(n);
    let (mx, my) = (sx / nf, sy / nf);
    let (sxx, sxy) = points.clone().fold((T::zero(), T::zero()), |(sxx, sxy), (x, y)| {
        let dx = x - mx;
        (sxx + dx * dx, sxy + dx * (y - my))
    });
    let slope = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    let intercept = my - slope * mx;
    let rss = points.fold(T::zero(), |acc, (x, y)| {
        let r = y - (slope * x + intercept);
        acc + r * r
    });
    (slope, intercept, rss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemModel;

    fn scalar_plant() -> Plant<f64> {
        Plant::new(SystemModel::scalar(1.45, 1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn count_suboptimal_examples() {
        assert_eq!(count_suboptimal(&[0, 0, 0], 0), vec![0, 0, 0]);
        assert_eq!(count_suboptimal(&[1, 2, 3], 0), vec![1, 2, 3]);
        assert_eq!(count_suboptimal(&[0, 1, 0, 2], 0), vec![0, 1, 1, 2]);
    }

    #[test]
    fn classical_regret_examples() {
        let bank = ChannelBank::new(vec![0.8, 0.7, 0.6, 0.5]).unwrap();
        assert_eq!(classical_regret(&[0, 0], &bank).unwrap(), vec![0.0, 0.0]);
        let worst = classical_regret(&[3, 3, 3], &bank).unwrap();
        for (k, v) in worst.iter().enumerate() {
            assert!((v - (k + 1) as f64 * 0.3).abs() < 1e-12);
        }
        let r = classical_regret(&[1, 0], &bank).unwrap();
        assert!((r[0] - 0.1).abs() < 1e-12 && (r[1] - 0.1).abs() < 1e-12);
        assert!(classical_regret(&[4], &bank).is_err());
    }

    #[test]
    fn oracle_series_examples() {
        let plant = scalar_plant();
        let ones = oracle_trace_series(&plant, 1.0, 50).unwrap();
        let pbar = plant.pbar()[(0, 0)];
        assert!(ones.iter().all(|&t| t == pbar));

        let s = oracle_trace_series(&plant, 0.8, 400).unwrap();
        assert!(s.windows(2).all(|w| w[1] >= w[0]));
        assert!(s[0] >= pbar);
        let fixed = (0.8 * pbar + 0.2) / (1.0 - 0.2 * 2.1025);
        assert!((s[399] - fixed).abs() < 1e-9);

        assert!(matches!(
            oracle_trace_series(&plant, 0.5, 10),
            Err(Error::NotStabilizable { .. })
        ));
    }

    fn record(selections: Vec<usize>, traces: Vec<f64>) -> RunRecord<f64> {
        RunRecord {
            gammas: vec![true; selections.len()],
            selections,
            traces,
            diverged: false,
        }
    }

    #[test]
    fn aggregation_arithmetic() {
        let bank = ChannelBank::new(vec![0.9, 0.5]).unwrap();
        let oracle = vec![1.0, 1.0, 1.0];
        let recs = vec![
            record(vec![0, 1, 0], vec![1.0, 2.0, 1.0]),
            record(vec![1, 1, 0], vec![3.0, 2.0, 1.0]),
        ];
        let rep = estimation_regret(&recs, &oracle, &bank).unwrap();
        assert_eq!(rep.mean_trace, vec![2.0, 2.0, 1.0]);
        assert_eq!(rep.cum_regret, vec![1.0, 2.0, 2.0]);
        assert_eq!(rep.n_sub, vec![0.5, 1.5, 1.5]);
        // per-run cumulative gaps: (0,1,1) and (2,3,3); sd = sqrt(2), / sqrt(2) = 1
        for &s in &rep.stderr_regret {
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(rep.runs, 2);
        assert!(estimation_regret(&[], &oracle, &bank).is_err());
        assert!(estimation_regret(&[record(vec![0], vec![1.0])], &oracle, &bank).is_err());
    }

    #[test]
    fn single_run_summary_equals_its_gap() {
        let bank = ChannelBank::new(vec![0.9, 0.5]).unwrap();
        let oracle = vec![1.0, 1.5];
        let rep = estimation_regret(&[record(vec![0, 1], vec![1.25, 4.0])], &oracle, &bank).unwrap();
        assert_eq!(rep.final_regret(), 0.25 + 2.5);
        assert_eq!(rep.final_stderr(), 0.0);
    }

    #[test]
    fn scaling_fit_recovers_models() {
        let log_series: Vec<f64> = (1..=10_000).map(|t| 50.0 * (t as f64).ln()).collect();
        let fit = scaling_fit(&log_series, 100).unwrap();
        assert_eq!(fit.class, ScalingClass::Logarithmic);
        assert!((fit.log_slope - 50.0).abs() < 1e-8);

        let lin: Vec<f64> = (1..=10_000).map(|t| 0.3 * t as f64 + 5.0).collect();
        let fit = scaling_fit(&lin, 1000).unwrap();
        assert_eq!(fit.class, ScalingClass::Linear);
        assert!((fit.linear_slope - 0.3).abs() < 1e-10);

        let flat = vec![0.0; 1000];
        assert_eq!(scaling_fit(&flat, 100).unwrap().class, ScalingClass::Indeterminate);
        let flat = vec![7.5; 1000];
        assert_eq!(scaling_fit(&flat, 100).unwrap().class, ScalingClass::Indeterminate);

        assert!(scaling_fit(&lin[..500], 100).is_err());
    }
}
