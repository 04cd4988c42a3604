//! Channel-selection policies sharing one Beta-posterior bookkeeping.
//!
//! ε-greedy exploits posterior means, Thompson sampling (TS) takes the argmax
//! of one Beta draw per channel, optimistic Bayesian sampling (OBS) floors
//! each draw at the posterior mean, and stability-aware Bayesian sampling
//! (SBS) applies that floor only to channels whose posterior mean exceeds a
//! believed critical probability. Oracle and fixed-channel baselines complete
//! the set for regret comparisons.

use std::fmt;

use rand::Rng;

use crate::channels::ChannelBank;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-channel Beta pseudo-counts, starting from the uniform prior `Beta(1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorState<T: Scalar> {
    alpha: Vec<T>,
    beta: Vec<T>,
}

impl<T: Scalar> PosteriorState<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            alpha: vec![T::one(); channels],
            beta: vec![T::one(); channels],
        }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    pub fn beta(&self) -> &[T] {
        &self.beta
    }

    /// `α_m / (α_m + β_m)`. Panics if `m` is out of range.
    #[inline]
    pub fn mean(&self, m: usize) -> T {
        self.alpha[m] / (self.alpha[m] + self.beta[m])
    }

    /// Record one transmission on channel `m`.
    pub fn update(&mut self, m: usize, received: bool) -> Result<()> {
        if m >= self.len() {
            return Err(Error::ChannelIndex {
                index: m,
                channels: self.len(),
            });
        }
        if received {
            self.alpha[m] += T::one();
        } else {
            self.beta[m] += T::one();
        }
        Ok(())
    }

    /// Builds a state from explicit pseudo-counts, all of which must be positive.
    pub fn from_counts(alpha: Vec<T>, beta: Vec<T>) -> Result<Self> {
        if alpha.len() != beta.len() || alpha.is_empty() {
            return Err(Error::Dimension(
                "alpha and beta must be non-empty and of equal length".into(),
            ));
        }
        if alpha.iter().chain(&beta).any(|&v| !(v > T::zero()) || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "pseudo-counts must be positive and finite".into(),
            ));
        }
        Ok(Self { alpha, beta })
    }
}

/// Posterior mean of channel `m`.
pub fn posterior_mean<T: Scalar>(state: &PosteriorState<T>, m: usize) -> Result<T> {
    if m < state.len() {
        Ok(state.mean(m))
    } else {
        Err(Error::ChannelIndex {
            index: m,
            channels: state.len(),
        })
    }
}

/// One draw from `Beta(α, β)` as `X / (X + Y)` with `X ~ Γ(α)`, `Y ~ Γ(β)`.
///
/// The result is strictly inside `(0, 1)`; draws that round to an endpoint
/// are rejected.
pub fn sample_beta<T: Scalar, R: Rng + ?Sized>(alpha: T, beta: T, rng: &mut R) -> T {
    assert!(alpha > T::zero() && beta > T::zero(), "Beta parameters must be positive");
    loop {
        let x = T::sample_gamma(alpha, rng);
        let y = T::sample_gamma(beta, rng);
        let s = x / (x + y);
        if s > T::zero() && s < T::one() {
            return s;
        }
    }
}

/// First index of the maximum; lowest index wins ties.
#[inline]
pub fn argmax_lowest<T: Scalar>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// `max(sample, mean)`.
#[inline]
pub fn obs_score<T: Scalar>(sample: T, mean: T) -> T {
    sample.max(mean)
}

/// The OBS score when `mean > theta_c_hat`, the raw sample otherwise.
#[inline]
pub fn sbs_score<T: Scalar>(sample: T, mean: T, theta_c_hat: T) -> T {
    if mean > theta_c_hat {
        obs_score(sample, mean)
    } else {
        sample
    }
}

/// Fill `out` with one Beta sample per channel.
pub fn draw_ts_samples<T: Scalar, R: Rng + ?Sized>(
    state: &PosteriorState<T>,
    rng: &mut R,
    out: &mut Vec<T>,
) {
    out.clear();
    out.extend(
        state
            .alpha
            .iter()
            .zip(&state.beta)
            .map(|(&a, &b)| sample_beta(a, b, rng)),
    );
}

/// OBS scores for a given sample vector.
pub fn obs_scores<T: Scalar>(state: &PosteriorState<T>, samples: &[T]) -> Vec<T> {
    samples
        .iter()
        .enumerate()
        .map(|(m, &s)| obs_score(s, state.mean(m)))
        .collect()
}

/// SBS scores for a given sample vector.
pub fn sbs_scores<T: Scalar>(state: &PosteriorState<T>, samples: &[T], theta_c_hat: T) -> Vec<T> {
    samples
        .iter()
        .enumerate()
        .map(|(m, &s)| sbs_score(s, state.mean(m), theta_c_hat))
        .collect()
}

/// ε-greedy: uniform channel with probability ε, otherwise the largest
/// posterior mean with ties broken uniformly at random.
pub fn select_epsilon_greedy<T: Scalar, R: Rng + ?Sized>(
    state: &PosteriorState<T>,
    epsilon: T,
    rng: &mut R,
) -> usize {
    let m = state.len();
    if T::sample_unit(rng) < epsilon {
        return rng.random_range(0..m);
    }
    let mut best = state.mean(0);
    let mut ties = 1usize;
    for i in 1..m {
        let v = state.mean(i);
        if v > best {
            best = v;
            ties = 1;
        } else if v == best {
            ties += 1;
        }
    }
    let pick = if ties == 1 { 0 } else { rng.random_range(0..ties) };
    (0..m)
        .filter(|&i| state.mean(i) == best)
        .nth(pick)
        .expect("pick < ties")
}

/// Thompson sampling. Returns the chosen channel and the samples it drew.
pub fn select_ts<T: Scalar, R: Rng + ?Sized>(state: &PosteriorState<T>, rng: &mut R) -> (usize, Vec<T>) {
    let mut samples = Vec::with_capacity(state.len());
    draw_ts_samples(state, rng, &mut samples);
    (argmax_lowest(&samples), samples)
}

/// Optimistic Bayesian sampling.
pub fn select_obs<T: Scalar, R: Rng + ?Sized>(state: &PosteriorState<T>, rng: &mut R) -> usize {
    let (_, samples) = select_ts(state, rng);
    argmax_lowest(&obs_scores(state, &samples))
}

/// Stability-aware Bayesian sampling with believed critical probability
/// `theta_c_hat`.
pub fn select_sbs<T: Scalar, R: Rng + ?Sized>(
    state: &PosteriorState<T>,
    theta_c_hat: T,
    rng: &mut R,
) -> usize {
    let (_, samples) = select_ts(state, rng);
    argmax_lowest(&sbs_scores(state, &samples, theta_c_hat))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    EpsilonGreedy,
    Thompson,
    Optimistic,
    StabilityAware,
    Oracle,
    Fixed,
}

impl PolicyKind {
    /// Short lowercase name used in configs and CSV output.
    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::EpsilonGreedy => "epsilon_greedy",
            PolicyKind::Thompson => "ts",
            PolicyKind::Optimistic => "obs",
            PolicyKind::StabilityAware => "sbs",
            PolicyKind::Oracle => "oracle",
            PolicyKind::Fixed => "fixed",
        }
    }

    pub fn is_learning(self) -> bool {
        !matches!(self, PolicyKind::Oracle | PolicyKind::Fixed)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Which policy to run, with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec<T: Scalar> {
    EpsilonGreedy { epsilon: T },
    Thompson,
    Optimistic,
    StabilityAware { theta_c_hat: T },
    Oracle,
    Fixed { channel: usize },
}

impl<T: Scalar> PolicySpec<T> {
    pub fn kind(&self) -> PolicyKind {
        match self {
            PolicySpec::EpsilonGreedy { .. } => PolicyKind::EpsilonGreedy,
            PolicySpec::Thompson => PolicyKind::Thompson,
            PolicySpec::Optimistic => PolicyKind::Optimistic,
            PolicySpec::StabilityAware { .. } => PolicyKind::StabilityAware,
            PolicySpec::Oracle => PolicyKind::Oracle,
            PolicySpec::Fixed { .. } => PolicyKind::Fixed,
        }
    }

    pub fn epsilon(&self) -> Option<T> {
        match *self {
            PolicySpec::EpsilonGreedy { epsilon } => Some(epsilon),
            _ => None,
        }
    }

    pub fn theta_c_hat(&self) -> Option<T> {
        match *self {
            PolicySpec::StabilityAware { theta_c_hat } => Some(theta_c_hat),
            _ => None,
        }
    }

    pub fn fixed_channel(&self) -> Option<usize> {
        match *self {
            PolicySpec::Fixed { channel } => Some(channel),
            _ => None,
        }
    }

    /// `ε ∈ (0, 1)`, `θ̂_c ∈ [0, 1)`.
    pub fn validate(&self) -> Result<()> {
        match *self {
            PolicySpec::EpsilonGreedy { epsilon } if !(epsilon > T::zero() && epsilon < T::one()) => {
                Err(Error::InvalidPolicy(format!("epsilon {epsilon} outside (0, 1)")))
            }
            PolicySpec::StabilityAware { theta_c_hat }
                if !(theta_c_hat >= T::zero() && theta_c_hat < T::one()) =>
            {
                Err(Error::InvalidPolicy(format!(
                    "theta_c_hat {theta_c_hat} outside [0, 1)"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// A validated policy ready to run against one channel bank.
#[derive(Debug, Clone)]
pub struct Policy<T: Scalar> {
    spec: PolicySpec<T>,
    oracle_channel: Option<usize>,
    samples: Vec<T>,
}

impl<T: Scalar> Policy<T> {
    /// The oracle needs the bank to know `m*`; a fixed channel is range
    /// checked against it when given.
    pub fn new(spec: PolicySpec<T>, bank: Option<&ChannelBank<T>>) -> Result<Self> {
        spec.validate()?;
        let oracle_channel = match (spec, bank) {
            (PolicySpec::Oracle, None) => {
                return Err(Error::InvalidPolicy(
                    "oracle policy requires the channel bank".into(),
                ))
            }
            (PolicySpec::Oracle, Some(b)) => Some(b.best_channel()),
            (PolicySpec::Fixed { channel }, Some(b)) if channel >= b.len() => {
                return Err(Error::ChannelIndex {
                    index: channel,
                    channels: b.len(),
                })
            }
            _ => None,
        };
        Ok(Self {
            spec,
            oracle_channel,
            samples: Vec::new(),
        })
    }

    pub fn spec(&self) -> &PolicySpec<T> {
        &self.spec
    }

    /// Choose the channel for the next transmission.
    pub fn select<R: Rng + ?Sized>(&mut self, state: &PosteriorState<T>, rng: &mut R) -> usize {
        match self.spec {
            PolicySpec::EpsilonGreedy { epsilon } => select_epsilon_greedy(state, epsilon, rng),
            PolicySpec::Thompson => {
                draw_ts_samples(state, rng, &mut self.samples);
                argmax_lowest(&self.samples)
            }
            PolicySpec::Optimistic => {
                draw_ts_samples(state, rng, &mut self.samples);
                for (m, s) in self.samples.iter_mut().enumerate() {
                    *s = obs_score(*s, state.mean(m));
                }
                argmax_lowest(&self.samples)
            }
            PolicySpec::StabilityAware { theta_c_hat } => {
                draw_ts_samples(state, rng, &mut self.samples);
                for (m, s) in self.samples.iter_mut().enumerate() {
                    *s = sbs_score(*s, state.mean(m), theta_c_hat);
                }
                argmax_lowest(&self.samples)
            }
            PolicySpec::Oracle => self.oracle_channel.expect("checked at construction"),
            PolicySpec::Fixed { channel } => channel,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn posterior_mean_examples() {
        let mut st = PosteriorState::<f64>::new(3);
        assert_eq!(posterior_mean(&st, 0).unwrap(), 0.5);
        let st2 = PosteriorState::from_counts(vec![3.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(st2.mean(0), 0.75);
        for _ in 0..4 {
            st.update(2, true).unwrap();
        }
        for _ in 0..3 {
            st.update(2, false).unwrap();
        }
        assert_eq!(st.mean(2), 5.0 / 9.0);
        assert!(posterior_mean(&st, 3).is_err());
    }

    #[test]
    fn update_examples() {
        let mut st = PosteriorState::<f64>::new(4);
        st.update(0, true).unwrap();
        assert_eq!((st.alpha()[0], st.beta()[0]), (2.0, 1.0));
        assert!(st.alpha()[1..].iter().chain(&st.beta()[1..]).all(|&v| v == 1.0));

        let mut st = PosteriorState::<f64>::new(4);
        st.update(0, false).unwrap();
        assert_eq!((st.alpha()[0], st.beta()[0]), (1.0, 2.0));

        let mut st = PosteriorState::<f64>::new(4);
        for i in 0..15 {
            st.update(1, i < 10).unwrap();
        }
        assert_eq!((st.alpha()[1], st.beta()[1]), (11.0, 6.0));
        assert!(st.update(4, true).is_err());
    }

    #[test]
    fn from_counts_rejects_bad_input() {
        assert!(PosteriorState::<f64>::from_counts(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(PosteriorState::<f64>::from_counts(vec![0.0], vec![1.0]).is_err());
        assert!(PosteriorState::<f64>::from_counts(vec![], vec![]).is_err());
    }

    #[test]
    fn beta_sample_means() {
        let mut r = rng(11);
        let n = 100_000;
        let mean = |a: f64, b: f64, r: &mut ChaCha8Rng| {
            (0..n).map(|_| sample_beta(a, b, r)).sum::<f64>() / n as f64
        };
        assert!((mean(1.0, 1.0, &mut r) - 0.5).abs() < 0.005);
        assert!((mean(5.0, 1.0, &mut r) - 5.0 / 6.0).abs() < 0.005);
    }

    #[test]
    fn beta_samples_stay_inside_support() {
        let mut r = rng(12);
        for &(a, b) in &[(1.0, 1e6), (1e6, 1.0), (1.0, 1.0), (0.5, 0.5)] {
            for _ in 0..10_000 {
                let s: f64 = sample_beta(a, b, &mut r);
                assert!(s > 0.0 && s < 1.0);
            }
        }
    }

    #[test]
    fn epsilon_greedy_fresh_state_is_uniform() {
        let st = PosteriorState::<f64>::new(4);
        let mut r = rng(13);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[select_epsilon_greedy(&st, 0.1, &mut r)] += 1;
        }
        let p = 0.25;
        let band = 4.0 * (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() < band, "{counts:?}");
        }
    }

    #[test]
    fn epsilon_greedy_mixture_probability() {
        let st = PosteriorState::from_counts(vec![3.0, 1.0, 1.0, 1.0], vec![1.0; 4]).unwrap();
        let mut r = rng(14);
        for _ in 0..1000 {
            assert_eq!(select_epsilon_greedy(&st, 1e-12, &mut r), 0);
        }
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| select_epsilon_greedy(&st, 0.12, &mut r) == 0)
            .count();
        let p = 0.88 + 0.12 / 4.0;
        let band = 4.0 * (n as f64 * p * (1.0 - p)).sqrt();
        assert!((hits as f64 - n as f64 * p).abs() < band, "{hits}");
    }

    #[test]
    fn ts_concentrated_posterior() {
        let mut alpha = vec![1.0; 4];
        let mut beta = vec![1e6; 4];
        alpha[1] = 1e6;
        beta[1] = 1.0;
        let st = PosteriorState::from_counts(alpha, beta).unwrap();
        let mut r = rng(15);
        let n = 10_000;
        let ts_hits = (0..n).filter(|_| select_ts(&st, &mut r).0 == 1).count();
        assert!(ts_hits as f64 / n as f64 > 0.999);
        let obs_hits = (0..n).filter(|_| select_obs(&st, &mut r) == 1).count();
        assert!(obs_hits as f64 / n as f64 > 0.999);
    }

    #[test]
    fn ts_fresh_state_uniform_and_definitional() {
        let st = PosteriorState::<f64>::new(4);
        let mut r = rng(16);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let (m, samples) = select_ts(&st, &mut r);
            assert!(samples.iter().all(|&s| s <= samples[m]));
            counts[m] += 1;
        }
        let band = 4.0 * (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 / 4.0).abs() < band, "{counts:?}");
        }
    }

    #[test]
    fn obs_floors_at_mean() {
        let st = PosteriorState::from_counts(vec![9.0, 1.0], vec![1.0, 1.0]).unwrap();
        let samples = [0.85, 0.3];
        let scores = obs_scores(&st, &samples);
        assert_eq!(scores[0], 0.9);
        assert_eq!(scores[1], 0.5);
        assert!(scores.iter().zip(&samples).all(|(s, t)| s >= t));
    }

    #[test]
    fn sbs_threshold_examples() {
        let st = PosteriorState::from_counts(vec![3.0, 1.0], vec![1.0, 3.0]).unwrap();
        let samples = [0.6, 0.4];
        let scores = sbs_scores(&st, &samples, 0.524);
        assert_eq!(scores[0], 0.75);
        assert_eq!(scores[1], 0.4);
        // strict comparison: mean equal to the threshold keeps the raw sample
        assert_eq!(sbs_score(0.1, 0.75, 0.75), 0.1);
    }

    #[test]
    fn policy_dispatch() {
        let bank = ChannelBank::new(vec![0.3, 0.9, 0.5]).unwrap();
        let st = PosteriorState::<f64>::new(3);
        let mut r = rng(17);
        let mut oracle = Policy::new(PolicySpec::Oracle, Some(&bank)).unwrap();
        let mut fixed = Policy::new(PolicySpec::Fixed { channel: 2 }, Some(&bank)).unwrap();
        for _ in 0..100 {
            assert_eq!(oracle.select(&st, &mut r), 1);
            assert_eq!(fixed.select(&st, &mut r), 2);
        }
        assert!(matches!(
            Policy::<f64>::new(PolicySpec::Oracle, None),
            Err(Error::InvalidPolicy(_))
        ));
        assert!(Policy::new(PolicySpec::Fixed { channel: 3 }, Some(&bank)).is_err());
        assert!(Policy::<f64>::new(PolicySpec::EpsilonGreedy { epsilon: 0.0 }, None).is_err());
        assert!(Policy::<f64>::new(PolicySpec::StabilityAware { theta_c_hat: 1.0 }, None).is_err());
    }

    #[test]
    fn dispatched_ts_matches_free_function() {
        let st = PosteriorState::from_counts(vec![4.0, 2.0, 7.0], vec![3.0, 5.0, 2.0]).unwrap();
        let mut policy = Policy::new(PolicySpec::Thompson, None).unwrap();
        let (mut r1, mut r2) = (rng(18), rng(18));
        for _ in 0..1000 {
            assert_eq!(policy.select(&st, &mut r1), select_ts(&st, &mut r2).0);
        }
        let mut policy = Policy::new(PolicySpec::StabilityAware { theta_c_hat: 0.5 }, None).unwrap();
        for _ in 0..1000 {
            assert_eq!(policy.select(&st, &mut r1), select_sbs(&st, 0.5, &mut r2));
        }
    }

    #[test]
    fn works_in_single_precision() {
        let st = PosteriorState::<f32>::new(3);
        let mut r = rng(19);
        let (m, samples) = select_ts(&st, &mut r);
        assert!(m < 3 && samples.iter().all(|&s| s > 0.0 && s < 1.0));
    }
}
