//! Bank of independent Bernoulli packet-loss channels.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Two reception probabilities closer than this are treated as equal.
pub const DISTINCT_TOL: f64 = 1e-12;

/// `M >= 2` i.i.d. Bernoulli channels with pairwise-distinct reception
/// probabilities. Channel indices are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBank<T: Scalar> {
    thetas: Vec<T>,
    best: usize,
    worst: usize,
}

impl<T: Scalar> ChannelBank<T> {
    pub fn new(thetas: Vec<T>) -> Result<Self> {
        Self::build(thetas, true)
    }

    /// Like [`new`](Self::new) but only the best channel has to be unique;
    /// sub-optimal channels may share a reception probability.
    pub fn new_allowing_ties(thetas: Vec<T>) -> Result<Self> {
        Self::build(thetas, false)
    }

    fn build(thetas: Vec<T>, all_distinct: bool) -> Result<Self> {
        if thetas.len() < 2 {
            return Err(Error::InvalidChannels(format!(
                "need at least 2 channels, got {}",
                thetas.len()
            )));
        }
        for (m, &t) in thetas.iter().enumerate() {
            if !(t >= T::zero() && t <= T::one()) {
                return Err(Error::InvalidChannels(format!(
                    "theta[{m}] = {t} outside [0, 1]"
                )));
            }
        }
        let tol = T::lit(DISTINCT_TOL);
        let best = argmax(&thetas);
        for i in 0..thetas.len() {
            for j in 0..i {
                let must_differ = all_distinct || i == best || j == best;
                if must_differ && (thetas[i] - thetas[j]).abs() < tol {
                    return Err(Error::InvalidChannels(format!(
                        "theta[{j}] and theta[{i}] are not distinct"
                    )));
                }
            }
        }
        let worst = argmin(&thetas);
        Ok(Self {
            thetas,
            best,
            worst,
        })
    }

    pub fn thetas(&self) -> &[T] {
        &self.thetas
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn theta(&self, m: usize) -> Result<T> {
        self.thetas.get(m).copied().ok_or(Error::ChannelIndex {
            index: m,
            channels: self.len(),
        })
    }

    /// Index `m*` of the best channel.
    pub fn best_channel(&self) -> usize {
        self.best
    }

    /// `θ* = max_m θ_m`.
    pub fn theta_star(&self) -> T {
        self.thetas[self.best]
    }

    /// `θ_w = min_m θ_m`.
    pub fn theta_w(&self) -> T {
        self.thetas[self.worst]
    }

    /// Second-largest reception probability.
    pub fn theta_second(&self) -> T {
        self.thetas
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != self.best)
            .map(|(_, &t)| t)
            .fold(T::zero(), |acc, t| acc.max(t))
    }

    pub fn mean_theta(&self) -> T {
        let sum = self.thetas.iter().fold(T::zero(), |acc, &t| acc + t);
        sum / T::from_count(self.len())
    }

    /// Transmit once on channel `m`; `true` means the packet arrived.
    pub fn draw<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<bool> {
        let theta = self.theta(m)?;
        Ok(T::sample_unit(rng) < theta)
    }

    /// Whether the best channel alone keeps the expected covariance bounded.
    pub fn is_stabilizable(&self, theta_c: T) -> bool {
        self.theta_star() > theta_c
    }
}

fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn argmin<T: Scalar>(v: &[T]) -> usize {
    let mut worst = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x < v[worst] {
            worst = i;
        }
    }
    worst
}
