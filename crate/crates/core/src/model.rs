//! Model parameters, state distributions over infected counts, and time grids.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Drift allowed on probability entries and their sum before a vector is
/// rejected as a distribution.
pub const PROB_TOL: f64 = 1e-9;

/// One SIS instance on the complete graph with `n` nodes.
///
/// Each infected node infects each neighbour at rate `tau / n` and recovers
/// at rate `gamma`. A fraction `u` of the nodes is infected at time zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    tau: f64,
    gamma: f64,
    n: usize,
    u: f64,
}

impl ModelParams {
    pub fn new(tau: f64, gamma: f64, n: usize, u: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::param("tau", format!("must be finite and >= 0, got {tau}")));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::param("gamma", format!("must be finite and >= 0, got {gamma}")));
        }
        if n == 0 {
            return Err(Error::param("n", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::param("u", format!("must lie in [0, 1], got {u}")));
        }
        Ok(Self { tau, gamma, n, u })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    /// Same rates and initial fraction on a graph of a different size.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.tau, self.gamma, n, self.u)
    }

    /// Initial infected count `k0 = round(n * u)`, halves rounded away from zero.
    pub fn initial_infected(&self) -> usize {
        let k0 = libm::round(self.n as f64 * self.u) as usize;
        k0.min(self.n)
    }

    /// Initial infected fraction actually realised on `n` nodes, `k0 / n`.
    pub fn realized_u(&self) -> f64 {
        self.initial_infected() as f64 / self.n as f64
    }

    /// Upper bound on the total jump rate over all states,
    /// `max_k (tau/n) k (n - k) + gamma k`.
    pub fn max_total_rate(&self) -> f64 {
        (0..=self.n).map(|k| self.birth(k) + self.death(k)).fold(0.0, f64::max)
    }

    /// Infection rate without range checking; callers guarantee `k <= n`.
    #[inline]
    pub(crate) fn birth(&self, k: usize) -> f64 {
        let n = self.n as f64;
        self.tau / n * k as f64 * (n - k as f64)
    }

    #[inline]
    pub(crate) fn death(&self, k: usize) -> f64 {
        self.gamma * k as f64
    }

    fn check_count(&self, k: usize) -> Result<()> {
        if k > self.n {
            return Err(Error::Domain(format!("infected count {k} outside 0..={}", self.n)));
        }
        Ok(())
    }
}

/// Rate of the `k -> k + 1` transition: `(tau / n) k (n - k)`.
pub fn infection_rate(k: usize, p: &ModelParams) -> Result<f64> {
    p.check_count(k)?;
    Ok(p.birth(k))
}

/// Rate of the `k -> k - 1` transition: `gamma k`.
pub fn recovery_rate(k: usize, p: &ModelParams) -> Result<f64> {
    p.check_count(k)?;
    Ok(p.death(k))
}

/// Probability vector over `k = 0..=n` infected nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    probs: Vec<f64>,
}

impl StateDistribution {
    /// Validates entries against [`PROB_TOL`]. The vector must have `n + 1`
    /// entries with `n >= 1`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::Domain(format!(
                "distribution needs at least 2 entries, got {}",
                probs.len()
            )));
        }
        if let Some((k, &p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < -PROB_TOL)
        {
            return Err(Error::Domain(format!("entry {k} is {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::Domain(format!("probabilities sum to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Wraps solver output without validation.
    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn point_mass(n: usize, k: usize) -> Result<Self> {
        if n == 0 || k > n {
            return Err(Error::Domain(format!("point mass at {k} on 0..={n}")));
        }
        let mut probs = alloc::vec![0.0; n + 1];
        probs[k] = 1.0;
        Ok(Self { probs })
    }

    pub fn n(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    /// Total probability mass.
    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Copy clamped to `[0, 1]` and renormalised. For reporting only.
    pub fn clamped(&self) -> Self {
        let mut probs: Vec<f64> = self.probs.iter().map(|p| p.clamp(0.0, 1.0)).collect();
        let s: f64 = probs.iter().sum();
        if s > 0.0 {
            probs.iter_mut().for_each(|p| *p /= s);
        }
        Self { probs }
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).fold(
            if self.probs.len() == other.probs.len() {
                0.0
            } else {
                f64::INFINITY
            },
            f64::max,
        )
    }
}

/// First three moments of the infected fraction `i = k / n`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

impl Moments {
    pub fn variance(&self) -> f64 {
        self.m2 - self.m1 * self.m1
    }

    /// `(m2 - m1^2, m3 - m2^1.5)`; both are nonnegative for any distribution.
    pub fn jensen_slack(&self) -> (f64, f64) {
        let m2 = self.m2.max(0.0);
        (self.m2 - self.m1 * self.m1, self.m3 - m2 * libm::sqrt(m2))
    }
}

/// `m_r = sum_k p_k (k/n)^r` for `r = 1, 2, 3`.
pub fn moments(d: &StateDistribution) -> Moments {
    moments_of(d.probs())
}

pub(crate) fn moments_of(probs: &[f64]) -> Moments {
    let n = (probs.len() - 1) as f64;
    let mut acc = Moments::default();
    for (k, &p) in probs.iter().enumerate() {
        let i = k as f64 / n;
        let pi = p * i;
        acc.m1 += pi;
        acc.m2 += pi * i;
        acc.m3 += pi * i * i;
    }
    acc
}

/// Initial condition: point mass at `k0 = round(n u)`.
pub fn initial_distribution(p: &ModelParams) -> StateDistribution {
    let mut probs = alloc::vec![0.0; p.n() + 1];
    probs[p.initial_infected()] = 1.0;
    StateDistribution { probs }
}

/// Uniformly spaced output nodes `0 = t_0 < ... < t_{m-1} = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(t_end: f64, num_points: usize) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::param("t_end", format!("must be finite and > 0, got {t_end}")));
        }
        if num_points < 2 {
            return Err(Error::param("num_points", "must be >= 2"));
        }
        let last = (num_points - 1) as f64;
        let mut times: Vec<f64> = (0..num_points).map(|i| t_end * (i as f64 / last)).collect();
        times[num_points - 1] = t_end;
        Ok(Self { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn num_points(&self) -> usize {
        self.times.len()
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Index of the node equal to `t` (within `1e-12`), if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-12)
    }

    pub(crate) fn ensure_same(&self, other: &TimeGrid, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::Domain(format!("{what}: time grids differ")));
        }
        Ok(())
    }
}
