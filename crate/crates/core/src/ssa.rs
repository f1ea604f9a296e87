//! Exact stochastic simulation of the lumped SIS chain and Monte Carlo
//! estimates of its moments.
//!
//! # Random streams
//!
//! Replication `r` of a run seeded with `seed` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `r`. Streams are
//! independent, so the result of a replication never depends on which worker
//! ran it or in what order.
//!
//! # Aggregation
//!
//! Paths are reduced into a per-node histogram of infected counts. Merging
//! histograms is integer addition, so any split of the replications gives the
//! same histogram and every statistic is computed from it in a fixed order.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mean_field::MeanFieldSolution;
use crate::model::{ModelParams, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SsaConfig {
    reps: u64,
    seed: u64,
}

impl SsaConfig {
    pub fn new(reps: u64, seed: u64) -> Result<Self> {
        if reps == 0 {
            return Err(Error::param("reps", "must be >= 1"));
        }
        Ok(Self { reps, seed })
    }

    pub fn reps(&self) -> u64 {
        self.reps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Random stream of replication `rep`.
pub fn stream(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Uniform on the open interval `(0, 1)`: 52 random bits, offset by half a
/// step. With 53 bits the largest value would round up to exactly 1.
#[inline]
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Event-by-event walk of the chain from `k0 = round(n u)`.
pub struct Walker<'a, R> {
    p: &'a ModelParams,
    rng: R,
    k: usize,
    t: f64,
}

impl<'a, R: Rng> Walker<'a, R> {
    pub fn new(p: &'a ModelParams, rng: R) -> Self {
        Self {
            p,
            rng,
            k: p.initial_infected(),
            t: 0.0,
        }
    }

    pub fn state(&self) -> usize {
        self.k
    }

    /// Advances to the next jump and returns `(time, new_state)`, or `None`
    /// once the total rate is zero.
    pub fn next_jump(&mut self) -> Option<(f64, usize)> {
        let a = self.p.birth(self.k);
        let c = self.p.death(self.k);
        let total = a + c;
        if total <= 0.0 {
            return None;
        }
        self.t += -libm::log(open01(&mut self.rng)) / total;
        if open01(&mut self.rng) * total < a {
            self.k += 1;
        } else {
            self.k -= 1;
        }
        Some((self.t, self.k))
    }
}

/// Infected count at every grid node of one path. The path is right
/// continuous: a jump landing exactly on a node is visible at that node.
pub fn sample_counts<R: Rng>(p: &ModelParams, grid: &TimeGrid, rng: R, out: &mut [usize]) {
    let mut walker = Walker::new(p, rng);
    let mut current = walker.state();
    let mut next = walker.next_jump();
    for (slot, &tn) in out.iter_mut().zip(grid.times()) {
        while let Some((tj, kj)) = next {
            if tj > tn {
                break;
            }
            current = kj;
            next = walker.next_jump();
        }
        *slot = current;
    }
}

/// Infected fraction `k / n` at every grid node of one path.
pub fn sample_path<R: Rng>(p: &ModelParams, grid: &TimeGrid, rng: R) -> Vec<f64> {
    let mut counts = vec![0; grid.num_points()];
    sample_counts(p, grid, rng, &mut counts);
    let n = p.n() as f64;
    counts.into_iter().map(|k| k as f64 / n).collect()
}

/// Per-node histogram of infected counts over a set of replications.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    n: usize,
    num_points: usize,
    reps: u64,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(n: usize, num_points: usize) -> Self {
        Self {
            n,
            num_points,
            reps: 0,
            counts: vec![0; num_points * (n + 1)],
        }
    }

    pub fn reps(&self) -> u64 {
        self.reps
    }

    pub fn record(&mut self, path_counts: &[usize]) {
        let width = self.n + 1;
        for (node, &k) in path_counts.iter().enumerate() {
            self.counts[node * width + k] += 1;
        }
        self.reps += 1;
    }

    pub fn merge(mut self, other: &Histogram) -> Self {
        debug_assert_eq!((self.n, self.num_points), (other.n, other.num_points));
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.reps += other.reps;
        self
    }

    /// Simulates replications `reps` (stream indices) and records them.
    pub fn accumulate(&mut self, p: &ModelParams, grid: &TimeGrid, seed: u64, reps: Range<u64>) {
        let mut buf = vec![0; grid.num_points()];
        for r in reps {
            sample_counts(p, grid, stream(seed, r), &mut buf);
            self.record(&buf);
        }
    }

    fn node(&self, i: usize) -> &[u64] {
        let width = self.n + 1;
        &self.counts[i * width..(i + 1) * width]
    }

    /// Sample mean and standard error of `phi(k / n)` at node `i`.
    fn mean_se(&self, i: usize, phi: impl Fn(f64) -> f64) -> (f64, f64) {
        let n = self.n as f64;
        let reps = self.reps as f64;
        let row = self.node(i);
        let mean = row
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| c as f64 * phi(k as f64 / n))
            .sum::<f64>()
            / reps;
        if self.reps < 2 {
            return (mean, 0.0);
        }
        let ss: f64 = row
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| {
                let d = phi(k as f64 / n) - mean;
                c as f64 * d * d
            })
            .sum();
        (mean, libm::sqrt(ss / (reps - 1.0) / reps))
    }

    pub fn estimate(&self, grid: &TimeGrid) -> MonteCarloEstimate {
        let m = self.num_points;
        let mut est = MonteCarloEstimate {
            grid: grid.clone(),
            reps: self.reps,
            m1_hat: Vec::with_capacity(m),
            m2_hat: Vec::with_capacity(m),
            se1: Vec::with_capacity(m),
            se2: Vec::with_capacity(m),
            extinct_fraction: Vec::with_capacity(m),
        };
        for i in 0..m {
            let (m1, s1) = self.mean_se(i, |x| x);
            let (m2, s2) = self.mean_se(i, |x| x * x);
            est.m1_hat.push(m1);
            est.se1.push(s1);
            est.m2_hat.push(m2);
            est.se2.push(s2);
            est.extinct_fraction.push(self.node(i)[0] as f64 / self.reps as f64);
        }
        est
    }

    /// Sample mean of `(i - y)^2` per node with its standard error.
    pub fn mse(&self, y: &[f64]) -> Result<MseEstimate> {
        if y.len() != self.num_points {
            return Err(Error::Domain(alloc::format!(
                "reference has {} nodes, samples have {}",
                y.len(),
                self.num_points
            )));
        }
        let (mse_hat, se) = y
            .iter()
            .enumerate()
            .map(|(i, &yi)| self.mean_se(i, |x| (x - yi) * (x - yi)))
            .unzip();
        Ok(MseEstimate { mse_hat, se })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    pub grid: TimeGrid,
    pub reps: u64,
    pub m1_hat: Vec<f64>,
    pub m2_hat: Vec<f64>,
    pub se1: Vec<f64>,
    pub se2: Vec<f64>,
    /// Fraction of paths at `k = 0` per node.
    pub extinct_fraction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseEstimate {
    pub mse_hat: Vec<f64>,
    pub se: Vec<f64>,
}

/// Histogram of `cfg.reps()` replications, simulated in order.
pub fn simulate(p: &ModelParams, grid: &TimeGrid, cfg: &SsaConfig) -> Histogram {
    let mut h = Histogram::new(p.n(), grid.num_points());
    h.accumulate(p, grid, cfg.seed(), 0..cfg.reps());
    h
}

pub fn estimate_moments(p: &ModelParams, grid: &TimeGrid, cfg: &SsaConfig) -> MonteCarloEstimate {
    simulate(p, grid, cfg).estimate(grid)
}

pub fn estimate_mse(p: &ModelParams, grid: &TimeGrid, cfg: &SsaConfig, y: &MeanFieldSolution) -> Result<MseEstimate> {
    grid.ensure_same(&y.grid, "mean-field reference")?;
    simulate(p, grid, cfg).mse(&y.y)
}
