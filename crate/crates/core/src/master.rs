//! Kolmogorov forward equations of the lumped SIS chain.
//!
//! The chain lives on `k = 0..=n` infected nodes and only moves to `k ± 1`:
//! infections at rate `a_k = (tau/n) k (n-k)`, recoveries at rate
//! `c_k = gamma k`. With the generator `Q` (rows sum to zero, `Q[k][k+1] = a_k`,
//! `Q[k][k-1] = c_k`) the distribution evolves as `x' = Q^T x`:
//!
//! ```text
//! x_k' = a_{k-1} x_{k-1} - (a_k + c_k) x_k + c_{k+1} x_{k+1}
//! ```

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{self, ModelParams, Moments, StateDistribution, TimeGrid};
use crate::ode::{self, VectorField};

/// Largest `n` accepted by [`matexp_oracle`].
pub const ORACLE_MAX_N: usize = 12;

/// Upper limit on `RK4 steps * (n + 1)` for one master-equation solve.
pub const MAX_WORK: f64 = 4e10;

/// Birth and death rates for every state, precomputed once per solve.
#[derive(Debug, Clone)]
pub struct Rates {
    birth: Vec<f64>,
    death: Vec<f64>,
}

impl Rates {
    pub fn new(p: &ModelParams) -> Self {
        let n = p.n();
        Self {
            birth: (0..=n).map(|k| p.birth(k)).collect(),
            death: (0..=n).map(|k| p.death(k)).collect(),
        }
    }

    pub fn max_total(&self) -> f64 {
        self.birth
            .iter()
            .zip(&self.death)
            .map(|(a, c)| a + c)
            .fold(0.0, f64::max)
    }
}

impl VectorField for Rates {
    fn dimension(&self) -> usize {
        self.birth.len()
    }

    fn eval(&self, _t: f64, x: &[f64], dx: &mut [f64]) {
        let n = x.len() - 1;
        let (a, c) = (&self.birth, &self.death);
        for k in 0..=n {
            let mut v = -(a[k] + c[k]) * x[k];
            if k > 0 {
                v += a[k - 1] * x[k - 1];
            }
            if k < n {
                v += c[k + 1] * x[k + 1];
            }
            dx[k] = v;
        }
    }
}

/// `dx/dt` of the forward equations at distribution `d`.
pub fn forward_rhs(d: &StateDistribution, p: &ModelParams) -> Result<Vec<f64>> {
    if d.n() != p.n() {
        return Err(Error::Domain(format!(
            "distribution over 0..={} but n = {}",
            d.n(),
            p.n()
        )));
    }
    let mut dx = vec![0.0; p.n() + 1];
    Rates::new(p).eval(0.0, d.probs(), &mut dx);
    Ok(dx)
}

/// Exact moments along a master-equation solve.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTrajectory {
    pub grid: TimeGrid,
    pub moments: Vec<Moments>,
    /// `x_0(t)`, the probability that the epidemic has died out.
    pub extinction: Vec<f64>,
    /// Present only when requested through [`MasterOptions`].
    pub distributions: Option<Vec<StateDistribution>>,
    /// Largest `|sum_k x_k - 1|` over the nodes.
    pub max_mass_error: f64,
    /// Smallest entry seen over all nodes.
    pub min_prob: f64,
}

impl MomentTrajectory {
    pub fn m1(&self) -> Vec<f64> {
        self.moments.iter().map(|m| m.m1).collect()
    }

    pub fn m2(&self) -> Vec<f64> {
        self.moments.iter().map(|m| m.m2).collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MasterOptions {
    pub retain_distributions: bool,
}

/// RK4 step for the forward equations: half the reciprocal of the largest
/// total jump rate, capped at `1e-3`.
pub fn master_max_step(rates: &Rates) -> f64 {
    let r = rates.max_total();
    if r > 0.0 {
        (0.5 / r).min(1e-3)
    } else {
        1e-3
    }
}

/// Rejects solves whose cost would exceed [`MAX_WORK`].
pub fn check_feasible(p: &ModelParams, grid: &TimeGrid) -> Result<()> {
    let rates = Rates::new(p);
    let steps = ode::substeps_for(grid, master_max_step(&rates)) * (grid.num_points() - 1);
    let work = steps as f64 * (p.n() + 1) as f64;
    if work > MAX_WORK {
        return Err(Error::Capability(format!(
            "master equation for n = {} on [0, {}] needs {steps} steps over {} states \
             ({work:.3e} updates, limit {MAX_WORK:.0e})",
            p.n(),
            grid.t_end(),
            p.n() + 1
        )));
    }
    Ok(())
}

pub fn solve_master(p: &ModelParams, grid: &TimeGrid) -> Result<MomentTrajectory> {
    solve_master_with(p, grid, MasterOptions::default())
}

pub fn solve_master_with(p: &ModelParams, grid: &TimeGrid, opts: MasterOptions) -> Result<MomentTrajectory> {
    check_feasible(p, grid)?;
    let rates = Rates::new(p);
    let substeps = ode::substeps_for(grid, master_max_step(&rates));
    let x0 = model::initial_distribution(p);
    let m = grid.num_points();

    let mut moments = Vec::with_capacity(m);
    let mut extinction = Vec::with_capacity(m);
    let mut dists = opts.retain_distributions.then(|| Vec::with_capacity(m));
    let mut max_mass_error: f64 = 0.0;
    let mut min_prob = f64::INFINITY;

    ode::integrate_with(&rates, x0.probs(), grid, substeps, |_, _, x| {
        moments.push(model::moments_of(x));
        extinction.push(x[0]);
        max_mass_error = max_mass_error.max((x.iter().sum::<f64>() - 1.0).abs());
        min_prob = x.iter().copied().fold(min_prob, f64::min);
        if let Some(d) = dists.as_mut() {
            d.push(StateDistribution::from_raw(x.to_vec()));
        }
        Ok(())
    })?;

    Ok(MomentTrajectory {
        grid: grid.clone(),
        moments,
        extinction,
        distributions: dists,
        max_mass_error,
        min_prob,
    })
}

/// Dense generator transpose `Q^T`, row-major `(n+1) x (n+1)`.
fn generator_transpose(p: &ModelParams) -> Vec<f64> {
    let dim = p.n() + 1;
    let mut q = vec![0.0; dim * dim];
    for k in 0..dim {
        let (a, c) = (p.birth(k), p.death(k));
        q[k * dim + k] = -(a + c);
        if k + 1 < dim {
            q[(k + 1) * dim + k] = a;
        }
        if k > 0 {
            q[(k - 1) * dim + k] = c;
        }
    }
    q
}

fn matmul(a: &[f64], b: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim * dim];
    for i in 0..dim {
        for l in 0..dim {
            let ail = a[i * dim + l];
            if ail == 0.0 {
                continue;
            }
            for j in 0..dim {
                out[i * dim + j] += ail * b[l * dim + j];
            }
        }
    }
    out
}

/// Distribution at time `t` as `exp(t Q^T) x(0)`, by scaling and squaring
/// with a Taylor series. Independent of the RK4 path; meant for small `n`.
pub fn matexp_oracle(p: &ModelParams, t: f64) -> Result<StateDistribution> {
    if p.n() > ORACLE_MAX_N {
        return Err(Error::Capability(format!(
            "dense oracle supports n <= {ORACLE_MAX_N}, got {}",
            p.n()
        )));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::param("t", format!("must be finite and >= 0, got {t}")));
    }
    let dim = p.n() + 1;
    let mut a = generator_transpose(p);
    a.iter_mut().for_each(|v| *v *= t);

    // scale so the 1-norm is at most 1/2
    let norm = (0..dim)
        .map(|j| (0..dim).map(|i| a[i * dim + j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    a.iter_mut().for_each(|v| *v *= scale);

    let mut e = vec![0.0; dim * dim];
    for i in 0..dim {
        e[i * dim + i] = 1.0;
    }
    let mut term = e.clone();
    for j in 1..=30 {
        term = matmul(&term, &a, dim);
        let inv = 1.0 / j as f64;
        term.iter_mut().for_each(|v| *v *= inv);
        let mut biggest: f64 = 0.0;
        for (ei, ti) in e.iter_mut().zip(&term) {
            *ei += ti;
            biggest = biggest.max(ti.abs());
        }
        if biggest < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        e = matmul(&e, &e, dim);
    }

    let k0 = p.initial_infected();
    let probs = (0..dim).map(|i| e[i * dim + k0]).collect();
    Ok(StateDistribution::from_raw(probs))
}

/// Residuals of the first- and second-moment identities at `d`:
///
/// ```text
/// r1 = d/dt E[i]   - (tau (m1 - m2) - gamma m1)
/// r2 = d/dt E[i^2] - (2 tau (m2 - m3) - 2 gamma m2 + (tau (m1 - m2) + gamma m1) / n)
/// ```
///
/// The time derivatives are `sum_k x_k' (k/n)^r` with `x'` from
/// [`forward_rhs`], so the two sides are computed independently.
pub fn moment_identity_residuals(d: &StateDistribution, p: &ModelParams) -> Result<(f64, f64)> {
    let dx = forward_rhs(d, p)?;
    let n = p.n() as f64;
    let (mut dm1, mut dm2) = (0.0, 0.0);
    for (k, v) in dx.iter().enumerate() {
        let i = k as f64 / n;
        dm1 += v * i;
        dm2 += v * i * i;
    }
    let Moments { m1, m2, m3 } = model::moments(d);
    let (tau, gamma) = (p.tau(), p.gamma());
    let first = tau * (m1 - m2) - gamma * m1;
    let second = 2.0 * tau * (m2 - m3) - 2.0 * gamma * m2 + (tau * (m1 - m2) + gamma * m1) / n;
    Ok((dm1 - first, dm2 - second))
}
