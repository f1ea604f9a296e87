//! Mean-field ODE `y' = tau y (1 - y) - gamma y`, `y(0) = u`.

use alloc::vec::Vec;

use crate::error::Result;
use crate::model::{ModelParams, TimeGrid};
use crate::ode::{self, FnField};

/// Below this `|tau - gamma|` the closed form switches to the critical branch.
pub const CRITICAL_EPS: f64 = 1e-12;

/// Largest RK4 step used for the one- and two-dimensional systems.
pub(crate) fn low_dim_max_step(p: &ModelParams) -> f64 {
    (0.1 / (p.tau() + p.gamma() + 1.0)).min(1e-4)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    ClosedForm,
    Numerical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldSolution {
    pub grid: TimeGrid,
    pub y: Vec<f64>,
    pub source: Source,
}

pub fn mf_rhs(y: f64, p: &ModelParams) -> f64 {
    p.tau() * y * (1.0 - y) - p.gamma() * y
}

/// Exact solution of the mean-field equation started at `p.u()`.
///
/// With `r = tau - gamma`,
/// `y(t) = r u e^{rt} / (r + tau u (e^{rt} - 1))`, and `u / (1 + tau u t)`
/// when `r` vanishes. For `r > 0` the expression is evaluated with `e^{-rt}`
/// so it stays finite for large `t`.
pub fn mf_closed_form(t: f64, p: &ModelParams) -> f64 {
    closed_form_from(t, p.tau(), p.gamma(), p.u())
}

pub(crate) fn closed_form_from(t: f64, tau: f64, gamma: f64, u: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    let r = tau - gamma;
    if tau == 0.0 {
        return u * libm::exp(-gamma * t);
    }
    if r.abs() < CRITICAL_EPS {
        return u / (1.0 + tau * u * t);
    }
    if r > 0.0 {
        let d = libm::exp(-r * t);
        r * u / (r * d + tau * u * (1.0 - d))
    } else {
        let e = libm::exp(r * t);
        r * u * e / (r + tau * u * (e - 1.0))
    }
}

/// Closed form sampled on a grid.
pub fn mf_exact(p: &ModelParams, grid: &TimeGrid) -> MeanFieldSolution {
    MeanFieldSolution {
        grid: grid.clone(),
        y: grid.times().iter().map(|&t| mf_closed_form(t, p)).collect(),
        source: Source::ClosedForm,
    }
}

/// Same closed form seeded with the realised fraction `k0 / n` instead of `u`.
pub fn mf_exact_realized(p: &ModelParams, grid: &TimeGrid) -> MeanFieldSolution {
    let u = p.realized_u();
    MeanFieldSolution {
        grid: grid.clone(),
        y: grid
            .times()
            .iter()
            .map(|&t| closed_form_from(t, p.tau(), p.gamma(), u))
            .collect(),
        source: Source::ClosedForm,
    }
}

/// Numerical solution via RK4.
pub fn mf_solve(p: &ModelParams, grid: &TimeGrid) -> Result<MeanFieldSolution> {
    let field = FnField::new(1, |_, y: &[f64], dy: &mut [f64]| dy[0] = mf_rhs(y[0], p));
    let substeps = ode::substeps_for(grid, low_dim_max_step(p));
    let tr = ode::integrate(&field, &[p.u()], grid, substeps)?;
    Ok(MeanFieldSolution {
        grid: grid.clone(),
        y: tr.component(0),
        source: Source::Numerical,
    })
}
