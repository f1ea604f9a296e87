//! Two-moment bounding systems for `(E[i], E[i^2])`.
//!
//! - coupled: `z1' = g1(z1, z2)`, `z2' = g2n(z1, z2)` where `g2n` is the
//!   second-moment equation with `E[i^3]` replaced by `z2^1.5`
//! - appendix: a scalar upper bound `z2` with constant forcing, then a linear
//!   lower bound `z1` driven by that `z2`
//! - limit: the `n -> inf` system, solved by `(y, y^2)`
//!
//! All systems start at `(u, u^2)`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mean_field::low_dim_max_step;
use crate::model::{ModelParams, TimeGrid};
use crate::ode::{self, FnField};

/// `z^1.5` as `z sqrt(z)` with negative drift clamped to zero.
#[inline]
pub fn pow15(z: f64) -> f64 {
    let z = z.max(0.0);
    z * libm::sqrt(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Coupled { n: usize },
    Appendix { n: usize },
    Limit,
}

/// Constant forcing of the scalar second-moment bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Forcing {
    /// `(2/n)(tau + gamma)`.
    #[default]
    Verbatim,
    /// `(1/n)(tau/4 + gamma)`: the second-moment equation's `1/n` term bounded
    /// with `E[i] - E[i^2] <= E[i](1 - E[i]) <= 1/4` and `E[i] <= 1`.
    Sharp,
}

impl Forcing {
    pub fn value(self, p: &ModelParams) -> f64 {
        let n = p.n() as f64;
        match self {
            Forcing::Verbatim => 2.0 / n * (p.tau() + p.gamma()),
            Forcing::Sharp => (0.25 * p.tau() + p.gamma()) / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundTrajectory {
    pub grid: TimeGrid,
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    pub variant: Variant,
}

impl BoundTrajectory {
    pub fn min_z2(&self) -> f64 {
        self.z2.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Whether `z2 >= -1e-9` at every node. The coupled system can leave this
    /// region for small `n` and long horizons; that is reported, not enforced.
    pub fn z2_nonnegative(&self) -> bool {
        self.min_z2() >= -1e-9
    }
}

/// Right-hand side of the coupled system.
pub fn coupled_rhs(z1: f64, z2: f64, p: &ModelParams) -> (f64, f64) {
    let (tau, gamma) = (p.tau(), p.gamma());
    let g1 = tau * (z1 - z2) - gamma * z1;
    let g2 = 2.0 * tau * (z2 - pow15(z2)) - 2.0 * gamma * z2 + g1_plus(z1, z2, p) / p.n() as f64;
    (g1, g2)
}

#[inline]
fn g1_plus(z1: f64, z2: f64, p: &ModelParams) -> f64 {
    p.tau() * (z1 - z2) + p.gamma() * z1
}

/// Right-hand side of the limit system.
pub fn limit_rhs(z1: f64, z2: f64, p: &ModelParams) -> (f64, f64) {
    let (tau, gamma) = (p.tau(), p.gamma());
    (
        tau * (z1 - z2) - gamma * z1,
        2.0 * tau * (z2 - pow15(z2)) - 2.0 * gamma * z2,
    )
}

fn solve_pair(
    p: &ModelParams,
    grid: &TimeGrid,
    variant: Variant,
    rhs: impl Fn(f64, f64) -> (f64, f64),
) -> Result<BoundTrajectory> {
    let field = FnField::new(2, |_, z: &[f64], dz: &mut [f64]| {
        let (a, b) = rhs(z[0], z[1]);
        dz[0] = a;
        dz[1] = b;
    });
    let u = p.u();
    let tr = ode::integrate(&field, &[u, u * u], grid, ode::substeps_for(grid, low_dim_max_step(p)))?;
    Ok(BoundTrajectory {
        grid: grid.clone(),
        z1: tr.component(0),
        z2: tr.component(1),
        variant,
    })
}

pub fn solve_coupled(p: &ModelParams, grid: &TimeGrid) -> Result<BoundTrajectory> {
    solve_pair(p, grid, Variant::Coupled { n: p.n() }, |a, b| coupled_rhs(a, b, p))
}

pub fn solve_limit(p: &ModelParams, grid: &TimeGrid) -> Result<BoundTrajectory> {
    solve_pair(p, grid, Variant::Limit, |a, b| limit_rhs(a, b, p))
}

/// Scalar bound `z2' = 2 tau (z2 - z2^1.5) - 2 gamma z2 + forcing`,
/// `z2(0) = u^2`, with the verbatim forcing `(2/n)(tau + gamma)`.
pub fn solve_appendix_z2(p: &ModelParams, grid: &TimeGrid) -> Result<GridFunction> {
    solve_appendix_z2_with(p, grid, Forcing::default())
}

pub fn solve_appendix_z2_with(p: &ModelParams, grid: &TimeGrid, forcing: Forcing) -> Result<GridFunction> {
    let (tau, gamma, c) = (p.tau(), p.gamma(), forcing.value(p));
    let field = FnField::new(1, |_, z: &[f64], dz: &mut [f64]| {
        dz[0] = 2.0 * tau * (z[0] - pow15(z[0])) - 2.0 * gamma * z[0] + c;
    });
    let u = p.u();
    let tr = ode::integrate(&field, &[u * u], grid, ode::substeps_for(grid, low_dim_max_step(p)))?;
    Ok(GridFunction {
        grid: grid.clone(),
        values: tr.component(0),
    })
}

/// Linear bound `z1' = tau (z1 - z2(t)) - gamma z1`, `z1(0) = u`, with `z2`
/// given on the same grid and interpolated linearly between nodes.
pub fn solve_appendix_z1(p: &ModelParams, grid: &TimeGrid, z2: &GridFunction) -> Result<GridFunction> {
    grid.ensure_same(&z2.grid, "exogenous z2")?;
    let (tau, gamma) = (p.tau(), p.gamma());
    let field = FnField::new(1, |t, z: &[f64], dz: &mut [f64]| {
        dz[0] = tau * (z[0] - z2.at(t)) - gamma * z[0];
    });
    let tr = ode::integrate(&field, &[p.u()], grid, ode::substeps_for(grid, low_dim_max_step(p)))?;
    Ok(GridFunction {
        grid: grid.clone(),
        values: tr.component(0),
    })
}

/// Both appendix bounds, `z2` first and then `z1` driven by it.
pub fn solve_appendix(p: &ModelParams, grid: &TimeGrid, forcing: Forcing) -> Result<BoundTrajectory> {
    let z2 = solve_appendix_z2_with(p, grid, forcing)?;
    let z1 = solve_appendix_z1(p, grid, &z2)?;
    Ok(BoundTrajectory {
        grid: grid.clone(),
        z1: z1.values,
        z2: z2.values,
        variant: Variant::Appendix { n: p.n() },
    })
}

/// Values on a [`TimeGrid`], read between nodes by linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_points() {
            return Err(Error::Domain(format!(
                "{} values for {} grid nodes",
                values.len(),
                grid.num_points()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn at(&self, t: f64) -> f64 {
        let times = self.grid.times();
        let last = times.len() - 1;
        let dt = times[1] - times[0];
        let pos = ((t - times[0]) / dt).max(0.0);
        let i = (libm::floor(pos) as usize).min(last - 1);
        let w = ((t - times[i]) / (times[i + 1] - times[i])).clamp(0.0, 1.0);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mean_field::{mf_closed_form, mf_exact, mf_rhs};
    use alloc::vec;

    fn params(tau: f64, gamma: f64, n: usize, u: f64) -> ModelParams {
        ModelParams::new(tau, gamma, n, u).unwrap()
    }

    fn max_abs(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn coupled_rhs_examples() {
        let p = params(2.0, 1.0, 10, 0.1);
        assert_eq!(coupled_rhs(0.0, 0.0, &p), (0.0, 0.0));
        let (a, b) = coupled_rhs(0.5, 0.25, &p);
        assert!(a.abs() < 1e-15);
        assert!((b - 0.1).abs() < 1e-15);
        let (_, bl) = limit_rhs(0.5, 0.25, &p);
        assert!((b - bl - 0.1).abs() < 1e-15);
    }

    #[test]
    fn limit_rhs_examples() {
        let p = params(2.0, 1.0, 10, 0.1);
        assert_eq!(limit_rhs(0.0, 0.0, &p), (0.0, 0.0));
        let y: f64 = 0.3;
        let (_, b) = limit_rhs(y, y * y, &p);
        assert!((b - 2.0 * y * mf_rhs(y, &p)).abs() < 1e-15);
        assert!((b - 0.072).abs() < 1e-15);
        let (a, b) = limit_rhs(0.5, 0.25, &p);
        assert!(a.abs() < 1e-15 && b.abs() < 1e-15);
    }

    #[test]
    fn appendix_forcing_at_zero() {
        // initial slope 2*2*(0.01 - 0.001) - 2*0.01 + (2/10)*3
        let p = params(2.0, 1.0, 10, 0.1);
        let c = Forcing::Verbatim.value(&p);
        let slope = 2.0 * 2.0 * (0.01 - pow15(0.01)) - 2.0 * 0.01 + c;
        assert!((slope - 0.616).abs() < 1e-15);
        assert!((Forcing::Sharp.value(&p) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn zero_start_stays_zero() {
        let g = TimeGrid::uniform(10.0, 101).unwrap();
        let p = params(2.0, 1.0, 10, 0.0);
        for b in [solve_coupled(&p, &g).unwrap(), solve_limit(&p, &g).unwrap()] {
            assert!(b.z1.iter().chain(&b.z2).all(|&v| v == 0.0));
        }
        let z2 = GridFunction::new(g.clone(), vec![0.0; 101]).unwrap();
        assert!(solve_appendix_z1(&p, &g, &z2).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn limit_solution_is_mean_field() {
        let g = TimeGrid::uniform(10.0, 201).unwrap();
        let p = params(2.0, 1.0, 10, 0.1);
        let b = solve_limit(&p, &g).unwrap();
        let y = mf_exact(&p, &g).y;
        let y2: Vec<f64> = y.iter().map(|v| v * v).collect();
        assert_eq!((b.z1[0], b.z2[0]), (0.1, 0.010000000000000002));
        assert!(max_abs(&b.z1, &y) <= 1e-8);
        assert!(max_abs(&b.z2, &y2) <= 1e-8);
    }

    #[test]
    fn limit_subcritical_decays() {
        let g = TimeGrid::uniform(20.0, 201).unwrap();
        let b = solve_limit(&params(1.0, 2.0, 10, 0.5), &g).unwrap();
        assert!(b.z1[200] < 1e-4 && b.z2[200] < 1e-8);
        assert!(b.z2.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn appendix_z1_with_zero_driver() {
        // z1' = (tau - gamma) z1
        let g = TimeGrid::uniform(2.0, 21).unwrap();
        let p = params(2.0, 1.0, 10, 0.1);
        let z2 = GridFunction::new(g.clone(), vec![0.0; 21]).unwrap();
        let z1 = solve_appendix_z1(&p, &g, &z2).unwrap();
        for (t, v) in g.times().iter().zip(&z1.values) {
            assert!((v - 0.1 * libm::exp(*t)).abs() < 1e-12);
        }
    }

    #[test]
    fn appendix_z1_with_mean_field_driver() {
        let g = TimeGrid::uniform(2.0, 4001).unwrap();
        let p = params(2.0, 1.0, 10, 0.1);
        let y: Vec<f64> = g.times().iter().map(|&t| mf_closed_form(t, &p)).collect();
        let z2 = GridFunction::new(g.clone(), y.iter().map(|v| v * v).collect()).unwrap();
        let z1 = solve_appendix_z1(&p, &g, &z2).unwrap();
        assert!(max_abs(&z1.values, &y) <= 1e-6, "{}", max_abs(&z1.values, &y));
    }

    #[test]
    fn appendix_z1_grid_mismatch() {
        let g = TimeGrid::uniform(2.0, 21).unwrap();
        let other = TimeGrid::uniform(2.0, 11).unwrap();
        let z2 = GridFunction::new(other, vec![0.0; 11]).unwrap();
        assert!(matches!(
            solve_appendix_z1(&params(2.0, 1.0, 10, 0.1), &g, &z2),
            Err(Error::Domain(_))
        ));
        assert!(GridFunction::new(g, vec![0.0; 3]).is_err());
    }

    #[test]
    fn appendix_z2_large_n_tracks_square() {
        let g = TimeGrid::uniform(10.0, 201).unwrap();
        let p = params(2.0, 1.0, 1_000_000, 0.1);
        let z2 = solve_appendix_z2(&p, &g).unwrap();
        let y2: Vec<f64> = mf_exact(&p, &g).y.iter().map(|v| v * v).collect();
        assert!(max_abs(&z2.values, &y2) <= 1e-4);
    }

    #[test]
    fn appendix_z2_no_forcing_from_zero() {
        let g = TimeGrid::uniform(10.0, 101).unwrap();
        // forcing vanishes when tau = gamma = 0
        let p = params(0.0, 0.0, 10, 0.0);
        assert!(solve_appendix_z2(&p, &g).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coupled_large_n_tracks_limit() {
        let g = TimeGrid::uniform(2.0, 201).unwrap();
        let p = params(2.0, 1.0, 1_000_000, 0.1);
        let b = solve_coupled(&p, &g).unwrap();
        let y = mf_exact(&p, &g).y;
        let y2: Vec<f64> = y.iter().map(|v| v * v).collect();
        assert!(max_abs(&b.z1, &y) <= 1e-4);
        assert!(max_abs(&b.z2, &y2) <= 1e-4);
    }

    #[test]
    fn appendix_z2_monotone_in_n() {
        let g = TimeGrid::uniform(10.0, 201).unwrap();
        let ns = [10, 20, 50, 100, 1000, 100_000];
        let runs: Vec<Vec<f64>> = ns
            .iter()
            .map(|&n| solve_appendix_z2(&params(3.0, 1.0, n, 0.1), &g).unwrap().values)
            .collect();
        for w in runs.windows(2) {
            assert!(w[0].iter().zip(&w[1]).all(|(a, b)| *a >= b - 1e-9));
        }
    }

    #[test]
    fn bounds_converge_in_n() {
        let g = TimeGrid::uniform(2.0, 201).unwrap();
        let base = params(2.0, 1.0, 10, 0.1);
        let y = mf_exact(&base, &g).y;
        let y2: Vec<f64> = y.iter().map(|v| v * v).collect();
        for solve in [
            |p: &ModelParams, g: &TimeGrid| solve_coupled(p, g),
            |p: &ModelParams, g: &TimeGrid| solve_appendix(p, g, Forcing::Verbatim),
        ] {
            let errs: Vec<(f64, f64)> = [10, 100, 1000, 10_000, 100_000, 1_000_000]
                .iter()
                .map(|&n| {
                    let b = solve(&base.with_n(n).unwrap(), &g).unwrap();
                    (max_abs(&b.z1, &y), max_abs(&b.z2, &y2))
                })
                .collect();
            assert!(errs.windows(2).all(|w| w[1].0 < w[0].0 && w[1].1 < w[0].1), "{errs:?}");
        }
    }
}
