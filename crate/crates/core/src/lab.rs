//! Checks that tie the exact process to the deterministic curves: mean-square
//! error, the two-sided enclosure of `E[i]`, Jensen slacks, phase paths and
//! per-`n` convergence rows.

use alloc::vec::Vec;

use crate::bounds::{self, Forcing};
use crate::error::Result;
use crate::master::{self, MomentTrajectory};
use crate::mean_field::{self, MeanFieldSolution};
use crate::model::{ModelParams, TimeGrid};

/// Slack allowed on every enclosure inequality.
pub const SANDWICH_TOL: f64 = 1e-6;

/// `E[(i - y)^2] = m2 - 2 y m1 + y^2` per node, clamped at zero.
pub fn exact_mse(mt: &MomentTrajectory, y: &MeanFieldSolution) -> Result<Vec<f64>> {
    mt.grid.ensure_same(&y.grid, "exact mse")?;
    Ok(mt
        .moments
        .iter()
        .zip(&y.y)
        .map(|(m, &y)| (m.m2 - 2.0 * y * m.m1 + y * y).max(0.0))
        .collect())
}

/// Minimum over the grid of `(m2 - m1^2, m3 - m2^1.5)`.
pub fn jensen_audit(mt: &MomentTrajectory) -> (f64, f64) {
    mt.moments
        .iter()
        .map(|m| m.jensen_slack())
        .fold((f64::INFINITY, f64::INFINITY), |(a, b), (x, y)| (a.min(x), b.min(y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// `z1 <= m1`
    LowerFirst,
    /// `m1 <= y`
    UpperFirst,
    /// `m2 <= z2`
    UpperSecond,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub time: f64,
    pub quantity: Quantity,
    /// Signed slack of the inequality; negative beyond `-SANDWICH_TOL`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub grid: TimeGrid,
    /// Initial fraction all curves were seeded with, `k0 / n`.
    pub u_seed: f64,
    pub y: Vec<f64>,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    pub z1_lower: Vec<f64>,
    pub z2_upper: Vec<f64>,
    pub z1_coupled: Vec<f64>,
    pub z2_coupled: Vec<f64>,
    pub violations: Vec<Violation>,
    /// Nodes where the coupled point satisfies `z1 <= m1 + 1e-6`. Observed only.
    pub coupled_left_nodes: usize,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Solves the master equation, the mean-field equation and both bound
/// families, and lists every node where `z1_app <= m1 <= y` or
/// `m2 <= z2_app` fails by more than [`SANDWICH_TOL`].
///
/// All deterministic curves are seeded with the realised fraction `k0 / n`,
/// which equals `u` whenever `n u` is an integer.
pub fn sandwich_check(p: &ModelParams, grid: &TimeGrid) -> Result<SandwichReport> {
    sandwich_check_with(p, grid, Forcing::default())
}

pub fn sandwich_check_with(p: &ModelParams, grid: &TimeGrid, forcing: Forcing) -> Result<SandwichReport> {
    let q = ModelParams::new(p.tau(), p.gamma(), p.n(), p.realized_u())?;
    let mt = master::solve_master(&q, grid)?;
    let y = mean_field::mf_solve(&q, grid)?.y;
    let z2 = bounds::solve_appendix_z2_with(&q, grid, forcing)?;
    let z1 = bounds::solve_appendix_z1(&q, grid, &z2)?;
    let coupled = bounds::solve_coupled(&q, grid)?;
    let (m1, m2) = (mt.m1(), mt.m2());

    let mut violations = Vec::new();
    for (i, &t) in grid.times().iter().enumerate() {
        let checks = [
            (Quantity::LowerFirst, m1[i] - z1.values[i]),
            (Quantity::UpperFirst, y[i] - m1[i]),
            (Quantity::UpperSecond, z2.values[i] - m2[i]),
        ];
        for (quantity, gap) in checks {
            if gap < -SANDWICH_TOL {
                violations.push(Violation { time: t, quantity, gap });
            }
        }
    }
    let coupled_left_nodes = coupled.z1.iter().zip(&m1).filter(|(z, m)| **z <= **m + 1e-6).count();

    Ok(SandwichReport {
        grid: grid.clone(),
        u_seed: q.u(),
        y,
        m1,
        m2,
        z1_lower: z1.values,
        z2_upper: z2.values,
        z1_coupled: coupled.z1,
        z2_coupled: coupled.z2,
        violations,
        coupled_left_nodes,
    })
}

/// One row of the phase-space picture: the exact point `(E[i], E[i^2])`
/// and the coupled bound point `(z1, z2)` at the same time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRow {
    pub t: f64,
    pub m1: f64,
    pub m2: f64,
    pub z1_coupled: f64,
    pub z2_coupled: f64,
}

pub fn phase_path(p: &ModelParams, grid: &TimeGrid) -> Result<Vec<PhaseRow>> {
    let mt = master::solve_master(p, grid)?;
    let c = bounds::solve_coupled(p, grid)?;
    Ok(grid
        .times()
        .iter()
        .enumerate()
        .map(|(i, &t)| PhaseRow {
            t,
            m1: mt.moments[i].m1,
            m2: mt.moments[i].m2,
            z1_coupled: c.z1[i],
            z2_coupled: c.z2[i],
        })
        .collect())
}

/// Every curve of one instance at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub t: f64,
    pub y: f64,
    pub m1: f64,
    pub m2: f64,
    pub var: f64,
    pub z1_app: f64,
    pub z2_app: f64,
    pub z1_coupled: f64,
    pub z2_coupled: f64,
    pub mse_exact: f64,
}

/// Mean field seeded with `u`, exact moments, both bound families and the
/// exact mean-square error against `y`.
pub fn curves(p: &ModelParams, grid: &TimeGrid) -> Result<Vec<CurveRow>> {
    let mt = master::solve_master(p, grid)?;
    let y = mean_field::mf_solve(p, grid)?;
    let app = bounds::solve_appendix(p, grid, Forcing::default())?;
    let cpl = bounds::solve_coupled(p, grid)?;
    let mse = exact_mse(&mt, &y)?;
    Ok(grid
        .times()
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let m = mt.moments[i];
            CurveRow {
                t,
                y: y.y[i],
                m1: m.m1,
                m2: m.m2,
                var: m.variance(),
                z1_app: app.z1[i],
                z2_app: app.z2[i],
                z1_coupled: cpl.z1[i],
                z2_coupled: cpl.z2[i],
                mse_exact: mse[i],
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub sup_mse_exact: f64,
    pub sup_mse_sampled: Option<f64>,
    /// `sup_t (y - m1)`
    pub sup_gap_upper: f64,
    /// `sup_t (m1 - z1_app)`
    pub sup_gap_lower: f64,
    /// `|u - k0/n|`, the part of the error owed to rounding the initial state.
    pub init_gap: f64,
}

/// Exact part of one convergence row; `y` is seeded with `u` itself.
pub fn convergence_row(p: &ModelParams, grid: &TimeGrid) -> Result<ConvergenceRow> {
    let mt = master::solve_master(p, grid)?;
    let y = mean_field::mf_solve(p, grid)?;
    let app = bounds::solve_appendix(p, grid, Forcing::default())?;
    let mse = exact_mse(&mt, &y)?;
    let sup = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::NEG_INFINITY, f64::max);
    Ok(ConvergenceRow {
        n: p.n(),
        sup_mse_exact: sup(&mut mse.iter().copied()),
        sup_mse_sampled: None,
        sup_gap_upper: sup(&mut y.y.iter().zip(&mt.moments).map(|(y, m)| y - m.m1)),
        sup_gap_lower: sup(&mut mt.moments.iter().zip(&app.z1).map(|(m, z)| m.m1 - z)),
        init_gap: (p.u() - p.realized_u()).abs(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `ln sup_mse_exact` against `ln n`; absent with
    /// fewer than two usable rows.
    pub slope: Option<f64>,
}

impl ConvergenceReport {
    pub fn new(mut rows: Vec<ConvergenceRow>) -> Self {
        rows.sort_by_key(|r| r.n);
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.sup_mse_exact > 0.0)
            .map(|r| (libm::log(r.n as f64), libm::log(r.sup_mse_exact)))
            .collect();
        Self {
            slope: loglog_slope(&pts),
            rows,
        }
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup_mse_exact < w[0].sup_mse_exact)
    }
}

/// Ordinary least-squares slope through `(x, y)` points.
pub fn loglog_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
