//! Fixed-step classical Runge-Kutta integration.
//!
//! States are accumulated with Kahan compensation. Several of the bound
//! systems are linearly unstable along one direction (growth rate
//! `tau - gamma`), so rounding committed early in a run is amplified by up to
//! `exp((tau - gamma) T)`; compensated accumulation keeps that floor well
//! below the tolerances the callers check.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::TimeGrid;

/// Right-hand side `y' = f(t, y)` of an autonomous or driven system.
pub trait VectorField {
    fn dimension(&self) -> usize;

    /// Writes `f(t, y)` into `dy`. Both slices have length [`Self::dimension`].
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

impl<F: VectorField + ?Sized> VectorField for &F {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        (**self).eval(t, y, dy)
    }
}

/// Adapts a closure into a [`VectorField`] of fixed dimension.
pub struct FnField<F> {
    dimension: usize,
    f: F,
}

impl<F: Fn(f64, &[f64], &mut [f64])> FnField<F> {
    pub fn new(dimension: usize, f: F) -> Self {
        Self { dimension, f }
    }
}

impl<F: Fn(f64, &[f64], &mut [f64])> VectorField for FnField<F> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        (self.f)(t, y, dy)
    }
}

/// States recorded at every node of a [`TimeGrid`], stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    dimension: usize,
    states: Vec<f64>,
}

impl Trajectory {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dimension)
    }

    /// Values of one component across all nodes.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.states().map(|s| s[c]).collect()
    }
}

/// Scratch buffers for one RK4 step.
struct Stages {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Stages {
    fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Evaluates the four stages at `(t, y)` and leaves the weighted slope
    /// `(k1 + 2 k2 + 2 k3 + k4) / 6` in `k1`.
    fn slope<F: VectorField>(&mut self, f: &F, t: f64, y: &[f64], h: f64) -> Result<()> {
        let half = 0.5 * h;
        f.eval(t, y, &mut self.k1);
        check_finite(t, &self.k1)?;
        for ((o, y), k) in self.tmp.iter_mut().zip(y).zip(&self.k1) {
            *o = y + half * k;
        }
        f.eval(t + half, &self.tmp, &mut self.k2);
        check_finite(t + half, &self.k2)?;
        for ((o, y), k) in self.tmp.iter_mut().zip(y).zip(&self.k2) {
            *o = y + half * k;
        }
        f.eval(t + half, &self.tmp, &mut self.k3);
        check_finite(t + half, &self.k3)?;
        for ((o, y), k) in self.tmp.iter_mut().zip(y).zip(&self.k3) {
            *o = y + h * k;
        }
        f.eval(t + h, &self.tmp, &mut self.k4);
        check_finite(t + h, &self.k4)?;
        for i in 0..self.k1.len() {
            self.k1[i] = (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]) / 6.0;
        }
        Ok(())
    }
}

fn check_finite(t: f64, dy: &[f64]) -> Result<()> {
    match dy.iter().position(|v| !v.is_finite()) {
        Some(component) => Err(Error::NonFinite { t, component }),
        None => Ok(()),
    }
}

fn check_dimension<F: VectorField>(f: &F, len: usize) -> Result<()> {
    if f.dimension() != len {
        return Err(Error::Domain(alloc::format!(
            "state has length {len}, field has dimension {}",
            f.dimension()
        )));
    }
    Ok(())
}

/// One classical RK4 step of size `h` from `(t, y)`.
pub fn rk4_step<F: VectorField>(f: &F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>> {
    check_dimension(f, y.len())?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::param(
            "h",
            alloc::format!("step must be finite and > 0, got {h}"),
        ));
    }
    let mut st = Stages::new(y.len());
    st.slope(f, t, y, h)?;
    Ok(y.iter().zip(&st.k1).map(|(y, k)| y + h * k).collect())
}

/// Number of equal substeps per grid interval so that no substep exceeds
/// `max_step`.
pub fn substeps_for(grid: &TimeGrid, max_step: f64) -> usize {
    let dt = grid.times()[1] - grid.times()[0];
    let s = libm::ceil(dt / max_step * (1.0 - 1e-12));
    (s as usize).max(1)
}

/// Integrates with `substeps` RK4 steps per grid interval and hands the state
/// at every node (including the initial one) to `observe(index, t, y)`.
///
/// The observer can stop early by returning an error.
pub fn integrate_with<F, O>(f: &F, y0: &[f64], grid: &TimeGrid, substeps: usize, mut observe: O) -> Result<()>
where
    F: VectorField,
    O: FnMut(usize, f64, &[f64]) -> Result<()>,
{
    check_dimension(f, y0.len())?;
    if substeps == 0 {
        return Err(Error::param("substeps", "must be >= 1"));
    }
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut comp = vec![0.0; dim];
    let mut st = Stages::new(dim);
    let times = grid.times();
    observe(0, times[0], &y)?;
    for (i, w) in times.windows(2).enumerate() {
        let (t0, t1) = (w[0], w[1]);
        let h = (t1 - t0) / substeps as f64;
        for s in 0..substeps {
            let t = t0 + s as f64 * h;
            st.slope(f, t, &y, h)?;
            for j in 0..dim {
                // Kahan: y += h * slope
                let inc = h * st.k1[j] - comp[j];
                let next = y[j] + inc;
                comp[j] = (next - y[j]) - inc;
                y[j] = next;
            }
        }
        observe(i + 1, t1, &y)?;
    }
    Ok(())
}

/// [`integrate_with`], keeping every node state.
pub fn integrate<F: VectorField>(f: &F, y0: &[f64], grid: &TimeGrid, substeps: usize) -> Result<Trajectory> {
    let dim = y0.len();
    let mut states = Vec::with_capacity(dim * grid.num_points());
    integrate_with(f, y0, grid, substeps, |_, _, y| {
        states.extend_from_slice(y);
        Ok(())
    })?;
    Ok(Trajectory {
        grid: grid.clone(),
        dimension: dim,
        states,
    })
}
