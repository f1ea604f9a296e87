//! Replication-parallel Monte Carlo.
//!
//! Each replication draws from its own stream and lands in an integer
//! histogram, so results are bit-identical to the sequential
//! [`sislab_core::ssa::simulate`] whatever the thread count.

use rayon::prelude::*;

use sislab_core::mean_field::MeanFieldSolution;
use sislab_core::ssa::{Histogram, MonteCarloEstimate, MseEstimate, SsaConfig};
use sislab_core::{ModelParams, Result, TimeGrid};

/// Replications handed to one task.
const CHUNK: u64 = 256;

pub fn simulate(p: &ModelParams, grid: &TimeGrid, cfg: &SsaConfig) -> Histogram {
    let chunks = cfg.reps().div_ceil(CHUNK);
    let empty = || Histogram::new(p.n(), grid.num_points());
    (0..chunks)
        .into_par_iter()
        .fold(empty, |mut h, c| {
            let start = c * CHUNK;
            h.accumulate(p, grid, cfg.seed(), start..(start + CHUNK).min(cfg.reps()));
            h
        })
        .reduce(empty, |a, b| a.merge(&b))
}

pub fn estimate_moments(p: &ModelParams, grid: &TimeGrid, cfg: &SsaConfig) -> MonteCarloEstimate {
    simulate(p, grid, cfg).estimate(grid)
}

pub fn estimate_mse(p: &ModelParams, grid: &TimeGrid, cfg: &SsaConfig, y: &MeanFieldSolution) -> Result<MseEstimate> {
    if y.grid != *grid {
        return Err(sislab_core::Error::Domain(
            "mean-field reference: time grids differ".into(),
        ));
    }
    simulate(p, grid, cfg).mse(&y.y)
}
