//! Convergence of the exact process to the mean field as `n` grows.

use rayon::prelude::*;

use sislab_core::lab::{self, ConvergenceReport, ConvergenceRow};
use sislab_core::ssa::SsaConfig;
use sislab_core::{master, mean_field, Error, ModelParams, Result, TimeGrid};

use crate::parallel;

/// Runs one exact solve per `n` (in parallel) and, when `cfg` is given, a
/// Monte Carlo estimate of the mean-square error as well.
///
/// `base` supplies `tau`, `gamma` and `u`; its own `n` is ignored. Every size
/// is checked for feasibility before any work starts.
pub fn convergence_study(
    base: &ModelParams,
    n_list: &[usize],
    grid: &TimeGrid,
    cfg: Option<&SsaConfig>,
) -> Result<ConvergenceReport> {
    if n_list.is_empty() {
        return Err(Error::InvalidParam {
            name: "n_list",
            reason: "must not be empty".into(),
        });
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParam {
            name: "n_list",
            reason: format!("must be strictly increasing, got {n_list:?}"),
        });
    }
    let params: Vec<ModelParams> = n_list.iter().map(|&n| base.with_n(n)).collect::<Result<_>>()?;
    for p in &params {
        master::check_feasible(p, grid)?;
    }

    let rows: Vec<ConvergenceRow> = params
        .par_iter()
        .map(|p| {
            let mut row = lab::convergence_row(p, grid)?;
            if let Some(cfg) = cfg {
                let y = mean_field::mf_solve(p, grid)?;
                let mse = parallel::estimate_mse(p, grid, cfg, &y)?;
                row.sup_mse_sampled = Some(mse.mse_hat.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(ConvergenceReport::new(rows))
}
