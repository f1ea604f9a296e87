//! CSV tables: curves, convergence rows, phase paths and Monte Carlo
//! estimates.
//!
//! Numbers carry 17 significant digits with a `.` radix. Positional notation
//! is used for decimal exponents in `-5..=16`, scientific otherwise. Rows end
//! in `\n`; files are UTF-8 without BOM.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use sislab_core::lab::{ConvergenceRow, CurveRow, PhaseRow, SandwichReport};
use sislab_core::ssa::{MonteCarloEstimate, MseEstimate};
use sislab_core::StateDistribution;

pub const CURVES_HEADER: &str = "t,y,m1,m2,var,z1_app,z2_app,z1_coupled,z2_coupled,mse_exact";
pub const CONVERGENCE_HEADER: &str = "n,sup_mse_exact,sup_mse_sampled,sup_gap_upper,sup_gap_lower";
pub const PHASE_HEADER: &str = "t,m1,m2,z1_coupled,z2_coupled";
pub const SSA_HEADER: &str = "t,m1_hat,se1,m2_hat,se2,mse_hat,mse_se";

pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0.0000000000000000".into();
    }
    let sci = format!("{v:.16e}");
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..=16).contains(&exp) {
        format!("{v:.*}", (16 - exp) as usize)
    } else {
        sci
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

fn row(out: &mut String, cells: &[String]) {
    out.push_str(&cells.join(","));
    out.push('\n');
}

pub fn curves(rows: &[CurveRow]) -> String {
    let mut s = format!("{CURVES_HEADER}\n");
    for r in rows {
        row(
            &mut s,
            &[
                r.t,
                r.y,
                r.m1,
                r.m2,
                r.var,
                r.z1_app,
                r.z2_app,
                r.z1_coupled,
                r.z2_coupled,
                r.mse_exact,
            ]
            .map(fmt_num),
        );
    }
    s
}

/// Curves table with only `t` and `y` filled; every `n`-dependent cell is empty.
pub fn mean_field_curves(times: &[f64], y: &[f64]) -> String {
    let mut s = format!("{CURVES_HEADER}\n");
    for (t, y) in times.iter().zip(y) {
        let _ = writeln!(s, "{},{},,,,,,,,", fmt_num(*t), fmt_num(*y));
    }
    s
}

/// Curves table for the curves a sandwich check compared.
pub fn sandwich_curves(r: &SandwichReport) -> String {
    let mut s = format!("{CURVES_HEADER}\n");
    for (i, &t) in r.grid.times().iter().enumerate() {
        let (y, m1, m2) = (r.y[i], r.m1[i], r.m2[i]);
        let mse = (m2 - 2.0 * y * m1 + y * y).max(0.0);
        row(
            &mut s,
            &[
                t,
                y,
                m1,
                m2,
                m2 - m1 * m1,
                r.z1_lower[i],
                r.z2_upper[i],
                r.z1_coupled[i],
                r.z2_coupled[i],
                mse,
            ]
            .map(fmt_num),
        );
    }
    s
}

pub fn convergence(rows: &[ConvergenceRow]) -> String {
    let mut s = format!("{CONVERGENCE_HEADER}\n");
    for r in rows {
        row(
            &mut s,
            &[
                r.n.to_string(),
                fmt_num(r.sup_mse_exact),
                opt(r.sup_mse_sampled),
                fmt_num(r.sup_gap_upper),
                fmt_num(r.sup_gap_lower),
            ],
        );
    }
    s
}

pub fn phase(rows: &[PhaseRow]) -> String {
    let mut s = format!("{PHASE_HEADER}\n");
    for r in rows {
        row(&mut s, &[r.t, r.m1, r.m2, r.z1_coupled, r.z2_coupled].map(fmt_num));
    }
    s
}

pub fn monte_carlo(est: &MonteCarloEstimate, mse: &MseEstimate) -> String {
    let mut s = format!("{SSA_HEADER}\n");
    for (i, &t) in est.grid.times().iter().enumerate() {
        row(
            &mut s,
            &[
                t,
                est.m1_hat[i],
                est.se1[i],
                est.m2_hat[i],
                est.se2[i],
                mse.mse_hat[i],
                mse.se[i],
            ]
            .map(fmt_num),
        );
    }
    s
}

/// One row per node: `t,x0,...,xn`.
pub fn distributions(times: &[f64], dists: &[StateDistribution]) -> String {
    let n = dists.first().map_or(0, |d| d.n());
    let mut s = String::from("t");
    for k in 0..=n {
        let _ = write!(s, ",x{k}");
    }
    s.push('\n');
    for (t, d) in times.iter().zip(dists) {
        s.push_str(&fmt_num(*t));
        for p in d.probs() {
            s.push(',');
            s.push_str(&fmt_num(*p));
        }
        s.push('\n');
    }
    s
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_num(0.1), "0.10000000000000001");
        assert_eq!(fmt_num(0.5), "0.50000000000000000");
        assert_eq!(fmt_num(10.0), "10.000000000000000");
        assert_eq!(fmt_num(-2.5e-3), "-0.0025000000000000001");
        assert_eq!(fmt_num(1e-7), "9.9999999999999995e-8");
        assert_eq!(fmt_num(1.5e20), "1.5000000000000000e20");
        assert_eq!(fmt_num(0.0), "0.0000000000000000");
        assert_eq!(fmt_num(-0.0), "0.0000000000000000");
    }

    #[test]
    fn round_trips() {
        for v in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), -7.25e-9, 123456.789, 6.02e23, 5e-324] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        write_atomic(&path, "a\n").unwrap();
        write_atomic(&path, "b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "b\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
