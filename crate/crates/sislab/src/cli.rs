//! Command-line front end.
//!
//! Exit statuses: 0 success, 1 usage error, 2 computation or IO error,
//! 3 when a sandwich check finds violations.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use sislab_core::lab::{self, SANDWICH_TOL};
use sislab_core::master::{self, MasterOptions};
use sislab_core::ssa::SsaConfig;
use sislab_core::{bounds, mean_field, Error, ModelParams, TimeGrid};

use crate::{csv, parallel, study};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_COMPUTE: i32 = 2;
pub const EXIT_SANDWICH: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "sislab",
    version,
    about = "SIS epidemic on a complete graph: exact process vs mean field"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mean-field curve y(t)
    Meanfield(Flags),
    /// Exact moments from the forward equations, with every comparison curve
    Master(Flags),
    /// Moment-bound systems, with every comparison curve
    Bounds(Flags),
    /// Monte Carlo estimates from exact simulation
    Ssa(Flags),
    /// Check z1_app <= E[i] <= y and E[i^2] <= z2_app on the grid
    Sandwich(Flags),
    /// Sup-norm mean-square error for a list of population sizes
    Converge(Flags),
    /// Exact and coupled-bound paths in the (E[i], E[i^2]) plane
    Phase(Flags),
}

#[derive(Args, Debug, Clone)]
struct Flags {
    /// Infection pressure
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    tau: f64,
    /// Recovery rate
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    gamma: f64,
    /// Number of nodes
    #[arg(long, allow_hyphen_values = true)]
    n: Option<i64>,
    /// Initial infected fraction
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    u: f64,
    #[arg(long = "t-end", default_value_t = 10.0, allow_hyphen_values = true)]
    t_end: f64,
    #[arg(long = "num-points", default_value_t = 201, allow_hyphen_values = true)]
    num_points: i64,
    /// Output CSV path (default: <subcommand>.csv)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Monte Carlo replications
    #[arg(long, default_value_t = 10_000, allow_hyphen_values = true)]
    reps: i64,
    /// Comma-separated, strictly increasing population sizes (converge)
    #[arg(long = "n-list", value_delimiter = ',', allow_hyphen_values = true)]
    n_list: Vec<i64>,
    /// Add Monte Carlo mean-square error to converge rows
    #[arg(long)]
    sampled: bool,
    /// Also dump the full distribution at every node (master)
    #[arg(long = "retain-distributions")]
    retain_distributions: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubcommandKind {
    Meanfield,
    Master,
    Bounds,
    Ssa,
    Sandwich,
    Converge,
    Phase,
}

impl SubcommandKind {
    fn name(self) -> &'static str {
        match self {
            Self::Meanfield => "meanfield",
            Self::Master => "master",
            Self::Bounds => "bounds",
            Self::Ssa => "ssa",
            Self::Sandwich => "sandwich",
            Self::Converge => "converge",
            Self::Phase => "phase",
        }
    }

    fn needs_n(self) -> bool {
        !matches!(self, Self::Meanfield | Self::Converge)
    }
}

/// Fully validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: SubcommandKind,
    /// `n` is 1 when the subcommand does not use it.
    pub params: ModelParams,
    pub grid: TimeGrid,
    pub out: PathBuf,
    pub ssa: SsaConfig,
    pub n_list: Vec<usize>,
    pub sampled: bool,
    pub retain_distributions: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArgsError {
    /// `--help` or `--version`; print and exit 0.
    Display(String),
    Usage(String),
}

fn flag_name(param: &str) -> &'static str {
    match param {
        "tau" => "--tau",
        "gamma" => "--gamma",
        "n" => "--n",
        "u" => "--u",
        "t_end" => "--t-end",
        "num_points" => "--num-points",
        "reps" => "--reps",
        "n_list" => "--n-list",
        _ => "argument",
    }
}

fn usage(e: Error) -> ArgsError {
    match e {
        Error::InvalidParam { name, reason } => ArgsError::Usage(format!("{}: {reason}", flag_name(name))),
        other => ArgsError::Usage(other.to_string()),
    }
}

fn positive(flag: &'static str, v: i64) -> Result<usize, ArgsError> {
    if v < 1 {
        return Err(ArgsError::Usage(format!("{flag}: must be >= 1, got {v}")));
    }
    Ok(v as usize)
}

/// Parses `argv` (program name first) into a validated [`RunConfig`].
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, ArgsError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ArgsError::Display(e.to_string()),
            _ => ArgsError::Usage(e.to_string()),
        }
    })?;
    let (kind, f) = match cli.command {
        Command::Meanfield(f) => (SubcommandKind::Meanfield, f),
        Command::Master(f) => (SubcommandKind::Master, f),
        Command::Bounds(f) => (SubcommandKind::Bounds, f),
        Command::Ssa(f) => (SubcommandKind::Ssa, f),
        Command::Sandwich(f) => (SubcommandKind::Sandwich, f),
        Command::Converge(f) => (SubcommandKind::Converge, f),
        Command::Phase(f) => (SubcommandKind::Phase, f),
    };

    ModelParams::new(f.tau, f.gamma, 1, f.u).map_err(usage)?;
    let n = match (f.n, kind.needs_n()) {
        (Some(n), _) => positive("--n", n)?,
        (None, true) => {
            return Err(ArgsError::Usage(format!("--n is required for `{}`", kind.name())));
        }
        (None, false) => 1,
    };
    let params = ModelParams::new(f.tau, f.gamma, n, f.u).map_err(usage)?;
    let num_points = positive("--num-points", f.num_points)?;
    let grid = TimeGrid::uniform(f.t_end, num_points).map_err(usage)?;
    let ssa = SsaConfig::new(positive("--reps", f.reps)? as u64, f.seed).map_err(usage)?;

    let n_list = f
        .n_list
        .iter()
        .map(|&n| positive("--n-list", n))
        .collect::<Result<Vec<_>, _>>()?;
    if kind == SubcommandKind::Converge {
        if n_list.is_empty() {
            return Err(ArgsError::Usage("--n-list is required for `converge`".into()));
        }
        if n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ArgsError::Usage("--n-list: must be strictly increasing".into()));
        }
    }

    Ok(RunConfig {
        subcommand: kind,
        params,
        grid,
        out: f.out.unwrap_or_else(|| PathBuf::from(format!("{}.csv", kind.name()))),
        ssa,
        n_list,
        sampled: f.sampled,
        retain_distributions: f.retain_distributions,
    })
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Compute(#[from] Error),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
}

fn sup(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Executes the subcommand, writes its CSV and prints a one-line summary to
/// `stdout`. Returns the process exit status.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write) -> i32 {
    match execute(cfg) {
        Ok((summary, status)) => {
            let _ = writeln!(stdout, "{summary}");
            status
        }
        Err(e) => {
            eprintln!("sislab {}: {e}", cfg.subcommand.name());
            EXIT_COMPUTE
        }
    }
}

fn execute(cfg: &RunConfig) -> Result<(String, i32), RunError> {
    let (p, g) = (&cfg.params, &cfg.grid);
    match cfg.subcommand {
        SubcommandKind::Meanfield => {
            let y = mean_field::mf_solve(p, g)?;
            csv::write_atomic(&cfg.out, &csv::mean_field_curves(g.times(), &y.y))?;
            Ok((
                format!("y({}) = {}", g.t_end(), csv::fmt_num(*y.y.last().unwrap())),
                EXIT_OK,
            ))
        }
        SubcommandKind::Master | SubcommandKind::Bounds => {
            let rows = lab::curves(p, g)?;
            if cfg.retain_distributions && cfg.subcommand == SubcommandKind::Master {
                let mt = master::solve_master_with(
                    p,
                    g,
                    MasterOptions {
                        retain_distributions: true,
                    },
                )?;
                let dists = mt.distributions.unwrap_or_default();
                csv::write_atomic(&sibling(&cfg.out, ".dist.csv"), &csv::distributions(g.times(), &dists))?;
            }
            csv::write_atomic(&cfg.out, &csv::curves(&rows))?;
            let summary = if cfg.subcommand == SubcommandKind::Master {
                format!(
                    "n = {}: sup_mse_exact = {}",
                    p.n(),
                    csv::fmt_num(sup(rows.iter().map(|r| r.mse_exact)))
                )
            } else {
                let coupled = bounds::solve_coupled(p, g)?;
                format!(
                    "n = {}: sup(m1 - z1_app) = {}, sup(z2_app - m2) = {}, min z2_coupled = {}",
                    p.n(),
                    csv::fmt_num(sup(rows.iter().map(|r| r.m1 - r.z1_app))),
                    csv::fmt_num(sup(rows.iter().map(|r| r.z2_app - r.m2))),
                    csv::fmt_num(coupled.min_z2())
                )
            };
            Ok((summary, EXIT_OK))
        }
        SubcommandKind::Ssa => {
            let hist = parallel::simulate(p, g, &cfg.ssa);
            let est = hist.estimate(g);
            let y = mean_field::mf_solve(p, g)?;
            let mse = hist.mse(&y.y)?;
            csv::write_atomic(&cfg.out, &csv::monte_carlo(&est, &mse))?;
            Ok((
                format!(
                    "n = {}, reps = {}: sup_mse_sampled = {}",
                    p.n(),
                    cfg.ssa.reps(),
                    csv::fmt_num(sup(mse.mse_hat.iter().copied()))
                ),
                EXIT_OK,
            ))
        }
        SubcommandKind::Sandwich => {
            let report = lab::sandwich_check(p, g)?;
            csv::write_atomic(&cfg.out, &csv::sandwich_curves(&report))?;
            let v = report.violations.len();
            let mut summary = format!("violations: {v} (tol {SANDWICH_TOL:e})");
            if let Some(first) = report.violations.first() {
                summary.push_str(&format!(
                    ", first at t = {} ({:?}, gap {})",
                    first.time,
                    first.quantity,
                    csv::fmt_num(first.gap)
                ));
            }
            Ok((summary, if v == 0 { EXIT_OK } else { EXIT_SANDWICH }))
        }
        SubcommandKind::Converge => {
            let sampled = cfg.sampled.then_some(&cfg.ssa);
            let report = study::convergence_study(p, &cfg.n_list, g, sampled)?;
            csv::write_atomic(&cfg.out, &csv::convergence(&report.rows))?;
            let slope = report.slope.map_or_else(|| "absent".to_string(), csv::fmt_num);
            Ok((
                format!(
                    "rows: {}, strictly decreasing: {}, slope: {slope}",
                    report.rows.len(),
                    report.strictly_decreasing()
                ),
                EXIT_OK,
            ))
        }
        SubcommandKind::Phase => {
            let rows = lab::phase_path(p, g)?;
            csv::write_atomic(&cfg.out, &csv::phase(&rows))?;
            let left = rows.iter().filter(|r| r.z1_coupled <= r.m1 + 1e-6).count();
            Ok((
                format!("rows: {}, coupled z1 <= E[i]: {left}/{}", rows.len(), rows.len()),
                EXIT_OK,
            ))
        }
    }
}

/// Parses and runs; used by the binary.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(argv) {
        Ok(cfg) => run(&cfg, &mut std::io::stdout().lock()),
        Err(ArgsError::Display(text)) => {
            print!("{text}");
            EXIT_OK
        }
        Err(ArgsError::Usage(msg)) => {
            eprintln!("{}", msg.trim_end());
            EXIT_USAGE
        }
    }
}
