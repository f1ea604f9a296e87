//! Numerics for the stochastic SIS epidemic on a complete graph.
//!
//! The crate is `no_std` (it needs `alloc`) and covers:
//!
//! - [`model`]: parameters, state distributions, moments and time grids
//! - [`ode`]: fixed-step RK4 with compensated accumulation
//! - [`master`]: Kolmogorov forward equations over the `n + 1` infected counts,
//!   plus a dense matrix-exponential oracle for small `n`
//! - [`mean_field`]: the logistic-with-recovery ODE, closed form and numerical
//! - [`bounds`]: the two-moment bounding systems (coupled, decoupled, limit)
//! - [`ssa`]: exact event-driven simulation and Monte Carlo moment estimates
//! - [`lab`]: mean-square error, sandwich checks, Jensen audits, phase paths
//!
//! IO, parallel drivers and the command line live in the `sislab` crate.
#![no_std]

extern crate alloc;

pub mod bounds;
pub mod error;
pub mod lab;
pub mod master;
pub mod mean_field;
pub mod model;
pub mod ode;
pub mod ssa;

pub use error::{Error, Result};
pub use model::{ModelParams, Moments, StateDistribution, TimeGrid};
