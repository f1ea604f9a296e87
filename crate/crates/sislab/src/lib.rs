//! Desk-scale laboratory for the SIS mean-field limit.
//!
//! Numerics live in [`sislab_core`]; this crate adds parallel Monte Carlo,
//! convergence studies over `n`, CSV output and the `sislab` command line.

pub mod cli;
pub mod csv;
pub mod parallel;
pub mod study;

pub use sislab_core as core;
