//! Exact and Monte Carlo tools for Selmer-rank statistics in twist families.

pub mod arith;
pub mod exact;
pub mod frobenius;
pub mod grid;
pub mod ff_linalg;
pub mod module_algebra;
pub mod moment_inversion;
pub mod montecarlo;
pub mod rank_dist;
pub mod simplex;
