//! Two-Selmer groups of quadratic twists of elliptic curves with full rational
//! two-torsion by classical full 2-descent, and twist-family statistics.

pub mod curve;
pub mod empirics;
pub mod f2;
pub mod hensel;
pub mod local;
pub mod selmer;

use thiserror::Error;

pub use curve::{CurveSpec, KlagsbrunModel, TwoTorsionModel};
pub use empirics::{two_selmer_rank, TwistRecord};
pub use local::Place;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DescentError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("singular curve: {0}")]
    Singular(String),
    #[error("d = {0} is not squarefree")]
    NotSquarefree(i64),
    #[error("technical condition failed: {0}")]
    TechnicalCondition(String),
    #[error("local image at {place}: found {found} classes, expected {expected}")]
    LocalImage { place: Place, found: usize, expected: usize },
    #[error("lifting at p = {p} undecided at depth {depth}")]
    Precision { p: u64, depth: u32 },
    #[error("module computation failed: {0}")]
    Module(String),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}
