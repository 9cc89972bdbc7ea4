//! Fixed points of set-valued contractive maps on spaces whose uniformity is
//! generated by a finite family of pseudometrics.
//!
//! - [`space`]: points, pseudometric families, entourages.
//! - [`hyperspace`]: finite sets, point-to-set distances, Hausdorff
//!   pseudometrics, nearest-point selection.
//! - [`multifunction`]: set-valued maps, singleton lifts, builtin catalog.
//! - [`checker`]: contraction conditions and a sampling falsifier.
//! - [`solver`]: nearest-point orbits, decay and tail certificates,
//!   uniqueness probe.
//! - [`cli`]: the `multifix` command line front end.
//!
//! The data-parallel loops (condition scans, tail checks, batches of solves)
//! run on rayon when the `parallel` feature is enabled, see [`Execution`].

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checker;
pub mod cli;
pub mod error;
pub mod exec;
pub mod hyperspace;
pub mod multifunction;
pub mod solver;
pub mod space;

pub use checker::{
    condition_sides, corollary_sides, holds_at, scan, scan_with, uniqueness_applicable, Coefficients,
    ConditionReport, ContractionParams, Region, Sides,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use hyperspace::{hausdorff, hyper_entourage_contains, nearest_point, point_set_distance, FiniteSet};
pub use multifunction::{lift_single_valued, make_builtin, BuiltinSpec, Multifunction, SelfMap};
pub use solver::{
    residual, solve, step, uniqueness_probe, verify_geometric_decay, verify_tail_bound, OrbitTrace, SolveOptions,
    SolveReport, SolveStatus,
};
pub use space::{Entourage, Point, Pseudometric, PseudometricFamily, PseudometricSpec};
