//! Curvature and O'Neill-tensor invariants of Riemannian submersions given
//! in coordinates, with checkers for Chen-type inequalities.

// NaN must fail tolerance checks, and tensor code reads best with indices.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::redundant_guards)]

pub mod catalog;
pub mod chen;
pub mod config;
pub mod error;
pub mod expr;
pub mod invariants;
pub mod metric;
pub mod oneill;
pub mod report;
pub mod run;
pub mod space_forms;
pub mod submersion;
pub mod tolerances;

pub use error::{Error, Result};
