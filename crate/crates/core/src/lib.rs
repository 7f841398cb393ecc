//! Detection of Simpson's paradox in binary contingency tables and Gaussian
//! models, and its resolution under the common-cause principle.
//!
//! The crate is organised by subsystem:
//!
//! * [`contingency`]: joint tables over binary `A1, A2, B`, paradox detection,
//!   necessary orderings and the retrodiction-style alternative criteria.
//! * [`common_cause`]: inversion of the binary common-cause equation, sign
//!   scans over all binary kernels, and search for ternary causes.
//! * [`frequency`]: Dirichlet sampling and Monte Carlo estimates of how often
//!   the paradox occurs.
//! * [`gaussian`]: the continuous paradox for Gaussian common-cause models.
//! * [`datasets`]: file formats, coarse-graining and bundled fixtures.
//! * [`cli`]: the `simpson` command-line front end.

#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod common_cause;
pub mod contingency;
pub mod datasets;
mod error;
pub mod frequency;
pub mod gaussian;
pub mod parallel;

pub use error::{Error, Result};

/// Comparison tolerance for probability arithmetic.
pub const PROB_TOL: f64 = 1e-12;

/// Sign of `x` with a dead zone of `tol` around zero.
pub fn sign_with_tol(x: f64, tol: f64) -> i8 {
    if x > tol {
        1
    } else if x < -tol {
        -1
    } else {
        0
    }
}
