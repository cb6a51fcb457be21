//! Desk-scale reference optimisation: a dense simplex, best-bound
//! branch-and-bound and an exhaustive enumeration oracle.
//!
//! Everything here is single-threaded and deterministic. It is meant for
//! models with a few hundred rows; the CLI refuses larger instances.

mod bnb;
mod brute;
mod simplex;

pub use bnb::{solve_milp, BnBConfig, BnBStats};
pub use brute::{brute_force_milp, BRUTE_FORCE_MAX_COMBINATIONS, BRUTE_FORCE_MAX_INTEGERS};
pub use simplex::{solve_lp, LpData, LpResult, LpStatus};

use crate::milp::ModelIR;

/// Largest model the reference engine accepts, in variables.
pub const DESK_SCALE_MAX_VARS: usize = 5000;

/// Integer variables whose bounds leave more than one integral value.
pub fn free_integer_vars(model: &ModelIR) -> Vec<usize> {
    model
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_integer() && v.lower.ceil() < v.upper.floor())
        .map(|(k, _)| k)
        .collect()
}
