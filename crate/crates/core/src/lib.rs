//! Transmission expansion planning with series FACTS devices (TCSCs).
//!
//! The crate builds four MILP formulations of the planning problem over a
//! DC network, writes them as MPS, verifies the polyhedral properties of the
//! disjunctive TCSC block, solves small instances with an in-house simplex and
//! branch-and-bound, and validates and summarises plans.

pub mod analysis;
pub mod error;
pub mod fixtures;
pub mod formulations;
pub mod grid;
pub mod milp;
pub mod polyhedra;
pub mod refsolver;

pub use error::{Error, Result};
