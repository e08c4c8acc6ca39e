//! Gibbs measures of Ising-spin lattice systems under spin-flip dynamics.
//!
//! The crate evolves finite-volume Gibbs measures under Glauber dynamics and
//! probes whether the evolved measure stays Gibbsian: Dobrushin
//! certification, a small-time cluster-expansion horizon, and
//! boundary-sensitivity scans on the constrained two-layer system.

// `!(x > 0.0)` is how parameters reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod gibbs;
pub mod interaction;
pub mod lattice;
pub mod output;
pub mod twolayer;

pub use error::{Error, Result};
