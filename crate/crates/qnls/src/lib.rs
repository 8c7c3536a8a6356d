//! Numerical lab for the mass-resonant quadratic Schrödinger system
//!
//! ```text
//! i∂t u + Δu + v ū = 0
//! i∂t v + κΔv + u² = 0
//! ```
//!
//! Ground states on the 5-D radial half-line, split-step dynamics on periodic
//! boxes, interaction Morawetz diagnostics and the variational threshold
//! quantities built on them.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod fields;
pub mod grid;
pub mod ground_state;
pub mod morawetz;
pub mod threshold;
pub mod cli;

pub use error::{Error, Result};
