//! Cross-relaxation photoluminescence model for NV-diamond samples under a
//! rotating bias field, and Bayesian recovery of crystal orientation or
//! external field from measured PL maps.

// Negated float comparisons reject NaN; index loops over 3x3 matrices read
// more plainly than iterator chains.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod data_io;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod inference;
pub mod spin;

pub use error::{Error, Result};
