//! Compressed gradient methods for distributed least squares: unbiased
//! random quantizers, sparsity-aware step sizes, synchronous and
//! stale-gradient iterations, and an experiment harness.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod data;
pub mod error;
pub mod harness;
pub mod loss;
pub mod par;
pub mod quantizers;
pub mod rng;
pub mod schedule;
pub mod sparse;
pub mod sparsity;
pub mod theory;

pub use error::{Error, Result};
