//! Library surface of the scenario runner, exposed so integration and
//! acceptance tests can drive runs in-process.

// `!(x > 0.0)` rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod runner;
