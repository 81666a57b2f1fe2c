//! Signal temporal logic monitoring, gradient-guided repair, and runtime
//! enforcement of planned trajectories.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod enforce;
pub mod error;
pub mod files;
pub mod grad;
pub mod repair;
pub mod robustness;
pub mod sim;
pub mod spec;
pub mod trace;

pub use error::{Error, EvalError, LoadError, RepairError, Result, SpecError, TraceError};
