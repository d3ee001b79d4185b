// range guards are written negated so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod field;
pub mod frac;
pub mod invariant;
pub mod kernels;
pub mod operators;
pub mod quad;
pub mod report;
pub mod residual;
pub mod sampling;
pub mod scenarios;
pub mod specialfn;
pub mod transform;

pub use error::{Error, Result};
pub use field::{Axis, Field, Interval, TimeField};
