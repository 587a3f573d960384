#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod flow;
pub mod lorentz;
pub mod minkowski;
pub mod levy;
pub mod poincare;
mod linalg;
mod quad;

pub use error::{Error, Result};
