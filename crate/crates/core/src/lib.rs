//! Geometric stability analysis for dynamical systems.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod expr;
pub mod flow;
pub mod geometry;
pub mod kcc;
pub mod lagrangian;
pub mod lyapunov;
pub mod maupertuis;
pub mod numeric;

pub use error::{Error, Result};
