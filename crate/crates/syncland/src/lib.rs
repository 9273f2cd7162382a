//! Certificates, solvers and simulators for synchronization problems
//! `max <C, Y Y*>` over matrices with unit-norm rows.
//!
//! The guide in `book/` walks through each module with runnable listings.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod circulant;
pub mod error;
pub mod harness;
pub mod io;
pub mod kuramoto;
pub mod linalg;
pub mod manifold;
pub mod models;
pub mod optimizer;
pub mod problem;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
