//! Discrete weak optimal transport: primal and restricted dual solvers,
//! convex hulls, stochastic orders with certificates, and order projections.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod costs;
pub mod dual;
pub mod error;
pub mod hulls;
pub mod measures;
pub mod optim;
pub mod orders;
pub mod primal;
pub mod projection;
pub mod verify;

pub use error::{Error, Result};
