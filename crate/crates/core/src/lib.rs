//! Monte Carlo tree search over decision trees stored as tensor trains.
//!
//! A mixed discrete/continuous planning problem is discretized into a tree
//! whose layers are the decision variables. The transformed cost over every
//! branch is approximated once by TT-cross; the search then reads node
//! values and visit counts straight from tensor-train cores.

// Validation uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cross;
pub mod error;
mod linalg;
pub mod oracle;
pub mod problems;
pub mod refine;
pub mod search;
pub mod tt;
pub mod ttgo;

pub use error::{Error, Result};
