//! Optimal unambiguous discrimination of linearly independent pure states
//! through a Neumark extension.

// `!(x <= tol)` is used on purpose so NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod final_config;
pub mod ladder;
pub mod numerics;
pub mod pipeline;
pub mod report;
pub mod rotations;
pub mod sdp;
pub mod synthesis;
pub mod tolerances;

pub use error::{Error, ErrorClass, Result};
pub use tolerances::Tolerances;
