//! House price estimation from textual attributes fused with SURF descriptors
//! of house photographs, with histogram-intersection SVR and a small
//! Levenberg–Marquardt-trained network as estimators.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod fusion;
pub mod imgproc;
pub mod metrics;
pub mod mlp;
pub mod pipeline;
pub mod surf;
pub mod svr;
pub mod synthetic;

pub use error::{Error, Result};
