//! Path-method feature attribution with greedy salient manipulation paths.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`], [`autodiff`], [`model`], [`dataset`], [`train`] and [`io`]
//!   provide differentiable fixture models with exact gradients.
//! * [`path`] integrates gradients along discretised paths and [`samp`]
//!   searches for concentrated paths greedily.
//! * [`oracle`] enumerates manipulation paths exhaustively and samples the
//!   conditional allocation law used to justify the greedy step.
//! * [`metrics`] scores attributions with Deletion/Insertion curves and the
//!   Sensitivity-N completeness check.

// `!(x > 0.0)` is how NaN gets rejected; index loops mirror the maths.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod autodiff;
pub mod dataset;
pub mod error;
pub mod export;
pub mod fixture;
pub mod io;
pub mod method;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod path;
pub mod samp;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use model::{Differentiable, Model};
pub use tensor::Tensor;
