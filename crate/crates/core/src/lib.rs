//! Model-free hyperparameter optimization by modular factorial design.
//!
//! Each iteration samples an orthogonal Latin hypercube over the current
//! search space, evaluates every configuration in parallel, collapses the
//! continuous levels into a range-indexed factorial table and analyzes the
//! marginal means to shrink the space and freeze unimportant factors.

pub mod analyzer;
pub mod error;
pub mod evaluator;
pub mod metrics;
pub mod optimizer;
pub mod sampler;
pub mod seed;
pub mod space;
pub mod stats;
pub mod transformer;

pub use error::{Error, Result};
