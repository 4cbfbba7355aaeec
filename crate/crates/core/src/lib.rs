//! Constant-step Langevin Monte Carlo with Cesaro averaging for posterior
//! means of log-concave models, with step-size tunings, exact oracles and
//! statistical diagnostics.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod diagnostics;
pub mod error;
pub mod numeric;
pub mod oracle;
pub mod potentials;
pub mod rng;
pub mod sampler;
pub mod tuning;

pub use error::{Error, Result};
