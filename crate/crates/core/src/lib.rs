//! Strongest-user collision resolution (SUCRe) for massive MIMO random access.
//!
//! The crate bundles a Monte-Carlo simulator of the four-step access
//! protocol with the closed-form distribution of the DL statistic each UE
//! observes, so simulated and analytic numbers can be checked against each
//! other.
//!
//! Layout:
//! - [`special`]: gamma-family functions and the log-domain moment integral.
//! - [`channels`]: cell geometry, large-scale fading, small-scale channels and
//!   inter-cell interference.
//! - [`estimators`]: estimators of the colliding gain sum `α_t`.
//! - [`analytics`]: exact and asymptotic probabilities, pilot-load
//!   combinatorics.
//! - [`protocol`]: RA blocks, outcome classification, baseline and the
//!   crowded multi-attempt process.
//! - [`harness`]: experiment definitions, configuration and CSV output.

// `!(x > y)` is used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod channels;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod protocol;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
