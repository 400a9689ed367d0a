//! Independent numerical oracles for the test suites.
//!
//! Nothing here shares code with the library under test: quadrature is plain
//! adaptive Gauss-Kronrod and the statistics helpers are textbook formulas.

pub mod quad;
pub mod stats;

pub use quad::{integrate, integrate_to_infinity, Quadrature};
pub use stats::{ks_distance, MeanAccumulator};
