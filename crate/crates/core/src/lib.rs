//! Parallel addition of positive semidefinite matrices.
//!
//! The crate computes the parallel sum `X:G`, the map `μ_G(X) = X − X:G`, its
//! limit `τ_G(X)` along the orbit `μ_G^{[n]}(X)`, and the Lebesgue-type
//! decomposition `B = [A]B + (B − [A]B)`. Every quantity has at least two
//! independent routes, and [`verify`] turns their agreement into a property
//! battery.

pub mod cli;
pub mod error;
pub mod parallel;
pub mod psd;
pub mod shorted;
pub mod tau;
pub mod verify;

pub use error::{Error, Result};
pub use psd::{PsdMatrix, Subspace, TolerancePolicy};
