//! Certified positive semidefinite matrices and the subspace algebra built on
//! their spectra.

mod matrix;
mod policy;
mod spectral;
mod subspace;

pub use matrix::{EigenDecomposition, PsdMatrix};
pub use policy::TolerancePolicy;
pub use spectral::{frac_power, loewner_gap, loewner_leq, pinv_psd, pinv_sqrt_psd, sqrt_psd};
pub use subspace::{intersect, kernel_basis, preimage_in_range, projector, range_basis, Subspace, TOL_ORTHO};

pub(crate) use matrix::{check_dims, symmetrize};
pub(crate) use spectral::pinv_symmetric_abs;
