//! Spectral calculus on [`PsdMatrix`]: square roots, fractional powers,
//! pseudoinverses and Loewner comparisons.
//!
//! Every function works from the cached eigendecomposition and treats
//! eigenvalues at or below `rank_rel * λ_max` as exact zeros, so that rounding
//! dust never turns into a spurious direction after `λ ↦ λ^{1/2}` or
//! `λ ↦ 1/λ`.

use nalgebra::DMatrix;

use super::matrix::{check_dims, symmetrize, EigenDecomposition, PsdMatrix};
use super::policy::TolerancePolicy;
use crate::error::{Error, Result};

fn map_above_cutoff(a: &PsdMatrix, pol: &TolerancePolicy, f: impl Fn(f64) -> f64) -> PsdMatrix {
    let eig = a.eigen();
    let cut = eig.cutoff(pol);
    let vals: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l > cut { f(l) } else { 0.0 })
        .collect();
    PsdMatrix::from_spectrum(&vals, &eig.vectors)
}

/// Principal square root `A^{1/2}`.
pub fn sqrt_psd(a: &PsdMatrix, pol: &TolerancePolicy) -> PsdMatrix {
    map_above_cutoff(a, pol, f64::sqrt)
}

/// Moore–Penrose pseudoinverse computed spectrally.
pub fn pinv_psd(a: &PsdMatrix, pol: &TolerancePolicy) -> PsdMatrix {
    map_above_cutoff(a, pol, |l| 1.0 / l)
}

/// `(A^{1/2})^+`, computed from the spectrum of `A` itself so the cutoff is
/// applied to `λ` rather than to `λ^{1/2}`.
pub fn pinv_sqrt_psd(a: &PsdMatrix, pol: &TolerancePolicy) -> PsdMatrix {
    map_above_cutoff(a, pol, |l| 1.0 / l.sqrt())
}

/// `A^α` on the nonzero part of the spectrum.
pub fn frac_power(a: &PsdMatrix, alpha: f64, pol: &TolerancePolicy) -> Result<PsdMatrix> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::BadExponent(alpha));
    }
    if alpha == 1.0 {
        return Ok(a.clone());
    }
    Ok(map_above_cutoff(a, pol, |l| l.powf(alpha)))
}

/// Pseudoinverse of a symmetric matrix with an absolute eigenvalue cutoff.
pub(crate) fn pinv_symmetric_abs(m: &DMatrix<f64>, cutoff: f64) -> DMatrix<f64> {
    let eig = EigenDecomposition::of_symmetric(&symmetrize(m));
    eig.compose(|l| if l > cutoff { 1.0 / l } else { 0.0 })
}

/// Smallest eigenvalue of `B − A`.
pub fn loewner_gap(a: &PsdMatrix, b: &PsdMatrix) -> Result<f64> {
    check_dims(a, b)?;
    let d = symmetrize(&(b.entries() - a.entries()));
    Ok(EigenDecomposition::of_symmetric(&d).lambda_min())
}

/// `A ⪯ B` up to `loewner_slack · (1 + max(‖A‖, ‖B‖))`.
pub fn loewner_leq(a: &PsdMatrix, b: &PsdMatrix, pol: &TolerancePolicy) -> Result<bool> {
    let gap = loewner_gap(a, b)?;
    let scale = a.lambda_max().max(b.lambda_max());
    Ok(gap >= -pol.slack(scale))
}
