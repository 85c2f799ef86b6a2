//! Lebesgue-type decomposition `B = [A]B + (B − [A]B)`.
//!
//! `[A]B` is the `A`-absolutely continuous part of `B`: the largest `C ⪯ B`
//! whose range sits inside `ran A`. Two routes compute it:
//!
//! * projection: `[A]B = B^{1/2} P_Ω B^{1/2}` with `Ω = {f : B^{1/2}f ∈ ran A}`;
//! * limit: `[A]B = lim_{n→∞} (nA):B`.
//!
//! For the limit route `(nA):B` is evaluated after reducing to `ran A`: with
//! `J` an orthonormal frame of `ran A` and `K` one of `ker A`,
//!
//! ```text
//! (nA):B = J ((n JᵀAJ) : B_s) Jᵀ,   B_s = JᵀBJ − JᵀBK (KᵀBK)^+ KᵀBJ,
//! ```
//!
//! because minimizing the quadratic form over the `ker A` component of the
//! `B`-argument leaves the Schur complement `B_s`. `n JᵀAJ` is definite, so
//! the reduced parallel sum uses a true inverse and stays accurate for
//! `n = 2^40`, where `nA + B` itself would be hopelessly ill-conditioned.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::parallel::{check_increasing, parallel_sum, ParallelRoute, ParallelSumResult};
use crate::psd::{
    check_dims, intersect, pinv_symmetric_abs, preimage_in_range, range_basis, sqrt_psd, symmetrize, PsdMatrix,
    Subspace, TolerancePolicy,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionResiduals {
    /// Max-abs gap between the projection and limit routes.
    pub cross_route: f64,
    /// `‖A : (B − [A]B)‖`.
    pub singularity: f64,
    /// `‖[A]B : (B − [A]B)‖`.
    pub orthogonality: f64,
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub ac_part: PsdMatrix,
    pub singular_part: PsdMatrix,
    pub omega: Subspace,
    pub unique: bool,
    pub residuals: DecompositionResiduals,
}

/// `Ω_A^B = {f : B^{1/2} f ∈ ran A}`.
pub fn omega(a: &PsdMatrix, b: &PsdMatrix, pol: &TolerancePolicy) -> Result<Subspace> {
    check_dims(a, b)?;
    preimage_in_range(b, &range_basis(a, pol), pol)
}

/// `R P R`, with eigenvalues below the resolution of `R²` zeroed.
fn sandwich(root: &PsdMatrix, p: &DMatrix<f64>, pol: &TolerancePolicy) -> PsdMatrix {
    let floor = pol.rank_rel(root.dim()) * root.lambda_max().powi(2);
    PsdMatrix::denoised(&(root.entries() * p * root.entries()), floor)
}

/// `[A]B = B^{1/2} P_Ω B^{1/2}`.
pub fn ac_part(a: &PsdMatrix, b: &PsdMatrix, pol: &TolerancePolicy) -> Result<PsdMatrix> {
    let om = omega(a, b, pol)?;
    Ok(sandwich(&sqrt_psd(b, pol), &om.projector_matrix(), pol))
}

/// Doubling schedule `n = 2^k`, `k = 0..=40`.
pub fn default_n_schedule() -> Vec<f64> {
    (0..=40).map(|k| 2f64.powi(k)).collect()
}

/// `(nA):B` for many `n`, sharing the reduction to `ran A`.
pub struct ScaledParallelSum {
    frame: DMatrix<f64>,
    a_reduced: DMatrix<f64>,
    b_shorted: DMatrix<f64>,
    floor: f64,
}

impl ScaledParallelSum {
    pub fn new(a: &PsdMatrix, b: &PsdMatrix, pol: &TolerancePolicy) -> Result<Self> {
        check_dims(a, b)?;
        let n = a.dim();
        let ran = range_basis(a, pol);
        let j = ran.frame().clone();
        let a_reduced = symmetrize(&(j.transpose() * a.entries() * &j));
        let bjj = j.transpose() * b.entries() * &j;
        let b_shorted = if ran.dim() == n || ran.dim() == 0 {
            bjj
        } else {
            let k = ran.complement().frame().clone();
            let bjk = j.transpose() * b.entries() * &k;
            let bkk = k.transpose() * b.entries() * &k;
            let cutoff = pol.rank_rel(n) * b.lambda_max();
            let inv = pinv_symmetric_abs(&bkk, cutoff);
            symmetrize(&(bjj - &bjk * inv * bjk.transpose()))
        };
        Ok(Self {
            frame: j,
            a_reduced,
            b_shorted,
            floor: pol.rank_rel(n) * b.lambda_max(),
        })
    }

    /// The Schur complement of `B` onto `ran A`, embedded back in ℝⁿ.
    pub fn shorted(&self) -> PsdMatrix {
        PsdMatrix::denoised(&(&self.frame * &self.b_shorted * self.frame.transpose()), self.floor)
    }

    pub fn at(&self, scale: f64) -> Result<PsdMatrix> {
        let n = self.frame.nrows();
        let r = self.frame.ncols();
        if r == 0 {
            return Ok(PsdMatrix::zeros(n));
        }
        let sum = &self.a_reduced * scale + &self.b_shorted;
        let chol = symmetrize(&sum)
            .cholesky()
            .ok_or_else(|| Error::InternalInconsistency("reduced nA + B is not definite".into()))?;
        let reduced = &self.b_shorted - &self.b_shorted * chol.solve(&self.b_shorted);
        Ok(PsdMatrix::denoised(&(&self.frame * reduced * self.frame.transpose()), self.floor))
    }
}

/// `[A]B` as the limit of `(nA):B` along an increasing schedule.
///
/// Stops early once successive iterates differ by less than
/// `conv_abs · (1 + ‖B‖)`.
pub fn ac_part_limit(
    a: &PsdMatrix,
    b: &PsdMatrix,
    n_schedule: &[f64],
    pol: &TolerancePolicy,
) -> Result<ParallelSumResult> {
    check_dims(a, b)?;
    check_increasing(n_schedule)?;
    let scaled = ScaledParallelSum::new(a, b, pol)?;
    let thr = pol.conv_threshold(b.lambda_max());
    let mut trace = Vec::new();
    let mut last: Option<PsdMatrix> = None;
    for &n in n_schedule {
        let cur = scaled.at(n)?;
        trace.push((n, cur.entries().norm()));
        let done = last.as_ref().is_some_and(|prev| prev.max_abs_diff(&cur) < thr);
        last = Some(cur);
        if done {
            break;
        }
    }
    let value = last.expect("schedule is nonempty");
    let reference = ac_part(a, b, pol)?;
    Ok(ParallelSumResult {
        residual_cross: value.max_abs_diff(&reference),
        value,
        route: ParallelRoute::ScaledLimit,
        eps_trace: trace,
    })
}

/// `ran C ⊆ ran A`, tested by projector domination `P_A P_C = P_C`.
pub fn range_inclusion(c: &PsdMatrix, a: &PsdMatrix, pol: &TolerancePolicy) -> Result<bool> {
    check_dims(c, a)?;
    Ok(range_basis(a, pol).contains(&range_basis(c, pol), pol))
}

/// Splits `B` into its `A`-absolutely continuous and `A`-singular parts.
///
/// `unique` records whether `ran [A]B ⊆ ran A`, the criterion under which the
/// decomposition is the only one of its kind. Ranges are closed in finite
/// dimension, so the criterion holds for every pair; the flag is computed
/// anyway so that tolerance misconfiguration shows up.
pub fn lebesgue_decompose(a: &PsdMatrix, b: &PsdMatrix, pol: &TolerancePolicy) -> Result<Decomposition> {
    let om = omega(a, b, pol)?;
    let root = sqrt_psd(b, pol);
    let p = om.projector_matrix();
    let n = b.dim();
    let ac = sandwich(&root, &p, pol);
    let singular = sandwich(&root, &(DMatrix::<f64>::identity(n, n) - &p), pol);
    let unique = range_inclusion(&ac, a, pol)?;
    let limit = ac_part_limit(a, b, &default_n_schedule(), pol)?;
    let residuals = DecompositionResiduals {
        cross_route: limit.value.max_abs_diff(&ac),
        singularity: parallel_sum(a, &singular, pol)?.max_abs(),
        orthogonality: parallel_sum(&ac, &singular, pol)?.max_abs(),
    };
    Ok(Decomposition {
        ac_part: ac,
        singular_part: singular,
        omega: om,
        unique,
        residuals,
    })
}

/// `B` is `A`-absolutely continuous iff `Ω_A^B` is the whole space.
pub fn is_absolutely_continuous(a: &PsdMatrix, b: &PsdMatrix, pol: &TolerancePolicy) -> Result<bool> {
    Ok(omega(a, b, pol)?.dim() == b.dim())
}

/// `ran A ∩ ran B = {0}`, cross-checked against `‖A:B‖ ≈ 0`.
pub fn is_singular_pair(a: &PsdMatrix, b: &PsdMatrix, pol: &TolerancePolicy) -> Result<bool> {
    check_dims(a, b)?;
    let by_range = intersect(&range_basis(a, pol), &range_basis(b, pol), pol)?.dim() == 0;
    let norm = parallel_sum(a, b, pol)?.lambda_max();
    let by_norm = norm <= pol.conv_threshold(a.lambda_max().max(b.lambda_max()));
    if by_range != by_norm {
        return Err(Error::InternalInconsistency(format!(
            "range criterion says singular={by_range} but ‖A:B‖ = {norm:e}"
        )));
    }
    Ok(by_range)
}
