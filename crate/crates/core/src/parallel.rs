//! The parallel sum `X:G` by independent routes.
//!
//! * shorted formula `X − ((X+G)^{-1/2}X)ᵀ((X+G)^{-1/2}X)` (canonical),
//! * regularized limit `X(X+G+εI)^{-1}G` as `ε ↓ 0`,
//! * harmonic formula `(X^{-1}+G^{-1})^{-1}` for definite inputs,
//! * contraction form `(X+G)^{1/2}(M−M²)(X+G)^{1/2}`,
//! * the variational value `inf{(Xf,f)+(Gg,g) : h = f+g}` for one vector.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::psd::{check_dims, pinv_psd, pinv_sqrt_psd, sqrt_psd, symmetrize, PsdMatrix, TolerancePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParallelRoute {
    Shorted,
    Regularized,
    InverseFormula,
    ViaContraction,
    /// `n·A:B` along an increasing schedule of `n`.
    ScaledLimit,
}

#[derive(Debug, Clone)]
pub struct ParallelSumResult {
    pub value: PsdMatrix,
    pub route: ParallelRoute,
    /// Max-abs distance to the reference value of the same limit.
    pub residual_cross: f64,
    /// `(parameter, ‖iterate‖_F)` along the schedule, for limit routes.
    pub eps_trace: Vec<(f64, f64)>,
}

/// The representation `X = S^{1/2} M S^{1/2}`, `G = S^{1/2}(I−M)S^{1/2}` with
/// `S = X + G`.
#[derive(Debug, Clone)]
pub struct Fg2Pair {
    pub m: PsdMatrix,
    pub sum_root: PsdMatrix,
}

/// `μ_G(X)` and `X:G` sharing one factorization of `X + G`.
pub(crate) struct Split {
    pub mu: PsdMatrix,
    pub parallel: PsdMatrix,
}

pub(crate) fn split(x: &PsdMatrix, g: &PsdMatrix, pol: &TolerancePolicy) -> Result<Split> {
    check_dims(x, g)?;
    let s = x.add(g)?;
    // eigenvalues of X+G below this are discarded by the pseudoinverse, so
    // nothing smaller is resolved in either output
    let floor = s.eigen().cutoff(pol);
    let root_inv = pinv_sqrt_psd(&s, pol);
    let tx = root_inv.entries() * x.entries();
    // μ_G(X) = X (X+G)^+ X, a Gram matrix, so no cancellation
    let mu = PsdMatrix::denoised(&(tx.transpose() * &tx), floor);
    let parallel = if x.lambda_max() <= g.lambda_max() {
        PsdMatrix::denoised(&(x.entries() - tx.transpose() * &tx), floor)
    } else {
        let tg = root_inv.entries() * g.entries();
        PsdMatrix::denoised(&(g.entries() - tg.transpose() * &tg), floor)
    };
    Ok(Split { mu, parallel })
}

/// `X:G` by the shorted formula.
///
/// `X:G = G:X`, so the formula is applied to whichever operand has the smaller
/// norm; the subtraction then cancels less.
pub fn parallel_sum(x: &PsdMatrix, g: &PsdMatrix, pol: &TolerancePolicy) -> Result<PsdMatrix> {
    Ok(split(x, g, pol)?.parallel)
}

/// Geometric schedule `ε_k = 10^{-2}·4^{-k}`, `k = 0..16`.
pub fn default_eps_schedule() -> Vec<f64> {
    (0..16).map(|k| 1e-2 * 4f64.powi(-k)).collect()
}

fn check_schedule(schedule: &[f64], decreasing: bool) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::ScheduleInvalid("schedule is empty".into()));
    }
    if schedule.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::ScheduleInvalid("schedule entries must be positive and finite".into()));
    }
    let ordered = schedule.windows(2).all(|w| if decreasing { w[1] < w[0] } else { w[1] > w[0] });
    if !ordered {
        let dir = if decreasing { "decreasing" } else { "increasing" };
        return Err(Error::ScheduleInvalid(format!("schedule must be strictly {dir}")));
    }
    Ok(())
}

pub(crate) fn check_increasing(schedule: &[f64]) -> Result<()> {
    check_schedule(schedule, false)
}

/// `X(X+G+εI)^{-1}G` along `eps_schedule`, with true inverses.
pub fn parallel_sum_regularized(
    x: &PsdMatrix,
    g: &PsdMatrix,
    eps_schedule: &[f64],
    pol: &TolerancePolicy,
) -> Result<ParallelSumResult> {
    check_dims(x, g)?;
    check_schedule(eps_schedule, true)?;
    let n = x.dim();
    let sum = x.entries() + g.entries();
    let mut trace = Vec::with_capacity(eps_schedule.len());
    let mut last = DMatrix::zeros(n, n);
    for &eps in eps_schedule {
        let reg = &sum + DMatrix::<f64>::identity(n, n) * eps;
        let chol = reg
            .cholesky()
            .ok_or_else(|| Error::InternalInconsistency(format!("X+G+{eps:e}I is not definite")))?;
        let z = chol.solve(g.entries());
        last = symmetrize(&(x.entries() * z));
        trace.push((eps, last.norm()));
    }
    let value = PsdMatrix::clamped(&last);
    let reference = parallel_sum(x, g, pol)?;
    Ok(ParallelSumResult {
        residual_cross: value.max_abs_diff(&reference),
        value,
        route: ParallelRoute::Regularized,
        eps_trace: trace,
    })
}

fn require_definite(a: &PsdMatrix, pol: &TolerancePolicy) -> Result<()> {
    let cutoff = a.eigen().cutoff(pol);
    if a.lambda_min() <= cutoff || a.lambda_max() <= 0.0 {
        return Err(Error::NotDefinite {
            lambda_min: a.lambda_min(),
            cutoff,
        });
    }
    Ok(())
}

/// `(X^{-1} + G^{-1})^{-1}` for positive definite `X` and `G`.
pub fn parallel_sum_definite(x: &PsdMatrix, g: &PsdMatrix, pol: &TolerancePolicy) -> Result<PsdMatrix> {
    check_dims(x, g)?;
    require_definite(x, pol)?;
    require_definite(g, pol)?;
    let inv = |a: &PsdMatrix| -> Result<DMatrix<f64>> {
        a.entries()
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .ok_or(Error::NotDefinite {
                lambda_min: a.lambda_min(),
                cutoff: a.eigen().cutoff(pol),
            })
    };
    let harmonic = symmetrize(&(inv(x)? + inv(g)?));
    let out = harmonic
        .cholesky()
        .ok_or_else(|| Error::InternalInconsistency("X^-1 + G^-1 is not definite".into()))?
        .inverse();
    Ok(PsdMatrix::clamped(&out))
}

/// `inf{(Xf,f) + (Gg,g) : h = f + g}`, attained at `f* = (X+G)^+ G h`.
pub fn variational_value(x: &PsdMatrix, g: &PsdMatrix, h: &DVector<f64>, pol: &TolerancePolicy) -> Result<f64> {
    check_dims(x, g)?;
    if h.len() != x.dim() {
        return Err(Error::DimMismatch {
            expected: x.dim(),
            found: h.len(),
        });
    }
    let s = x.add(g)?;
    let f = pinv_psd(&s, pol).entries() * (g.entries() * h);
    let rest = h - &f;
    Ok(f.dot(&(x.entries() * &f)) + rest.dot(&(g.entries() * &rest)))
}

/// Extracts `M = (X+G)^{-1/2} X (X+G)^{-1/2}`, clamped spectrally to `[0, 1]`.
pub fn fg2_decompose(x: &PsdMatrix, g: &PsdMatrix, pol: &TolerancePolicy) -> Result<Fg2Pair> {
    check_dims(x, g)?;
    let s = x.add(g)?;
    let root_inv = pinv_sqrt_psd(&s, pol);
    let raw = PsdMatrix::clamped(&(root_inv.entries() * x.entries() * root_inv.entries()));
    let vals: Vec<f64> = raw.eigen().eigenvalues.iter().map(|l| l.clamp(0.0, 1.0)).collect();
    let m = PsdMatrix::from_spectrum(&vals, &raw.eigen().vectors);
    Ok(Fg2Pair {
        m,
        sum_root: sqrt_psd(&s, pol),
    })
}

/// `X:G = (X+G)^{1/2}(M − M²)(X+G)^{1/2}`.
pub fn parallel_sum_via_m(x: &PsdMatrix, g: &PsdMatrix, pol: &TolerancePolicy) -> Result<PsdMatrix> {
    let pair = fg2_decompose(x, g, pol)?;
    let eig = pair.m.eigen();
    let vals: Vec<f64> = eig.eigenvalues.iter().map(|l| l - l * l).collect();
    let core = PsdMatrix::from_spectrum(&vals, &eig.vectors);
    let r = pair.sum_root.entries();
    Ok(PsdMatrix::clamped(&(r * core.entries() * r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psd::loewner_leq;

    fn pol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    fn diag(v: &[f64]) -> PsdMatrix {
        PsdMatrix::diag(v)
    }

    #[test]
    fn scalar_harmonic_mean() {
        let v = parallel_sum(&diag(&[2.0]), &diag(&[2.0]), &pol()).unwrap();
        assert!((v.entries()[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint_ranges_give_zero() {
        let v = parallel_sum(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0]), &pol()).unwrap();
        assert!(v.max_abs() < 1e-15);
    }

    #[test]
    fn diagonal_entrywise_formula() {
        // xg/(x+g): 2·4/6 = 4/3, 3·6/9 = 2
        let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[4.0 / 3.0, 2.0]));
        let x = diag(&[2.0, 3.0]);
        let g = diag(&[4.0, 6.0]);
        for v in [
            parallel_sum(&x, &g, &pol()).unwrap(),
            parallel_sum_definite(&x, &g, &pol()).unwrap(),
            parallel_sum_via_m(&x, &g, &pol()).unwrap(),
        ] {
            assert!((v.entries() - &expected).amax() < 1e-14);
        }
    }

    #[test]
    fn regularized_identity_pair() {
        let i2 = PsdMatrix::identity(2);
        let r = parallel_sum_regularized(&i2, &i2, &[1e-2, 1e-6, 1e-10], &pol()).unwrap();
        assert!((r.value.entries() - DMatrix::<f64>::identity(2, 2) * 0.5).amax() < 1e-10);
        // 1/(2+ε) increases as ε decreases
        assert!(r.eps_trace.windows(2).all(|w| w[1].1 >= w[0].1));
        assert_eq!(r.route, ParallelRoute::Regularized);
    }

    #[test]
    fn regularized_disjoint_and_rank_one() {
        let r = parallel_sum_regularized(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0]), &default_eps_schedule(), &pol()).unwrap();
        assert!(r.value.max_abs() < 1e-10);
        let x = PsdMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]], &pol()).unwrap();
        let r = parallel_sum_regularized(&x, &PsdMatrix::identity(2), &default_eps_schedule(), &pol()).unwrap();
        assert!(r.residual_cross < 1e-8);
    }

    #[test]
    fn schedule_validation() {
        let i = PsdMatrix::identity(2);
        assert!(matches!(parallel_sum_regularized(&i, &i, &[], &pol()), Err(Error::ScheduleInvalid(_))));
        assert!(matches!(
            parallel_sum_regularized(&i, &i, &[1e-3, 1e-2], &pol()),
            Err(Error::ScheduleInvalid(_))
        ));
        assert!(matches!(
            parallel_sum_regularized(&i, &i, &[1e-3, -1.0], &pol()),
            Err(Error::ScheduleInvalid(_))
        ));
    }

    #[test]
    fn definite_route_rejects_singular() {
        let e = parallel_sum_definite(&diag(&[1.0, 0.0]), &PsdMatrix::identity(2), &pol());
        assert!(matches!(e, Err(Error::NotDefinite { .. })));
        let two = PsdMatrix::identity(3).scaled(2.0);
        let v = parallel_sum_definite(&two, &two, &pol()).unwrap();
        assert!((v.entries() - DMatrix::<f64>::identity(3, 3)).amax() < 1e-15);
    }

    #[test]
    fn variational_examples() {
        let p = pol();
        let i = PsdMatrix::identity(3);
        let h = DVector::from_column_slice(&[0.6, 0.0, 0.8]);
        assert!((variational_value(&i, &i, &h, &p).unwrap() - 0.5).abs() < 1e-15);
        let x = PsdMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]], &p).unwrap();
        let h2 = DVector::from_column_slice(&[0.3, -1.2]);
        assert!(variational_value(&x, &PsdMatrix::zeros(2), &h2, &p).unwrap().abs() < 1e-15);
        let hv = DVector::from_column_slice(&[1.0, 1.0]);
        let v = variational_value(&diag(&[2.0, 3.0]), &diag(&[4.0, 6.0]), &hv, &p).unwrap();
        assert!((v - 10.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn fg2_examples() {
        let p = pol();
        let i = PsdMatrix::identity(2);
        let m = fg2_decompose(&i, &i, &p).unwrap().m;
        assert!((m.entries() - DMatrix::<f64>::identity(2, 2) * 0.5).amax() < 1e-15);
        let m = fg2_decompose(&i, &PsdMatrix::zeros(2), &p).unwrap().m;
        assert!((m.entries() - DMatrix::<f64>::identity(2, 2)).amax() < 1e-15);
        let m = fg2_decompose(&diag(&[1.0, 0.0]), &diag(&[0.0, 3.0]), &p).unwrap().m;
        assert!((m.entries() - DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[1.0, 0.0]))).amax() < 1e-15);
    }

    #[test]
    fn via_m_examples() {
        let p = pol();
        let i = PsdMatrix::identity(2);
        let v = parallel_sum_via_m(&i, &i, &p).unwrap();
        assert!((v.entries() - DMatrix::<f64>::identity(2, 2) * 0.5).amax() < 1e-15);
        let v = parallel_sum_via_m(&diag(&[1.0, 0.0]), &diag(&[0.0, 3.0]), &p).unwrap();
        assert!(v.max_abs() < 1e-15);
    }

    #[test]
    fn result_is_below_both_operands() {
        let p = pol();
        let x = PsdMatrix::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 2.0, 1.0], &[0.0, 1.0, 1.0]], &p).unwrap();
        let g = PsdMatrix::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 2.0]], &p).unwrap();
        let v = parallel_sum(&x, &g, &p).unwrap();
        assert!(loewner_leq(&v, &x, &p).unwrap());
        assert!(loewner_leq(&v, &g, &p).unwrap());
        let w = parallel_sum(&g, &x, &p).unwrap();
        assert!(v.max_abs_diff(&w) < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let e = parallel_sum(&PsdMatrix::identity(2), &PsdMatrix::identity(3), &pol());
        assert!(matches!(e, Err(Error::DimMismatch { .. })));
    }
}
