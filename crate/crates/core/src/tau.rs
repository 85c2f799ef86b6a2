//! The map `μ_G(X) = X − X:G`, its orbit, and the limit `τ_G(X)`.
//!
//! Five routes compute `τ_G(X)`:
//!
//! | route | formula |
//! |---|---|
//! | `Iterative` | last iterate of `F_{n+1} = μ_G(F_n)` |
//! | `ClosedM` | `(G+X)^{1/2} P_𝔐 (G+X)^{1/2}`, `𝔐 = ker(I − M₀)` |
//! | `ClosedL` | `X^{1/2} P_𝔏 X^{1/2}`, `𝔏 = (X^{1/2})^{-1}(ran G)^⊥` |
//! | `ViaLebesgue` | `X − [G]X` |
//! | `MRecurrence` | `(G+X)^{1/2} M_∞ (G+X)^{1/2}`, `M_{n+1} = (I − M₀ + M_n)^{-1} M_n²` |
//!
//! [`tau`] runs all of them and returns the `ClosedL` value.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::parallel::{fg2_decompose, parallel_sum, split};
use crate::psd::{check_dims, preimage_in_range, range_basis, sqrt_psd, symmetrize, PsdMatrix, Subspace, TolerancePolicy};
use crate::shorted::{ac_part, is_singular_pair};

/// Route residuals above `ROUTE_AGREEMENT · (1 + ‖X‖)` are a disagreement.
pub const ROUTE_AGREEMENT: f64 = 1e-6;

/// Orbit steps compared against the sandwiched `M_n`.
const ORBIT_PREFIX: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauRoute {
    Iterative,
    ClosedM,
    ClosedL,
    ViaLebesgue,
    MRecurrence,
}

impl TauRoute {
    pub const ALL: [TauRoute; 5] = [
        TauRoute::Iterative,
        TauRoute::ClosedM,
        TauRoute::ClosedL,
        TauRoute::ViaLebesgue,
        TauRoute::MRecurrence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TauRoute::Iterative => "iterative",
            TauRoute::ClosedM => "closed-m",
            TauRoute::ClosedL => "closed-l",
            TauRoute::ViaLebesgue => "via-lebesgue",
            TauRoute::MRecurrence => "m-recurrence",
        }
    }
}

/// Diagnostics of the orbit `F₀ = X`, `F_{n+1} = μ_G(F_n)`.
///
/// With `N = step_gaps.len()`, `iterates` holds `F₀..=F_N`, and
/// `ps_norms[n] = ‖F_n:G‖`, `partial_sums[n] = Σ_{k≤n} F_k:G` for `n < N`.
#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub iterates: Vec<PsdMatrix>,
    pub step_gaps: Vec<f64>,
    pub ps_norms: Vec<f64>,
    pub partial_sums: Vec<PsdMatrix>,
    pub stopped_by: StopReason,
    /// Index `n` of the first step with `‖F_n − F_{n+1}‖` below threshold.
    pub converged_at: Option<usize>,
}

impl IterationTrace {
    pub fn last(&self) -> &PsdMatrix {
        self.iterates.last().expect("orbit always holds F0")
    }

    pub fn steps(&self) -> usize {
        self.step_gaps.len()
    }
}

#[derive(Debug, Clone)]
pub struct TauResult {
    pub value: PsdMatrix,
    pub route: TauRoute,
    pub subspace_used: Option<Subspace>,
    pub cross_residuals: BTreeMap<String, f64>,
    /// Set by routes that iterate.
    pub stopped_by: Option<StopReason>,
}

impl TauResult {
    fn plain(value: PsdMatrix, route: TauRoute) -> Self {
        Self {
            value,
            route,
            subspace_used: None,
            cross_residuals: BTreeMap::new(),
            stopped_by: None,
        }
    }
}

/// `μ_G(X) = X − X:G`, computed as the Gram matrix `X (X+G)^+ X`.
pub fn mu(g: &PsdMatrix, x: &PsdMatrix, pol: &TolerancePolicy) -> Result<PsdMatrix> {
    Ok(split(x, g, pol)?.mu)
}

/// Iterates `μ_G` from `X` until the step gap drops below
/// `conv_abs · (1 + ‖X‖)` or `max_iter` steps have run.
pub fn mu_orbit(g: &PsdMatrix, x: &PsdMatrix, pol: &TolerancePolicy) -> Result<IterationTrace> {
    check_dims(x, g)?;
    let thr = pol.conv_threshold(x.lambda_max());
    let mut iterates = vec![x.clone()];
    let mut step_gaps = Vec::new();
    let mut ps_norms = Vec::new();
    let mut partial_sums: Vec<PsdMatrix> = Vec::new();
    let mut converged_at = None;
    for n in 0..pol.max_iter {
        let cur = &iterates[n];
        let s = split(cur, g, pol)?;
        let gap = cur.max_abs_diff(&s.mu);
        ps_norms.push(s.parallel.lambda_max());
        let acc = match partial_sums.last() {
            Some(prev) => prev.add(&s.parallel)?,
            None => s.parallel,
        };
        partial_sums.push(acc);
        step_gaps.push(gap);
        iterates.push(s.mu);
        if gap < thr {
            converged_at = Some(n);
            break;
        }
    }
    Ok(IterationTrace {
        iterates,
        step_gaps,
        ps_norms,
        partial_sums,
        stopped_by: if converged_at.is_some() {
            StopReason::Converged
        } else {
            StopReason::MaxIter
        },
        converged_at,
    })
}

pub fn tau_iterative(g: &PsdMatrix, x: &PsdMatrix, pol: &TolerancePolicy) -> Result<TauResult> {
    let trace = mu_orbit(g, x, pol)?;
    Ok(from_trace(&trace))
}

fn from_trace(trace: &IterationTrace) -> TauResult {
    let mut r = TauResult::plain(trace.last().clone(), TauRoute::Iterative);
    r.stopped_by = Some(trace.stopped_by);
    r
}

/// `R P R`, with eigenvalues below the resolution of `R²` zeroed.
fn sandwich(root: &PsdMatrix, p: &DMatrix<f64>, pol: &TolerancePolicy) -> PsdMatrix {
    let floor = pol.rank_rel(root.dim()) * root.lambda_max().powi(2);
    PsdMatrix::denoised(&(root.entries() * p * root.entries()), floor)
}

/// Number of eigenvalues of `M₀` in the cluster `[1 − eig1_cluster, ∞)`.
fn eig1_multiplicity(m0: &PsdMatrix, pol: &TolerancePolicy) -> usize {
    m0.eigen()
        .eigenvalues
        .iter()
        .filter(|&&l| l >= 1.0 - pol.eig1_cluster)
        .count()
}

/// `(G+X)^{1/2} P_𝔐 (G+X)^{1/2}` with `𝔐 = {f : (G+X)^{1/2} f ∈ ran G}^⊥`.
///
/// `dim 𝔐` is cross-checked against the eigenvalue-1 multiplicity of `M₀`.
pub fn tau_closed_m(g: &PsdMatrix, x: &PsdMatrix, pol: &TolerancePolicy) -> Result<TauResult> {
    check_dims(x, g)?;
    let s = x.add(g)?;
    let m_space = preimage_in_range(&s, &range_basis(g, pol), pol)?.complement();
    let m0 = fg2_decompose(x, g, pol)?.m;
    let k = eig1_multiplicity(&m0, pol);
    if k != m_space.dim() {
        return Err(Error::InternalInconsistency(format!(
            "dim 𝔐 = {} by preimage but ker(I − M0) has dimension {k}",
            m_space.dim()
        )));
    }
    let value = sandwich(&sqrt_psd(&s, pol), &m_space.projector_matrix(), pol);
    let mut r = TauResult::plain(value, TauRoute::ClosedM);
    r.subspace_used = Some(m_space);
    Ok(r)
}

/// `X^{1/2} P_𝔏 X^{1/2}` with `𝔏 = {g : X^{1/2} g ∈ ran G}^⊥`.
pub fn tau_closed_l(g: &PsdMatrix, x: &PsdMatrix, pol: &TolerancePolicy) -> Result<TauResult> {
    check_dims(x, g)?;
    let l_space = preimage_in_range(x, &range_basis(g, pol), pol)?.complement();
    let value = sandwich(&sqrt_psd(x, pol), &l_space.projector_matrix(), pol);
    let mut r = TauResult::plain(value, TauRoute::ClosedL);
    r.subspace_used = Some(l_space);
    Ok(r)
}

/// `X − [G]X`.
pub fn tau_via_lebesgue(g: &PsdMatrix, x: &PsdMatrix, pol: &TolerancePolicy) -> Result<TauResult> {
    let ac = ac_part(g, x, pol)?;
    let floor = pol.rank_rel(x.dim()) * x.lambda_max();
    let value = PsdMatrix::denoised(&(x.entries() - ac.entries()), floor);
    Ok(TauResult::plain(value, TauRoute::ViaLebesgue))
}

fn check_contraction(m0: &PsdMatrix, pol: &TolerancePolicy) -> Result<()> {
    let (lo, hi) = (m0.lambda_min(), m0.lambda_max());
    let slack = pol.slack(1.0);
    if lo < -slack || hi > 1.0 + slack {
        return Err(Error::NotContraction { min: lo, max: hi });
    }
    Ok(())
}

fn m_step(id_minus_m0: &DMatrix<f64>, mn: &PsdMatrix) -> Result<PsdMatrix> {
    let lhs = symmetrize(&(id_minus_m0 + mn.entries()));
    let chol = lhs
        .cholesky()
        .ok_or_else(|| Error::InternalInconsistency("I − M0 + Mn is not definite".into()))?;
    let sq = mn.entries() * mn.entries();
    Ok(PsdMatrix::clamped(&chol.solve(&sq)))
}

/// `M₀, M₁, …, M_steps` with `M_{n+1} = (I − M₀ + M_n)^{-1} M_n²`.
pub fn m_recurrence(m0: &PsdMatrix, steps: usize, pol: &TolerancePolicy) -> Result<Vec<PsdMatrix>> {
    check_contraction(m0, pol)?;
    let n = m0.dim();
    let base = DMatrix::<f64>::identity(n, n) - m0.entries();
    let mut out = vec![m0.clone()];
    for k in 0..steps {
        let next = m_step(&base, &out[k])?;
        out.push(next);
    }
    Ok(out)
}

/// Runs the recurrence until successive terms differ by less than
/// `2 · conv_abs` or `max_iter` steps have run.
pub fn m_recurrence_to_convergence(m0: &PsdMatrix, pol: &TolerancePolicy) -> Result<(Vec<PsdMatrix>, StopReason)> {
    check_contraction(m0, pol)?;
    let n = m0.dim();
    let base = DMatrix::<f64>::identity(n, n) - m0.entries();
    let thr = pol.conv_threshold(1.0);
    let mut out = vec![m0.clone()];
    for k in 0..pol.max_iter {
        let next = m_step(&base, &out[k])?;
        let gap = out[k].max_abs_diff(&next);
        out.push(next);
        if gap < thr {
            return Ok((out, StopReason::Converged));
        }
    }
    Ok((out, StopReason::MaxIter))
}

/// Sandwiches the limit of the M-recurrence. The residual against the first
/// few direct orbit iterates is stored under `"orbit-prefix"`.
pub fn tau_m_recurrence(g: &PsdMatrix, x: &PsdMatrix, pol: &TolerancePolicy) -> Result<TauResult> {
    check_dims(x, g)?;
    let mut prefix = vec![x.clone()];
    for k in 0..ORBIT_PREFIX {
        let next = mu(g, &prefix[k], pol)?;
        prefix.push(next);
    }
    m_route(g, x, &prefix, pol)
}

fn m_route(g: &PsdMatrix, x: &PsdMatrix, prefix: &[PsdMatrix], pol: &TolerancePolicy) -> Result<TauResult> {
    let pair = fg2_decompose(x, g, pol)?;
    let (ms, stop) = m_recurrence_to_convergence(&pair.m, pol)?;
    let root = &pair.sum_root;
    let lifted = |m: &PsdMatrix| sandwich(root, m.entries(), pol);
    let prefix_residual = prefix
        .iter()
        .zip(&ms)
        .map(|(f, m)| lifted(m).max_abs_diff(f))
        .fold(0.0, f64::max);
    let mut r = TauResult::plain(lifted(ms.last().expect("nonempty")), TauRoute::MRecurrence);
    r.cross_residuals.insert("orbit-prefix".into(), prefix_residual);
    r.stopped_by = Some(stop);
    Ok(r)
}

/// `Y` is fixed by `μ_G` iff `Y:G = 0` iff `ran Y ∩ ran G = {0}`.
pub fn is_fixed_point(g: &PsdMatrix, y: &PsdMatrix, pol: &TolerancePolicy) -> Result<bool> {
    is_singular_pair(y, g, pol)
}

/// All five routes side by side, before any agreement verdict.
#[derive(Debug, Clone)]
pub struct RouteComparison {
    pub trace: IterationTrace,
    /// One result per route, in [`TauRoute::ALL`] order.
    pub routes: Vec<TauResult>,
    /// Max-abs gap of each route to `ClosedL`, the largest gap between any
    /// two routes (`"pairwise-max"`), and the M-route's `"orbit-prefix"`.
    pub residuals: BTreeMap<String, f64>,
    /// `ROUTE_AGREEMENT · (1 + ‖X‖)`.
    pub threshold: f64,
}

impl RouteComparison {
    pub fn get(&self, route: TauRoute) -> &TauResult {
        &self.routes[route as usize]
    }

    pub fn agree(&self) -> bool {
        self.residuals.values().all(|&v| v <= self.threshold)
    }
}

pub fn tau_all_routes(g: &PsdMatrix, x: &PsdMatrix, pol: &TolerancePolicy) -> Result<RouteComparison> {
    check_dims(x, g)?;
    let trace = mu_orbit(g, x, pol)?;
    let prefix_len = trace.iterates.len().min(ORBIT_PREFIX + 1);
    let routes = vec![
        from_trace(&trace),
        tau_closed_m(g, x, pol)?,
        tau_closed_l(g, x, pol)?,
        tau_via_lebesgue(g, x, pol)?,
        m_route(g, x, &trace.iterates[..prefix_len], pol)?,
    ];
    let canonical = &routes[TauRoute::ClosedL as usize].value;
    let mut residuals = BTreeMap::new();
    let mut pairwise: f64 = 0.0;
    for (i, r) in routes.iter().enumerate() {
        for s in &routes[i + 1..] {
            pairwise = pairwise.max(r.value.max_abs_diff(&s.value));
        }
        if r.route != TauRoute::ClosedL {
            residuals.insert(r.route.name().to_string(), r.value.max_abs_diff(canonical));
        }
    }
    residuals.insert("pairwise-max".into(), pairwise);
    residuals.extend(routes[TauRoute::MRecurrence as usize].cross_residuals.clone());
    Ok(RouteComparison {
        trace,
        routes,
        residuals,
        threshold: ROUTE_AGREEMENT * (1.0 + x.lambda_max()),
    })
}

/// Runs every route and returns the `ClosedL` value.
///
/// Any residual of [`tau_all_routes`] above `ROUTE_AGREEMENT · (1 + ‖X‖)`
/// yields [`Error::RouteDisagreement`].
pub fn tau(g: &PsdMatrix, x: &PsdMatrix, pol: &TolerancePolicy) -> Result<TauResult> {
    let cmp = tau_all_routes(g, x, pol)?;
    if !cmp.agree() {
        return Err(Error::RouteDisagreement {
            residuals: cmp.residuals.into_iter().collect(),
            threshold: cmp.threshold,
        });
    }
    let stopped_by = Some(cmp.trace.stopped_by);
    let closed_l = cmp.routes.into_iter().nth(TauRoute::ClosedL as usize).expect("five routes");
    Ok(TauResult {
        cross_residuals: cmp.residuals,
        stopped_by,
        ..closed_l
    })
}

/// `‖τ:G‖`, the quantity the annihilation identity says is zero.
pub fn annihilation_residual(g: &PsdMatrix, t: &PsdMatrix, pol: &TolerancePolicy) -> Result<f64> {
    Ok(parallel_sum(t, g, pol)?.lambda_max())
}
