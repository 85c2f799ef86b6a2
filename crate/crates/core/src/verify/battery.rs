//! Property battery: every identity of the parallel-sum calculus checked
//! against one `(G, X)` pair.
//!
//! Auxiliary operands (perturbations, congruences, replacement operators) are
//! drawn from a generator seeded by the pair digest, so a report depends on
//! the inputs and the policy only.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::ensemble::{gaussian, random_conditioned, random_psd};
use crate::error::{Error, Result};
use crate::parallel::{
    default_eps_schedule, fg2_decompose, parallel_sum, parallel_sum_definite, parallel_sum_regularized,
    parallel_sum_via_m, variational_value,
};
use crate::psd::{
    check_dims, frac_power, intersect, kernel_basis, loewner_gap, pinv_sqrt_psd, range_basis, sqrt_psd,
    PsdMatrix, Subspace, TolerancePolicy,
};
use crate::shorted::{
    ac_part, is_absolutely_continuous, is_singular_pair, lebesgue_decompose, Decomposition, ScaledParallelSum,
};
use crate::tau::{annihilation_residual, mu, tau_all_routes, tau_closed_l, RouteComparison, StopReason, TauRoute};

/// Equalities between computed operators, relative to `1 + ‖operands‖`.
pub const TOL_IDENTITY: f64 = 1e-8;
/// Agreement of the parallel-sum routes.
pub const TOL_PARALLEL_ROUTES: f64 = 1e-8;
/// Mutual singularity of the Lebesgue parts.
pub const TOL_MUTUAL_SINGULARITY: f64 = 1e-8;
/// Gap between `lim (nA):B` and the projection formula.
pub const TOL_LIMIT_ROUTE: f64 = 1e-6;
/// Max-abs distance between projectors of subspaces that should coincide.
pub const TOL_SUBSPACE: f64 = 1e-6;
/// `‖GX − XG‖` below `COMMUTING · (1 + ‖G‖)(1 + ‖X‖)` counts as commuting.
const COMMUTING: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    SkippedDegenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// The identity under test.
    pub anchor: String,
    pub status: CheckStatus,
    pub residual: f64,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub checks: Vec<Check>,
    pub pair_digest: String,
    pub policy: TolerancePolicy,
}

impl PropertyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn count(&self, status: CheckStatus) -> usize {
        self.checks.iter().filter(|c| c.status == status).count()
    }
}

/// SHA-256 over the dimension and little-endian entries of `G` then `X`.
pub fn pair_digest(g: &PsdMatrix, x: &PsdMatrix) -> String {
    let mut h = Sha256::new();
    for m in [g, x] {
        h.update((m.dim() as u64).to_le_bytes());
        for v in m.entries().iter() {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

struct Outcome {
    residual: f64,
    threshold: f64,
    note: Option<String>,
}

impl Outcome {
    fn new(residual: f64, threshold: f64) -> Self {
        Self {
            residual,
            threshold,
            note: None,
        }
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// An implication whose hypothesis does not hold for this pair.
    fn vacuous(why: &str) -> Self {
        Self::new(0.0, 0.0).note(format!("hypothesis not met: {why}"))
    }

    /// Three-way agreement of boolean criteria.
    fn agree(flags: &[bool], note: String) -> Self {
        let ok = flags.windows(2).all(|w| w[0] == w[1]);
        Self::new(if ok { 0.0 } else { 1.0 }, 0.0).note(note)
    }
}

fn shared<T>(r: &Result<T>) -> Result<&T> {
    r.as_ref().map_err(Clone::clone)
}

fn leq(a: &PsdMatrix, b: &PsdMatrix, pol: &TolerancePolicy) -> Result<Outcome> {
    let gap = loewner_gap(a, b)?;
    let scale = a.lambda_max().max(b.lambda_max());
    Ok(Outcome::new((-gap).max(0.0), pol.slack(scale)))
}

fn worst(outcomes: Vec<Outcome>) -> Outcome {
    outcomes
        .into_iter()
        .max_by(|a, b| {
            let ra = a.residual / a.threshold.max(f64::MIN_POSITIVE);
            let rb = b.residual / b.threshold.max(f64::MIN_POSITIVE);
            ra.total_cmp(&rb)
        })
        .expect("at least one outcome")
}

fn identity(a: &PsdMatrix, b: &PsdMatrix, scale: f64) -> Outcome {
    Outcome::new(a.max_abs_diff(b), TOL_IDENTITY * (1.0 + scale))
}

fn tau_l(g: &PsdMatrix, x: &PsdMatrix, pol: &TolerancePolicy) -> Result<PsdMatrix> {
    Ok(tau_closed_l(g, x, pol)?.value)
}

fn is_definite(a: &PsdMatrix, pol: &TolerancePolicy) -> bool {
    a.rank(pol) == a.dim()
}

/// Smallest eigenvalue of `a` above its rank cutoff.
fn lambda_min_nonzero(a: &PsdMatrix, pol: &TolerancePolicy) -> f64 {
    let cut = a.eigen().cutoff(pol);
    a.eigen()
        .eigenvalues
        .iter()
        .copied()
        .filter(|&l| l > cut)
        .fold(f64::INFINITY, f64::min)
}

/// Eigenspace of a symmetric matrix for eigenvalues `≥ 1 − eig1_cluster`.
fn eig1_space(m: &DMatrix<f64>, pol: &TolerancePolicy) -> Subspace {
    let e = crate::psd::EigenDecomposition::of_symmetric(m);
    let cols: Vec<usize> = (0..e.dim())
        .filter(|&i| e.eigenvalues[i] >= 1.0 - pol.eig1_cluster)
        .collect();
    Subspace::span(&e.vectors.select_columns(cols.iter()), 1e-8)
}

struct Ctx<'a> {
    g: &'a PsdMatrix,
    x: &'a PsdMatrix,
    pol: &'a TolerancePolicy,
    seed: u64,
    sg: f64,
    sx: f64,
    /// `max(‖G‖, ‖X‖)`.
    s: f64,
    ps: Result<PsdMatrix>,
    routes: Result<RouteComparison>,
    dec: Result<Decomposition>,
}

impl<'a> Ctx<'a> {
    fn rng(&self, tag: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    fn tau(&self) -> Result<&PsdMatrix> {
        Ok(&shared(&self.routes)?.get(TauRoute::ClosedL).value)
    }

    /// `Q^{1/2}`-sandwich `A^{1/2} Q A^{1/2}` with `Q` definite, same range as `A`.
    fn same_range(&self, a: &PsdMatrix, tag: u64) -> Result<PsdMatrix> {
        let mut rng = self.rng(tag);
        let q = random_psd(&mut rng, a.dim(), a.dim(), 0.5, 2.0);
        let r = sqrt_psd(a, self.pol);
        q.congruence(r.entries())
    }

    fn perturbation(&self, tag: u64) -> PsdMatrix {
        let n = self.x.dim();
        let mut rng = self.rng(tag);
        let rank = rng.random_range(1..=n);
        random_psd(&mut rng, n, rank, SPECTRAL_LO, 1.0)
    }
}

const SPECTRAL_LO: f64 = super::ensemble::SPECTRAL_FLOOR;

#[derive(Default)]
struct Builder {
    checks: Vec<Check>,
}

impl Builder {
    fn run(&mut self, name: &str, anchor: &str, f: impl FnOnce() -> Result<Outcome>) {
        let check = match f() {
            Ok(o) => Check {
                name: name.into(),
                anchor: anchor.into(),
                status: if o.residual <= o.threshold {
                    CheckStatus::Pass
                } else {
                    CheckStatus::Fail
                },
                residual: o.residual,
                threshold: o.threshold,
                note: o.note,
            },
            Err(e) => Check {
                name: name.into(),
                anchor: anchor.into(),
                status: CheckStatus::Fail,
                residual: f64::INFINITY,
                threshold: 0.0,
                note: Some(e.to_string()),
            },
        };
        self.checks.push(check);
    }

    fn degenerate(&mut self, name: &str, anchor: &str, reason: &str) {
        self.checks.push(Check {
            name: name.into(),
            anchor: anchor.into(),
            status: CheckStatus::SkippedDegenerate,
            residual: 0.0,
            threshold: 0.0,
            note: Some(reason.into()),
        });
    }
}

/// Runs every check against `(G, X)`, in a fixed order.
pub fn run_battery(g: &PsdMatrix, x: &PsdMatrix, pol: &TolerancePolicy) -> Result<PropertyReport> {
    check_dims(x, g)?;
    pol.validate()?;
    let digest = pair_digest(g, x);
    let seed = u64::from_le_bytes(hex::decode(&digest[..16]).expect("hex digest")[..8].try_into().expect("8 bytes"));
    let ctx = Ctx {
        g,
        x,
        pol,
        seed,
        sg: g.lambda_max(),
        sx: x.lambda_max(),
        s: g.lambda_max().max(x.lambda_max()),
        ps: parallel_sum(x, g, pol),
        routes: tau_all_routes(g, x, pol),
        dec: lebesgue_decompose(g, x, pol),
    };
    let mut b = Builder::default();
    parallel_checks(&ctx, &mut b);
    orbit_checks(&ctx, &mut b);
    tau_checks(&ctx, &mut b);
    lebesgue_checks(&ctx, &mut b);
    Ok(PropertyReport {
        checks: b.checks,
        pair_digest: digest,
        policy: *pol,
    })
}

fn parallel_checks(c: &Ctx, b: &mut Builder) {
    let (g, x, pol) = (c.g, c.x, c.pol);
    b.run(
        "parallel.route_agreement",
        "X:G = X − X(X+G)^+X = (X+G)^{1/2}(M−M²)(X+G)^{1/2} = lim_{ε↓0} X(X+G+εI)^{-1}G",
        || {
            let ps = shared(&c.ps)?;
            let via_m = parallel_sum_via_m(x, g, pol)?.max_abs_diff(ps);
            let reg = parallel_sum_regularized(x, g, &default_eps_schedule(), pol)?.residual_cross;
            let mut r = via_m.max(reg);
            let mut note = format!("via-m {via_m:.3e}, regularized {reg:.3e}");
            if is_definite(x, pol) && is_definite(g, pol) {
                let d = parallel_sum_definite(x, g, pol)?.max_abs_diff(ps);
                note.push_str(&format!(", definite {d:.3e}"));
                r = r.max(d);
            }
            Ok(Outcome::new(r, TOL_PARALLEL_ROUTES * (1.0 + c.s)).note(note))
        },
    );
    b.run(
        "parallel.range_identity",
        "ran(X:G)^{1/2} = ran X^{1/2} ∩ ran G^{1/2}",
        || {
            let rank = shared(&c.ps)?.rank(pol);
            let both = intersect(&range_basis(x, pol), &range_basis(g, pol), pol)?.dim();
            Ok(Outcome::new(rank.abs_diff(both) as f64, 0.0)
                .note(format!("rank(X:G) = {rank}, dim(ran X ∩ ran G) = {both}")))
        },
    );
    b.run("parallel.symmetry", "X:G = G:X", || {
        // both sides by the shorted formula, one per operand
        let xg = x.entries() - mu(g, x, pol)?.entries();
        let gx = g.entries() - mu(x, g, pol)?.entries();
        Ok(Outcome::new((xg - gx).amax(), TOL_IDENTITY * (1.0 + c.s)))
    });
    b.run("parallel.upper_bounds", "X:G ≤ X, X:G ≤ G", || {
        let ps = shared(&c.ps)?;
        Ok(worst(vec![leq(ps, x, pol)?, leq(ps, g, pol)?]))
    });
    b.run(
        "parallel.monotonicity",
        "X′ ≤ X″, G′ ≤ G″ ⟹ X′:G′ ≤ X″:G″",
        || {
            let x2 = x.add(&c.perturbation(1))?;
            let g2 = g.add(&c.perturbation(2))?;
            leq(shared(&c.ps)?, &parallel_sum(&x2, &g2, pol)?, pol)
        },
    );
    b.run(
        "parallel.transformer_inequality",
        "T*(A:B)T ≤ (T*AT):(T*BT)",
        || {
            let n = x.dim();
            let mut rng = c.rng(3);
            let mut t = random_conditioned(&mut rng, n, 0.5, 2.0);
            // a singular T, so that only the inequality is expected
            let k = rng.random_range(0..n);
            t.column_mut(k).fill(0.0);
            let lhs = shared(&c.ps)?.congruence(&t)?;
            let rhs = parallel_sum(&x.congruence(&t)?, &g.congruence(&t)?, pol)?;
            leq(&lhs, &rhs, pol)
        },
    );
    b.run(
        "parallel.transformer_equality",
        "ker T* ∩ ran(A+B)^{1/2} = {0} ⟹ T*(A:B)T = (T*AT):(T*BT)",
        || {
            let mut rng = c.rng(4);
            let t = random_conditioned(&mut rng, x.dim(), 0.5, 2.0);
            let lhs = shared(&c.ps)?.congruence(&t)?;
            let rhs = parallel_sum(&x.congruence(&t)?, &g.congruence(&t)?, pol)?;
            Ok(identity(&lhs, &rhs, 4.0 * c.s))
        },
    );
    b.run(
        "parallel.variational",
        "((X:G)h, h) = inf{(Xf, f) + (Gg, g) : h = f + g}",
        || {
            let mut rng = c.rng(5);
            let h: DVector<f64> = gaussian(&mut rng, x.dim(), 1).column(0).normalize();
            let v = variational_value(x, g, &h, pol)?;
            let q = h.dot(&(shared(&c.ps)?.entries() * &h));
            Ok(Outcome::new((v - q).abs(), TOL_IDENTITY * (1.0 + c.s)))
        },
    );
    b.run(
        "parallel.contraction_representation",
        "X = (X+G)^{1/2}M(X+G)^{1/2}, G = (X+G)^{1/2}(I−M)(X+G)^{1/2}, 0 ≤ M ≤ I",
        || {
            let pair = fg2_decompose(x, g, pol)?;
            let r = pair.sum_root.entries();
            let xm = r * pair.m.entries() * r;
            let gm = r * r - &xm;
            let bound = (pair.m.lambda_max() - 1.0).max(-pair.m.lambda_min()).max(0.0);
            let res = (xm - x.entries()).amax().max((gm - g.entries()).amax()).max(bound);
            Ok(Outcome::new(res, TOL_IDENTITY * (1.0 + c.s)))
        },
    );
}

/// Largest `n` for which `λ_min` of the `n`-th iterate is provably above
/// the resolution `rank_rel · ‖X + G‖` of the orbit: from `ℓ₀`,
/// `ℓ_{n+1} = ℓ_n² / ‖X + G‖` bounds it below.
fn resolvable_prefix(l0: f64, c: &Ctx, len: usize) -> usize {
    let top = (c.x.add(c.g).map(|s| s.lambda_max()).unwrap_or(f64::INFINITY)).max(f64::MIN_POSITIVE);
    let floor = 10.0 * c.pol.rank_rel(c.x.dim()) * top;
    let mut l = l0;
    let mut n = 0;
    while n < len && l > floor {
        n += 1;
        l = l * l / top;
    }
    n
}

fn rank_preserved(c: &Ctx, rank: usize, l0: f64) -> Result<Outcome> {
    let trace = &shared(&c.routes)?.trace;
    let upto = resolvable_prefix(l0, c, trace.iterates.len());
    let bad = trace.iterates[..upto].iter().filter(|f| f.rank(c.pol) != rank).count();
    Ok(Outcome::new(bad as f64, 0.0).note(format!(
        "rank {rank} checked on {upto} of {} iterates",
        trace.iterates.len()
    )))
}

fn orbit_checks(c: &Ctx, b: &mut Builder) {
    let (x, pol) = (c.x, c.pol);
    let route_thr = || shared(&c.routes).map(|r| r.threshold);
    b.run("orbit.monotone", "F₀ ≥ F₁ ≥ ⋯ ≥ F_n ≥ F_{n+1}", || {
        let trace = &shared(&c.routes)?.trace;
        let all = trace
            .iterates
            .windows(2)
            .map(|w| leq(&w[1], &w[0], pol))
            .collect::<Result<Vec<_>>>()?;
        Ok(worst(all).note(format!("{} iterates", trace.iterates.len())))
    });
    b.run(
        "orbit.parallel_norms",
        "μ^{[n]}_G(X):G ≥ μ^{[n+1]}_G(X):G",
        || {
            let trace = &shared(&c.routes)?.trace;
            let rise = trace
                .ps_norms
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(0.0, f64::max);
            Ok(Outcome::new(rise, pol.slack(c.sx)))
        },
    );
    b.run(
        "orbit.partial_sums",
        "Σ_{k≤n} μ^{[k]}_G(X):G = X − μ^{[n+1]}_G(X)",
        || {
            let trace = &shared(&c.routes)?.trace;
            let r = trace
                .partial_sums
                .iter()
                .enumerate()
                .map(|(n, s)| (s.entries() + trace.iterates[n + 1].entries() - x.entries()).amax())
                .fold(0.0, f64::max);
            Ok(Outcome::new(r, TOL_IDENTITY * (1.0 + c.sx)))
        },
    );
    b.run("orbit.series", "Σ_n μ^{[n]}_G(X):G = X − τ_G(X)", || {
        let trace = &shared(&c.routes)?.trace;
        let last = trace.partial_sums.last().ok_or_else(|| Error::InternalInconsistency("empty orbit".into()))?;
        let r = (last.entries() + c.tau()?.entries() - x.entries()).amax();
        let mut o = Outcome::new(r, route_thr()?);
        if trace.stopped_by == StopReason::MaxIter {
            o = o.note("orbit stopped at max_iter");
        }
        Ok(o)
    });
    b.run("orbit.series_lebesgue", "Σ_n μ^{[n]}_G(X):G = [G]X", || {
        let trace = &shared(&c.routes)?.trace;
        let last = trace.partial_sums.last().ok_or_else(|| Error::InternalInconsistency("empty orbit".into()))?;
        Ok(Outcome::new(last.max_abs_diff(&shared(&c.dec)?.ac_part), route_thr()?))
    });
    b.run(
        "orbit.range_preservation",
        "ran X^{1/2} ⊇ ran G^{1/2} ⟹ ran(μ^{[n]}_G(X))^{1/2} = ran X^{1/2}",
        || {
            if !range_basis(x, pol).contains(&range_basis(c.g, pol), pol) {
                return Ok(Outcome::vacuous("ran X does not contain ran G"));
            }
            rank_preserved(c, x.rank(pol), lambda_min_nonzero(x, pol))
        },
    );
    b.run(
        "orbit.kernel_preservation",
        "ker X = {0} ⟹ ker μ^{[n]}_G(X) = {0}",
        || {
            if !is_definite(x, pol) {
                return Ok(Outcome::vacuous("X is singular"));
            }
            rank_preserved(c, x.dim(), x.lambda_min())
        },
    );
}

fn tau_checks(c: &Ctx, b: &mut Builder) {
    let (g, x, pol) = (c.g, c.x, c.pol);
    let s = c.s;
    b.run(
        "tau.route_agreement",
        "τ_G(X) = lim μ^{[n]}_G(X) = (G+X)^{1/2}P_𝔐(G+X)^{1/2} = X^{1/2}P_𝔏X^{1/2} = X − [G]X",
        || {
            let cmp = shared(&c.routes)?;
            let r = cmp.residuals.values().copied().fold(0.0, f64::max);
            let note = cmp
                .residuals
                .iter()
                .map(|(k, v)| format!("{k} {v:.3e}"))
                .collect::<Vec<_>>()
                .join(", ");
            Ok(Outcome::new(r, cmp.threshold).note(format!("{note}; orbit {:?} after {} steps", cmp.trace.stopped_by, cmp.trace.steps())))
        },
    );
    b.run(
        "tau.orbit_invariance",
        "τ_G(μ^{[n]}_G(X)) = τ_G(X)",
        || {
            let t = c.tau()?;
            let f1 = mu(g, x, pol)?;
            let f2 = mu(g, &f1, pol)?;
            Ok(worst(vec![
                identity(&tau_l(g, &f1, pol)?, t, s),
                identity(&tau_l(g, &f2, pol)?, t, s),
            ]))
        },
    );
    b.run("tau.annihilation", "τ_G(X):G = 0", || {
        let r = annihilation_residual(g, c.tau()?, pol)?;
        Ok(Outcome::new(r, pol.conv_threshold(s)))
    });
    b.run(
        "tau.fixed_points",
        "τ_G(X) ≤ X; τ_G(X) = X ⟺ X:G = 0 ⟺ ran X^{1/2} ∩ ran G^{1/2} = {0}",
        || {
            let t = c.tau()?;
            let fixed = t.max_abs_diff(x) <= TOL_IDENTITY * (1.0 + s);
            let zero = shared(&c.ps)?.lambda_max() <= pol.conv_threshold(s);
            let disjoint = intersect(&range_basis(x, pol), &range_basis(g, pol), pol)?.dim() == 0;
            let note = format!("τ = X: {fixed}, X:G = 0: {zero}, trivial intersection: {disjoint}");
            let agree = Outcome::agree(&[fixed, zero, disjoint], note.clone());
            Ok(worst(vec![agree, leq(t, x, pol)?]).note(note))
        },
    );
    b.run("tau.idempotence", "τ_G(τ_G(X)) = τ_G(X)", || {
        let t = c.tau()?;
        Ok(identity(&tau_l(g, t, pol)?, t, s))
    });
    b.run(
        "tau.closed_m",
        "τ_G(X) = (G+X)^{1/2}P_𝔐(G+X)^{1/2}, 𝔐 = H ⊖ {f : (G+X)^{1/2}f ∈ ran G^{1/2}}",
        || {
            let cmp = shared(&c.routes)?;
            let m = cmp.get(TauRoute::ClosedM);
            let dim = m.subspace_used.as_ref().map_or(0, Subspace::dim);
            Ok(Outcome::new(cmp.residuals[TauRoute::ClosedM.name()], cmp.threshold).note(format!("dim 𝔐 = {dim}")))
        },
    );
    b.run(
        "tau.closed_l",
        "𝔏 = ker(I − 𝒯*𝒯) = H ⊖ {g : X^{1/2}g ∈ ran G^{1/2}}, 𝒯 = (G+X)^{-1/2}X^{1/2}; X definite ⟹ 𝔏 = X^{1/2} ker G",
        || {
            let cmp = shared(&c.routes)?;
            let l = cmp
                .get(TauRoute::ClosedL)
                .subspace_used
                .clone()
                .ok_or_else(|| Error::InternalInconsistency("closed-l route lost its subspace".into()))?;
            let sum = x.add(g)?;
            let t = pinv_sqrt_psd(&sum, pol).entries() * sqrt_psd(x, pol).entries();
            let ker = eig1_space(&(t.transpose() * t), pol);
            let mut r = l.distance(&ker);
            let mut note = format!("dim 𝔏 = {}, dim ker(I − 𝒯*𝒯) = {}", l.dim(), ker.dim());
            if is_definite(x, pol) {
                let img = sqrt_psd(x, pol).entries() * kernel_basis(g, pol).frame();
                let d = l.distance(&Subspace::span(&img, 1e-8));
                note.push_str(&format!(", distance to X^{{1/2}} ker G {d:.3e}"));
                r = r.max(d);
            }
            Ok(Outcome::new(r, TOL_SUBSPACE).note(note))
        },
    );
    b.run(
        "tau.commuting",
        "XG = GX ⟹ τ_G(X) = X^{1/2}P_𝔑X^{1/2}, 𝔑 = ker G ∩ ran X",
        || {
            if g.commutator_norm(x) > COMMUTING * (1.0 + c.sg) * (1.0 + c.sx) {
                return Ok(Outcome::vacuous("G and X do not commute"));
            }
            let n = intersect(&kernel_basis(g, pol), &range_basis(x, pol), pol)?;
            let r = sqrt_psd(x, pol);
            let want = PsdMatrix::clamped(&(r.entries() * n.projector_matrix() * r.entries()));
            Ok(identity(&want, c.tau()?, s).note(format!("dim 𝔑 = {}", n.dim())))
        },
    );
    b.run("tau.of_g", "τ_G(G) = 0", || {
        Ok(Outcome::new(tau_l(g, g, pol)?.max_abs(), TOL_IDENTITY * (1.0 + c.sg)))
    });
    b.run(
        "tau.range_inclusion",
        "ran X^{1/2} ⊆ ran G^{1/2} ⟹ τ_G(X) = 0; τ_G(X:G) = 0",
        || {
            let mut all = vec![Outcome::new(
                tau_l(g, shared(&c.ps)?, pol)?.max_abs(),
                TOL_IDENTITY * (1.0 + s),
            )];
            if range_basis(g, pol).contains(&range_basis(x, pol), pol) {
                all.push(Outcome::new(c.tau()?.max_abs(), TOL_IDENTITY * (1.0 + s)).note("ran X ⊆ ran G"));
            }
            Ok(worst(all))
        },
    );
    b.run(
        "tau.fractional_range",
        "ran X^{1/2} = ran G^α, α < 1/2 ⟹ τ_G(X) = 0",
        || {
            let mut rng = c.rng(6);
            let q = random_psd(&mut rng, x.dim(), x.dim(), 0.5, 2.0);
            let mut all = Vec::new();
            for alpha in [0.1, 0.25, 0.4] {
                let ga = frac_power(g, alpha, pol)?;
                let xa = q.congruence(ga.entries())?;
                all.push(Outcome::new(tau_l(g, &xa, pol)?.max_abs(), TOL_IDENTITY * (1.0 + xa.lambda_max())));
            }
            Ok(worst(all))
        },
    );
    b.run("tau.shift", "τ_G(λG + X) = τ_{ηG}(X) = τ_G(X), λ, η > 0", || {
        let t = c.tau()?;
        let shifted = x.add(&g.scaled(2.0))?;
        Ok(worst(vec![
            identity(&tau_l(g, &shifted, pol)?, t, 2.0 * c.sg + c.sx),
            identity(&tau_l(&g.scaled(0.3), x, pol)?, t, s),
        ]))
    });
    b.run("tau.homogeneity", "τ_G(ξX) = ξτ_G(X), ξ > 0", || {
        let t = c.tau()?;
        Ok(identity(&tau_l(g, &x.scaled(3.0), pol)?, &t.scaled(3.0), 3.0 * s))
    });
    b.run(
        "tau.g_replacement",
        "ran G₁^{1/2} = ran G₂^{1/2} ⟹ τ_{G₁}(X) = τ_{G₂}(X) = τ_{G₁}(G₂ + X) = τ_{G₂}(G₁ + X)",
        || {
            let t = c.tau()?;
            let gh = c.same_range(g, 7)?;
            let big = 2.0 * (c.sg.max(gh.lambda_max())) + c.sx;
            Ok(worst(vec![
                identity(&tau_l(&gh, x, pol)?, t, big),
                identity(&tau_l(g, &gh.add(x)?, pol)?, t, big),
                identity(&tau_l(&gh, &g.add(x)?, pol)?, t, big),
            ]))
        },
    );
    b.run(
        "tau.monotone_in_g",
        "ran G₁^{1/2} ⊆ ran G₂^{1/2} ⟹ τ_{G₁}(X) ≥ τ_{G₂}(X)",
        || {
            let t = c.tau()?;
            let mut rng = c.rng(8);
            let k = g.rank(pol) / 2;
            let v = gaussian(&mut rng, x.dim(), k) / (x.dim() as f64).sqrt();
            let r = sqrt_psd(g, pol);
            let inner = PsdMatrix::clamped(&(&v * v.transpose()));
            let smaller = inner.congruence(r.entries())?;
            let larger = g.add(&c.perturbation(9))?;
            Ok(worst(vec![
                leq(t, &tau_l(&smaller, x, pol)?, pol)?,
                leq(&tau_l(&larger, x, pol)?, t, pol)?,
            ]))
        },
    );
    b.run(
        "tau.subadditivity",
        "τ_G(X₁ + X₂) ≤ τ_G(X₁) + τ_G(X₂)",
        || {
            let x2 = c.perturbation(10);
            let lhs = tau_l(g, &x.add(&x2)?, pol)?;
            let rhs = c.tau()?.add(&tau_l(g, &x2, pol)?)?;
            leq(&lhs, &rhs, pol)
        },
    );
    b.run(
        "tau.extreme_point",
        "τ_G(X) is an extreme point of [0, X]: (X^{1/2})^+ τ_G(X) (X^{1/2})^+ is a projection",
        || {
            let t = c.tau()?;
            let w = pinv_sqrt_psd(x, pol);
            let e = w.entries() * t.entries() * w.entries();
            let r = (&e * &e - &e).amax();
            Ok(worst(vec![Outcome::new(r, TOL_IDENTITY), leq(t, x, pol)?]))
        },
    );
    b.run(
        "tau.lebesgue",
        "τ_G(X) = X − [G]X; τ_G([G]X) = 0",
        || {
            let t = c.tau()?;
            let ac = &shared(&c.dec)?.ac_part;
            let diff = PsdMatrix::clamped(&(x.entries() - ac.entries()));
            Ok(worst(vec![
                identity(&diff, t, s),
                Outcome::new(tau_l(g, ac, pol)?.max_abs(), TOL_IDENTITY * (1.0 + s)),
            ]))
        },
    );
    b.run(
        "tau.lebesgue_replacement",
        "ran G̃^{1/2} = ran G^{1/2} ⟹ τ_G(X) = X − [G̃]X = G̃ + X − [G](G̃ + X)",
        || {
            let t = c.tau()?;
            let gt = c.same_range(g, 11)?;
            let big = gt.lambda_max() + s;
            let first = PsdMatrix::clamped(&(x.entries() - ac_part(&gt, x, pol)?.entries()));
            let sum = gt.add(x)?;
            let second = PsdMatrix::clamped(&(sum.entries() - ac_part(g, &sum, pol)?.entries()));
            Ok(worst(vec![identity(&first, t, big), identity(&second, t, big)]))
        },
    );
    b.run("tau.definite_g", "ker G = {0} ⟹ τ_G(X) = 0", || {
        if !is_definite(g, pol) {
            return Ok(Outcome::vacuous("G is singular"));
        }
        Ok(Outcome::new(c.tau()?.max_abs(), TOL_IDENTITY * (1.0 + s)))
    });
    b.degenerate(
        "tau.trivial_kernel_necessary",
        "τ_G(X) ∈ B⁺₀ ⟹ X ∈ B⁺₀ and X²:G = 0",
        "in finite dimension a definite X has X² definite, so X²:G = 0 forces G = 0 and the statement reduces to τ_0(X) = X",
    );
    b.degenerate(
        "tau.trivial_kernel_equivalences",
        "τ_G(X) ∈ B⁺₀ ⟺ closure and diverging-sequence conditions on (G+X)^{-1/2} ran G^{1/2}",
        "all ranges are closed in finite dimension, so no sequence can diverge and the closure conditions coincide with the range conditions already checked",
    );
    b.degenerate(
        "tau.compact_class",
        "X compact ⟹ τ_G(X) compact; X ∈ S_p ⟹ τ_G(X) ∈ S_p",
        "every finite-dimensional operator is compact and in every Schatten class; τ_G(X) is computed as a sandwich of X^{1/2}",
    );
}

fn lebesgue_checks(c: &Ctx, b: &mut Builder) {
    let (g, x, pol) = (c.g, c.x, c.pol);
    let s = c.s;
    b.run("lebesgue.sum", "B = [A]B + (B − [A]B)", || {
        let d = shared(&c.dec)?;
        let r = (d.ac_part.entries() + d.singular_part.entries() - x.entries()).amax();
        Ok(Outcome::new(r, TOL_IDENTITY * (1.0 + c.sx)))
    });
    b.run(
        "lebesgue.mutual_singularity",
        "A:(B − [A]B) = 0, [A]B:(B − [A]B) = 0",
        || {
            let d = shared(&c.dec)?;
            let r = d.residuals.singularity.max(d.residuals.orthogonality);
            Ok(Outcome::new(r, TOL_MUTUAL_SINGULARITY * (1.0 + c.sx)).note(format!(
                "A:sing {:.3e}, ac:sing {:.3e}",
                d.residuals.singularity, d.residuals.orthogonality
            )))
        },
    );
    b.run("lebesgue.limit_route", "[A]B = lim_{n→∞} (nA):B", || {
        let d = shared(&c.dec)?;
        Ok(Outcome::new(d.residuals.cross_route, TOL_LIMIT_ROUTE * (1.0 + c.sx)))
    });
    b.run(
        "lebesgue.uniqueness",
        "the decomposition is unique ⟺ ran([A]B)^{1/2} ⊆ ran A^{1/2}",
        || {
            let d = shared(&c.dec)?;
            Ok(Outcome::new(if d.unique { 0.0 } else { 1.0 }, 0.0)
                .note("ranges are closed in finite dimension, so the inclusion always holds"))
        },
    );
    b.run("lebesgue.idempotence", "[A]([A]B) = [A]B", || {
        let ac = &shared(&c.dec)?.ac_part;
        Ok(identity(&ac_part(g, ac, pol)?, ac, s))
    });
    b.run("lebesgue.scale", "[A](λB) = λ[A]B", || {
        let ac = &shared(&c.dec)?.ac_part;
        let mut all = Vec::new();
        for lambda in [0.1, 1.0, 7.0] {
            let lhs = ac_part(g, &x.scaled(lambda), pol)?;
            all.push(identity(&lhs, &ac.scaled(lambda), lambda * s));
        }
        Ok(worst(all))
    });
    b.run(
        "lebesgue.range_invariance",
        "ran Ã^{1/2} = ran A^{1/2} ⟹ [Ã]B = [A]B",
        || {
            let ac = &shared(&c.dec)?.ac_part;
            let at = c.same_range(g, 12)?;
            Ok(identity(&ac_part(&at, x, pol)?, ac, s))
        },
    );
    b.run("lebesgue.parallel_compatibility", "[A:B]B = [A]B", || {
        let ac = &shared(&c.dec)?.ac_part;
        Ok(identity(&ac_part(shared(&c.ps)?, x, pol)?, ac, s))
    });
    b.run("lebesgue.shift", "[A](B + αA) = [A]B + αA, α > 0", || {
        let ac = &shared(&c.dec)?.ac_part;
        let lhs = ac_part(g, &x.add(&g.scaled(0.7))?, pol)?;
        Ok(identity(&lhs, &ac.add(&g.scaled(0.7))?, 0.7 * c.sg + c.sx))
    });
    b.run(
        "lebesgue.superadditivity",
        "[A](B₁ + B₂) ≥ [A]B₁ + [A]B₂",
        || {
            let ac = &shared(&c.dec)?.ac_part;
            let x2 = c.perturbation(13);
            let lhs = ac_part(g, &x.add(&x2)?, pol)?;
            let rhs = ac.add(&ac_part(g, &x2, pol)?)?;
            leq(&rhs, &lhs, pol)
        },
    );
    b.run(
        "lebesgue.maximality",
        "C ≤ B, ran C ⊆ ran A ⟹ C ≤ [A]B",
        || {
            let ac = &shared(&c.dec)?.ac_part;
            let scaled = ScaledParallelSum::new(g, x, pol)?;
            let mut all = Vec::new();
            for n in [1.0, 5.0] {
                all.push(leq(&scaled.at(n)?, ac, pol)?);
            }
            Ok(worst(all))
        },
    );
    b.run(
        "lebesgue.absolute_continuity",
        "[A]B = B ⟺ Ω_A^B = H ⟺ τ_A(B) = 0",
        || {
            let ac = &shared(&c.dec)?.ac_part;
            let omega_full = is_absolutely_continuous(g, x, pol)?;
            let ac_is_b = ac.max_abs_diff(x) <= TOL_IDENTITY * (1.0 + s);
            let tau_zero = c.tau()?.max_abs() <= TOL_IDENTITY * (1.0 + s);
            Ok(Outcome::agree(
                &[omega_full, ac_is_b, tau_zero],
                format!("Ω = H: {omega_full}, [A]B = B: {ac_is_b}, τ = 0: {tau_zero}"),
            ))
        },
    );
    b.run(
        "lebesgue.singular_pair",
        "B is A-singular ⟺ ran A^{1/2} ∩ ran B^{1/2} = {0} ⟺ [A]B = 0",
        || {
            let ac = &shared(&c.dec)?.ac_part;
            let singular = is_singular_pair(g, x, pol)?;
            let ac_zero = ac.max_abs() <= TOL_IDENTITY * (1.0 + s);
            Ok(Outcome::agree(
                &[singular, ac_zero],
                format!("singular pair: {singular}, [A]B = 0: {ac_zero}"),
            ))
        },
    );
}
