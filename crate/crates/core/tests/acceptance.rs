//! Acceptance suite: eight criteria, one PASS/FAIL line each.
//!
//! Built with `harness = false` so the lines are always printed; the process
//! exits nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use shorted_ops::parallel::{default_eps_schedule, parallel_sum, parallel_sum_regularized, parallel_sum_via_m};
use shorted_ops::shorted::{ac_part_limit, default_n_schedule, is_singular_pair, lebesgue_decompose, range_inclusion};
use shorted_ops::tau::{m_recurrence_to_convergence, mu_orbit, tau, tau_all_routes, StopReason};
use shorted_ops::verify::exact::{rat, RatMatrix};
use shorted_ops::verify::{exact_oracle_small, exact_orbit, gen_pair, random_specs, run_ensemble, CheckStatus};
use shorted_ops::{PsdMatrix, TolerancePolicy};

const ENSEMBLE_SEED: u64 = 20_240_601;
const ENSEMBLE_SIZE: usize = 1_000;
const BATTERY_SEED: u64 = 7_000_000;
const BATTERY_SIZE: usize = 10_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn pairs() -> Vec<(PsdMatrix, PsdMatrix, usize)> {
    random_specs(ENSEMBLE_SEED, ENSEMBLE_SIZE)
        .iter()
        .map(|s| {
            let (g, x) = gen_pair(s).expect("feasible spec");
            (g, x, s.overlap_dim)
        })
        .collect()
}

fn c1_parallel_routes(pol: &TolerancePolicy) -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    for (g, x, _) in pairs() {
        let reference = parallel_sum(&x, &g, pol).unwrap();
        let via_m = parallel_sum_via_m(&x, &g, pol).unwrap();
        let reg = parallel_sum_regularized(&x, &g, &default_eps_schedule(), pol).unwrap();
        let thr = 1e-8 * (1.0 + x.lambda_max().max(g.lambda_max()));
        let gap = reference
            .max_abs_diff(&via_m)
            .max(reference.max_abs_diff(&reg.value))
            .max(via_m.max_abs_diff(&reg.value));
        worst = worst.max(gap / thr);
        bad += usize::from(gap > thr);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad == 0 && secs <= 60.0,
        format!("{ENSEMBLE_SIZE} pairs, {bad} over threshold, worst gap/threshold {worst:.2e}, {secs:.1} s"),
    )
}

fn c2_range_identity(pol: &TolerancePolicy) -> Outcome {
    let mut bad = 0;
    for (g, x, overlap) in pairs() {
        bad += usize::from(parallel_sum(&x, &g, pol).unwrap().rank(pol) != overlap);
    }
    outcome(bad == 0, format!("{ENSEMBLE_SIZE} pairs, {bad} with rank(X:G) ≠ overlap"))
}

fn c3_tau_routes(pol: &TolerancePolicy) -> Outcome {
    let (mut converged, mut bad_agree, mut bad_capped) = (0, 0, 0);
    let mut worst: f64 = 0.0;
    for (g, x, _) in pairs() {
        let cmp = tau_all_routes(&g, &x, pol).unwrap();
        let gap = cmp.residuals.values().fold(0.0_f64, |a, &b| a.max(b));
        if cmp.trace.stopped_by == StopReason::Converged {
            converged += 1;
            worst = worst.max(gap / cmp.threshold);
            bad_agree += usize::from(gap > cmp.threshold);
        } else {
            bad_capped += usize::from(gap > 1e-4);
        }
    }
    let rate = converged as f64 / ENSEMBLE_SIZE as f64;
    outcome(
        bad_agree == 0 && bad_capped == 0 && rate >= 0.99,
        format!(
            "{ENSEMBLE_SIZE} pairs, iterative converged on {:.1}%, {bad_agree} over threshold, \
             {bad_capped} capped pairs off by > 1e-4, worst gap/threshold {worst:.2e}",
            100.0 * rate
        ),
    )
}

fn c4_battery(pol: &TolerancePolicy) -> Outcome {
    const DEGENERATE: [&str; 3] = [
        "tau.trivial_kernel_necessary",
        "tau.trivial_kernel_equivalences",
        "tau.compact_class",
    ];
    let entries = run_ensemble(&random_specs(BATTERY_SEED, BATTERY_SIZE), pol).unwrap();
    let (mut fails, mut passes, mut bad_skips) = (0, 0, 0);
    let mut first_fail = None;
    for e in &entries {
        fails += e.report.count(CheckStatus::Fail);
        passes += e.report.count(CheckStatus::Pass);
        if first_fail.is_none() {
            first_fail = e.report.failures().next().map(|c| format!(" (first: pair {} {})", e.index, c.name));
        }
        let skipped: Vec<_> = e
            .report
            .checks
            .iter()
            .filter(|c| c.status == CheckStatus::SkippedDegenerate)
            .collect();
        let reasons_ok = skipped.len() == DEGENERATE.len()
            && skipped
                .iter()
                .all(|c| DEGENERATE.contains(&c.name.as_str()) && c.note.as_deref().is_some_and(|n| !n.is_empty()));
        bad_skips += usize::from(!reasons_ok);
    }
    outcome(
        fails == 0 && bad_skips == 0,
        format!(
            "{BATTERY_SIZE} pairs, {passes} checks passed, {fails} failed{}, {bad_skips} pairs with unexpected skips",
            first_fail.unwrap_or_default()
        ),
    )
}

/// Alternative splits `B = C + (B − C)` that differ from `[A]B`; each must
/// violate `ran C ⊆ ran A` or the singularity of `B − C`.
fn alternatives_rejected(a: &PsdMatrix, ac: &PsdMatrix, sing: &PsdMatrix, pol: &TolerancePolicy) -> bool {
    let mut ok = true;
    if sing.lambda_max() > 1e-6 {
        // C = [A]B + S/2 leaves ran A
        let c = ac.add(&sing.scaled(0.5)).unwrap();
        ok &= !range_inclusion(&c, a, pol).unwrap();
    }
    if ac.lambda_max() > 1e-6 {
        // C = [A]B/2 leaves an A-continuous piece in the remainder
        let rest = sing.add(&ac.scaled(0.5)).unwrap();
        ok &= !is_singular_pair(a, &rest, pol).unwrap();
    }
    ok
}

fn c5_lebesgue(pol: &TolerancePolicy) -> Outcome {
    let (mut bad_sing, mut bad_limit, mut bad_unique, mut bad_alt) = (0, 0, 0, 0);
    let mut worst_limit: f64 = 0.0;
    for (g, x, _) in pairs() {
        // both orientations: [G]X and [X]G
        for (a, b) in [(&g, &x), (&x, &g)] {
            let d = lebesgue_decompose(a, b, pol).unwrap();
            let thr = 1e-8 * (1.0 + b.lambda_max());
            bad_sing += usize::from(d.residuals.singularity > thr || d.residuals.orthogonality > thr);
            let limit = ac_part_limit(a, b, &default_n_schedule(), pol).unwrap();
            let gap = limit.value.max_abs_diff(&d.ac_part);
            worst_limit = worst_limit.max(gap);
            bad_limit += usize::from(gap > 1e-6);
            bad_unique += usize::from(d.unique != range_inclusion(&d.ac_part, a, pol).unwrap() || !d.unique);
            bad_alt += usize::from(!alternatives_rejected(a, &d.ac_part, &d.singular_part, pol));
        }
    }
    outcome(
        bad_sing + bad_limit + bad_unique + bad_alt == 0,
        format!(
            "{} decompositions, singularity fails {bad_sing}, limit-route fails {bad_limit} (worst {worst_limit:.1e}), \
             uniqueness mismatches {bad_unique}, accepted alternatives {bad_alt}",
            2 * ENSEMBLE_SIZE
        ),
    )
}

fn psd_from_rows(rows: &[Vec<f64>]) -> PsdMatrix {
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    PsdMatrix::from_rows(&refs, &TolerancePolicy::default()).unwrap()
}

/// Integer 2×2 PSD matrices with entries in a small box, plus halves of them.
fn small_rational_2x2() -> Vec<PsdMatrix> {
    let mut out = Vec::new();
    for a in 0..=3 {
        for c in 0..=3 {
            for b in -2..=2 {
                if a * c >= b * b {
                    for den in [1.0, 2.0] {
                        let (a, b, c) = (a as f64 / den, b as f64 / den, c as f64 / den);
                        out.push(psd_from_rows(&[vec![a, b], vec![b, c]]));
                    }
                }
            }
        }
    }
    out
}

fn c6_exact_oracle(pol: &TolerancePolicy) -> Outcome {
    let mut cases = Vec::new();
    let scalars = [0.0, 0.5, 1.0, 2.0, 3.0];
    for &g in &scalars {
        for &x in &scalars {
            cases.push((PsdMatrix::diag(&[g]), PsdMatrix::diag(&[x])));
        }
    }
    let mats = small_rational_2x2();
    for g in &mats {
        for x in &mats {
            cases.push((g.clone(), x.clone()));
        }
    }
    let vals = [0.0, 0.5, 1.0, 3.0];
    for i in 0..vals.len().pow(6) {
        let d: Vec<f64> = (0..6).map(|k| vals[(i / vals.len().pow(k)) % vals.len()]).collect();
        cases.push((PsdMatrix::diag(&d[..3]), PsdMatrix::diag(&d[3..])));
    }
    let (mut bad, mut unsupported) = (0, 0);
    let mut worst: f64 = 0.0;
    for (g, x) in &cases {
        let want = match exact_oracle_small(g, x) {
            Ok(w) => w,
            Err(_) => {
                unsupported += 1;
                continue;
            }
        };
        let got = tau(g, x, pol).unwrap().value;
        let gap = got.max_abs_diff(&want);
        worst = worst.max(gap);
        bad += usize::from(gap > 1e-12);
    }

    let one: RatMatrix = vec![vec![rat(1, 1)]];
    let exact = exact_orbit(&one, &one, 3).unwrap();
    let prefix = [rat(1, 1), rat(1, 2), rat(1, 6), rat(1, 42)];
    let exact_ok = exact.iter().zip(&prefix).all(|(f, p)| &f[0][0] == p) && exact.len() == 4;
    let unit = PsdMatrix::diag(&[1.0]);
    let orbit = mu_orbit(&unit, &unit, pol).unwrap();
    let float_ok = [1.0, 0.5, 1.0 / 6.0, 1.0 / 42.0]
        .iter()
        .zip(&orbit.iterates)
        .all(|(p, f)| (f.entries()[(0, 0)] - p).abs() <= 1e-12)
        && orbit.iterates.len() >= 4;
    outcome(
        bad == 0 && unsupported == 0 && exact_ok && float_ok,
        format!(
            "{} cases, {bad} over 1e-12 (worst {worst:.1e}), {unsupported} unsupported by the oracle, \
             orbit prefix exact {exact_ok}, float {float_ok}",
            cases.len()
        ),
    )
}

/// `Q diag(λ) Qᵀ` with some eigenvalues exactly 1 and 0, and the projection
/// onto the eigenvalue-1 eigenspace.
fn random_contraction(rng: &mut ChaCha8Rng) -> (PsdMatrix, DMatrix<f64>) {
    let n = rng.random_range(1..=16);
    let q = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal)).qr().q();
    let lambdas: Vec<f64> = (0..n)
        .map(|_| match rng.random_range(0..4) {
            0 => 1.0,
            1 => 0.0,
            _ => rng.random_range(0.0..1.0),
        })
        .collect();
    let m = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lambdas.clone())) * q.transpose();
    let ones = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        lambdas.iter().map(|&l| if l == 1.0 { 1.0 } else { 0.0 }),
    ));
    let m = (&m + m.transpose()) * 0.5;
    let m = PsdMatrix::validate(&m, &TolerancePolicy::default()).unwrap();
    (m, &q * ones * q.transpose())
}

fn c7_m_recurrence(pol: &TolerancePolicy) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(ENSEMBLE_SEED);
    let (mut bad_comm, mut bad_def, mut bad_limit, mut capped) = (0, 0, 0, 0);
    let (mut worst_comm, mut worst_limit): (f64, f64) = (0.0, 0.0);
    for _ in 0..500 {
        let (m0, proj) = random_contraction(&mut rng);
        let n = m0.dim();
        let (ms, stop) = m_recurrence_to_convergence(&m0, pol).unwrap();
        capped += usize::from(stop != StopReason::Converged);
        let mut comm: f64 = 0.0;
        let mut definite = true;
        for mn in &ms {
            comm = comm.max(m0.commutator_norm(mn));
            let s = DMatrix::<f64>::identity(n, n) - m0.entries() + mn.entries();
            definite &= s.symmetric_eigenvalues().min() > 0.0;
        }
        worst_comm = worst_comm.max(comm);
        bad_comm += usize::from(comm > 1e-10);
        bad_def += usize::from(!definite);
        let gap = (ms.last().unwrap().entries() - &proj).amax();
        worst_limit = worst_limit.max(gap);
        bad_limit += usize::from(gap > 1e-8);
    }
    outcome(
        bad_comm + bad_def + bad_limit + capped == 0,
        format!(
            "500 contractions, commutation fails {bad_comm} (worst {worst_comm:.1e}), indefinite {bad_def}, \
             limit fails {bad_limit} (worst {worst_limit:.1e}), hit max_iter {capped}"
        ),
    )
}

fn cli(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_shorted-ops"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn c8_cli_round_trip() -> Outcome {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let gen = ["gen", "--dim", "6", "--rank-g", "3", "--rank-x", "4", "--overlap", "1", "--seed", "17", "pair"];
    let steps: [(&str, &[&str]); 6] = [
        ("gen.json", &gen),
        ("parsum.json", &["parsum", "pair/X.txt", "pair/G.txt"]),
        ("tau.json", &["tau", "pair/G.txt", "pair/X.txt", "--trace"]),
        ("short.json", &["short", "pair/G.txt", "pair/X.txt"]),
        ("verify.json", &["verify", "pair/G.txt", "pair/X.txt"]),
        ("verify_ensemble.json", &["verify", "--dim", "5", "--count", "4", "--seed", "7"]),
    ];
    let (mut nonzero, mut mismatched) = (Vec::new(), Vec::new());
    for (name, args) in steps {
        let (code, stdout) = cli(d, args);
        if code != 0 {
            nonzero.push(args[0]);
        }
        if std::fs::read_to_string(golden.join(name)).ok().as_deref() != Some(stdout.as_str()) {
            mismatched.push(name);
        }
    }
    for name in ["G.txt", "spec.json"] {
        let got = std::fs::read_to_string(d.join("pair").join(name)).ok();
        if got.is_none() || got != std::fs::read_to_string(golden.join(name)).ok() {
            mismatched.push(name);
        }
    }
    outcome(
        nonzero.is_empty() && mismatched.is_empty(),
        format!("nonzero exits {nonzero:?}, golden mismatches {mismatched:?}"),
    )
}

fn main() {
    let pol = TolerancePolicy::default();
    let criteria: [(&str, Box<dyn Fn() -> Outcome>); 8] = [
        ("C1 parallel-sum route agreement", Box::new(|| c1_parallel_routes(&pol))),
        ("C2 range identity", Box::new(|| c2_range_identity(&pol))),
        ("C3 τ five-route agreement", Box::new(|| c3_tau_routes(&pol))),
        ("C4 property battery", Box::new(|| c4_battery(&pol))),
        ("C5 Lebesgue decomposition", Box::new(|| c5_lebesgue(&pol))),
        ("C6 exact oracle", Box::new(|| c6_exact_oracle(&pol))),
        ("C7 M-recurrence", Box::new(|| c7_m_recurrence(&pol))),
        ("C8 CLI round trip", Box::new(c8_cli_round_trip)),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {} [{:.1} s]", o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
