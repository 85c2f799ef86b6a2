use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Value};

use super::matrix_io::{read_matrix, write_matrix, MatrixFormat};
use super::report::{matrix_value, sha256_hex, RunReport, EXIT_PROPERTY};
use super::{Cli, Command, EnsembleArgs, RouteArg};
use crate::error::{Error, Result};
use crate::parallel::{
    default_eps_schedule, parallel_sum, parallel_sum_definite, parallel_sum_regularized, parallel_sum_via_m,
};
use crate::psd::{PsdMatrix, TolerancePolicy};
use crate::shorted::{is_absolutely_continuous, lebesgue_decompose};
use crate::tau::{tau_all_routes, TauRoute};
use crate::verify::battery::{TOL_LIMIT_ROUTE, TOL_MUTUAL_SINGULARITY, TOL_PARALLEL_ROUTES};
use crate::verify::{gen_pair, run_battery, run_ensemble, CheckStatus, EnsembleSpec, PropertyReport};

pub(super) fn dispatch(cli: &Cli, pol: &TolerancePolicy, r: &mut RunReport) -> Result<()> {
    let fmt = cli.global.format;
    let seed = cli.global.seed;
    match &cli.command {
        Command::Parsum { x, g, route } => {
            let x = load(r, "X", x, fmt, pol)?;
            let g = load(r, "G", g, fmt, pol)?;
            parsum(r, &x, &g, *route, pol)
        }
        Command::Tau { g, x, trace } => {
            let g = load(r, "G", g, fmt, pol)?;
            let x = load(r, "X", x, fmt, pol)?;
            tau(r, &g, &x, *trace, pol)
        }
        Command::Short { a, b } => {
            let a = load(r, "A", a, fmt, pol)?;
            let b = load(r, "B", b, fmt, pol)?;
            short(r, &a, &b, pol)
        }
        Command::Verify {
            g,
            x,
            ensemble,
            count,
        } => match (g, x) {
            (Some(g), Some(x)) => {
                if ensemble.is_set() {
                    return Err(Error::Parse("give either G and X files or ensemble flags, not both".into()));
                }
                let g = load(r, "G", g, fmt, pol)?;
                let x = load(r, "X", x, fmt, pol)?;
                let rep = run_battery(&g, &x, pol)?;
                verify_summary(r, vec![json!({ "index": 0, "report": rep })], std::slice::from_ref(&rep));
                Ok(())
            }
            (None, None) => {
                let specs = (0..*count)
                    .map(|i| ensemble.spec(seed.wrapping_add(i as u64)))
                    .collect::<Result<Vec<_>>>()?;
                let entries = run_ensemble(&specs, pol)?;
                let reports: Vec<PropertyReport> = entries.iter().map(|e| e.report.clone()).collect();
                let pairs = entries.iter().map(|e| serde_json::to_value(e).expect("serializable")).collect();
                verify_summary(r, pairs, &reports);
                Ok(())
            }
            _ => Err(Error::Parse("verify needs both G and X files".into())),
        },
        Command::Gen { ensemble, out_dir } => gen(r, &ensemble.spec(seed)?, out_dir, fmt),
    }
}

fn load(r: &mut RunReport, role: &str, path: &Path, fmt: MatrixFormat, pol: &TolerancePolicy) -> Result<PsdMatrix> {
    let (m, bytes) = read_matrix(path, fmt, pol)?;
    r.input(role, &path.display().to_string(), &bytes);
    Ok(m)
}

/// Flags the report as a disagreement when any residual exceeds `threshold`.
fn judge(r: &mut RunReport, residuals: &BTreeMap<String, f64>, threshold: f64) {
    let over: Vec<(String, f64)> = residuals
        .iter()
        .filter(|(_, &v)| !(v <= threshold))
        .map(|(k, &v)| (k.clone(), v))
        .collect();
    if !over.is_empty() {
        r.fail(&Error::RouteDisagreement {
            residuals: over,
            threshold,
        });
    }
}

fn parsum(r: &mut RunReport, x: &PsdMatrix, g: &PsdMatrix, route: RouteArg, pol: &TolerancePolicy) -> Result<()> {
    let reference = parallel_sum(x, g, pol)?;
    let want = |k: RouteArg| route == k || route == RouteArg::All;
    let mut value = reference.clone();
    let mut residuals = BTreeMap::new();
    let mut skipped = BTreeMap::new();
    if want(RouteArg::Regularized) {
        let res = parallel_sum_regularized(x, g, &default_eps_schedule(), pol)?;
        residuals.insert("regularized".to_string(), res.residual_cross);
        r.diag("eps_trace", &res.eps_trace);
        if route == RouteArg::Regularized {
            value = res.value;
        }
    }
    if want(RouteArg::ViaM) {
        let v = parallel_sum_via_m(x, g, pol)?;
        residuals.insert("via-m".to_string(), v.max_abs_diff(&reference));
        if route == RouteArg::ViaM {
            value = v;
        }
    }
    if want(RouteArg::Definite) {
        match parallel_sum_definite(x, g, pol) {
            Ok(v) => {
                residuals.insert("definite".to_string(), v.max_abs_diff(&reference));
                if route == RouteArg::Definite {
                    value = v;
                }
            }
            Err(e @ Error::NotDefinite { .. }) if route == RouteArg::All => {
                skipped.insert("definite".to_string(), e.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    let threshold = TOL_PARALLEL_ROUTES * (1.0 + x.lambda_max().max(g.lambda_max()));
    r.output("parallel_sum", matrix_value(&value));
    r.output("rank", value.rank(pol));
    r.diag("route_residuals", &residuals);
    r.diag("threshold", threshold);
    if !skipped.is_empty() {
        r.diag("skipped_routes", &skipped);
    }
    judge(r, &residuals, threshold);
    Ok(())
}

fn tau(r: &mut RunReport, g: &PsdMatrix, x: &PsdMatrix, with_trace: bool, pol: &TolerancePolicy) -> Result<()> {
    let cmp = tau_all_routes(g, x, pol)?;
    let dim_of = |route: TauRoute| cmp.get(route).subspace_used.as_ref().map(|s| s.dim());
    r.output("tau", matrix_value(&cmp.get(TauRoute::ClosedL).value));
    r.output("dim_m", dim_of(TauRoute::ClosedM));
    r.output("dim_l", dim_of(TauRoute::ClosedL));
    r.output("orbit_length", cmp.trace.steps());
    r.output("stopped_by", cmp.trace.stopped_by);
    r.output("converged_at", cmp.trace.converged_at);
    if with_trace {
        let t = &cmp.trace;
        r.output(
            "trace",
            json!({
                "step_gaps": t.step_gaps,
                "ps_norms": t.ps_norms,
                "iterates": t.iterates.iter().map(matrix_value).collect::<Vec<Value>>(),
            }),
        );
    }
    r.diag("route_residuals", &cmp.residuals);
    r.diag("threshold", cmp.threshold);
    judge(r, &cmp.residuals, cmp.threshold);
    Ok(())
}

fn short(r: &mut RunReport, a: &PsdMatrix, b: &PsdMatrix, pol: &TolerancePolicy) -> Result<()> {
    let d = lebesgue_decompose(a, b, pol)?;
    r.output("ac_part", matrix_value(&d.ac_part));
    r.output("singular_part", matrix_value(&d.singular_part));
    r.output("omega_dim", d.omega.dim());
    r.output("unique", d.unique);
    r.output("absolutely_continuous", is_absolutely_continuous(a, b, pol)?);
    let scale = 1.0 + b.lambda_max();
    let res = &d.residuals;
    r.diag("residuals", res);
    let thresholds = json!({
        "cross_route": TOL_LIMIT_ROUTE * scale,
        "singularity": TOL_MUTUAL_SINGULARITY * scale,
        "orthogonality": TOL_MUTUAL_SINGULARITY * scale,
    });
    r.diag("thresholds", &thresholds);
    let mut over = Vec::new();
    for (name, v, t) in [
        ("cross_route", res.cross_route, TOL_LIMIT_ROUTE * scale),
        ("singularity", res.singularity, TOL_MUTUAL_SINGULARITY * scale),
        ("orthogonality", res.orthogonality, TOL_MUTUAL_SINGULARITY * scale),
    ] {
        if !(v <= t) {
            over.push((name.to_string(), v));
        }
    }
    if !over.is_empty() {
        r.fail(&Error::RouteDisagreement {
            residuals: over,
            threshold: TOL_MUTUAL_SINGULARITY * scale,
        });
    }
    Ok(())
}

fn verify_summary(r: &mut RunReport, pairs: Vec<Value>, reports: &[PropertyReport]) {
    let mut failed: BTreeMap<&str, usize> = BTreeMap::new();
    let (mut pass, mut fail, mut skipped) = (0, 0, 0);
    for rep in reports {
        for c in &rep.checks {
            match c.status {
                CheckStatus::Pass => pass += 1,
                CheckStatus::SkippedDegenerate => skipped += 1,
                CheckStatus::Fail => {
                    fail += 1;
                    *failed.entry(c.name.as_str()).or_default() += 1;
                }
            }
        }
    }
    let clean = reports.iter().filter(|p| p.all_pass()).count();
    r.output("pairs", pairs);
    r.diag(
        "summary",
        json!({
            "pairs": reports.len(),
            "pairs_all_pass": clean,
            "checks_pass": pass,
            "checks_fail": fail,
            "checks_skipped_degenerate": skipped,
            "failed_checks": failed,
        }),
    );
    eprintln!(
        "verify: {clean}/{} pairs clean, {pass} checks passed, {fail} failed, {skipped} skipped-degenerate",
        reports.len()
    );
    if fail > 0 {
        r.exit_code = EXIT_PROPERTY;
        r.error = Some(format!("{fail} property checks failed"));
    }
}

fn gen(r: &mut RunReport, spec: &EnsembleSpec, dir: &Path, fmt: MatrixFormat) -> Result<()> {
    let (g, x) = gen_pair(spec)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::Parse(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for (role, m) in [("G", &g), ("X", &x)] {
        let path = dir.join(format!("{role}.{}", fmt.extension()));
        let bytes = write_matrix(&path, m.entries(), fmt)?;
        files.push(json!({ "role": role, "path": path.display().to_string(), "sha256": sha256_hex(&bytes) }));
    }
    let manifest = serde_json::to_string_pretty(&json!({ "spec": spec, "format": fmt, "files": files }))
        .expect("serializable")
        + "\n";
    let manifest_path = dir.join("spec.json");
    std::fs::write(&manifest_path, &manifest).map_err(|e| Error::Parse(format!("{}: {e}", manifest_path.display())))?;
    r.output("spec", spec);
    r.output("files", &files);
    r.output("manifest", manifest_path.display().to_string());
    Ok(())
}

impl EnsembleArgs {
    fn is_set(&self) -> bool {
        self.dim.is_some()
            || self.rank_g.is_some()
            || self.rank_x.is_some()
            || self.overlap.is_some()
            || self.commuting
            || self.decay.is_some()
    }

    /// The [`EnsembleSpec`] for one pair seeded with `seed`.
    pub(super) fn spec(&self, seed: u64) -> Result<EnsembleSpec> {
        let mut spec = match (self.dim, self.rank_g, self.rank_x) {
            (Some(dim), Some(rg), Some(rx)) => {
                let overlap = self.overlap.unwrap_or((rg + rx).saturating_sub(dim));
                let mut s = EnsembleSpec::new(dim, rg, rx, overlap, seed);
                s.commuting = self.commuting;
                s
            }
            (dim, None, None) if self.overlap.is_none() => {
                let mut s = match dim {
                    Some(d) => {
                        if d == 0 {
                            return Err(Error::InfeasibleSpec("dim must be positive".into()));
                        }
                        EnsembleSpec::random_in_dim(d, seed)
                    }
                    None => EnsembleSpec::random(seed),
                };
                s.commuting |= self.commuting;
                s
            }
            _ => {
                return Err(Error::InfeasibleSpec(
                    "--rank-g, --rank-x and --overlap need --dim and both ranks".into(),
                ))
            }
        };
        if let Some(d) = self.decay {
            spec.spectrum_decay = d;
        }
        spec.validate()?;
        Ok(spec)
    }
}
