//! τ_G(X) by all five routes on a generated pair.

use shorted_ops::tau::{tau, tau_all_routes, TauRoute};
use shorted_ops::verify::{gen_pair, EnsembleSpec};
use shorted_ops::TolerancePolicy;

fn main() -> shorted_ops::Result<()> {
    let pol = TolerancePolicy::default();
    let spec = EnsembleSpec::new(10, 4, 6, 2, 2024);
    let (g, x) = gen_pair(&spec)?;

    let cmp = tau_all_routes(&g, &x, &pol)?;
    for r in &cmp.routes {
        let sub = r.subspace_used.as_ref().map(|s| s.dim().to_string()).unwrap_or_else(|| "-".into());
        println!(
            "{:<13} rank {:>2}  subspace dim {:>2}  stopped {:?}",
            r.route.name(),
            r.value.rank(&pol),
            sub,
            r.stopped_by
        );
    }
    for (k, v) in &cmp.residuals {
        println!("  {k:<14} {v:.2e}");
    }
    println!("threshold {:.2e}, agree = {}", cmp.threshold, cmp.agree());

    let t = tau(&g, &x, &pol)?;
    assert_eq!(t.route, TauRoute::ClosedL);
    // rank X − dim(ran X ∩ ran G)
    println!("rank τ_G(X) = {}", t.value.rank(&pol));
    Ok(())
}
