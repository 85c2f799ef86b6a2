//! The full property battery on one generated pair.

use shorted_ops::verify::{gen_pair, run_battery, CheckStatus, EnsembleSpec};
use shorted_ops::TolerancePolicy;

fn main() -> shorted_ops::Result<()> {
    let pol = TolerancePolicy::default();
    let (g, x) = gen_pair(&EnsembleSpec::new(12, 5, 7, 3, 42))?;
    let report = run_battery(&g, &x, &pol)?;
    println!("pair {}", &report.pair_digest[..16]);
    for c in &report.checks {
        let status = match c.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::SkippedDegenerate => "skip",
        };
        println!("{status} {:<36} {:>10.2e} / {:<9.2e} {}", c.name, c.residual, c.threshold, c.anchor);
    }
    println!(
        "{} pass, {} fail, {} skipped-degenerate",
        report.count(CheckStatus::Pass),
        report.count(CheckStatus::Fail),
        report.count(CheckStatus::SkippedDegenerate)
    );
    Ok(())
}
