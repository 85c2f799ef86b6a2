//! Battery over a seeded ensemble: failure counts and the worst
//! residual-to-threshold ratio per check.
//!
//! Usage: `ensemble_sweep [seed] [count]` (defaults 1, 200).

use std::collections::BTreeMap;

use shorted_ops::verify::{random_specs, run_ensemble, CheckStatus};
use shorted_ops::TolerancePolicy;

fn main() -> shorted_ops::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("numeric argument"));
    let seed = args.next().unwrap_or(1);
    let count = args.next().unwrap_or(200) as usize;
    let pol = TolerancePolicy::default();

    let start = std::time::Instant::now();
    let entries = run_ensemble(&random_specs(seed, count), &pol)?;
    let elapsed = start.elapsed();

    let mut fails: BTreeMap<&str, usize> = BTreeMap::new();
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    for e in &entries {
        for c in &e.report.checks {
            if c.status == CheckStatus::Fail {
                *fails.entry(&c.name).or_default() += 1;
                println!("FAIL pair {} {:?}: {} residual {:e} > {:e}", e.index, e.spec, c.name, c.residual, c.threshold);
            }
            if c.threshold > 0.0 {
                let w = worst.entry(&c.name).or_default();
                *w = w.max(c.residual / c.threshold);
            }
        }
    }
    println!("{count} pairs in {elapsed:.2?}, failures: {fails:?}");
    for (name, r) in worst {
        println!("{name:<38} {r:.3e}");
    }
    Ok(())
}
