//! The orbit X, μ_G(X), μ_G(μ_G(X)), … and its diagnostics.

use shorted_ops::tau::mu_orbit;
use shorted_ops::{PsdMatrix, TolerancePolicy};

fn main() -> shorted_ops::Result<()> {
    let pol = TolerancePolicy::default();

    // scalar case g = x = 1: 1, 1/2, 1/6, 1/42, 1/1806, …
    let one = PsdMatrix::diag(&[1.0]);
    let t = mu_orbit(&one, &one, &pol)?;
    let vals: Vec<f64> = t.iterates.iter().map(|f| f.entries()[(0, 0)]).collect();
    println!("scalar orbit {:?}", &vals[..5]);

    let g = PsdMatrix::diag(&[1.0, 0.0]);
    let x = PsdMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]], &pol)?;
    let t = mu_orbit(&g, &x, &pol)?;
    println!("{:>3} {:>12} {:>12} {:>12}", "n", "‖F_n−F_n+1‖", "‖F_n:G‖", "tr Σ F_k:G");
    for n in 0..t.steps() {
        println!(
            "{n:>3} {:>12.3e} {:>12.3e} {:>12.9}",
            t.step_gaps[n],
            t.ps_norms[n],
            t.partial_sums[n].trace()
        );
    }
    println!("{:?} at step {:?}", t.stopped_by, t.converged_at);
    println!("limit =\n{:.6}", t.last().entries());
    // telescoping: X = lim F_n + Σ F_k:G
    let sum = t.partial_sums.last().expect("at least one step");
    println!("telescoping gap {:.2e}", x.max_abs_diff(&t.last().add(sum)?));
    Ok(())
}
