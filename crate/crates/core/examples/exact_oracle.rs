//! Floating τ_G(X) against the exact rational oracle.

use shorted_ops::tau::tau;
use shorted_ops::verify::exact::{exact_orbit, exact_tau, rat, to_rational};
use num::ToPrimitive;
use shorted_ops::verify::exact_oracle_small;
use shorted_ops::{PsdMatrix, TolerancePolicy};

fn main() -> shorted_ops::Result<()> {
    let pol = TolerancePolicy::default();

    let one = vec![vec![rat(1, 1)]];
    let orbit = exact_orbit(&one, &one, 5)?;
    let terms: Vec<String> = orbit.iter().map(|f| f[0][0].to_string()).collect();
    println!("exact scalar orbit: {}", terms.join(", "));

    let cases = [
        (PsdMatrix::diag(&[1.0, 0.0]), PsdMatrix::diag(&[3.0, 5.0])),
        (PsdMatrix::diag(&[1.0, 0.0]), PsdMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]], &pol)?),
        (PsdMatrix::diag(&[0.0, 2.0, 1.0]), PsdMatrix::diag(&[4.0, 1.0, 0.0])),
        (PsdMatrix::diag(&[1.0, 0.0]), PsdMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]], &pol)?),
    ];
    for (g, x) in &cases {
        let exact = exact_oracle_small(g, x)?;
        let float = tau(g, x, &pol)?.value;
        println!("τ = {:?}  gap {:.2e}", exact.entries().as_slice(), exact.max_abs_diff(&float));
    }

    let g = to_rational(&cases[1].0)?;
    let x = to_rational(&cases[1].1)?;
    // iterates live on the 2^-320 grid and the orbit stops once a step is
    // below 2^-100, so the entry is within about that distance of 1/3
    let t00 = &exact_tau(&g, &x)?[0][0];
    println!(
        "exact τ entry (0,0): {} / {} bits, ≈ {}",
        t00.numer().bits(),
        t00.denom().bits(),
        t00.to_f64().unwrap_or(f64::NAN)
    );
    Ok(())
}
