//! B = [A]B + (B − [A]B) by projection, checked against lim (nA):B.

use shorted_ops::parallel::parallel_sum;
use shorted_ops::shorted::{ac_part_limit, default_n_schedule, is_absolutely_continuous, lebesgue_decompose, range_inclusion};
use shorted_ops::{PsdMatrix, TolerancePolicy};

fn main() -> shorted_ops::Result<()> {
    let pol = TolerancePolicy::default();
    let a = PsdMatrix::diag(&[1.0, 0.0]);
    let b = PsdMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 1.0]], &pol)?;

    let d = lebesgue_decompose(&a, &b, &pol)?;
    println!("[A]B =\n{:.6}", d.ac_part.entries());
    println!("B − [A]B =\n{:.6}", d.singular_part.entries());
    println!("dim Ω = {}, unique = {}", d.omega.dim(), d.unique);
    println!("residuals {:?}", d.residuals);

    let lim = ac_part_limit(&a, &b, &default_n_schedule(), &pol)?;
    for (n, norm) in lim.eps_trace.iter().take(6) {
        println!("  n = {n:>4}  ‖(nA):B‖_F = {norm:.12}");
    }
    println!("limit route after {} steps, gap {:.2e}", lim.eps_trace.len(), lim.residual_cross);

    println!("‖A:(B − [A]B)‖ = {:.2e}", parallel_sum(&a, &d.singular_part, &pol)?.max_abs());
    println!("B is A-absolutely continuous: {}", is_absolutely_continuous(&a, &b, &pol)?);
    println!("ran B ⊆ ran A: {}", range_inclusion(&b, &a, &pol)?);
    Ok(())
}
