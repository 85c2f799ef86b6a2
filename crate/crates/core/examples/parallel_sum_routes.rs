//! X:G by every route on a singular pair and on a definite one.

use shorted_ops::parallel::{
    default_eps_schedule, parallel_sum, parallel_sum_definite, parallel_sum_regularized, parallel_sum_via_m,
    variational_value,
};
use shorted_ops::{PsdMatrix, TolerancePolicy};

fn main() -> shorted_ops::Result<()> {
    let pol = TolerancePolicy::default();

    // resistors in parallel: 2:2 = 1, 3:6 = 2
    let x = PsdMatrix::diag(&[2.0, 3.0]);
    let g = PsdMatrix::diag(&[2.0, 6.0]);
    println!("diag(2,3):diag(2,6) = {:?}", parallel_sum(&x, &g, &pol)?.entries().diagonal().as_slice());
    println!(
        "  definite route gap {:.2e}",
        parallel_sum_definite(&x, &g, &pol)?.max_abs_diff(&parallel_sum(&x, &g, &pol)?)
    );

    // singular operands: ran X ∩ ran G = span(e1)
    let x = PsdMatrix::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 1.0, 0.0], &[0.0, 0.0, 0.0]], &pol)?;
    let g = PsdMatrix::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 4.0]], &pol)?;
    let ps = parallel_sum(&x, &g, &pol)?;
    println!("X:G =\n{:.6}rank {}", ps.entries(), ps.rank(&pol));
    println!("via-m gap       {:.2e}", parallel_sum_via_m(&x, &g, &pol)?.max_abs_diff(&ps));
    let reg = parallel_sum_regularized(&x, &g, &default_eps_schedule(), &pol)?;
    println!("regularized gap {:.2e}", reg.residual_cross);
    for (eps, norm) in reg.eps_trace.iter().step_by(5) {
        println!("  ε = {eps:.1e}  ‖X(X+G+εI)^-1 G‖_F = {norm:.12}");
    }

    let h = nalgebra::DVector::from_column_slice(&[1.0, -1.0, 2.0]);
    let v = variational_value(&x, &g, &h, &pol)?;
    println!("inf over splittings of h: {v:.12}, (X:G h, h) = {:.12}", h.dot(&(ps.entries() * &h)));
    Ok(())
}
