//! M_{n+1} = (I − M₀ + M_n)^{-1} M_n² for a contraction M₀.

use shorted_ops::psd::EigenDecomposition;
use shorted_ops::tau::{m_recurrence, m_recurrence_to_convergence};
use shorted_ops::{PsdMatrix, TolerancePolicy};

fn main() -> shorted_ops::Result<()> {
    let pol = TolerancePolicy::default();

    let m0 = PsdMatrix::diag(&[1.0, 0.5]);
    for (n, m) in m_recurrence(&m0, 3, &pol)?.iter().enumerate() {
        println!("M_{n} = diag{:?}", m.entries().diagonal().as_slice());
    }

    // a non-diagonal contraction with a two-dimensional eigenvalue-1 space
    let q = nalgebra::DMatrix::from_fn(4, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0).qr().q();
    let vals = nalgebra::DVector::from_column_slice(&[1.0, 1.0, 0.7, 0.2]);
    let raw = &q * nalgebra::DMatrix::from_diagonal(&vals) * q.transpose();
    let m0 = PsdMatrix::validate(&raw, &pol)?;
    let (ms, stop) = m_recurrence_to_convergence(&m0, &pol)?;
    let last = ms.last().expect("nonempty");
    let e = EigenDecomposition::of_symmetric(last.entries());
    println!("{stop:?} after {} steps, limit spectrum {:.3e}", ms.len() - 1, e.eigenvalues);
    let p1 = q.columns(0, 2) * q.columns(0, 2).transpose();
    println!("gap to the eigenvalue-1 projection {:.2e}", (last.entries() - p1).amax());
    let comm = (m0.entries() * last.entries() - last.entries() * m0.entries()).amax();
    println!("‖M₀M_∞ − M_∞M₀‖ = {comm:.2e}");
    Ok(())
}
