//! Gaussian moments: exact interval decompositions, the inhomogeneous
//! closed form against its recursion, and pairing sums on R^n.

use hkrenorm::linalg::Matrix;
use hkrenorm::scalar::{q, qi};
use hkrenorm::wick::{decompose_interval, wick_general, wick_r, wick_rn, Endpoint, QuadraticFormND};

fn main() -> hkrenorm::Result<()> {
    let alpha = q(1, 2);
    let d = decompose_interval(4, &alpha)?;
    println!("x^4 exp(-x^2/4): I_0 coefficient {}, boundary terms {:?}", d.i0_coefficient, d.boundary_terms);
    println!("on the line: {}", wick_r(4, &alpha)?.to_f64());

    // Closed form and recursion agree exactly as rational decompositions.
    let g = wick_general(6, &qi(1), &q(-1, 2), Endpoint::Finite(-1.0), Endpoint::Finite(2.0))?;
    assert_eq!(g.closed, g.recursion);
    println!("x^6 exp(-x^2/2 - x/2) on [-1, 2] = {:.15}", g.value_closed);

    let a = Matrix::from_rows(vec![vec![qi(2), qi(1)], vec![qi(1), qi(3)]]);
    let form = QuadraticFormND::new(a)?;
    let v = wick_rn(&form, &[0, 0, 1, 1])?;
    println!("E-type moment x0^2 x1^2 on R^2: pairing sum {} (value {:.12})", v.pairing_sum, v.to_f64());
    Ok(())
}
