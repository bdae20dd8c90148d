//! Heat kernels on the line and the half line, derivative polynomials and
//! the regularised propagator.

use hkrenorm::heatkernel::{derivative_poly, kernel_hn, kernel_rn, propagator, propagator_line_closed, Geometry};

fn main() -> hkrenorm::Result<()> {
    for t in [0.01, 0.1, 1.0] {
        println!("t = {t:<5} K(0.2, 0.5) = {:.6e}   Dirichlet = {:.6e}", kernel_rn(t, &[0.2], &[0.5])?, kernel_hn(t, &[0.2], &[0.5])?);
    }
    for k in 1..=4 {
        println!("d^{k}K/dx^{k} = K * {:?}", derivative_poly(0, k)?.poly);
    }
    let (eps, l) = (1e-3, 1.0);
    let num = propagator(eps, l, &[0.2], &[0.5], Geometry::Plane)?;
    println!("P(0.2, 0.5) over [{eps}, {l}]: quadrature {num:.12}, closed form {:.12}", propagator_line_closed(eps, l, 0.2, 0.5));
    Ok(())
}
