//! Feynman weight of the bubble against a Gaussian field: closed form,
//! Taylor truncations f^{N'} and the remainder slope against its bound.

use hkrenorm::graphs::named;
use hkrenorm::heatkernel::Geometry;
use hkrenorm::renorm::{error_exponent, geometric_path, measure_slope, minimal_order};
use hkrenorm::scalar::ratio_to_f64;
use hkrenorm::weights::form::p_gamma;
use hkrenorm::weights::{f_gamma_closed, f_gamma_taylor, f_gamma_truncated, Field, LocalFunctionalSpec};

fn main() -> hkrenorm::Result<()> {
    let g = named("bubble").expect("library graph");
    let n = 2;
    let spec = LocalFunctionalSpec::monomial(&g, n, 1.0);
    let field = Field::library("gauss", n)?;
    println!("P_bubble for n = {n}: {:?}", p_gamma(&g, n)?);

    let t = [0.05, 0.2];
    for geometry in [Geometry::Plane, Geometry::HalfSpace] {
        let full = f_gamma_closed(&g, &t, &spec, &field, geometry)?;
        println!("\n{geometry}: f(t) = {full:.10e}");
        for np in 0..=3 {
            let w = f_gamma_truncated(&g, &t, &spec, &field, geometry, &[vec![0, 1]], &[np])?;
            println!("  N' = {np}: f^N' = {:.10e}, remainder {:.3e}", w.truncated, w.remainder);
        }
    }

    let r = 1.0;
    let np = minimal_order(&g, n, r, 0)?;
    let path = geometric_path(2, 1.0, &[0.3, 0.2, 0.12, 0.07, 0.04, 0.02]);
    let fit = measure_slope(&g, &spec, &field, np, Geometry::Plane, &path)?;
    let bound = ratio_to_f64(&error_exponent(&g, n, r, np, 0, Geometry::Plane)?);
    println!("\nR = {r}: minimal N' = {np} (error exponent {bound:.3}), measured remainder slope {:.3}", fit.slope);

    let sym = f_gamma_taylor(&g, &spec, 2, Geometry::Plane)?;
    println!("symbolic f^2 has {} terms; degree formulas hold on {} of them", sym.terms.len(), sym.check_degrees()?);
    Ok(())
}
