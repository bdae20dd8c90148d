//! Counterterm subtraction for the bubble on the line: w(P_ε) diverges
//! only in n >= 4, while w - w^CT settles geometrically as ε → 0.

use hkrenorm::graphs::named;
use hkrenorm::heatkernel::Geometry;
use hkrenorm::renorm::{counterterm_report, uncorrected_shells, TimeRule};
use hkrenorm::weights::{Field, LocalFunctionalSpec};

fn main() -> hkrenorm::Result<()> {
    let g = named("bubble").expect("library graph");
    let spec = LocalFunctionalSpec::monomial(&g, 1, 1.0);
    let field = Field::library("gauss", 1)?;
    let js: Vec<u32> = (3..=9).collect();
    let rep = counterterm_report("bubble", &g, &spec, &field, Geometry::Plane, 4.0, &js, TimeRule::default())?;
    for c in &rep.chains {
        println!("chain {}: orders {:?}, exponents {:?}", c.label, c.orders, c.exponents);
    }
    println!("{:>3} {:>14} {:>14} {:>14}", "j", "w", "w_ct", "w - w_ct");
    for r in &rep.rows {
        println!("{:>3} {:>14.8e} {:>14.8e} {:>14.8e}", r.j, r.w, r.w_ct, r.renormalized);
    }
    println!("smallest ratio of successive differences after j = 5: {:.2}", rep.min_ratio_after(5));

    let spec4 = LocalFunctionalSpec::monomial(&g, 4, 1.0);
    let shells = uncorrected_shells(&g, &spec4, &Field::library("gauss", 4)?, Geometry::Plane, &js, TimeRule::default())?;
    println!("\nn = 4, uncorrected shells (constant per halving of ε, so w ~ log 1/ε):");
    for (j, shell, w) in shells {
        println!("  j = {j}: shell {shell:.5e}, w {w:.5e}");
    }
    Ok(())
}
