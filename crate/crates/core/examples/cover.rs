//! Builds the sector cover of `(0,1)^k` and checks it by sampling.

use hkrenorm::cover::{build_cover, verify_containment, verify_cover, verify_disjoint, DEFAULT_R};

fn main() -> hkrenorm::Result<()> {
    let k = 3;
    let regions = build_cover(k, DEFAULT_R, None)?;
    println!("k = {k}, R = {DEFAULT_R}: {} regions", regions.len());
    for r in regions.iter().take(6) {
        println!("  {}", r.label());
    }
    let c = verify_cover(k, DEFAULT_R, 20_000, 1)?;
    println!("cover: {} uncovered, {} double memberships, {} boundary points", c.cover_failures, c.double_memberships, c.boundary_points);
    let d = verify_disjoint(k, DEFAULT_R, 5_000, 2)?;
    println!("disjointness: {} pairs, {} not discharged by a lemma", d.pairs.len(), d.undischarged);
    let a = verify_containment(k, DEFAULT_R, 2_000, 3)?;
    println!("containment: {} violations, at least {} samples per region", a.violations(), a.min_samples());
    Ok(())
}
