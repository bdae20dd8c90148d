//! Enumerates connected stable graphs and compares the orbit formula for
//! `|Aut|` with an exhaustive count over half-edge permutations.

use hkrenorm::graphs::{enumerate_connected_stable, named};

fn main() -> hkrenorm::Result<()> {
    let graphs = enumerate_connected_stable(2, 1, 4)?;
    println!("{} connected stable graphs with genus <= 2, one tail, <= 4 edges", graphs.len());
    println!("{:>3} {:>5} {:>5} {:>5} {:>6} {:>6}", "#", "V", "E", "b1", "|Aut|", "brute");
    for (i, g) in graphs.iter().enumerate().take(12) {
        let brute = g.automorphism_order_bruteforce().map(|n| n.to_string()).unwrap_or_else(|_| "-".into());
        println!("{:>3} {:>5} {:>5} {:>5} {:>6} {:>6}", i, g.num_vertices(), g.num_edges(), g.betti(), g.automorphism_order()?, brute);
    }

    let theta = named("theta").expect("library graph");
    let s = theta.subgraph_surgery(&[0, 1]);
    println!(
        "\ntheta: contracting edges 0,1 leaves {} vertex and {} edge(s) in the quotient",
        s.quotient.num_vertices(),
        s.quotient.num_edges()
    );
    println!("text form:\n{}", theta.to_text());
    Ok(())
}
