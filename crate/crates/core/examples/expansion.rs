//! Formal graph expansion for a toy propagator: the graph sum equals the
//! operator expansion exp(ħ∂_P) e^{I/ħ}, and W = ħ log V is connected.

use hkrenorm::expansion::{check_expansion, connected_graphs, w_graphs, FormalFunctional, ToyPropagator, Truncation};
use hkrenorm::scalar::{q, qi};

fn main() -> hkrenorm::Result<()> {
    let trunc = Truncation::new(2, 6, 4);
    // I = x^3/6 + λ x^4/24 + ħ x^2/2 (cubic and quartic classical part, one-loop mass term).
    let mut int = FormalFunctional::interaction(1, Truncation::weight_only(trunc.euler));
    int.add_term(0, vec![3], q(1, 6));
    int.add_term(0, vec![4], q(1, 24));
    int.add_term(1, vec![2], q(1, 2));
    let p = ToyPropagator::scalar(qi(1));

    let graphs = connected_graphs(&int, trunc)?;
    println!("{} connected graphs within weight {}", graphs.len(), trunc.euler);
    for t in graphs.iter().take(8) {
        println!("  V = {}, E = {}, |Aut| = {}, ħ^{}", t.graph.num_vertices(), t.graph.num_edges(), t.aut, t.hbar);
    }
    let w = w_graphs(&p, &int, &graphs, trunc)?;
    println!("W at ħ^1 (one loop): {:?}", w.part(1, 2));
    let c = check_expansion(&p, &int, trunc)?;
    println!("graphs = direct: {}, exp(W/ħ) = V: {}, W in O+: {}", c.v_match.is_none(), c.exp_match.is_none(), c.w_in_o_plus);
    Ok(())
}
