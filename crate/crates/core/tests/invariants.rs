//! Property tests for the structural invariants of each module.

use hkrenorm::cover::Constraint;
use hkrenorm::expansion::{check_expansion, random_interaction, random_propagator, Truncation};
use hkrenorm::graphs::{enumerate_connected_stable, StableGraph};
use hkrenorm::heatkernel::{derivative_poly, kernel_hn_extended, kernel_rn, reflect, Geometry};
use hkrenorm::linalg::Matrix;
use hkrenorm::renorm::{error_exponent, minimal_order};
use hkrenorm::scalar::{q, qi, ratio_to_f64, Q};
use hkrenorm::weights::{f_gamma_closed, Field, LocalFunctionalSpec};
use hkrenorm::wick::{
    decompose_general_closed, decompose_general_recursion, decompose_interval, wick_box, wick_interval, wick_rn, wick_rn_diagonal, Endpoint,
    QuadraticFormND,
};
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::sync::OnceLock;

fn small_graphs() -> &'static Vec<StableGraph> {
    static G: OnceLock<Vec<StableGraph>> = OnceLock::new();
    G.get_or_init(|| {
        let mut v = Vec::new();
        for tails in 0..=2 {
            v.extend(enumerate_connected_stable(2, tails, 4).unwrap());
        }
        v
    })
}

/// Same graph with vertices and half-edges renumbered.
fn relabel(g: &StableGraph, vperm: &[usize], hperm: &[usize]) -> StableGraph {
    let nv = g.num_vertices();
    let nh = g.num_half_edges();
    let mut genus = vec![0; nv];
    for v in 0..nv {
        genus[vperm[v]] = g.vertex_genus(v);
    }
    let mut vertex_of = vec![0; nh];
    for h in 0..nh {
        vertex_of[hperm[h]] = vperm[g.vertex_of(h)];
    }
    let edges = g.edges().iter().map(|&(a, b)| (hperm[a], hperm[b])).collect();
    let tails = g.tails().iter().map(|&h| hperm[h]).collect();
    StableGraph::new(genus, vertex_of, edges, tails).unwrap()
}

fn rational() -> impl Strategy<Value = Q> {
    (1i64..=12, 1i64..=6).prop_map(|(n, d)| q(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn graph_counts_are_consistent(i in 0usize..10_000) {
        let gs = small_graphs();
        let g = &gs[i % gs.len()];
        prop_assert!(g.genus() >= g.betti());
        prop_assert!(g.validate_stable().is_ok());
        let halves: BTreeSet<usize> = g.edges().iter().flat_map(|&(a, b)| [a, b]).chain(g.tails().iter().cloned()).collect();
        prop_assert_eq!(halves.len(), g.num_half_edges());
    }

    #[test]
    fn canonical_form_ignores_labels(i in 0usize..10_000, seed in any::<u64>()) {
        let gs = small_graphs();
        let g = &gs[i % gs.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vperm: Vec<usize> = (0..g.num_vertices()).collect();
        let mut hperm: Vec<usize> = (0..g.num_half_edges()).collect();
        use rand::seq::SliceRandom;
        vperm.shuffle(&mut rng);
        hperm.shuffle(&mut rng);
        let h = relabel(g, &vperm, &hperm);
        prop_assert_eq!(h.canonical_form(), g.canonical_form());
        prop_assert_eq!(h.automorphism_order().unwrap(), g.automorphism_order().unwrap());
    }

    #[test]
    fn union_automorphisms_multiply(i in 0usize..10_000, j in 0usize..10_000) {
        let gs = small_graphs();
        let (a, b) = (&gs[i % gs.len()], &gs[j % gs.len()]);
        let u = a.disjoint_union(b);
        let swap = if a.canonical_form() == b.canonical_form() { 2 } else { 1 };
        let want = a.automorphism_order().unwrap() * b.automorphism_order().unwrap() * BigInt::from(swap);
        prop_assert_eq!(u.automorphism_order().unwrap(), want.clone());
        if u.num_half_edges() <= 10 {
            prop_assert_eq!(BigInt::from(u.automorphism_order_bruteforce().unwrap()), want);
        }
    }

    #[test]
    fn surgery_partitions_the_edges(i in 0usize..10_000, mask in any::<u16>()) {
        let gs = small_graphs();
        let g = &gs[i % gs.len()];
        let subset: Vec<usize> = (0..g.num_edges()).filter(|e| mask >> e & 1 == 1).collect();
        let s = g.subgraph_surgery(&subset);
        let inside: BTreeSet<usize> = s.subgraph_edges.iter().cloned().collect();
        let outside: BTreeSet<usize> = s.quotient_edges.iter().cloned().collect();
        prop_assert!(inside.is_disjoint(&outside));
        prop_assert_eq!(inside.len() + outside.len(), g.num_edges());
        prop_assert_eq!(s.quotient.num_edges(), outside.len());
    }

    #[test]
    fn integration_by_parts_is_exact(m in 2u32..=12, alpha in rational()) {
        let hi = decompose_interval(m, &alpha).unwrap();
        let lo = decompose_interval(m - 2, &alpha).unwrap();
        let scale = qi(m as i64 - 1) / &alpha;
        prop_assert_eq!(hi.i0_coefficient.clone(), &scale * &lo.i0_coefficient);
        // J coefficients: ((m-1)/α) times those of m-2, plus -1/α on J_{m-1}.
        let mut want: std::collections::BTreeMap<u32, Q> = lo.boundary_terms.iter().map(|(l, c)| (*l, &scale * c)).collect();
        *want.entry(m - 1).or_insert_with(|| qi(0)) -= qi(1) / &alpha;
        let got: std::collections::BTreeMap<u32, Q> = hi.boundary_terms.iter().cloned().collect();
        want.retain(|_, c| *c != qi(0));
        prop_assert_eq!(got, want);
        for (l, _) in &hi.boundary_terms {
            prop_assert!(*l < m && (l + m) % 2 == 1);
        }
    }

    #[test]
    fn general_routes_agree_exactly(m in 0u32..=10, alpha in rational(), bn in -6i64..=6, bd in 1i64..=4) {
        let beta = q(bn, bd);
        prop_assert_eq!(decompose_general_closed(m, &alpha, &beta).unwrap(), decompose_general_recursion(m, &alpha, &beta).unwrap());
    }

    #[test]
    fn pairing_sum_respects_symmetry(seed in any::<u64>(), len in 0usize..=6) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3usize);
        let a: Vec<Vec<Q>> = {
            let l: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| if j <= i { rng.gen_range(-2..=2) } else { 0 }).collect()).collect();
            (0..n).map(|i| (0..n).map(|j| qi((0..n).map(|k| l[i][k] * l[j][k]).sum::<i64>() + if i == j { 1 } else { 0 })).collect()).collect()
        };
        let form = QuadraticFormND::new(Matrix::from_rows(a.clone())).unwrap();
        let mono: Vec<usize> = (0..len).map(|_| rng.gen_range(0..n)).collect();
        let mut shuffled = mono.clone();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut rng);
        let v = wick_rn(&form, &mono).unwrap();
        prop_assert_eq!(v.clone(), wick_rn(&form, &shuffled).unwrap());
        let af: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(ratio_to_f64).collect()).collect();
        let diag = wick_rn_diagonal(&af, &mono);
        prop_assert!((v.to_f64() - diag).abs() <= 1e-9 * diag.abs().max(1e-3 * v.to_f64().abs()) + 1e-12);
    }

    #[test]
    fn box_moments_factor(k0 in 0u32..=4, k1 in 0u32..=4, a0 in 1u32..=4, a1 in 1u32..=4) {
        let (lo, hi) = ([Endpoint::Finite(-1.0), Endpoint::Finite(0.0)], [Endpoint::Finite(2.0), Endpoint::PosInf]);
        let alphas = [a0 as f64 / 2.0, a1 as f64];
        let v = wick_box(&alphas, &lo, &hi, &[k0, k1]).unwrap();
        let x = wick_interval(k0, &q(a0 as i64, 2), lo[0], hi[0]).unwrap().1;
        let y = wick_interval(k1, &qi(a1 as i64), lo[1], hi[1]).unwrap().1;
        prop_assert!((v - x * y).abs() <= 1e-12 * (x * y).abs().max(1e-300));
    }

    #[test]
    fn sector_constraints_compose(l1 in 0.0f64..1.0, l2 in 0.0f64..1.0, l3 in 0.0f64..1.0, r in 1.1f64..5.0, s in 1.1f64..5.0) {
        // Sorted log times t1 ≤ t2 ≤ t3 < 1.
        let mut lt = [-(l1 * 40.0) - 1e-3, -(l2 * 40.0) - 1e-3, -(l3 * 40.0) - 1e-3];
        lt.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let c = |i, j, s| Constraint::c(i, j, s).holds(&lt, None, false);
        let d = |i, j, s| Constraint::d(i, j, s).holds(&lt, None, false);
        if c(1, 2, r) && c(2, 3, s) {
            prop_assert!(c(1, 3, r * s));
        }
        if d(1, 2, r) && d(2, 3, s) {
            prop_assert!(d(1, 3, r * s));
        }
        // Monotone in the far index.
        if c(1, 3, r) {
            prop_assert!(c(1, 2, r));
        }
    }

    #[test]
    fn heat_equation_holds(x in -1.5f64..1.5, y in -1.5f64..1.5, z in 0.05f64..1.5, w in 0.05f64..1.5, t in 0.2f64..2.0) {
        let h = 1e-3;
        for (geometry, xs, ys) in [(Geometry::Plane, [x, z], [y, w]), (Geometry::HalfSpace, [x, z], [y, w])] {
            let k = |t: f64, p: &[f64]| match geometry {
                Geometry::Plane => kernel_rn(t, p, &ys).unwrap(),
                Geometry::HalfSpace => kernel_hn_extended(t, p, &ys).unwrap(),
            };
            // Richardson on central differences: O(h^4) truncation.
            let dt_h = |h: f64| (k(t + h, &xs) - k(t - h, &xs)) / (2.0 * h);
            let lap_h = |h: f64| {
                (0..2)
                    .map(|i| {
                        let (mut p, mut m) = (xs, xs);
                        p[i] += h;
                        m[i] -= h;
                        (k(t, &p) - 2.0 * k(t, &xs) + k(t, &m)) / (h * h)
                    })
                    .sum::<f64>()
            };
            let dt = (4.0 * dt_h(h / 2.0) - dt_h(h)) / 3.0;
            let lap = (4.0 * lap_h(h / 2.0) - lap_h(h)) / 3.0;
            prop_assert!((dt - lap).abs() < 1e-6, "{geometry}: {dt} vs {lap}");
        }
    }

    #[test]
    fn image_kernel_is_odd(x in -2.0f64..2.0, z in 0.0f64..2.0, y in -2.0f64..2.0, w in 0.0f64..2.0, t in 0.01f64..3.0) {
        let (xs, ys) = ([x, z], [y, w]);
        let a = kernel_hn_extended(t, &xs, &ys).unwrap();
        let b = kernel_hn_extended(t, &xs, &reflect(&ys)).unwrap();
        prop_assert!((a + b).abs() <= 1e-12 * a.abs().max(1e-300));
    }

    #[test]
    fn weights_ignore_edge_labels(seed in any::<u64>(), i in 0usize..10_000) {
        use rand::Rng;
        use rand::seq::SliceRandom;
        let loops: Vec<&StableGraph> = small_graphs().iter().filter(|g| g.betti() >= 1 && g.num_tails() > 0 && g.genera().iter().all(|&x| x == 0) && g.num_vertices() <= 3).collect();
        let g = loops[i % loops.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t: Vec<f64> = (0..g.num_edges()).map(|_| rng.gen_range(0.05..1.0)).collect();
        // Reorder edges and flip orientations.
        let mut order: Vec<usize> = (0..g.num_edges()).collect();
        order.shuffle(&mut rng);
        let edges: Vec<(usize, usize)> = order.iter().map(|&e| {
            let (a, b) = g.edges()[e];
            if rng.gen_bool(0.5) { (b, a) } else { (a, b) }
        }).collect();
        let h = StableGraph::new(g.genera().to_vec(), (0..g.num_half_edges()).map(|x| g.vertex_of(x)).collect(), edges, g.tails().to_vec()).unwrap();
        let th: Vec<f64> = order.iter().map(|&e| t[e]).collect();
        let field = Field::library("gauss", 1).unwrap();
        let a = f_gamma_closed(g, &t, &LocalFunctionalSpec::monomial(g, 1, 1.0), &field, Geometry::Plane).unwrap();
        let b = f_gamma_closed(&h, &th, &LocalFunctionalSpec::monomial(&h, 1, 1.0), &field, Geometry::Plane).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn minimal_order_is_the_first_root(i in 0usize..10_000, n in 1usize..=4, r in 2.5f64..6.0) {
        let loops: Vec<&StableGraph> = small_graphs().iter().filter(|g| g.betti() >= 1).collect();
        let g = loops[i % loops.len()];
        let m = minimal_order(g, n, r, 0).unwrap();
        let d = |np| error_exponent(g, n, r, np, 0, Geometry::Plane).unwrap();
        prop_assert!(d(m) >= qi(0));
        if m > 0 {
            prop_assert!(d(m - 1) < qi(0));
        }
        prop_assert!(d(m + 1) > d(m));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn small_expansions_agree(seed in any::<u64>(), d in 1usize..=2) {
        let trunc = Truncation::new(2, 6, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let int = random_interaction(&mut rng, d, &[(0, 3), (0, 4), (1, 1), (1, 2), (2, 0)], trunc);
        let p = random_propagator(&mut rng, d);
        prop_assert!(check_expansion(&p, &int, trunc).unwrap().passed());
    }
}

#[test]
fn derivative_polynomials_have_full_degree() {
    for k in 0..=12 {
        let p = derivative_poly(0, k).unwrap();
        assert_eq!(p.degree_in_inverse_t(), k);
    }
}
