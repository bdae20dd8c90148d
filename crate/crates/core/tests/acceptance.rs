//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines are printed
//! whether or not a check fails. A criterion listed in `KNOWN_FAILURES`
//! still prints FAIL but does not fail the process; every other FAIL does.

use hkrenorm::cover::{verify_containment, verify_cover, verify_disjoint};
use hkrenorm::expansion::{check_expansion, random_interaction, random_propagator, Truncation};
use hkrenorm::graphs::{enumerate_connected_stable, named, StableGraph};
use hkrenorm::heatkernel::{derivative_poly, derivative_poly_compositions, kernel, kernel_hn, kernel_rn, propagator, Geometry};
use hkrenorm::linalg::Matrix;
use hkrenorm::poly::Poly;
use hkrenorm::quad::{adaptive_ext, Tolerance};
use hkrenorm::renorm::{counterterm_report, error_exponent, geometric_path, measure_slope, minimal_order, uncorrected_shells, TimeRule};
use hkrenorm::scalar::{q, qi, ratio_to_f64, Q};
use hkrenorm::weights::field::product_integral_line;
use hkrenorm::weights::form::{assemble_quadratic_form, b_transforms, i_a_k_batch, p_gamma, twice_q_degree, twice_r_gamma};
use hkrenorm::weights::symbolic::f_gamma_taylor;
use hkrenorm::weights::{Field, LocalFunctionalSpec};
use hkrenorm::wick::{decompose_general_closed, decompose_general_recursion, decompose_interval, wick_general, wick_rn, wick_rn_diagonal, wick_rn_quadrature, Endpoint, QuadraticFormND};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::time::Instant;

/// Criteria whose FAIL is analysed and expected; see the README.
const KNOWN_FAILURES: &[&str] = &["6b"];

struct Outcome {
    id: &'static str,
    name: &'static str,
    passed: bool,
    detail: String,
    seconds: f64,
}

fn run(id: &'static str, name: &'static str, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let start = Instant::now();
    let (passed, detail) = f();
    let o = Outcome { id, name, passed, detail, seconds: start.elapsed().as_secs_f64() };
    println!("{} [{}] {}: {} ({:.1}s)", if o.passed { "PASS" } else { "FAIL" }, o.id, o.name, o.detail, o.seconds);
    o
}

fn info(id: &str, detail: String) {
    println!("INFO [{id}] {detail}");
}

// ---------------------------------------------------------------- Wick

fn endpoints() -> Vec<(Endpoint, Endpoint)> {
    let pts = [Endpoint::NegInf, Endpoint::Finite(-1.0), Endpoint::Finite(0.0), Endpoint::Finite(2.0), Endpoint::PosInf];
    let mut out = Vec::new();
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            out.push((pts[i], pts[j]));
        }
    }
    out
}

fn wick_suite() -> (bool, String) {
    let alphas = [q(1, 2), qi(1), qi(3)];
    let betas = [qi(0), qi(1), qi(-1)];
    let tol = Tolerance::new(1e-300, 1e-13);
    let mut cases = 0;
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for m in 0..=10u32 {
        for al in &alphas {
            for be in &betas {
                let (af, bf) = (ratio_to_f64(al), ratio_to_f64(be));
                for (a, b) in endpoints() {
                    let g = wick_general(m, al, be, a, b).unwrap();
                    let f = |x: f64| x.powi(m as i32) * (-af * x * x / 2.0 + bf * x).exp();
                    let reference = adaptive_ext(f, a.value(), b.value(), tol).value;
                    // Scale for exact cancellations (odd moments on symmetric ranges).
                    let mass = adaptive_ext(|x| f(x).abs(), a.value(), b.value(), tol).value;
                    for v in [g.value_recursion, g.value_closed] {
                        let err = (v - reference).abs();
                        let rel = err / reference.abs().max(1e-300);
                        if err > 1e-9 * reference.abs() + 1e-13 * mass {
                            bad.push(format!("m={m} α={al} β={be} [{a:?},{b:?}]: {v} vs {reference}"));
                        } else if err > 1e-13 * mass {
                            worst = worst.max(rel);
                        }
                    }
                    cases += 1;
                }
            }
        }
    }
    // β = 0 must reproduce the homogeneous decomposition exactly.
    let mut reduction_ok = true;
    for m in 0..=10u32 {
        for al in &alphas {
            let hom = decompose_interval(m, al).unwrap();
            reduction_ok &= decompose_general_closed(m, al, &qi(0)).unwrap() == hom;
            reduction_ok &= decompose_general_recursion(m, al, &qi(0)).unwrap() == hom;
        }
    }
    // R^n pairing sums against tensor quadrature.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut rn_worst = 0.0f64;
    let mut rn_cases = 0;
    for n in 1..=3usize {
        for _ in 0..4 {
            let a = random_spd(&mut rng, n);
            let form = QuadraticFormND::new(Matrix::from_rows(a.clone())).unwrap();
            let af: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(ratio_to_f64).collect()).collect();
            for len in [0usize, 2, 4, 6] {
                let mono: Vec<usize> = (0..len).map(|_| rng.gen_range(0..n)).collect();
                let exact = wick_rn(&form, &mono).unwrap().to_f64();
                let quad = wick_rn_quadrature(&af, &mono, if n == 3 { 4 } else { 8 });
                // Uncoupled odd moments vanish exactly; quadrature leaves ~1e-17 there.
                rn_worst = rn_worst.max((exact - quad).abs() / (exact.abs() + 1e-6));
                rn_cases += 1;
            }
        }
    }
    let passed = bad.is_empty() && reduction_ok && rn_worst < 1e-6;
    for b in bad.iter().take(5) {
        println!("    {b}");
    }
    (
        passed,
        format!(
            "{cases} 1D cases, {} over tolerance, worst rel err {worst:.1e}; β=0 reduction exact: {reduction_ok}; {rn_cases} R^n cases, worst rel err {rn_worst:.1e}",
            bad.len()
        ),
    )
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<Q>> {
    // L L^T + I with small integer entries keeps the form well conditioned.
    let l: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| if j <= i { rng.gen_range(-1..=1) } else { 0 }).collect()).collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let s: i64 = (0..n).map(|k| l[i][k] * l[j][k]).sum();
                    q(s + if i == j { 2 } else { 0 }, 2)
                })
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------- expansion

fn expansion_suite() -> (bool, String) {
    let types = [(0, 3), (0, 4), (1, 1), (1, 2), (2, 0)];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = Vec::new();
    let mut graphs = 0;
    let instances = 24;
    for i in 0..instances {
        let (d, euler) = if i % 2 == 0 { (1, 7) } else { (2, 6) };
        let trunc = Truncation::new(3, 8, euler);
        let int = random_interaction(&mut rng, d, &types, trunc);
        let p = random_propagator(&mut rng, d);
        let c = check_expansion(&p, &int, trunc).unwrap();
        graphs += c.graphs;
        if !c.passed() {
            failures.push(format!("instance {i}: {c:?}"));
        }
    }
    for f in &failures {
        println!("    {f}");
    }
    (
        failures.is_empty(),
        format!("{instances} instances (d=1 weight 7, d=2 weight 6; ħ ≤ 3, degree ≤ 8), {graphs} graph terms, {} mismatches", failures.len()),
    )
}

// ---------------------------------------------------------------- cover

fn cover_suite() -> (bool, String) {
    let r = 4.0;
    let mut ok = true;
    let mut parts = Vec::new();
    for k in 1..=5usize {
        let c = verify_cover(k, r, 100_000, 7 + k as u64).unwrap();
        let d = verify_disjoint(k, r, 10_000, 17 + k as u64).unwrap();
        let a = verify_containment(k, r, 10_000, 27 + k as u64).unwrap();
        let k_ok = c.cover_failures == 0 && c.double_memberships == 0 && d.undischarged == 0 && d.double_memberships == 0 && a.violations() == 0 && a.min_samples() >= 10_000;
        ok &= k_ok;
        parts.push(format!("k={k}: uncovered {} double {} pairs {}/{} containment {}", c.cover_failures, c.double_memberships, d.pairs.len() - d.undischarged, d.pairs.len(), a.violations()));
    }
    (ok, parts.join("; "))
}

// ---------------------------------------------------------------- weight algebra

fn sum_poly(k: usize, vars: &[usize]) -> Poly<Q> {
    let mut p = Poly::zero(k);
    for &v in vars {
        let mut m = vec![0; k];
        m[v] = 1;
        p.add_term(m, qi(1));
    }
    p
}

fn multi_indices(len: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        let mut next = Vec::new();
        for m in &out {
            let used: u32 = m.iter().sum();
            for e in 0..=(max - used) {
                let mut m2: Vec<u32> = m.clone();
                m2.push(e);
                next.push(m2);
            }
        }
        out = next;
    }
    out
}

fn weight_algebra_suite() -> (bool, String) {
    let bubble = named("bubble").unwrap();
    let mut bubble_ok = true;
    for n in 1..=4usize {
        bubble_ok &= p_gamma(&bubble, n).unwrap() == sum_poly(2, &[0, 1]).pow(n as u32);
    }
    // Genera and tails do not enter the form; keep one graph per underlying
    // multigraph.
    let mut seen = BTreeSet::new();
    let mut graphs: Vec<StableGraph> = Vec::new();
    for tails in 0..=2 {
        for g in enumerate_connected_stable(3, tails, 8).unwrap() {
            if g.betti() == 0 || g.betti() > 3 || g.num_vertices() < 2 {
                continue;
            }
            let pairs: Vec<(usize, usize)> = g.edges().iter().map(|&(a, b)| (g.vertex_of(a), g.vertex_of(b))).collect();
            let bare = StableGraph::from_vertices(&vec![0; g.num_vertices()], &vec![0; g.num_vertices()], &pairs);
            if seen.insert(bare.canonical_form()) {
                graphs.push(bare);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut forms, mut degree_bad, mut tree_bad, mut trees) = (0usize, 0usize, 0usize, 0usize);
    let (mut vanishing, mut value_bad, mut eigen_checked) = (0usize, 0usize, 0usize);
    for g in &graphs {
        let (e, v) = (g.num_edges(), g.num_vertices());
        let all = g.all_spanning_trees();
        for n in 1..=2usize {
            let form = assemble_quadratic_form(g, &all[0], n).unwrap();
            let pg = form.p_gamma();
            // deg P_γ = n(|V|-1)(|E|-1), which is what the denominator formula needs.
            for j_sum in [0i64, -1, -2] {
                for k_abs in 0..=4u32 {
                    let want = twice_q_degree(n, e, v, j_sum, k_abs);
                    let got = -2 * j_sum + (n * e) as i64 + pg.homogeneous_degree().unwrap() as i64 * (k_abs as i64 + 1);
                    degree_bad += (want != got) as usize;
                }
            }
            let t: Vec<f64> = (0..e).map(|_| rng.gen_range(0.2..1.5)).collect();
            let lam = 1.7;
            let ts: Vec<f64> = t.iter().map(|x| x * lam).collect();
            // exp(-<y,Ay>) is exp(-y·(2A)y/2): covariance (2A)^{-1} from a
            // numeric inverse gives every moment by Isserlis in f64, and the
            // eigen-route moment checks a sample of them.
            let a_s = form.a_scalar(&t);
            let dim = form.coords.dim() * n;
            let two_a: Vec<Vec<f64>> =
                (0..dim).map(|r| (0..dim).map(|c| if r % n == c % n { 2.0 * a_s[r / n][c / n] } else { 0.0 }).collect()).collect();
            let m = nalgebra::DMatrix::from_fn(dim, dim, |r, c| two_a[r][c]);
            let cov = m.clone().try_inverse().unwrap();
            let m0 = (2.0 * std::f64::consts::PI).powf(dim as f64 / 2.0) / m.determinant().sqrt();
            let all_k = multi_indices(dim, 4);
            let sampled: BTreeSet<usize> = (0..16).map(|_| rng.gen_range(0..all_k.len())).collect();
            let iaks = i_a_k_batch(&form, &all_k).unwrap();
            for (ki, (k, iak)) in all_k.iter().zip(&iaks).enumerate() {
                let k_abs: u32 = k.iter().sum();
                forms += 1;
                let mono: Vec<usize> = k.iter().enumerate().flat_map(|(p, &m)| std::iter::repeat(p).take(m as usize)).collect();
                let numeric = m0 * isserlis(&cov, &mono);
                if sampled.contains(&ki) {
                    eigen_checked += 1;
                    let eig = wick_rn_diagonal(&two_a, &mono);
                    value_bad += ((iak.value(&t) - eig).abs() > 1e-9 * eig.abs() + 1e-12 * m0) as usize;
                }
                if iak.numer.is_zero() {
                    // Vanishing sums: odd total in some direction, or tree edges
                    // in different blocks.
                    let scale = m0 * mono.iter().map(|&h| cov[(h, h)].sqrt()).product::<f64>();
                    vanishing += 1;
                    degree_bad += (numeric.abs() > 1e-10 * scale) as usize;
                    continue;
                }
                value_bad += ((iak.value(&t) - numeric).abs() > 1e-9 * numeric.abs()) as usize;
                if iak.twice_numerator_degree() != Some(twice_r_gamma(n, e, v, k_abs)) {
                    degree_bad += 1;
                }
                value_bad += ((iak.value(&t) - numeric).abs() > 1e-9 * numeric.abs()) as usize;
                // y ↦ √λ y: I_A^K is homogeneous of degree (d + |K|)/2 in t.
                let d = (n * (v - 1)) as f64;
                let scaled = iak.value(&ts) / iak.value(&t);
                if (scaled / lam.powf((d + k_abs as f64) / 2.0) - 1.0).abs() > 1e-10 {
                    degree_bad += 1;
                }
            }
            for tree in &all {
                trees += 1;
                let other = assemble_quadratic_form(g, tree, n).unwrap();
                if other.p_gamma() != pg || !b_transforms(g, &all[0], tree).unwrap() {
                    tree_bad += 1;
                }
            }
        }
    }
    (
        bubble_ok && degree_bad == 0 && value_bad == 0 && tree_bad == 0,
        format!(
            "P_bubble = (t1+t2)^n for n ≤ 4: {bubble_ok}; {} graphs, {forms} (graph, n, K) forms ({vanishing} vanishing, {eigen_checked} also by eigen route), {degree_bad} degree mismatches, {value_bad} value mismatches; {trees} spanning trees, {tree_bad} disagreements",
            graphs.len()
        ),
    )
}

/// `E[Π y_{m_i}]` for a centred Gaussian with covariance `cov`.
fn isserlis(cov: &nalgebra::DMatrix<f64>, mono: &[usize]) -> f64 {
    if mono.is_empty() {
        return 1.0;
    }
    if mono.len() % 2 == 1 {
        return 0.0;
    }
    let first = mono[0];
    (1..mono.len())
        .map(|j| {
            let rest: Vec<usize> = mono.iter().enumerate().filter(|&(i, _)| i != 0 && i != j).map(|(_, &h)| h).collect();
            cov[(first, mono[j])] * isserlis(cov, &rest)
        })
        .sum()
}

// ---------------------------------------------------------------- slopes

fn slope_suite() -> (bool, String) {
    let r = 4.0;
    let taus = [0.3, 0.2, 0.12, 0.07, 0.04, 0.02];
    let mut ok = true;
    let mut worst = f64::INFINITY;
    let mut fits = 0;
    for name in ["bubble", "theta-tails"] {
        let g = named(name).unwrap();
        for n in 1..=2usize {
            let spec = LocalFunctionalSpec::monomial(&g, n, 1.0);
            let field = Field::library("gauss", n).unwrap();
            let n0 = minimal_order(&g, n, r, spec.interaction_order()).unwrap();
            for geometry in [Geometry::Plane, Geometry::HalfSpace] {
                for n_prime in [n0, n0 + 1] {
                    let predicted = ratio_to_f64(&error_exponent(&g, n, r, n_prime, spec.interaction_order(), geometry).unwrap());
                    for spread in [0.0, 1.0] {
                        let path = geometric_path(g.num_edges(), spread, &taus);
                        let fit = measure_slope(&g, &spec, &field, n_prime, geometry, &path).unwrap();
                        let margin = fit.slope - predicted;
                        worst = worst.min(margin);
                        fits += 1;
                        if margin < -0.1 {
                            ok = false;
                            println!("    {name} n={n} {geometry} N'={n_prime} spread={spread}: slope {:.3} < predicted {predicted:.3} - 0.1", fit.slope);
                        }
                    }
                }
            }
        }
    }
    (ok, format!("{fits} fits, smallest slope - predicted = {worst:.3}"))
}

// ---------------------------------------------------------------- counterterms

fn counterterm_suite(outcomes: &mut Vec<Outcome>) {
    let g = named("bubble").unwrap();
    let spec = LocalFunctionalSpec::monomial(&g, 1, 1.0);
    let field = Field::library("gauss", 1).unwrap();
    let js: Vec<u32> = (3..=14).collect();
    let mut reports = Vec::new();
    outcomes.push(run("6a", "renormalized bubble differences shrink ≥ 1.5x after j=6, n=1, both geometries", || {
        let mut ok = true;
        let mut parts = Vec::new();
        for geometry in [Geometry::Plane, Geometry::HalfSpace] {
            let rep = counterterm_report("bubble", &g, &spec, &field, geometry, 4.0, &js, TimeRule::default()).unwrap();
            let ratio = rep.min_ratio_after(6);
            ok &= ratio >= 1.5;
            parts.push(format!("{geometry}: min ratio {ratio:.2}, w-w^CT(2^-14) = {:.6e}", rep.rows.last().unwrap().renormalized));
            reports.push(rep);
        }
        (ok, parts.join("; "))
    }));
    outcomes.push(run("6b", "uncorrected bubble w grows without bound, n=1, both geometries", || {
        // Unbounded growth needs increments that do not shrink geometrically;
        // a ratio of successive increments near 1 (log growth) or below.
        let mut ok = true;
        let mut parts = Vec::new();
        for rep in &reports {
            let inc = rep.uncorrected_increments();
            let ratio = inc.windows(2).skip(3).map(|w| w[0] / w[1]).fold(0.0f64, f64::max);
            ok &= ratio <= 1.1;
            parts.push(format!("{}: w(2^-14) = {:.6}, largest increment ratio {ratio:.2}", rep.geometry, rep.rows.last().unwrap().w));
        }
        (ok, parts.join("; "))
    }));
    let spec4 = LocalFunctionalSpec::monomial(&g, 4, 1.0);
    let field4 = Field::library("gauss", 4).unwrap();
    let shells = uncorrected_shells(&g, &spec4, &field4, Geometry::Plane, &js, TimeRule::default()).unwrap();
    let tail: Vec<String> = shells.iter().rev().take(3).map(|s| format!("j={} shell {:.4e} w {:.4e}", s.0, s.1, s.2)).collect();
    info("6b", format!("n=4 plane bubble for contrast, shells tend to a constant (w ~ log 1/ε): {}", tail.join(", ")));
}

// ---------------------------------------------------------------- heat kernel

fn heat_kernel_suite() -> (bool, String) {
    let tol = Tolerance::new(1e-300, 1e-12);
    let inf = f64::INFINITY;
    let mut worst_semigroup = 0.0f64;
    let mut worst_mass = 0.0f64;
    for (s, t) in [(0.2, 0.5), (0.05, 1.3), (1.0, 1.0)] {
        // Plane, n = 1 and 2.
        for (x, y) in [(vec![0.3], vec![-0.4]), (vec![0.3, 1.0], vec![-0.4, 0.2])] {
            let v = nested_integral(x.len(), &|z: &[f64]| kernel_rn(s, &x, z).unwrap() * kernel_rn(t, z, &y).unwrap(), &[-inf, -inf], tol);
            let want = kernel_rn(s + t, &x, &y).unwrap();
            worst_semigroup = worst_semigroup.max((v - want).abs() / want);
            let mass = nested_integral(x.len(), &|z: &[f64]| kernel_rn(t, &x, z).unwrap(), &[-inf, -inf], tol);
            worst_mass = worst_mass.max((mass - 1.0).abs());
        }
        // Half space: the normal variable stays in (0, ∞).
        for (x, y) in [(vec![0.3], vec![0.7]), (vec![-0.5, 0.4], vec![0.6, 1.1])] {
            let lo = if x.len() == 1 { [0.0, 0.0] } else { [-inf, 0.0] };
            let v = nested_integral(x.len(), &|z: &[f64]| kernel_hn(s, &x, z).unwrap() * kernel_hn(t, z, &y).unwrap(), &lo, tol);
            let want = kernel_hn(s + t, &x, &y).unwrap();
            worst_semigroup = worst_semigroup.max((v - want).abs() / want);
            // Mass leaks through the boundary: erf(x_n / 2√t).
            let mass = nested_integral(x.len(), &|z: &[f64]| kernel_hn(t, &x, z).unwrap(), &lo, tol);
            let xn = *x.last().unwrap();
            worst_mass = worst_mass.max((mass - libm::erf(xn / (2.0 * t.sqrt()))).abs());
        }
    }
    // Dirichlet zero on the boundary, for the kernel and the propagator.
    let mut zero_ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = rng.gen_range(1..=3);
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
        x[n - 1] = 0.0;
        let t = rng.gen_range(0.01..3.0);
        zero_ok &= kernel_hn(t, &x, &y).unwrap() == 0.0 && kernel_hn(t, &y, &x).unwrap() == 0.0;
        zero_ok &= kernel(Geometry::HalfSpace, t, &x, &y).unwrap() == 0.0;
        zero_ok &= propagator(0.01, 1.0, &x, &y, Geometry::HalfSpace).unwrap() == 0.0;
    }
    // Derivative polynomials: two constructions agree exactly, and each order
    // matches a Richardson central difference of the order below.
    let mut poly_ok = true;
    let mut worst_fd = 0.0f64;
    for k in 1..=6u32 {
        let p = derivative_poly(0, k).unwrap();
        poly_ok &= p.poly == derivative_poly_compositions(0, k).unwrap().poly;
        let below = derivative_poly(0, k - 1).unwrap();
        for t in [0.3, 1.0] {
            let g = |x: f64| below.eval(x, t) * kernel_rn(t, &[x], &[0.0]).unwrap();
            let scale = kernel_rn(t, &[0.0], &[0.0]).unwrap() * t.powf(-(k as f64) / 2.0);
            for x in [-0.7, 0.2, 1.1] {
                let h = 1e-3;
                let d = |h: f64| (g(x + h) - g(x - h)) / (2.0 * h);
                let fd = (4.0 * d(h / 2.0) - d(h)) / 3.0;
                let exact = p.eval(x, t) * kernel_rn(t, &[x], &[0.0]).unwrap();
                worst_fd = worst_fd.max((fd - exact).abs() / scale);
            }
        }
    }
    (
        worst_semigroup < 1e-6 && worst_mass < 1e-6 && zero_ok && poly_ok && worst_fd < 1e-7,
        format!("semigroup err {worst_semigroup:.1e}, mass err {worst_mass:.1e}, boundary zero exact: {zero_ok}, derivative routes agree: {poly_ok}, finite-difference err {worst_fd:.1e}"),
    )
}

/// Iterated adaptive integral over `∏ [lo_i, ∞)`.
fn nested_integral(n: usize, f: &dyn Fn(&[f64]) -> f64, lo: &[f64], tol: Tolerance) -> f64 {
    match n {
        1 => adaptive_ext(|z| f(&[z]), lo[0], f64::INFINITY, tol).value,
        2 => adaptive_ext(|z0| adaptive_ext(|z1| f(&[z0, z1]), lo[1], f64::INFINITY, tol).value, lo[0], f64::INFINITY, tol).value,
        _ => unreachable!("dimension ≤ 2"),
    }
}

// ---------------------------------------------------------------- half-space f⁰

/// Display form of one image pattern of the half-space bubble at `N′ = 0`,
/// in centre/difference coordinates `x = u ± z` with `|z| ≤ u`.
fn display_form(beta: (bool, bool), t: [f64; 2], field: &Field) -> f64 {
    let n = field.dim();
    let (i1, i2) = (1.0 / t[0], 1.0 / t[1]);
    let (a, b) = match beta {
        (false, false) => (0.0, i1 + i2),
        (true, false) => (i1, i2),
        (false, true) => (i2, i1),
        (true, true) => (i1 + i2, 0.0),
    };
    let normal = &field.factors[n - 1];
    let inner = |u: f64| if b == 0.0 { 2.0 * u } else { (std::f64::consts::PI / b).sqrt() * libm::erf(u * b.sqrt()) };
    let radial = adaptive_ext(|u| normal.eval(u).powi(4) * (-a * u * u).exp() * inner(u), 0.0, f64::INFINITY, Tolerance::new(1e-300, 1e-12)).value;
    let tangential: f64 = field.factors[..n - 1].iter().map(|f| product_integral_line(&[f, f, f, f])).product();
    let prod = t[0] * t[1];
    prod.powf(-(n as f64) / 2.0) * (prod / (t[0] + t[1])).powf((n as f64 - 1.0) / 2.0) * radial * tangential
}

fn half_space_suite() -> (bool, String) {
    let g = named("bubble").unwrap();
    let times = [[0.1, 0.2], [0.03, 0.5], [0.4, 0.4], [0.02, 0.07]];
    let mut ok = true;
    let mut parts = Vec::new();
    let mut f11 = Vec::new();
    for n in 1..=2usize {
        let spec = LocalFunctionalSpec::monomial(&g, n, 1.0);
        let field = Field::library("gauss", n).unwrap();
        let sw = f_gamma_taylor(&g, &spec, 0, Geometry::HalfSpace).unwrap();
        let mut betas: Vec<(bool, bool)> = Vec::new();
        let mut ratios: Vec<f64> = Vec::new();
        for term in &sw.terms {
            let res = term.residual.as_ref().expect("half-space terms carry their image pattern");
            let beta = (res.beta[0], res.beta[1]);
            ok &= res.k_normal.iter().all(|&k| k == 0);
            betas.push(beta);
            for t in &times {
                let value = sw.term_value(&g, term, t, &field).unwrap();
                let sign = if beta.0 ^ beta.1 { -1.0 } else { 1.0 };
                ratios.push(sign * value / display_form(beta, *t, &field));
                if beta == (true, true) && n == 1 {
                    f11.push(format!("t={t:?}: {value:.6e}"));
                }
            }
        }
        betas.sort();
        betas.dedup();
        let c = ratios[0];
        let spread = ratios.iter().map(|r| (r / c - 1.0).abs()).fold(0.0, f64::max);
        ok &= sw.terms.len() == 4 && betas.len() == 4 && spread < 1e-8 && c > 0.0;
        parts.push(format!("n={n}: {} terms, {} patterns, sign_β·f/display = {c:.6e} within {spread:.1e}", sw.terms.len(), betas.len()));
    }
    info("8", format!("f0 of the doubly reflected pattern is nonzero, against a claimed zero: {}", f11.join(", ")));
    (ok, parts.join("; "))
}

fn main() {
    // Optional criterion numbers on the command line select a subset.
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| only.is_empty() || only.iter().any(|o| o == id);
    let start = Instant::now();
    let mut outcomes = Vec::new();
    let suites: [(&'static str, &'static str, fn() -> (bool, String)); 5] = [
        ("1", "Wick closed forms, recursions and pairing sums vs quadrature", wick_suite),
        ("2", "graph expansion equals the operator expansion exactly", expansion_suite),
        ("3", "sector cover, disjointness and A-set containment at R=4", cover_suite),
        ("4", "weight algebra: P_bubble, degree formulas, tree independence", weight_algebra_suite),
        ("5", "remainder slopes meet the predicted exponents", slope_suite),
    ];
    for (id, name, f) in suites {
        if wanted(id) {
            outcomes.push(run(id, name, f));
        }
    }
    if wanted("6") {
        counterterm_suite(&mut outcomes);
    }
    if wanted("7") {
        outcomes.push(run("7", "heat kernel semigroup, mass, boundary and derivatives", heat_kernel_suite));
    }
    if wanted("8") {
        outcomes.push(run("8", "half-space N'=0 bubble terms match the display forms", half_space_suite));
    }

    let unexpected: Vec<&Outcome> = outcomes.iter().filter(|o| !o.passed && !KNOWN_FAILURES.contains(&o.id)).collect();
    let known = outcomes.iter().filter(|o| !o.passed && KNOWN_FAILURES.contains(&o.id)).count();
    println!(
        "acceptance: {} passed, {} failed ({known} known), {:.1}s",
        outcomes.iter().filter(|o| o.passed).count(),
        outcomes.len() - outcomes.iter().filter(|o| o.passed).count(),
        start.elapsed().as_secs_f64()
    );
    for o in &outcomes {
        if !o.passed && KNOWN_FAILURES.contains(&o.id) {
            println!("known failure [{}] {}", o.id, o.name);
        }
    }
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
