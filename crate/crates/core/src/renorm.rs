//! Error-bound exponents, inductive counterterms over the refined cover and
//! the ε → 0 behaviour of renormalized weights.
//!
//! Times are handled in sector-ordered log coordinates `y_p = log t_{σ(p)}`,
//! `y_1 ≤ … ≤ y_k ≤ 0`, where every cover region is a convex polytope.

use crate::cover::{refined_cover, Chain};
use crate::graphs::{enumerate_with, EnumerationBounds, StableGraph};
use crate::heatkernel::Geometry;
use crate::quad::{polytope_gl, HalfSpace};
use crate::scalar::{f64_to_ratio, qi, ratio_to_f64, Q};
use crate::weights::{f_gamma_truncated, Field, LocalFunctionalSpec, TruncatedWeight};
use crate::{Error, Result};
use num_traits::{One, Signed, ToPrimitive, Zero};

fn half() -> Q {
    Q::new(1.into(), 2.into())
}

fn ratio(x: f64, what: &str) -> Result<Q> {
    f64_to_ratio(x).ok_or_else(|| Error::InvalidParameter(format!("{what} must be finite, got {x}")))
}

/// `½(N′+1) + (n/2)(|V|-1) - R(O(γ) + (n/2)|E|)`. The half-space bound has
/// the same exponent, so `geometry` does not enter.
pub fn error_exponent(g: &StableGraph, n: usize, r: f64, n_prime: usize, order: u32, _geometry: Geometry) -> Result<Q> {
    let r = ratio(r, "R")?;
    let nq = qi(n as i64);
    let v = qi(g.num_vertices() as i64);
    let e = qi(g.num_edges() as i64);
    Ok(half() * qi(n_prime as i64 + 1) + &nq * half() * (v - qi(1)) - r * (qi(order as i64) + nq * half() * e))
}

/// Smallest `N′ ≥ 0` with non-negative [`error_exponent`].
pub fn minimal_order(g: &StableGraph, n: usize, r: f64, order: u32) -> Result<usize> {
    let d0 = error_exponent(g, n, r, 0, order, Geometry::Plane)?;
    Ok(smallest_root(&d0, &half()))
}

/// Smallest non-negative integer `x` with `c + s x ≥ 0`, for `s > 0`.
fn smallest_root(c: &Q, s: &Q) -> usize {
    if !c.is_negative() {
        return 0;
    }
    let x = (-c / s).ceil();
    x.to_integer().to_usize().unwrap_or(usize::MAX)
}

/// `c + Σ_j coef[j] N′_j`, exact.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub constant: Q,
    pub coef: Vec<Q>,
}

impl Affine {
    fn constant(p: usize, c: Q) -> Self {
        Affine { constant: c, coef: vec![Q::zero(); p] }
    }

    fn var(p: usize, j: usize) -> Self {
        let mut a = Affine::constant(p, Q::zero());
        a.coef[j] = Q::one();
        a
    }

    fn add(&self, o: &Affine) -> Affine {
        Affine { constant: &self.constant + &o.constant, coef: self.coef.iter().zip(&o.coef).map(|(a, b)| a + b).collect() }
    }

    fn scale(&self, s: &Q) -> Affine {
        Affine { constant: &self.constant * s, coef: self.coef.iter().map(|a| a * s).collect() }
    }

    fn plus(&self, c: Q) -> Affine {
        Affine { constant: &self.constant + c, coef: self.coef.clone() }
    }

    pub fn eval(&self, n: &[usize]) -> Q {
        self.coef.iter().zip(n).fold(self.constant.clone(), |acc, (c, &x)| acc + c * qi(x as i64))
    }

    pub fn eval_f64(&self, n: &[usize]) -> f64 {
        ratio_to_f64(&self.eval(n))
    }

    pub fn describe(&self) -> String {
        let mut s = format!("{}", self.constant);
        for (j, c) in self.coef.iter().enumerate() {
            if !c.is_zero() {
                s.push_str(&format!(" + ({c})N{}", j + 1));
            }
        }
        s
    }
}

/// One step of the iterated expansion: the edges first expanded, and what
/// the contraction of earlier steps leaves of them.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkShape {
    pub edges: Vec<usize>,
    /// `|V(γ′)| - c(γ′)` in the graph with earlier links contracted: the
    /// number of tree variables the level introduces.
    pub rank: usize,
    pub vertices: usize,
    /// Vertices of the contracted graph this step acts on.
    pub quotient_vertices: usize,
    /// Which earlier links were merged into vertices of this one.
    pub absorbs: Vec<bool>,
    pub base_order: u32,
}

/// Truncation plan for one sector and one refined-cover chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainPlan {
    pub label: String,
    /// `sector[p]` is the edge at sector position `p + 1`.
    pub sector: Vec<usize>,
    pub chain: Chain,
    pub links: Vec<LinkShape>,
    /// `R_i = R^{s_{m^{(i)}+1}}`.
    pub r_eff: Vec<Q>,
    pub exponents: Vec<Affine>,
    /// Minimal orders, link by link.
    pub orders: Vec<usize>,
}

impl ChainPlan {
    pub fn levels(&self) -> Vec<Vec<usize>> {
        self.links.iter().map(|l| l.edges.clone()).collect()
    }

    /// Orders handed to the expansion: a level without tree variables has
    /// nothing to expand, so its order is irrelevant and set to zero.
    pub fn orders_for_evaluation(&self) -> Vec<usize> {
        self.links.iter().zip(&self.orders).map(|(l, &o)| if l.rank == 0 { 0 } else { o }).collect()
    }

    pub fn exponent_values(&self) -> Vec<f64> {
        self.exponents.iter().map(|d| d.eval_f64(&self.orders)).collect()
    }

    /// Sector-ordered log-time polytope of the chain, without the `ε` box.
    pub fn polytope(&self) -> Vec<HalfSpace> {
        let k = self.sector.len();
        let mut rows = Vec::new();
        let constraints = if self.chain.links.is_empty() {
            (1..k).map(|p| crate::cover::Constraint::order(p, p + 1)).collect()
        } else {
            self.chain.constraints()
        };
        for c in constraints {
            let mut a = vec![0.0; k];
            a[c.small - 1] += c.small_pow;
            a[c.large - 1] -= c.large_pow;
            rows.push((a, 0.0));
        }
        let mut top = vec![0.0; k];
        top[k - 1] = 1.0;
        rows.push((top, 0.0));
        rows
    }

    /// Edge times from sector-ordered log times.
    pub fn times(&self, y: &[f64]) -> Vec<f64> {
        let mut t = vec![0.0; y.len()];
        for (p, &e) in self.sector.iter().enumerate() {
            t[e] = y[p].exp();
        }
        t
    }

    pub fn evaluate(&self, g: &StableGraph, t: &[f64], spec: &LocalFunctionalSpec, field: &Field, geometry: Geometry) -> Result<TruncatedWeight> {
        f_gamma_truncated(g, t, spec, field, geometry, &self.levels(), &self.orders_for_evaluation())
    }
}

fn find(p: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while p[r] != r {
        r = p[r];
    }
    p[x] = r;
    r
}

fn link_shapes(g: &StableGraph, spec: &LocalFunctionalSpec, levels: &[Vec<usize>]) -> Vec<LinkShape> {
    let nv = g.num_vertices();
    let mut parent: Vec<usize> = (0..nv).collect();
    // Links already contracted into each root.
    let mut merged_by: Vec<Vec<usize>> = vec![Vec::new(); nv];
    let mut out = Vec::new();
    for (i, edges) in levels.iter().enumerate() {
        let roots_before: std::collections::BTreeSet<usize> = (0..nv).map(|v| find(&mut parent, v)).collect();
        let mut touched: std::collections::BTreeSet<usize> = std::collections::BTreeSet::new();
        for &e in edges {
            let (a, b) = g.endpoints(e);
            touched.insert(find(&mut parent, a));
            touched.insert(find(&mut parent, b));
        }
        let mut absorbs = vec![false; levels.len()];
        for &r in &touched {
            for &j in &merged_by[r] {
                absorbs[j] = true;
            }
        }
        let base_order: u32 = (0..nv).filter(|&v| touched.contains(&find(&mut parent, v))).map(|v| spec.order[v]).sum();
        let mut rank = 0;
        for &e in edges {
            let (a, b) = g.endpoints(e);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                let moved = std::mem::take(&mut merged_by[ra]);
                merged_by[rb].extend(moved);
                rank += 1;
            }
        }
        for &r in &touched {
            let root = find(&mut parent, r);
            if !merged_by[root].contains(&i) {
                merged_by[root].push(i);
            }
        }
        out.push(LinkShape { edges: edges.clone(), rank, vertices: touched.len(), quotient_vertices: roots_before.len(), absorbs, base_order });
    }
    out
}

/// Exponent ledger of a chain. One link: the plain bound with `R_1`. Several
/// links: each inner step expands the subgraph of its link, whose error in
/// `t_{i+1}` is
/// `(R_i/2)N_i + R_i C(γ′_i) - |E(γ)|n/2 - O(γ′_i) - N_i - 1` with
/// `C(γ′) = ½ + (|V(γ′)|-1)n/2 - R_i(O(γ′) + |E(γ′)|n/2)`; the last step
/// expands the quotient and carries the previous step's prefactor
/// `R_{p-1} C_{p-1}`, `C_{p-1} = (n/2)(|V(γ)|-1) - R_{p-1}(|E(γ)|n/2 + O(γ) + N_{p-1})`.
/// Orders of merged vertices include the orders of the links they absorbed.
fn chain_exponents(g: &StableGraph, spec: &LocalFunctionalSpec, links: &[LinkShape], r_eff: &[Q]) -> Vec<Affine> {
    let p = links.len();
    let nq = qi(spec.n as i64);
    let nh = &nq * half();
    let e_tot = qi(g.num_edges() as i64);
    let v_tot = qi(g.num_vertices() as i64);
    let o_tot = qi(spec.interaction_order() as i64);
    if p == 1 {
        let r = &r_eff[0];
        let c = half() + &nh * (&v_tot - qi(1)) - r * (&o_tot + &nh * &e_tot);
        let mut a = Affine::constant(1, c);
        a.coef[0] = half();
        return vec![a];
    }
    let mut out = Vec::new();
    for i in 0..p - 1 {
        let l = &links[i];
        let r = &r_eff[i];
        let mut o = Affine::constant(p, qi(l.base_order as i64));
        for (j, &abs) in l.absorbs.iter().enumerate() {
            if abs && j < i {
                o = o.add(&Affine::var(p, j));
            }
        }
        let ep = qi(l.edges.len() as i64);
        let vp = qi(l.rank as i64);
        let c = Affine::constant(p, half() + &nh * vp).add(&o.add(&Affine::constant(p, &nh * ep)).scale(&-r));
        let ni = Affine::var(p, i);
        let e = ni.scale(&(r * half() - qi(1))).add(&c.scale(r)).add(&o.scale(&-qi(1))).plus(-(&nh * &e_tot) - qi(1));
        out.push(e);
    }
    let r = &r_eff[p - 2];
    let prev = Affine::var(p, p - 2);
    let c_prev = Affine::constant(p, &nh * (&v_tot - qi(1)) - r * (&nh * &e_tot + &o_tot)).add(&prev.scale(&-r));
    let q_vertices = qi(links[p - 1].quotient_vertices as i64);
    let last = Affine::var(p, p - 1)
        .scale(&half())
        .plus(half() + &nh * (q_vertices - qi(1)))
        .add(&prev.plus(o_tot).scale(&-r))
        .add(&c_prev.scale(r));
    out.push(last);
    out
}

/// Minimal orders link by link: each `N′_i` is the smallest non-negative
/// integer making `d_i` non-negative given its predecessors.
fn minimal_orders(exponents: &[Affine]) -> Result<Vec<usize>> {
    let mut n = vec![0usize; exponents.len()];
    for (i, d) in exponents.iter().enumerate() {
        let s = &d.coef[i];
        if !s.is_positive() {
            return Err(Error::InvalidParameter(format!("exponent {} does not grow with N{}", d.describe(), i + 1)));
        }
        n[i] = 0;
        let c = d.eval(&n);
        n[i] = smallest_root(&c, s);
    }
    Ok(n)
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 2.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("the inductive bounds need R > 2, got {r}")));
    }
    Ok(())
}

/// Truncation plan and exponent ledger for one sector and chain.
pub fn inductive_counterterm(g: &StableGraph, spec: &LocalFunctionalSpec, sector: &[usize], chain: &Chain, r: f64) -> Result<ChainPlan> {
    check_r(r)?;
    spec.validate(g)?;
    let k = g.num_edges();
    if sector.len() != k || chain.links.iter().any(|l| l.k != k) {
        return Err(Error::InvalidParameter(format!("sector and chain must cover {k} edge times")));
    }
    let levels: Vec<Vec<usize>> =
        chain.links.iter().map(|l| (l.start()..=*l.sequence.last().unwrap()).map(|p| sector[p - 1]).collect()).collect();
    let links = link_shapes(g, spec, &levels);
    let rq = ratio(r, "R")?;
    let r_eff: Vec<Q> = chain
        .links
        .iter()
        .map(|l| {
            let s = l.schedule[l.m() + 1];
            if s.fract() != 0.0 || s < 0.0 {
                return Err(Error::InvalidParameter("schedule exponents must be non-negative integers".into()));
            }
            Ok(num_traits::pow(rq.clone(), s as usize))
        })
        .collect::<Result<_>>()?;
    let exponents = chain_exponents(g, spec, &links, &r_eff);
    let orders = minimal_orders(&exponents)?;
    Ok(ChainPlan { label: chain.label(), sector: sector.to_vec(), chain: chain.clone(), links, r_eff, exponents, orders })
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..k).collect();
    fn go(p: &mut Vec<usize>, i: usize, out: &mut Vec<Vec<usize>>) {
        if i == p.len() {
            out.push(p.clone());
            return;
        }
        for j in i..p.len() {
            p.swap(i, j);
            go(p, i + 1, out);
            p.swap(i, j);
        }
    }
    go(&mut p, 0, &mut out);
    out.sort();
    out
}

/// Plans for every sector and every chain of the refined cover.
pub fn all_plans(g: &StableGraph, spec: &LocalFunctionalSpec, r: f64) -> Result<Vec<ChainPlan>> {
    check_r(r)?;
    let k = g.num_edges();
    if k == 0 {
        return Ok(Vec::new());
    }
    let chains = refined_cover(k, r)?;
    let mut out = Vec::new();
    for sector in permutations(k) {
        for c in &chains {
            out.push(inductive_counterterm(g, spec, &sector, c, r)?);
        }
    }
    Ok(out)
}

/// Least-squares slope of `log|f - f^{N′}|` against `log t_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
    /// Set for graphs without loops, where no bound is being tested.
    pub convergent: bool,
}

pub const NUMERIC_FLOOR: f64 = 1e-300;

/// Fits the remainder of the one-level truncation at order `n_prime` along
/// `path`, each point sorted ascending with `t_k` its largest entry.
pub fn measure_slope(
    g: &StableGraph,
    spec: &LocalFunctionalSpec,
    field: &Field,
    n_prime: usize,
    geometry: Geometry,
    path: &[Vec<f64>],
) -> Result<SlopeFit> {
    if g.betti() == 0 {
        return Ok(SlopeFit { slope: f64::NAN, intercept: f64::NAN, points: 0, convergent: true });
    }
    let all: Vec<usize> = (0..g.num_edges()).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for t in path {
        let w = f_gamma_truncated(g, t, spec, field, geometry, &[all.clone()], &[n_prime])?;
        if w.remainder.abs() > NUMERIC_FLOOR {
            xs.push(t.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ln());
            ys.push(w.remainder.abs().ln());
        }
    }
    if xs.len() < 2 {
        return Err(Error::InvalidParameter("slope fit needs two points above the numeric floor".into()));
    }
    let (slope, intercept) = least_squares(&xs, &ys);
    Ok(SlopeFit { slope, intercept, points: xs.len(), convergent: false })
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Path `t_i = τ^{1 + spread (k-i)/(k-1)}` sorted ascending; `spread = 0` is
/// the diagonal. Inside `A^k_R` whenever `1 + spread ≤ R`.
pub fn geometric_path(k: usize, spread: f64, taus: &[f64]) -> Vec<Vec<f64>> {
    taus.iter()
        .map(|&tau| {
            (1..=k)
                .map(|i| {
                    let frac = if k > 1 { (k - i) as f64 / (k - 1) as f64 } else { 0.0 };
                    tau.powf(1.0 + spread * frac)
                })
                .collect()
        })
        .collect()
}

/// Quadrature of the time integrals: composite Gauss–Legendre panels in log
/// time of at most `panel` with `nodes` points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeRule {
    pub panel: f64,
    pub nodes: usize,
}

impl Default for TimeRule {
    fn default() -> Self {
        TimeRule { panel: 1.0, nodes: 8 }
    }
}

/// Integrals over `{lo ≤ y_1 ≤ hi}` ∩ chain polytope of
/// `(f, f^{N′}, f - f^{N′})` with the log-time Jacobian.
pub fn region_integrals(
    g: &StableGraph,
    plan: &ChainPlan,
    spec: &LocalFunctionalSpec,
    field: &Field,
    geometry: Geometry,
    lo: f64,
    hi: f64,
    rule: TimeRule,
) -> Result<[f64; 3]> {
    let k = plan.sector.len();
    let mut rows = plan.polytope();
    let mut a = vec![0.0; k];
    a[0] = -1.0;
    rows.push((a.clone(), -lo));
    a[0] = 1.0;
    rows.push((a, hi));
    let mut err = None;
    let v = polytope_gl(
        k,
        &rows,
        &mut |y| {
            if err.is_some() {
                return vec![0.0; 3];
            }
            let t = plan.times(y);
            let jac: f64 = t.iter().product();
            match plan.evaluate(g, &t, spec, field, geometry) {
                Ok(w) => vec![jac * w.full, jac * w.truncated, jac * w.remainder],
                Err(e) => {
                    err = Some(e);
                    vec![0.0; 3]
                }
            }
        },
        3,
        rule.panel,
        rule.nodes,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok([v[0], v[1], v[2]])
}

/// `w^CT_γ(P^1_ε)`: truncations integrated over `(ε, 1)^k`, region by region.
pub fn w_ct(g: &StableGraph, eps: f64, spec: &LocalFunctionalSpec, field: &Field, geometry: Geometry, r: f64, rule: TimeRule) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("ε must lie in (0, 1), got {eps}")));
    }
    if g.betti() == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for plan in all_plans(g, spec, r)? {
        total += region_integrals(g, &plan, spec, field, geometry, eps.ln(), 0.0, rule)?[1];
    }
    Ok(total)
}

/// Values on the `ε` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonRow {
    pub j: u32,
    pub eps: f64,
    /// `w(P^1_ε)`.
    pub w: f64,
    pub w_ct: f64,
    /// `w - w^CT`, accumulated from remainders (no cancellation).
    pub renormalized: f64,
    /// Contributions of the newest shell to `w` and to `w - w^CT`.
    pub shell_w: f64,
    pub shell_renormalized: f64,
}

/// Per-chain summary inside a report.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSummary {
    pub label: String,
    pub sector: Vec<usize>,
    pub orders: Vec<usize>,
    pub orders_used: Vec<usize>,
    pub exponents: Vec<String>,
    pub exponent_values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CounterTermReport {
    pub graph: String,
    pub n: usize,
    pub geometry: Geometry,
    pub r: f64,
    pub chains: Vec<ChainSummary>,
    pub rows: Vec<EpsilonRow>,
}

impl CounterTermReport {
    /// `|Δ_j| = |(w - w^CT)(ε_j) - (w - w^CT)(ε_{j-1})|` for consecutive rows.
    /// Read off the shells directly, so they stay exact below the rounding
    /// level of the accumulated values.
    pub fn differences(&self) -> Vec<(u32, f64)> {
        self.rows.iter().skip(1).map(|r| (r.j, r.shell_renormalized.abs())).collect()
    }

    /// Smallest ratio `|Δ_{j-1}| / |Δ_j|` over rows with `j > after`.
    pub fn min_ratio_after(&self, after: u32) -> f64 {
        let d = self.differences();
        d.windows(2).filter(|w| w[1].0 > after).map(|w| w[0].1 / w[1].1).fold(f64::INFINITY, f64::min)
    }

    /// Whether the uncorrected `w` keeps growing: its increments do not
    /// shrink geometrically.
    pub fn uncorrected_increments(&self) -> Vec<f64> {
        self.rows.iter().skip(1).map(|r| r.shell_w).collect()
    }
}

/// `w`, `w^CT` and `w - w^CT` on `ε = 2^{-j}`, `j ∈ js` (ascending). The
/// cube `(ε_j, 1)^k` grows by one shell per step, so each step integrates
/// only the new shell `y_1 ∈ [log ε_j, log ε_{j-1}]`.
#[allow(clippy::too_many_arguments)]
pub fn counterterm_report(
    graph_name: &str,
    g: &StableGraph,
    spec: &LocalFunctionalSpec,
    field: &Field,
    geometry: Geometry,
    r: f64,
    js: &[u32],
    rule: TimeRule,
) -> Result<CounterTermReport> {
    if js.is_empty() || js.windows(2).any(|w| w[1] <= w[0]) || js[0] == 0 {
        return Err(Error::InvalidParameter("ε exponents must be positive and strictly increasing".into()));
    }
    let plans = if g.betti() == 0 { Vec::new() } else { all_plans(g, spec, r)? };
    let mut chains = Vec::new();
    for p in &plans {
        chains.push(ChainSummary {
            label: p.label.clone(),
            sector: p.sector.clone(),
            orders: p.orders.clone(),
            orders_used: p.orders_for_evaluation().iter().map(|&o| o.min(crate::weights::ORDER_CAP)).collect(),
            exponents: p.exponents.iter().map(|d| d.describe()).collect(),
            exponent_values: p.exponent_values(),
        });
    }
    let mut rows = Vec::new();
    let mut acc = [0.0; 3];
    let mut hi = 0.0;
    for &j in js {
        let eps = 0.5f64.powi(j as i32);
        let lo = eps.ln();
        let mut shell = [0.0; 3];
        if g.betti() == 0 {
            // Nothing to subtract: w^CT = 0 and the shell adds plain w.
            shell[0] = shell_integral(g, spec, field, geometry, lo, hi, rule)?;
            shell[2] = shell[0];
        } else {
            for p in &plans {
                let v = region_integrals(g, p, spec, field, geometry, lo, hi, rule)?;
                for i in 0..3 {
                    shell[i] += v[i];
                }
            }
        }
        for i in 0..3 {
            acc[i] += shell[i];
        }
        hi = lo;
        rows.push(EpsilonRow { j, eps, w: acc[0], w_ct: acc[1], renormalized: acc[2], shell_w: shell[0], shell_renormalized: shell[2] });
    }
    Ok(CounterTermReport { graph: graph_name.to_string(), n: spec.n, geometry, r, chains, rows })
}

/// Uncorrected `w(P^1_ε)` on `ε = 2^{-j}`: `(j, shell, accumulated)` with the
/// shell integrated over `y_1 ∈ [log ε_j, log ε_{j-1}]` and the first shell
/// reaching up to `t = 1`.
pub fn uncorrected_shells(
    g: &StableGraph,
    spec: &LocalFunctionalSpec,
    field: &Field,
    geometry: Geometry,
    js: &[u32],
    rule: TimeRule,
) -> Result<Vec<(u32, f64, f64)>> {
    if js.is_empty() || js.windows(2).any(|w| w[1] <= w[0]) || js[0] == 0 {
        return Err(Error::InvalidParameter("ε exponents must be positive and strictly increasing".into()));
    }
    let mut out = Vec::with_capacity(js.len());
    let (mut hi, mut acc) = (0.0, 0.0);
    for &j in js {
        let lo = 0.5f64.powi(j as i32).ln();
        let shell = shell_integral(g, spec, field, geometry, lo, hi, rule)?;
        acc += shell;
        out.push((j, shell, acc));
        hi = lo;
    }
    Ok(out)
}

/// `∫ f` over the shell `{lo ≤ min_e log t_e ≤ hi, t ≤ 1}`, sector by sector.
fn shell_integral(g: &StableGraph, spec: &LocalFunctionalSpec, field: &Field, geometry: Geometry, lo: f64, hi: f64, rule: TimeRule) -> Result<f64> {
    let k = g.num_edges();
    let mut total = 0.0;
    for sector in permutations(k) {
        let plan = ChainPlan {
            label: String::new(),
            sector,
            chain: Chain { links: vec![] },
            links: vec![],
            r_eff: vec![],
            exponents: vec![],
            orders: vec![],
        };
        let mut rows = plan.polytope();
        let mut a = vec![0.0; k];
        a[0] = -1.0;
        rows.push((a.clone(), -lo));
        a[0] = 1.0;
        rows.push((a, hi));
        let mut err = None;
        let v = polytope_gl(
            k,
            &rows,
            &mut |y| {
                let t = plan.times(y);
                let jac: f64 = t.iter().product();
                match crate::weights::f_gamma_closed(g, &t, spec, field, geometry) {
                    Ok(f) => vec![jac * f],
                    Err(e) => {
                        err.get_or_insert(e);
                        vec![0.0]
                    }
                }
            },
            1,
            rule.panel,
            rule.nodes,
        );
        if let Some(e) = err {
            return Err(e);
        }
        total += v[0];
    }
    Ok(total)
}

/// One counterterm coefficient `I^CT_{i,k}(ε) = Σ_γ w^CT_γ / |Aut γ|` and the
/// renormalized `Σ_γ (w_γ - w^CT_γ) / |Aut γ|` on the `ε` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CounterTermEntry {
    pub genus: u32,
    pub tails: u32,
    pub graphs: Vec<(String, u64)>,
    pub eps: Vec<f64>,
    pub counterterm: Vec<f64>,
    pub renormalized: Vec<f64>,
}

/// Counterterms for a `φ^valence` interaction in the `(i, k)` preorder:
/// genus first, then tails. Genus-zero graphs are trees and need none. At
/// genus one every vertex is classical, so no earlier counterterm enters;
/// higher genus would insert counterterm vertices and is not supported.
#[allow(clippy::too_many_arguments)]
pub fn ict_series(
    valence: u32,
    coupling: f64,
    max_genus: u32,
    max_tails: u32,
    field: &Field,
    geometry: Geometry,
    r: f64,
    js: &[u32],
    rule: TimeRule,
) -> Result<Vec<CounterTermEntry>> {
    if max_genus > 1 {
        return Err(Error::SizeLimit("counterterm series supports genus ≤ 1 (no counterterm vertices)".into()));
    }
    if max_tails > 6 {
        return Err(Error::SizeLimit("counterterm series supports at most 6 tails".into()));
    }
    let n = field.dim();
    let mut out = Vec::new();
    for genus in 0..=max_genus {
        for tails in 0..=max_tails {
            // Euler bound: with only φ^v vertices, 2g - 2 + |T| ≥ 1.
            if 2 * genus + tails < 3 {
                continue;
            }
            let bounds = EnumerationBounds {
                max_genus: genus,
                tails,
                max_edges: (tails + 2 * genus).min(crate::graphs::MAX_ENUMERATION_EDGES),
                max_euler: None,
                allowed: Some(vec![(0, valence)]),
            };
            let graphs: Vec<StableGraph> = enumerate_with(&bounds)?.into_iter().filter(|g| g.genus() == genus).collect();
            let eps: Vec<f64> = js.iter().map(|&j| 0.5f64.powi(j as i32)).collect();
            let mut ct = vec![0.0; js.len()];
            let mut ren = vec![0.0; js.len()];
            let mut names = Vec::new();
            for g in &graphs {
                let aut = g.automorphism_order()?.to_u64().unwrap_or(u64::MAX);
                names.push((g.to_text(), aut));
                if genus == 0 {
                    continue;
                }
                let spec = LocalFunctionalSpec::monomial(g, n, coupling);
                let rep = counterterm_report("", g, &spec, field, geometry, r, js, rule)?;
                for (i, row) in rep.rows.iter().enumerate() {
                    ct[i] += row.w_ct / aut as f64;
                    ren[i] += row.renormalized / aut as f64;
                }
            }
            out.push(CounterTermEntry { genus, tails, graphs: names, eps, counterterm: ct, renormalized: ren });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::refined_cover;
    use crate::graphs::named;
    use crate::scalar::q;

    fn plan_for(name: &str, label: &str, n: usize) -> ChainPlan {
        let g = named(name).unwrap();
        let spec = LocalFunctionalSpec::monomial(&g, n, 1.0);
        let chain = refined_cover(g.num_edges(), 4.0).unwrap().into_iter().find(|c| c.label() == label).unwrap();
        inductive_counterterm(&g, &spec, &(0..g.num_edges()).collect::<Vec<_>>(), &chain, 4.0).unwrap()
    }

    #[test]
    fn bubble_exponent_and_minimal_order() {
        let g = named("bubble").unwrap();
        // ½(N′+1) + ½ - 4 ≥ 0 first holds at N′ = 6.
        assert_eq!(error_exponent(&g, 1, 4.0, 6, 0, Geometry::Plane).unwrap(), qi(0));
        assert_eq!(error_exponent(&g, 1, 4.0, 5, 0, Geometry::HalfSpace).unwrap(), q(-1, 2));
        assert_eq!(minimal_order(&g, 1, 4.0, 0).unwrap(), 6);
        assert_eq!(minimal_order(&g, 2, 4.0, 0).unwrap(), 13);
        assert_eq!(minimal_order(&named("theta-tails").unwrap(), 1, 4.0, 0).unwrap(), 10);
        // Two-vertex bubble: ½(N+1) + n/2 - Rn.
        for n in 1..4 {
            for np in 0..20 {
                let want = q(np as i64 + 1, 2) + q(n as i64, 2) - qi(4 * n as i64);
                assert_eq!(error_exponent(&g, n, 4.0, np, 0, Geometry::Plane).unwrap(), want);
            }
        }
    }

    #[test]
    fn one_link_chain_is_plain_truncation() {
        let p = plan_for("bubble", "(1,2)", 1);
        assert_eq!(p.levels(), vec![vec![0, 1]]);
        // The region sits in A²_{R²}: R_1 = 16.
        assert_eq!(p.r_eff, vec![qi(16)]);
        assert_eq!(p.orders, vec![30]);
    }

    #[test]
    fn split_chain_expands_single_edge_first() {
        let p = plan_for("bubble", "(1)(2)", 1);
        assert_eq!(p.levels(), vec![vec![0], vec![1]]);
        assert_eq!((p.links[0].rank, p.links[1].rank), (1, 0));
        assert_eq!(p.orders, vec![6, 267]);
        assert_eq!(p.orders_for_evaluation(), vec![6, 0]);
        let t = plan_for("triangle", "(1)(2,3)", 1);
        assert_eq!(t.orders, vec![7, 318]);
        assert_eq!(t.links[1].quotient_vertices, 2);
    }

    #[test]
    fn orders_are_minimal_for_every_chain() {
        for name in ["bubble", "theta-tails", "triangle"] {
            let g = named(name).unwrap();
            for n in [1, 2] {
                let spec = LocalFunctionalSpec::monomial(&g, n, 1.0);
                for p in all_plans(&g, &spec, 4.0).unwrap() {
                    for (i, d) in p.exponents.iter().enumerate() {
                        assert!(d.coef[i].is_positive(), "{name} {}", p.label);
                        assert!(!d.eval(&p.orders).is_negative());
                        if p.orders[i] > 0 {
                            let mut less = p.orders.clone();
                            less[i] -= 1;
                            assert!(d.eval(&less).is_negative(), "{name} {} link {i}", p.label);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn small_r_is_rejected() {
        let g = named("bubble").unwrap();
        let spec = LocalFunctionalSpec::monomial(&g, 1, 1.0);
        assert!(all_plans(&g, &spec, 2.0).is_err());
        assert!(all_plans(&g, &spec, 2.5).is_ok());
    }

    #[test]
    fn regions_partition_the_cube() {
        let eps: f64 = 0.01;
        for k in [2usize, 3] {
            let g = if k == 2 { named("bubble").unwrap() } else { named("theta-tails").unwrap() };
            let spec = LocalFunctionalSpec::monomial(&g, 1, 1.0);
            let mut total = 0.0;
            for p in all_plans(&g, &spec, 4.0).unwrap() {
                let mut rows = p.polytope();
                let mut a = vec![0.0; k];
                a[0] = -1.0;
                rows.push((a, -eps.ln()));
                total += polytope_gl(
                    k,
                    &rows,
                    &mut |y| {
                        let t = p.times(y);
                        // Smooth positive integrand, log-time Jacobian included.
                        vec![t.iter().map(|x| x * (-x).exp()).product::<f64>() * (1.0 + t[0])]
                    },
                    1,
                    0.5,
                    10,
                )[0];
            }
            let one = (-eps).exp() - (-1.0f64).exp();
            // ∫ t0 e^{-t0} over (ε,1).
            let first = (1.0 + eps) * (-eps).exp() - 2.0 * (-1.0f64).exp();
            let want = one.powi(k as i32 - 1) * (one + first);
            assert!((total - want).abs() < 1e-8 * want, "k={k}: {total} vs {want}");
        }
    }

    #[test]
    fn slope_fits_clear_the_bound() {
        let g = named("bubble").unwrap();
        let spec = LocalFunctionalSpec::monomial(&g, 1, 1.0);
        let f = Field::library("gauss", 1).unwrap();
        let taus: Vec<f64> = (0..6).map(|i| 0.3 * (0.02f64 / 0.3).powf(i as f64 / 5.0)).collect();
        let path = geometric_path(2, 0.0, &taus);
        let a = measure_slope(&g, &spec, &f, 6, Geometry::Plane, &path).unwrap();
        let b = measure_slope(&g, &spec, &f, 8, Geometry::Plane, &path).unwrap();
        assert!(a.slope >= -0.1 && !a.convergent);
        assert!((b.slope - a.slope - 1.0).abs() < 0.2, "{} {}", a.slope, b.slope);
        let tree = named("tree").unwrap();
        let ts = LocalFunctionalSpec::monomial(&tree, 1, 1.0);
        assert!(measure_slope(&tree, &ts, &f, 0, Geometry::Plane, &geometric_path(1, 0.0, &taus)).unwrap().convergent);
    }

    #[test]
    fn renormalized_bubble_is_cauchy() {
        let g = named("bubble").unwrap();
        let spec = LocalFunctionalSpec::monomial(&g, 1, 1.0);
        let f = Field::library("gauss", 1).unwrap();
        let rule = TimeRule { panel: 1.5, nodes: 6 };
        let rep = counterterm_report("bubble", &g, &spec, &f, Geometry::Plane, 4.0, &[2, 3, 4, 5, 6], rule).unwrap();
        let d = rep.differences();
        assert!(d.windows(2).all(|w| w[1].1 < w[0].1), "{d:?}");
        let last = rep.rows.last().unwrap();
        assert!((last.w - last.w_ct - last.renormalized).abs() < 1e-12);
        assert_eq!(w_ct(&named("tree").unwrap(), 0.1, &LocalFunctionalSpec::monomial(&named("tree").unwrap(), 1, 1.0), &f, Geometry::Plane, 4.0, rule).unwrap(), 0.0);
    }

    #[test]
    fn phi4_series_structure() {
        let f = Field::library("gauss", 1).unwrap();
        let rule = TimeRule { panel: 2.0, nodes: 5 };
        let s = ict_series(4, 1.0, 1, 4, &f, Geometry::Plane, 4.0, &[2, 3], rule).unwrap();
        let order: Vec<(u32, u32)> = s.iter().map(|e| (e.genus, e.tails)).collect();
        assert_eq!(order, vec![(0, 3), (0, 4), (1, 1), (1, 2), (1, 3), (1, 4)]);
        // Parity: φ⁴ has no graphs with an odd number of tails.
        let odd = s.iter().find(|e| (e.genus, e.tails) == (0, 3)).unwrap();
        assert!(odd.graphs.is_empty() && odd.counterterm.iter().all(|&c| c == 0.0));
        let tree = s.iter().find(|e| (e.genus, e.tails) == (0, 4)).unwrap();
        assert_eq!(tree.graphs.len(), 1);
        assert!(tree.counterterm.iter().all(|&c| c == 0.0));
        let one_loop = s.iter().find(|e| (e.genus, e.tails) == (1, 4)).unwrap();
        assert_eq!(one_loop.graphs.len(), 2);
        assert!(one_loop.counterterm.iter().all(|c| c.is_finite() && *c != 0.0));
        assert!(ict_series(4, 1.0, 2, 4, &f, Geometry::Plane, 4.0, &[2], rule).is_err());
    }
}
