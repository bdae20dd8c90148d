//! Finite-dimensional model of the Feynman expansion.
//!
//! Functionals on `R^d` are truncated formal series in `ħ` with polynomial
//! coefficients. Three routes compute the same objects:
//!
//! * the operator route `e^{ħ∂_P} e^{I/ħ}`, expanded as a double sum over
//!   vertex multiplicities and contraction counts ([`v_direct`]);
//! * the graph sum over (possibly disconnected) stable graphs ([`v_graphs`]);
//! * the connected graph sum for `W = ħ log V` ([`w_graphs`]), checked
//!   through `exp(W/ħ) = V`.
//!
//! Truncation is by the weight `2p + deg` of a term `ħ^p x^m` of `V`. That
//! weight is additive under products and preserved by `ħ∂_P`, and every
//! vertex of type `(i, k)` carries weight `2i - 2 + k ≥ 1` when `I ∈ O⁺`, so a
//! weight bound keeps all three routes exact. A box in `(ħ, degree)` is applied
//! on top of it when results are reported.

use crate::error::{Error, Result};
use crate::graphs::{enumerate_with, EnumerationBounds, StableGraph, VertexForm, MAX_ENUMERATION_EDGES};
use crate::poly::{Monomial, Poly};
use crate::scalar::{factorial, qi, Q};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use std::collections::BTreeMap;
use std::fmt;

/// Truncation of a `V`-level series: keep `ħ^p x^m` iff `p ≤ hbar`,
/// `|m| ≤ degree` and `2p + |m| ≤ euler`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    pub hbar: i32,
    pub degree: u32,
    pub euler: u32,
}

impl Truncation {
    pub fn new(hbar: i32, degree: u32, euler: u32) -> Self {
        Truncation { hbar, degree, euler }
    }

    /// Only the weight bound; the box never cuts a term of weight `≤ euler`.
    pub fn weight_only(euler: u32) -> Self {
        // Weight-w terms have p ≤ w/2 and degree ≤ 3w (forests of trivalent trees).
        Truncation { hbar: euler as i32 / 2 + 1, degree: 3 * euler + 2, euler }
    }

    fn keeps(&self, p: i32, deg: u32) -> bool {
        p <= self.hbar && deg <= self.degree && 2 * p as i64 + deg as i64 <= self.euler as i64
    }
}

/// A truncated series `Σ c_{i,m} ħ^i x^m`.
///
/// `shift` records where the series sits relative to `V`: an interaction `I`
/// or effective interaction `W` has `shift = 1` (its `V`-level image is
/// `I/ħ`), an exponential `V` has `shift = 0`. The truncation applies to the
/// `V`-level powers `i - shift`.
#[derive(Clone, PartialEq)]
pub struct FormalFunctional {
    d: usize,
    shift: i32,
    trunc: Truncation,
    terms: BTreeMap<(i32, Monomial), Q>,
}

impl fmt::Debug for FormalFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FormalFunctional[d={}, shift={}]{{", self.d, self.shift)?;
        for (i, ((p, m), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}·ħ^{p}·x^{m:?}")?;
        }
        write!(f, "}}")
    }
}

fn deg(m: &[u32]) -> u32 {
    m.iter().sum()
}

impl FormalFunctional {
    /// Empty interaction-level functional (`shift = 1`).
    pub fn interaction(d: usize, trunc: Truncation) -> Self {
        FormalFunctional { d, shift: 1, trunc, terms: BTreeMap::new() }
    }

    /// Empty exponential-level functional (`shift = 0`).
    pub fn exponential(d: usize, trunc: Truncation) -> Self {
        FormalFunctional { d, shift: 0, trunc, terms: BTreeMap::new() }
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn shift(&self) -> i32 {
        self.shift
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(i32, Monomial), &Q)> {
        self.terms.iter()
    }

    pub fn coeff(&self, p: i32, m: &[u32]) -> Q {
        self.terms.get(&(p, m.to_vec())).cloned().unwrap_or_else(Q::zero)
    }

    /// Adds `c ħ^p x^m`; terms outside the truncation are dropped.
    pub fn add_term(&mut self, p: i32, m: Monomial, c: Q) {
        assert_eq!(m.len(), self.d, "monomial length must equal the dimension");
        if c.is_zero() || !self.trunc.keeps(p - self.shift, deg(&m)) {
            return;
        }
        let key = (p, m);
        let e = self.terms.entry(key.clone()).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    /// The homogeneous part `I_{i,k}` as a polynomial in `x`.
    pub fn part(&self, i: i32, k: u32) -> Poly<Q> {
        let mut p = Poly::zero(self.d);
        for ((pp, m), c) in &self.terms {
            if *pp == i && deg(m) == k {
                p.add_term(m.clone(), c.clone());
            }
        }
        p
    }

    /// Occurring `(ħ power, degree)` types.
    pub fn types(&self) -> Vec<(i32, u32)> {
        let mut t: Vec<(i32, u32)> = self.terms.keys().map(|(p, m)| (*p, deg(m))).collect();
        t.sort();
        t.dedup();
        t
    }

    /// `I_{0,k} = 0` for `k < 3`, `I_{1,0} = 0` and no negative powers of `ħ`.
    pub fn is_o_plus(&self) -> bool {
        self.terms.keys().all(|(p, m)| {
            let k = deg(m);
            *p >= 0 && !(*p == 0 && k < 3) && !(*p == 1 && k == 0)
        })
    }

    /// First differing coefficient, if any.
    pub fn first_difference(&self, other: &Self) -> Option<((i32, Monomial), Q, Q)> {
        let mut keys: Vec<&(i32, Monomial)> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.sort();
        keys.dedup();
        for k in keys {
            let a = self.terms.get(k).cloned().unwrap_or_else(Q::zero);
            let b = other.terms.get(k).cloned().unwrap_or_else(Q::zero);
            if a != b {
                return Some((k.clone(), a, b));
            }
        }
        None
    }

    /// Re-truncates to a (smaller) truncation.
    pub fn restrict(&self, trunc: Truncation) -> Self {
        let mut out = FormalFunctional { d: self.d, shift: self.shift, trunc, terms: BTreeMap::new() };
        for ((p, m), c) in &self.terms {
            out.add_term(*p, m.clone(), c.clone());
        }
        out
    }

    fn series(&self) -> Series {
        let mut s = Series::new(self.d);
        for ((p, m), c) in &self.terms {
            s.add(p - self.shift, m.clone(), c.clone());
        }
        s
    }

    fn from_series(s: &Series, shift: i32, trunc: Truncation) -> Self {
        let mut out = FormalFunctional { d: s.d, shift, trunc, terms: BTreeMap::new() };
        for ((p, m), c) in &s.terms {
            out.add_term(p + shift, m.clone(), c.clone());
        }
        out
    }
}

/// Symmetric `d × d` propagator.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyPropagator {
    p: Vec<Vec<Q>>,
}

impl ToyPropagator {
    pub fn new(p: Vec<Vec<Q>>) -> Result<Self> {
        let d = p.len();
        if p.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter("propagator must be square".into()));
        }
        for a in 0..d {
            for b in 0..a {
                if p[a][b] != p[b][a] {
                    return Err(Error::InvalidParameter(format!("propagator not symmetric at ({a}, {b})")));
                }
            }
        }
        Ok(ToyPropagator { p })
    }

    pub fn scalar(p: Q) -> Self {
        ToyPropagator { p: vec![vec![p]] }
    }

    pub fn dimension(&self) -> usize {
        self.p.len()
    }

    pub fn entry(&self, a: usize, b: usize) -> &Q {
        &self.p[a][b]
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        if o.dimension() != self.dimension() {
            return Err(Error::InvalidParameter("propagator dimensions differ".into()));
        }
        let p = self.p.iter().zip(&o.p).map(|(r, s)| r.iter().zip(s).map(|(a, b)| a + b).collect()).collect();
        Ok(ToyPropagator { p })
    }
}

/// `V`-level series with weight-bounded products.
#[derive(Clone, Debug, PartialEq)]
struct Series {
    d: usize,
    terms: BTreeMap<(i32, Monomial), Q>,
}

impl Series {
    fn new(d: usize) -> Self {
        Series { d, terms: BTreeMap::new() }
    }

    fn one(d: usize) -> Self {
        let mut s = Series::new(d);
        s.add(0, vec![0; d], Q::one());
        s
    }

    fn add(&mut self, p: i32, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        let key = (p, m);
        let e = self.terms.entry(key.clone()).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    fn add_series(&mut self, o: &Series, scale: &Q) {
        for ((p, m), c) in &o.terms {
            self.add(*p, m.clone(), c * scale);
        }
    }

    fn weight(p: i32, m: &[u32]) -> i64 {
        2 * p as i64 + deg(m) as i64
    }

    fn mul(&self, o: &Series, euler: u32) -> Series {
        let mut r = Series::new(self.d);
        for ((p, m), c) in &self.terms {
            let w = Series::weight(*p, m);
            for ((q, n), e) in &o.terms {
                if w + Series::weight(*q, n) > euler as i64 {
                    continue;
                }
                let mm: Monomial = m.iter().zip(n).map(|(a, b)| a + b).collect();
                r.add(p + q, mm, c * e);
            }
        }
        r
    }

    fn min_weight(&self) -> Option<i64> {
        self.terms.keys().map(|(p, m)| Series::weight(*p, m)).min()
    }

    /// `exp(self)` for a series whose terms all have weight `≥ 1`.
    fn exp(&self, euler: u32) -> Series {
        debug_assert!(self.min_weight().map_or(true, |w| w >= 1));
        let mut out = Series::one(self.d);
        let mut pow = Series::one(self.d);
        for n in 1..=euler as i64 {
            pow = pow.mul(self, euler);
            if pow.terms.is_empty() {
                break;
            }
            out.add_series(&pow, &Q::new(BigInt::one(), factorial(n as u64)));
        }
        out
    }

    /// `log(self)` for a series `1 + X` with `X` of weight `≥ 1`.
    fn log(&self, euler: u32) -> Result<Series> {
        let mut x = self.clone();
        let zero = (0, vec![0; self.d]);
        if x.terms.remove(&zero) != Some(Q::one()) {
            return Err(Error::InvalidParameter("logarithm needs constant term 1".into()));
        }
        if x.min_weight().map_or(false, |w| w < 1) {
            return Err(Error::InvalidParameter("logarithm needs the non-constant part to have positive weight".into()));
        }
        let mut out = Series::new(self.d);
        let mut pow = Series::one(self.d);
        for n in 1..=euler as i64 {
            pow = pow.mul(&x, euler);
            if pow.terms.is_empty() {
                break;
            }
            let sign = if n % 2 == 1 { 1 } else { -1 };
            out.add_series(&pow, &Q::new(BigInt::from(sign), BigInt::from(n)));
        }
        Ok(out)
    }

    /// `Σ_j ħ^j ∂_P^j / j!`; weight is preserved and degree drops, so the sum ends.
    fn exp_contract(&self, prop: &ToyPropagator) -> Series {
        let mut out = self.clone();
        let mut cur = self.clone();
        let mut j = 1i64;
        loop {
            let mut next = Series::new(self.d);
            for ((p, m), c) in &cur.terms {
                for (mm, cc) in contract_monomial(prop, m) {
                    next.add(p + 1, mm, c * &cc / qi(j));
                }
            }
            if next.terms.is_empty() {
                break;
            }
            out.add_series(&next, &Q::one());
            cur = next;
            j += 1;
        }
        out
    }
}

/// `∂_P x^m = ½ Σ_{a,b} P_ab ∂_a ∂_b x^m` as a list of monomials.
fn contract_monomial(prop: &ToyPropagator, m: &[u32]) -> Vec<(Monomial, Q)> {
    let d = m.len();
    let mut out = Vec::new();
    for a in 0..d {
        for b in a..d {
            let pab = prop.entry(a, b);
            if pab.is_zero() {
                continue;
            }
            let mut mm = m.to_vec();
            let c = if a == b {
                if m[a] < 2 {
                    continue;
                }
                mm[a] -= 2;
                // ½ P_aa m(m-1)
                pab * qi(m[a] as i64 * (m[a] as i64 - 1)) / qi(2)
            } else {
                if m[a] == 0 || m[b] == 0 {
                    continue;
                }
                mm[a] -= 1;
                mm[b] -= 1;
                // ½ (P_ab + P_ba) m_a m_b
                pab * qi(m[a] as i64 * m[b] as i64)
            };
            out.push((mm, c));
        }
    }
    out
}

fn contract_poly(prop: &ToyPropagator, f: &Poly<Q>) -> Poly<Q> {
    let mut out = Poly::zero(f.nvars());
    for (m, c) in f.terms() {
        for (mm, cc) in contract_monomial(prop, m) {
            out.add_term(mm, c * &cc);
        }
    }
    out
}

fn check_dims(prop: &ToyPropagator, f: &FormalFunctional) -> Result<()> {
    if prop.dimension() != f.dimension() {
        return Err(Error::InvalidParameter(format!(
            "propagator has dimension {}, functional has {}",
            prop.dimension(),
            f.dimension()
        )));
    }
    Ok(())
}

/// The contraction operator `∂_P` applied coefficientwise; no power of `ħ` is attached.
pub fn contract(prop: &ToyPropagator, f: &FormalFunctional) -> Result<FormalFunctional> {
    check_dims(prop, f)?;
    let mut out = FormalFunctional { d: f.d, shift: f.shift, trunc: f.trunc, terms: BTreeMap::new() };
    for ((p, m), c) in &f.terms {
        for (mm, cc) in contract_monomial(prop, m) {
            out.add_term(*p, mm, c * &cc);
        }
    }
    Ok(out)
}

/// Interaction-level inputs must be `O⁺` and carry every term of weight up to `euler`.
fn check_interaction(prop: &ToyPropagator, int: &FormalFunctional, trunc: Truncation) -> Result<()> {
    check_dims(prop, int)?;
    if int.shift != 1 {
        return Err(Error::InvalidParameter("expected an interaction-level functional (shift 1)".into()));
    }
    if !int.is_o_plus() {
        return Err(Error::InvalidParameter("interaction is not in O⁺: some I_{0,k<3} or I_{1,0} is nonzero".into()));
    }
    let full = Truncation::weight_only(trunc.euler);
    let t = int.trunc;
    if t.euler < full.euler || t.hbar < full.hbar || t.degree < full.degree {
        return Err(Error::InvalidParameter(format!(
            "interaction truncated at {t:?} loses terms needed for weight {}",
            trunc.euler
        )));
    }
    Ok(())
}

/// `e^{ħ∂_P} e^{I/ħ}` as the explicit double sum over vertex multiplicities
/// `{n_{i,k}}` and contraction counts `j`:
/// `Σ (1/j!) Π (1/n_{i,k}!) ħ^{Σ(i-1)n_{i,k} + j} ∂_P^j Π I_{i,k}^{n_{i,k}}`.
pub fn v_direct(prop: &ToyPropagator, int: &FormalFunctional, trunc: Truncation) -> Result<FormalFunctional> {
    check_interaction(prop, int, trunc)?;
    let types: Vec<((i32, u32), Poly<Q>, u32)> = int
        .types()
        .into_iter()
        .map(|(i, k)| ((i, k), int.part(i, k), (2 * (i - 1) + k as i32) as u32))
        .filter(|(_, _, w)| *w <= trunc.euler)
        .collect();
    let mut out = FormalFunctional::exponential(int.d, trunc);
    let mut counts = vec![0u32; types.len()];
    fn go(
        idx: usize,
        budget: u32,
        types: &[((i32, u32), Poly<Q>, u32)],
        counts: &mut Vec<u32>,
        prop: &ToyPropagator,
        out: &mut FormalFunctional,
    ) {
        if idx == types.len() {
            let d = out.d;
            let mut prod = Poly::constant(d, Q::one());
            let mut p0 = 0i32;
            for (t, &n) in types.iter().zip(counts.iter()) {
                if n == 0 {
                    continue;
                }
                let ((i, _), f, _) = t;
                prod = prod.mul(&f.pow(n)).div_scalar(&Q::from_integer(factorial(n as u64)));
                p0 += (i - 1) * n as i32;
            }
            let mut j = 0i64;
            let mut cur = prod;
            while !cur.is_zero() {
                for (m, c) in cur.terms() {
                    out.add_term(p0 + j as i32, m.clone(), c.clone());
                }
                j += 1;
                cur = contract_poly(prop, &cur).div_scalar(&qi(j));
            }
            return;
        }
        let w = types[idx].2;
        let mut n = 0;
        loop {
            counts[idx] = n;
            go(idx + 1, budget - n * w, types, counts, prop, out);
            if (n + 1) * w > budget {
                break;
            }
            n += 1;
        }
        counts[idx] = 0;
    }
    go(0, trunc.euler, &types, &mut counts, prop, &mut out);
    Ok(out)
}

/// `e^{ħ∂_P} e^{I/ħ}` through truncated exponentials of whole series.
pub fn v_operator(prop: &ToyPropagator, int: &FormalFunctional, trunc: Truncation) -> Result<FormalFunctional> {
    check_interaction(prop, int, trunc)?;
    let v = int.series().exp(trunc.euler).exp_contract(prop);
    Ok(FormalFunctional::from_series(&v, 0, trunc))
}

/// `W = ħ log V` from an exponential-level functional.
pub fn w_from_v(v: &FormalFunctional, trunc: Truncation) -> Result<FormalFunctional> {
    if v.shift != 0 {
        return Err(Error::InvalidParameter("expected an exponential-level functional (shift 0)".into()));
    }
    let full = Truncation::weight_only(trunc.euler);
    let l = v.restrict(full).series().log(trunc.euler)?;
    Ok(FormalFunctional::from_series(&l, 1, trunc))
}

/// `exp(W/ħ)` from an interaction-level functional.
pub fn exp_over_hbar(w: &FormalFunctional, trunc: Truncation) -> Result<FormalFunctional> {
    if w.shift != 1 {
        return Err(Error::InvalidParameter("expected an interaction-level functional (shift 1)".into()));
    }
    let s = w.series();
    if s.min_weight().map_or(false, |x| x < 1) {
        return Err(Error::InvalidParameter("exponent has a term of weight < 1".into()));
    }
    Ok(FormalFunctional::from_series(&s.exp(trunc.euler), 0, trunc))
}

/// Contraction `w_γ(P, I)` of the symmetric tensors `S^k I_{g,k}` placed at the
/// vertices of `γ` along its edges; tails stay open as the variables `x`.
pub fn w_gamma_finite(graph: &StableGraph, prop: &ToyPropagator, int: &FormalFunctional) -> Result<Poly<Q>> {
    check_dims(prop, int)?;
    w_form(&graph.vertex_form(), prop, int)
}

fn w_form(f: &VertexForm, prop: &ToyPropagator, int: &FormalFunctional) -> Result<Poly<Q>> {
    let d = int.d;
    let nv = f.num_vertices();
    let nvars = d * (1 + nv);
    let slot = |v: usize, a: usize| d * (1 + v) + a;
    // Vertex polynomial in its own slot variables.
    let mut vertex_polys = Vec::with_capacity(nv);
    for v in 0..nv {
        let k = f.tails[v] + f.internal_degree(v);
        let g = f.genus[v] as i32;
        let part = int.part(g, k);
        if part.is_zero() {
            return Err(Error::InvalidParameter(format!("interaction has no vertex of type (genus {g}, valence {k})")));
        }
        let map: Vec<usize> = (0..d).map(|a| slot(v, a)).collect();
        vertex_polys.push(part.remap(nvars, &map));
    }
    let mut cur = Poly::constant(nvars, Q::one());
    let mut done = vec![false; nv];
    for v in 0..nv {
        cur = cur.mul(&vertex_polys[v]);
        // Edges closing at v.
        for _ in 0..f.loops[v] {
            cur = pair_contract(&cur, prop, slot(v, 0), slot(v, 0), d);
        }
        for u in 0..v {
            for _ in 0..f.mult[u][v] {
                cur = pair_contract(&cur, prop, slot(u, 0), slot(v, 0), d);
            }
        }
        // Vertices with every neighbour placed release their slots into x.
        for u in 0..=v {
            if !done[u] && (v + 1..nv).all(|w| f.mult[u][w] == 0) {
                let mut map: Vec<usize> = (0..nvars).collect();
                for a in 0..d {
                    map[slot(u, a)] = a;
                }
                cur = cur.remap(nvars, &map);
                done[u] = true;
            }
        }
        if cur.is_zero() {
            break;
        }
    }
    // Each open slot of vertex v was counted 1/τ_v! times by the derivatives.
    let mut scale = BigInt::one();
    for v in 0..nv {
        scale *= factorial(f.tails[v] as u64);
    }
    let mut out = Poly::zero(d);
    for (m, c) in cur.terms() {
        debug_assert!(m[d..].iter().all(|&e| e == 0));
        out.add_term(m[..d].to_vec(), c * Q::from_integer(scale.clone()));
    }
    Ok(out)
}

/// `Σ_{a,b} P_ab ∂_{u+a} ∂_{v+b}` with `u`, `v` the first slot variables of two vertex copies.
fn pair_contract(f: &Poly<Q>, prop: &ToyPropagator, u: usize, v: usize, d: usize) -> Poly<Q> {
    let mut out = Poly::zero(f.nvars());
    for a in 0..d {
        let fa = f.deriv(u + a);
        if fa.is_zero() {
            continue;
        }
        for b in 0..d {
            let pab = prop.entry(a, b);
            if pab.is_zero() {
                continue;
            }
            out = out.add(&fa.deriv(v + b).scale(pab));
        }
    }
    out
}

/// A connected graph with its symmetry factor, `ħ`-power and weight.
#[derive(Clone, Debug)]
pub struct GraphTerm {
    pub graph: StableGraph,
    pub aut: BigInt,
    /// `g(γ) - 1`, the power of `ħ` in `V`.
    pub hbar: i32,
    /// `2g(γ) - 2 + |T(γ)|`.
    pub weight: u32,
}

/// Connected stable graphs built from the vertex types of `int`, complete for
/// the weight bound of `trunc`.
pub fn connected_graphs(int: &FormalFunctional, trunc: Truncation) -> Result<Vec<GraphTerm>> {
    let allowed: Vec<(u32, u32)> = int.types().into_iter().filter(|(i, _)| *i >= 0).map(|(i, k)| (i as u32, k)).collect();
    let chi = trunc.euler;
    // Each vertex has at most 3 half-edges per unit of weight.
    if 3 * chi / 2 > MAX_ENUMERATION_EDGES {
        return Err(Error::SizeLimit(format!(
            "weight bound {chi} needs graphs beyond the {MAX_ENUMERATION_EDGES}-edge enumeration limit"
        )));
    }
    let mut out = Vec::new();
    for t in 0..=chi + 2 {
        let b = EnumerationBounds {
            max_genus: chi / 2 + 1,
            tails: t,
            max_edges: MAX_ENUMERATION_EDGES,
            max_euler: Some(chi),
            allowed: Some(allowed.clone()),
        };
        for graph in enumerate_with(&b)? {
            let aut = graph.vertex_form().automorphism_order();
            let g = graph.genus() as i32;
            let weight = (2 * g - 2 + t as i32) as u32;
            out.push(GraphTerm { graph, aut, hbar: g - 1, weight });
        }
    }
    Ok(out)
}

/// `ħ^{g-1} w_γ / |Aut γ|` for each connected graph, as `V`-level series.
fn graph_series(prop: &ToyPropagator, int: &FormalFunctional, graphs: &[GraphTerm]) -> Result<Vec<(u32, Series)>> {
    let mut out = Vec::with_capacity(graphs.len());
    for gt in graphs {
        let w = w_gamma_finite(&gt.graph, prop, int)?;
        let mut s = Series::new(int.d);
        let inv = Q::new(BigInt::one(), gt.aut.clone());
        for (m, c) in w.terms() {
            s.add(gt.hbar, m.clone(), c * &inv);
        }
        out.push((gt.weight, s));
    }
    Ok(out)
}

/// Graph sum for `V`: disconnected graphs are multisets `{γ^{k_γ}}` of
/// connected ones, with `|Aut| = Π k_γ! |Aut γ|^{k_γ}` and `ħ^{g - C}`.
pub fn v_graphs(prop: &ToyPropagator, int: &FormalFunctional, graphs: &[GraphTerm], trunc: Truncation) -> Result<FormalFunctional> {
    check_interaction(prop, int, trunc)?;
    let terms = graph_series(prop, int, graphs)?;
    let chi = trunc.euler;
    // Multisets are built one graph at a time: the product over processed
    // graphs of Σ_k (ħ^{g-1} w_γ/|Aut γ|)^k / k!, each multiset appearing once.
    let mut acc = Series::one(int.d);
    for (w, s) in &terms {
        if s.terms.is_empty() || *w > chi {
            continue;
        }
        let mut next = acc.clone();
        let mut pow = acc.clone();
        for k in 1..=(chi / w) as u64 {
            pow = pow.mul(s, chi);
            if pow.terms.is_empty() {
                break;
            }
            next.add_series(&pow, &Q::new(BigInt::one(), factorial(k)));
        }
        acc = next;
    }
    Ok(FormalFunctional::from_series(&acc, 0, trunc))
}

/// Connected graph sum `W = Σ ħ^{g(γ)} w_γ / |Aut γ|`.
pub fn w_graphs(prop: &ToyPropagator, int: &FormalFunctional, graphs: &[GraphTerm], trunc: Truncation) -> Result<FormalFunctional> {
    check_interaction(prop, int, trunc)?;
    let mut acc = Series::new(int.d);
    for (w, s) in graph_series(prop, int, graphs)? {
        if w <= trunc.euler {
            acc.add_series(&s, &Q::one());
        }
    }
    Ok(FormalFunctional::from_series(&acc, 1, trunc))
}

/// Outcome of comparing the graph routes with the operator routes.
#[derive(Clone, Debug)]
pub struct ExpansionCheck {
    pub graphs: usize,
    pub v_terms: usize,
    pub w_terms: usize,
    /// `v_graphs = v_direct`.
    pub v_match: Option<((i32, Monomial), Q, Q)>,
    /// `exp(W/ħ) = V`.
    pub exp_match: Option<((i32, Monomial), Q, Q)>,
    /// `w_graphs = ħ log v_direct`.
    pub log_match: Option<((i32, Monomial), Q, Q)>,
    pub w_in_o_plus: bool,
}

impl ExpansionCheck {
    pub fn passed(&self) -> bool {
        self.v_match.is_none() && self.exp_match.is_none() && self.log_match.is_none() && self.w_in_o_plus
    }
}

/// Runs every route for one `(P, I)` and compares them exactly.
pub fn check_expansion(prop: &ToyPropagator, int: &FormalFunctional, trunc: Truncation) -> Result<ExpansionCheck> {
    let graphs = connected_graphs(int, trunc)?;
    let direct = v_direct(prop, int, trunc)?;
    let by_graphs = v_graphs(prop, int, &graphs, trunc)?;
    // W at weight-only truncation so that exp(W/ħ) sees every term it needs.
    let full = Truncation::weight_only(trunc.euler);
    let w = w_graphs(prop, int, &graphs, full)?;
    let exp_w = exp_over_hbar(&w, trunc)?;
    let w_log = w_from_v(&v_direct(prop, int, full)?, full)?;
    Ok(ExpansionCheck {
        graphs: graphs.len(),
        v_terms: direct.len(),
        w_terms: w.len(),
        v_match: by_graphs.first_difference(&direct),
        exp_match: exp_w.first_difference(&direct),
        log_match: w.first_difference(&w_log),
        w_in_o_plus: w.is_o_plus(),
    })
}

/// Random `O⁺` interaction with small rational coefficients on the given
/// vertex types `(i, k)`.
pub fn random_interaction<R: Rng>(rng: &mut R, d: usize, types: &[(u32, u32)], trunc: Truncation) -> FormalFunctional {
    let mut f = FormalFunctional::interaction(d, Truncation::weight_only(trunc.euler));
    for &(i, k) in types {
        for m in monomials(d, k) {
            if rng.gen_bool(0.3) && d > 1 {
                continue;
            }
            let num: i64 = rng.gen_range(-3..=3);
            let den: i64 = rng.gen_range(1..=3);
            f.add_term(i as i32, m, Q::new(BigInt::from(num), BigInt::from(den)));
        }
    }
    f
}

/// Random symmetric propagator with small rational entries.
pub fn random_propagator<R: Rng>(rng: &mut R, d: usize) -> ToyPropagator {
    let mut p = vec![vec![Q::zero(); d]; d];
    for a in 0..d {
        for b in a..d {
            let v = Q::new(BigInt::from(rng.gen_range(-3i64..=3)), BigInt::from(rng.gen_range(1i64..=2)));
            p[a][b] = v.clone();
            p[b][a] = v;
        }
    }
    ToyPropagator { p }
}

/// All exponent vectors of total degree `k` in `d` variables.
pub fn monomials(d: usize, k: u32) -> Vec<Monomial> {
    if d == 0 {
        return if k == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for e in (0..=k).rev() {
        for mut rest in monomials(d - 1, k - e) {
            rest.insert(0, e);
            out.push(rest);
        }
    }
    out
}

/// Largest absolute numerator, a size measure for reports.
pub fn height(f: &FormalFunctional) -> BigInt {
    f.terms.values().map(|c| c.numer().abs().max(c.denom().clone())).max().unwrap_or_else(BigInt::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn x_pow(d: usize, m: Monomial, i: i32, c: Q, trunc: Truncation) -> FormalFunctional {
        let mut f = FormalFunctional::interaction(d, Truncation::weight_only(trunc.euler));
        f.add_term(i, m, c);
        f
    }

    #[test]
    fn contraction_examples() {
        let t = Truncation::weight_only(6);
        let p = ToyPropagator::scalar(qi(5));
        let f = x_pow(1, vec![2], 1, Q::one(), t);
        assert_eq!(contract(&p, &f).unwrap().coeff(1, &[0]), qi(5));
        let c = x_pow(1, vec![0], 2, Q::one(), t);
        assert!(contract(&p, &c).unwrap().is_empty());
        let f4 = x_pow(1, vec![4], 1, Q::one(), t);
        assert_eq!(contract(&p, &f4).unwrap().coeff(1, &[2]), qi(30));
        // Off-diagonal: ∂_P(xy) = P_12.
        let p2 = ToyPropagator::new(vec![vec![qi(1), qi(7)], vec![qi(7), qi(2)]]).unwrap();
        let xy = x_pow(2, vec![1, 1], 1, Q::one(), t);
        assert_eq!(contract(&p2, &xy).unwrap().coeff(1, &[0, 0]), qi(7));
        assert!(ToyPropagator::new(vec![vec![qi(1), qi(2)], vec![qi(3), qi(1)]]).is_err());
    }

    #[test]
    fn trivial_expansions() {
        let t = Truncation::new(3, 8, 6);
        let p = ToyPropagator::scalar(qi(2));
        let zero = FormalFunctional::interaction(1, Truncation::weight_only(6));
        let v = v_direct(&p, &zero, t).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.coeff(0, &[0]), Q::one());
        // P = 0 gives the plain exponential.
        let i = x_pow(1, vec![3], 0, q(1, 2), t);
        let v0 = v_direct(&ToyPropagator::scalar(Q::zero()), &i, t).unwrap();
        assert_eq!(v0.coeff(-2, &[6]), q(1, 8));
        assert_eq!(v0.len(), 3);
        // Not in O⁺.
        let bad = x_pow(1, vec![2], 0, Q::one(), t);
        assert!(v_direct(&p, &bad, t).is_err());
    }

    #[test]
    fn tadpole_lands_at_one_loop() {
        // I = x³: the tadpole gives W ∋ ħ·(1/2)·6x·P = 3x·ħ.
        let t = Truncation::weight_only(5);
        let p = ToyPropagator::scalar(Q::one());
        let i = x_pow(1, vec![3], 0, Q::one(), t);
        let w = w_from_v(&v_direct(&p, &i, t).unwrap(), t).unwrap();
        assert_eq!(w.coeff(1, &[1]), qi(3));
        assert!(w.is_o_plus());
        for k in 0..3 {
            assert!(w.coeff(0, &[k]).is_zero());
        }
    }

    #[test]
    fn vertex_tensor_normalization() {
        let t = Truncation::weight_only(4);
        let p = ToyPropagator::scalar(qi(3));
        let c = q(2, 5);
        let i3 = x_pow(1, vec![3], 0, c.clone(), t);
        let single = StableGraph::from_vertices(&[0], &[3], &[]);
        assert_eq!(w_gamma_finite(&single, &p, &i3).unwrap().coeff(&[3]), qi(6) * &c);
        // A loop on a quartic vertex: 4!·c·p·x², with |Aut| = 4.
        let i4 = x_pow(1, vec![4], 0, c.clone(), t);
        let looped = StableGraph::from_vertices(&[0], &[2], &[(0, 0)]);
        assert_eq!(w_gamma_finite(&looped, &p, &i4).unwrap().coeff(&[2]), qi(24) * &c * qi(3));
        assert_eq!(looped.vertex_form().automorphism_order(), BigInt::from(4));
        let missing = StableGraph::from_vertices(&[1], &[1], &[]);
        assert!(w_gamma_finite(&missing, &p, &i4).is_err());
    }

    #[test]
    fn genus_zero_part_is_a_tree_sum() {
        let t = Truncation::weight_only(6);
        let p = ToyPropagator::scalar(qi(2));
        let i = x_pow(1, vec![3], 0, Q::one(), t);
        let all = connected_graphs(&i, t).unwrap();
        let trees: Vec<GraphTerm> = all.iter().filter(|g| g.graph.betti() == 0).cloned().collect();
        assert!(trees.iter().all(|g| g.hbar == -1));
        let w = w_graphs(&p, &i, &all, t).unwrap();
        let w_trees = w_graphs(&p, &i, &trees, t).unwrap();
        let at_zero = Truncation { hbar: -1, ..t };
        assert_eq!(w.restrict(at_zero).first_difference(&w_trees), None);
        assert!(!w_trees.is_empty());
    }

    #[test]
    fn routes_agree_d1_and_d2() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in 1..=2 {
            let t = Truncation::new(3, 8, 6);
            let types = [(0, 3), (0, 4), (1, 1), (1, 2), (2, 0)];
            let i = random_interaction(&mut rng, d, &types, t);
            let p = random_propagator(&mut rng, d);
            let r = check_expansion(&p, &i, t).unwrap();
            assert!(r.passed(), "d={d}: {r:?}");
            assert!(r.graphs > 20);
            let op = v_operator(&p, &i, t).unwrap();
            assert_eq!(op, v_direct(&p, &i, t).unwrap());
        }
    }

    #[test]
    fn removing_a_graph_divides_by_its_exponential() {
        let t = Truncation::new(3, 8, 6);
        let p = ToyPropagator::new(vec![vec![qi(1), q(1, 2)], vec![q(1, 2), qi(-1)]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let i = random_interaction(&mut rng, 2, &[(0, 3), (1, 1)], t);
        let graphs = connected_graphs(&i, t).unwrap();
        let full = Truncation::weight_only(t.euler);
        let v = v_graphs(&p, &i, &graphs, full).unwrap();
        for drop in [0, graphs.len() / 2] {
            let mut rest = graphs.clone();
            let gone = rest.remove(drop);
            let v_rest = v_graphs(&p, &i, &rest, full).unwrap();
            let term = graph_series(&p, &i, &[gone]).unwrap().remove(0).1;
            let rebuilt = v_rest.series().mul(&term.exp(t.euler), t.euler);
            assert_eq!(FormalFunctional::from_series(&rebuilt, 0, full), v);
        }
    }

    #[test]
    fn semigroup_in_the_propagator() {
        let t = Truncation::weight_only(6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let i = random_interaction(&mut rng, 2, &[(0, 3), (0, 4), (1, 1), (1, 2)], t);
        let p1 = random_propagator(&mut rng, 2);
        let p2 = random_propagator(&mut rng, 2);
        let w1 = w_from_v(&v_direct(&p1, &i, t).unwrap(), t).unwrap();
        let w21 = w_from_v(&v_direct(&p2, &w1, t).unwrap(), t).unwrap();
        let w12 = w_from_v(&v_direct(&p1.add(&p2).unwrap(), &i, t).unwrap(), t).unwrap();
        assert_eq!(w21, w12);
    }

    #[test]
    fn hbar_power_is_genus_minus_components() {
        let t = Truncation::weight_only(5);
        let p = ToyPropagator::scalar(Q::one());
        let i = x_pow(1, vec![3], 0, Q::one(), t);
        for gt in connected_graphs(&i, t).unwrap() {
            let w = w_gamma_finite(&gt.graph, &p, &i).unwrap();
            assert_eq!(w.homogeneous_degree(), Some(gt.graph.num_tails() as u32));
            assert_eq!(gt.hbar, gt.graph.genus() as i32 - gt.graph.num_components() as i32);
        }
    }

    #[test]
    fn partition_counts_are_group_order_over_aut() {
        use crate::graphs::partition_class_counts;
        let cases: [(&[(u32, u32)], usize); 4] =
            [(&[(0, 3), (0, 3)], 3), (&[(0, 3), (0, 3)], 2), (&[(0, 4), (0, 3), (0, 3)], 3), (&[(1, 2), (0, 4)], 2)];
        for (types, j) in cases {
            // |G| = Π n! (k!)^n over the multiplicities of each vertex type.
            let mut mult: BTreeMap<(u32, u32), u64> = BTreeMap::new();
            for &t in types {
                *mult.entry(t).or_default() += 1;
            }
            let mut group = BigInt::one();
            for (&(_, k), &n) in &mult {
                group *= factorial(n) * factorial(k as u64).pow(n as u32);
            }
            let classes = partition_class_counts(types, j);
            assert!(!classes.is_empty());
            for (graph, count) in classes.values() {
                let aut = graph.vertex_form().automorphism_order();
                assert_eq!(BigInt::from(*count) * &aut, group, "{}", graph.to_text());
            }
        }
    }
}
