//! Term-by-term truncated weights: `f^{N′}` as a sum of rational functions of
//! `t` times local functionals of the field, one expansion level.
//!
//! On the plane every term is `t^J (4πt)^{-n/2} I_A^K(t) Ψ_{J,K}(α)`. On the
//! half space the tangential directions give the same structure in dimension
//! `n-1`, and the normal direction contributes, for every boundary sign
//! pattern `β`, the residual `ψ_{K′}(u,t) = e^{-Q^β(u,t)} ∫_{P_u} z^{K′}
//! e^{-Q^β(z,u,t)} dz`, which stays inside the `u` integral.

use super::field::{product_integral_line, Field, Field1D};
use super::form::{assemble_quadratic_form, hn_q_decomposition, i_a_k, twice_q_degree, IakSymbolic, TreeCoordinates};
use super::LocalFunctionalSpec;
use crate::graphs::StableGraph;
use crate::heatkernel::{derivative_poly, Geometry};
use crate::poly::Poly;
use crate::quad::{adaptive, Tolerance};
use crate::scalar::{qi, ratio_to_f64, Q};
use crate::wick::{integrate_nested, pu_domain, pu_exponent};
use crate::{Error, Result};
use num_traits::One;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Largest truncation order handled term by term.
pub const SYMBOLIC_CAP: usize = 10;

/// `Σ_q coeff_q ∫ Π_h ∂^{I_{q,h}} α(w) dw`: one multi-index per tail.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalTail {
    pub terms: Vec<(Q, Vec<Vec<u32>>)>,
}

impl LocalTail {
    /// Integral over direction `i` of one pattern.
    fn line_factor(field: &Field1D, pattern: &[Vec<u32>], i: usize) -> f64 {
        let ders: Vec<Field1D> = pattern.iter().map(|m| field.nth_derivative(m[i])).collect();
        let refs: Vec<&Field1D> = ders.iter().collect();
        product_integral_line(&refs)
    }

    fn normal_product(field: &Field1D, pattern: &[Vec<u32>], i: usize, u: f64) -> f64 {
        pattern.iter().map(|m| field.nth_derivative(m[i]).eval(u)).product()
    }
}

/// Boundary part of a half-space term.
#[derive(Clone, Debug, PartialEq)]
pub struct Residual {
    /// `true` where the edge takes the image term.
    pub beta: Vec<bool>,
    pub k_normal: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightTerm {
    /// Power of every `t_e` from kernel derivatives (non-positive).
    pub j: Vec<i32>,
    /// Tangential tree multi-index, entry `a d + i`.
    pub k: Vec<u32>,
    pub iak: IakSymbolic,
    pub tail: LocalTail,
    pub residual: Option<Residual>,
}

impl WeightTerm {
    pub fn j_abs(&self) -> u32 {
        self.j.iter().map(|x| x.unsigned_abs()).sum()
    }

    pub fn k_abs(&self) -> u32 {
        self.k.iter().sum()
    }

    /// Twice the homogeneous degree of `𝒬 = t^{-J} (Π t)^{d_all/2} P^{(|K|+1)/2}`,
    /// computed from the polynomials themselves.
    pub fn twice_denominator_degree(&self, n_dirs: usize) -> Option<i64> {
        let p = if self.iak.d == 0 { 0 } else { self.iak.p_gamma.homogeneous_degree()? as i64 };
        Some(2 * self.j_abs() as i64 + (n_dirs * self.iak.num_edges) as i64 + p * (self.k_abs() as i64 + 1))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicWeight {
    pub n: usize,
    pub geometry: Geometry,
    pub n_prime: usize,
    pub num_edges: usize,
    pub num_vertices: usize,
    pub coupling: f64,
    pub terms: Vec<WeightTerm>,
}

/// All multi-indices of length `len` with total at most `max`.
fn multi_indices(len: usize, max: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        let mut next = Vec::new();
        for m in &out {
            let used: u32 = m.iter().sum();
            for e in 0..=(max as u32 - used) {
                let mut m2 = m.clone();
                m2.push(e);
                next.push(m2);
            }
        }
        out = next;
    }
    out
}

fn linear(nvars: usize, coeffs: &[(usize, i64)]) -> Poly<Q> {
    let mut p = Poly::zero(nvars);
    for &(i, c) in coeffs {
        if c != 0 {
            let mut m = vec![0; nvars];
            m[i] = 1;
            p.add_term(m, qi(c));
        }
    }
    p
}

fn factorial_q(k: u32) -> Q {
    (1..=k as i64).fold(Q::one(), |acc, i| acc * qi(i))
}

/// `f^{N′}` term by term for one expansion level.
pub fn f_gamma_taylor(g: &StableGraph, spec: &LocalFunctionalSpec, n_prime: usize, geometry: Geometry) -> Result<SymbolicWeight> {
    spec.validate(g)?;
    if n_prime > SYMBOLIC_CAP {
        return Err(Error::SizeLimit(format!("symbolic truncation order {n_prime} exceeds {SYMBOLIC_CAP}")));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = spec.n;
    let half = geometry == Geometry::HalfSpace;
    if half && g.num_edges() > 6 {
        return Err(Error::SizeLimit("boundary sign patterns are enumerated for at most 6 edges".into()));
    }
    let dt = if half { n - 1 } else { n };
    let tree = g.spanning_tree()?;
    let coords = TreeCoordinates::new(g, &tree)?;
    let nt = coords.dim();
    let v = g.num_vertices();
    let nz = if half { v - 1 } else { 0 };
    let nvars = nt * dt + nz;
    let zt = super::form::z_tilde_basis(v);
    let cap = n_prime as u32;
    let mask = vec![true; nvars];
    let truncate = |p: &Poly<Q>| p.truncate(&mask, cap);

    let mut acc: BTreeMap<(Vec<i32>, Vec<Vec<u32>>), Poly<Q>> = BTreeMap::new();
    let base_tails: Vec<Vec<u32>> = g.tails().iter().map(|&h| spec.derivs[h].clone()).collect();
    acc.insert((vec![0; g.num_edges()], base_tails), Poly::one(nvars));

    // Field factors: ∂^I α(x_v) with x_v = w + pos_v · y (tangential) and
    // x_v = u + z̃_v · z (normal), expanded in (y, z).
    for (slot, &h) in g.tails().iter().enumerate() {
        let vx = g.vertex_of(h);
        let shifts: Vec<Poly<Q>> = (0..n)
            .map(|i| {
                if half && i + 1 == n {
                    linear(nvars, &zt[vx].iter().enumerate().map(|(a, &c)| (nt * dt + a, c)).collect::<Vec<_>>())
                } else {
                    linear(nvars, &coords.pos[vx].iter().enumerate().map(|(a, &c)| (a * dt + i, c)).collect::<Vec<_>>())
                }
            })
            .collect();
        let mut next: BTreeMap<(Vec<i32>, Vec<Vec<u32>>), Poly<Q>> = BTreeMap::new();
        for m in multi_indices(n, n_prime) {
            let mut factor = Poly::one(nvars);
            for i in 0..n {
                if m[i] > 0 {
                    factor = truncate(&factor.mul(&shifts[i].pow(m[i]))).div_scalar(&factorial_q(m[i]));
                }
            }
            if factor.is_zero() {
                continue;
            }
            for ((j, tails), p) in &acc {
                let prod = truncate(&p.mul(&factor));
                if prod.is_zero() {
                    continue;
                }
                let mut t2 = tails.clone();
                for i in 0..n {
                    t2[slot][i] += m[i];
                }
                let e = next.entry((j.clone(), t2)).or_insert_with(|| Poly::zero(nvars));
                *e = e.add(&prod);
            }
        }
        acc = next;
    }

    // Kernel derivatives: (-1)^{k_b} P_{k_a+k_b}(ℓ_e · y_i, 1/t_e) per direction.
    for (e, &(ha, hb)) in g.edges().iter().enumerate() {
        for i in 0..n {
            let (ka, kb) = (spec.derivs[ha][i], spec.derivs[hb][i]);
            if ka + kb == 0 {
                continue;
            }
            if half {
                return Err(Error::InvalidParameter(
                    "term-by-term half-space weights need derivative-free edges; use the numeric engine".into(),
                ));
            }
            let p = derivative_poly(i, ka + kb)?.poly;
            let d = linear(nvars, &coords.ell[e].iter().enumerate().map(|(a, &c)| (a * dt + i, c)).collect::<Vec<_>>());
            let sign = if kb % 2 == 1 { -Q::one() } else { Q::one() };
            let mut next: BTreeMap<(Vec<i32>, Vec<Vec<u32>>), Poly<Q>> = BTreeMap::new();
            for (mono, c) in p.terms() {
                let factor = truncate(&d.pow(mono[0])).scale(&(c.clone() * sign.clone()));
                for ((j, tails), q) in &acc {
                    let prod = truncate(&q.mul(&factor));
                    if prod.is_zero() {
                        continue;
                    }
                    let mut j2 = j.clone();
                    j2[e] -= mono[1] as i32;
                    let entry = next.entry((j2, tails.clone())).or_insert_with(|| Poly::zero(nvars));
                    *entry = entry.add(&prod);
                }
            }
            acc = next;
        }
    }

    // Regroup by (J, K, K′).
    let mut grouped: BTreeMap<(Vec<i32>, Vec<u32>, Vec<u32>), Vec<(Q, Vec<Vec<u32>>)>> = BTreeMap::new();
    for ((j, tails), p) in &acc {
        for (mono, c) in p.terms() {
            let k = mono[..nt * dt].to_vec();
            let kz = mono[nt * dt..].to_vec();
            grouped.entry((j.clone(), k, kz)).or_default().push((c.clone(), tails.clone()));
        }
    }
    let form = if dt > 0 { Some(assemble_quadratic_form(g, &tree, dt)?) } else { None };
    let betas: Vec<Vec<bool>> = if half {
        (0..1u32 << g.num_edges()).map(|mask| (0..g.num_edges()).map(|e| mask >> e & 1 == 1).collect()).collect()
    } else {
        vec![vec![]]
    };
    let mut terms = Vec::new();
    for ((j, k, kz), tail) in grouped {
        // Odd tangential moments vanish; skip them before any work.
        let iak = match &form {
            Some(f) => i_a_k(f, &k)?,
            None => IakSymbolic { d: 0, num_edges: g.num_edges(), k_abs: 0, numer: Poly::one(g.num_edges()), p_gamma: Poly::one(g.num_edges()) },
        };
        if iak.numer.is_zero() {
            continue;
        }
        for beta in &betas {
            terms.push(WeightTerm {
                j: j.clone(),
                k: k.clone(),
                iak: iak.clone(),
                tail: LocalTail { terms: tail.clone() },
                residual: if half { Some(Residual { beta: beta.clone(), k_normal: kz.clone() }) } else { None },
            });
        }
    }
    Ok(SymbolicWeight {
        n,
        geometry,
        n_prime,
        num_edges: g.num_edges(),
        num_vertices: v,
        coupling: spec.coupling_product(),
        terms,
    })
}

/// `ψ_{K′}(u,t)` for one sign pattern, including the Jacobian of `(u, z)`.
pub fn residual_psi(g: &StableGraph, beta: &[bool], k_normal: &[u32], u: f64, t: &[f64]) -> Result<f64> {
    let tree = g.spanning_tree()?;
    let dec = hn_q_decomposition(g, beta, &tree)?;
    let m = g.num_vertices() - 1;
    let a: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| dec.z_quadratic[i][j].eval(t)).collect()).collect();
    let b: Vec<f64> = (0..m).map(|i| dec.uz_linear[i].eval(t)).collect();
    let mut expo = pu_exponent(&a, &b, u);
    expo.add_term(vec![0; m], -dec.u_quadratic.eval(t) * u * u);
    let mut mono = vec![0u32; m];
    mono.copy_from_slice(k_normal);
    let poly = Poly::monomial(mono, 1.0);
    let jac = g.num_vertices() as f64;
    if m == 0 {
        return Ok(jac * (-dec.u_quadratic.eval(t) * u * u).exp());
    }
    Ok(jac * integrate_nested(&pu_domain(m + 1, u), &poly, &expo)?)
}

impl SymbolicWeight {
    /// Value of one term at `t` for a product field.
    pub fn term_value(&self, g: &StableGraph, term: &WeightTerm, t: &[f64], field: &Field) -> Result<f64> {
        let n = self.n;
        let half = self.geometry == Geometry::HalfSpace;
        let mut rational = term.iak.value(t);
        for (e, &te) in t.iter().enumerate() {
            rational *= te.powi(term.j[e]) * (4.0 * PI * te).powf(-(n as f64) / 2.0);
        }
        let tang = if half { n - 1 } else { n };
        let mut psi = 0.0;
        for (c, pattern) in &term.tail.terms {
            let mut v = ratio_to_f64(c);
            for i in 0..tang {
                v *= LocalTail::line_factor(&field.factors[i], pattern, i);
            }
            if let Some(res) = &term.residual {
                let a = &field.factors[n - 1];
                let sign = if res.beta.iter().filter(|&&b| b).count() % 2 == 0 { 1.0 } else { -1.0 };
                let f = |u: f64| residual_psi(g, &res.beta, &res.k_normal, u, t).unwrap_or(f64::NAN) * LocalTail::normal_product(a, pattern, n - 1, u);
                let hi = a.c + 16.0 / (a.s * pattern.len() as f64).sqrt() + 2.0;
                let tmin = t.iter().cloned().fold(f64::INFINITY, f64::min);
                let mut lo = 0.0;
                let mut step = tmin.sqrt();
                let mut integral = 0.0;
                while lo < hi {
                    let up = (lo + step).min(hi);
                    integral += adaptive(f, lo, up, Tolerance::new(1e-300, 1e-12)).value;
                    lo = up;
                    step *= 2.0;
                }
                v *= sign * integral;
            }
            psi += v;
        }
        Ok(self.coupling * rational * psi)
    }

    pub fn eval(&self, g: &StableGraph, t: &[f64], field: &Field) -> Result<f64> {
        if field.dim() != self.n {
            return Err(Error::InvalidParameter("field dimension does not match".into()));
        }
        let mut s = 0.0;
        for term in &self.terms {
            s += self.term_value(g, term, t, field)?;
        }
        Ok(s)
    }

    /// Versioned CSV rows: J, K, K′, β, numerator, denominator, degrees.
    pub fn csv(&self, graph: &str) -> String {
        let mut out = String::from("graph,J,K,K_normal,beta,numerator,denominator,twice_deg_num,twice_deg_den\n");
        let fmt_list = |v: &[String]| v.join(" ");
        for term in &self.terms {
            let j: Vec<String> = term.j.iter().map(|x| x.to_string()).collect();
            let k: Vec<String> = term.k.iter().map(|x| x.to_string()).collect();
            let (kz, beta) = match &term.residual {
                Some(r) => (
                    r.k_normal.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                    r.beta.iter().map(|&b| if b { "-1".to_string() } else { "1".to_string() }).collect::<Vec<_>>(),
                ),
                None => (vec![], vec![]),
            };
            let den = format!("t^({}) * prod(t)^({}/2) * P^({}/2) with P = {:?}", fmt_list(&j.iter().map(|x| format!("-{x}")).collect::<Vec<_>>()), self.n, term.k_abs() + 1, term.iak.p_gamma);
            out.push_str(&format!(
                "{graph},{},{},{},{},\"{:?}\",\"{}\",{},{}\n",
                fmt_list(&j),
                fmt_list(&k),
                fmt_list(&kz),
                fmt_list(&beta),
                term.iak.numer,
                den,
                term.iak.twice_numerator_degree().map(|d| d.to_string()).unwrap_or_default(),
                term.twice_denominator_degree(self.n).map(|d| d.to_string()).unwrap_or_default(),
            ));
        }
        out
    }

    /// Checks every term against the degree formulas for numerator and
    /// denominator; returns the number of terms checked.
    pub fn check_degrees(&self) -> Result<usize> {
        let tang = if self.geometry == Geometry::HalfSpace { self.n - 1 } else { self.n };
        for term in &self.terms {
            if tang > 0 {
                let want = super::form::twice_r_gamma(tang, self.num_edges, self.num_vertices, term.k_abs());
                if term.iak.twice_numerator_degree() != Some(want) {
                    return Err(Error::InvalidParameter(format!("numerator degree mismatch for K={:?}", term.k)));
                }
            }
            let want_q = twice_q_degree(tang, self.num_edges, self.num_vertices, term.j.iter().map(|&x| x as i64).sum(), term.k_abs()) + ((self.n - tang) * self.num_edges) as i64;
            if term.twice_denominator_degree(self.n) != Some(want_q) {
                return Err(Error::InvalidParameter(format!("denominator degree mismatch for J={:?} K={:?}", term.j, term.k)));
            }
        }
        Ok(self.terms.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::named;
    use crate::weights::{f_gamma_truncated, taylor_contributions};

    #[test]
    fn plane_terms_match_engine() {
        for name in ["bubble", "theta-tails"] {
            let g = named(name).unwrap();
            for n in 1..=2 {
                let spec = LocalFunctionalSpec::monomial(&g, n, 1.0);
                let f = Field::library("quartic", n).unwrap();
                let t: Vec<f64> = (0..g.num_edges()).map(|e| 0.03 + 0.02 * e as f64).collect();
                for np in [0, 2, 4] {
                    let sw = f_gamma_taylor(&g, &spec, np, Geometry::Plane).unwrap();
                    let sym = sw.eval(&g, &t, &f).unwrap();
                    let w = f_gamma_truncated(&g, &t, &spec, &f, Geometry::Plane, &[(0..g.num_edges()).collect()], &[np]).unwrap();
                    assert!((sym - w.truncated).abs() < 1e-10 * sym.abs(), "{name} n={n} N'={np}: {sym} vs {}", w.truncated);
                    assert!(sw.check_degrees().unwrap() > 0);
                }
            }
        }
    }

    #[test]
    fn edge_derivatives_carry_t_powers() {
        let g = named("bubble").unwrap();
        let (h0, h1) = g.edges()[1];
        let spec = LocalFunctionalSpec::monomial(&g, 1, 1.0).with_derivative(&g, h0, &[1]).with_derivative(&g, h1, &[1]);
        let sw = f_gamma_taylor(&g, &spec, 4, Geometry::Plane).unwrap();
        assert!(sw.terms.iter().any(|t| t.j[1] == -2));
        assert!(sw.terms.iter().all(|t| t.j[0] == 0 && t.k_abs() % 2 == 0));
        sw.check_degrees().unwrap();
        let f = Field::library("gauss", 1).unwrap();
        let t = [0.02, 0.05];
        let arr = taylor_contributions(&g, &t, &spec, &f, Geometry::Plane, &[vec![0, 1]], &[4]).unwrap();
        let sym = sw.eval(&g, &t, &f).unwrap();
        assert!((sym - arr.total()).abs() < 1e-10 * sym.abs(), "{sym} vs {}", arr.total());
    }

    #[test]
    fn half_space_terms_match_engine() {
        let g = named("bubble").unwrap();
        for n in 1..=2 {
            let spec = LocalFunctionalSpec::monomial(&g, n, 1.0);
            let f = Field::library("gauss", n).unwrap();
            let t = [0.02, 0.03];
            for np in [0, 2] {
                let sw = f_gamma_taylor(&g, &spec, np, Geometry::HalfSpace).unwrap();
                assert_eq!(sw.terms.len() % 4, 0);
                let sym = sw.eval(&g, &t, &f).unwrap();
                let arr = taylor_contributions(&g, &t, &spec, &f, Geometry::HalfSpace, &[vec![0, 1]], &[np]).unwrap();
                assert!((sym - arr.total()).abs() < 1e-8 * sym.abs(), "n={n} N'={np}: {sym} vs {}", arr.total());
                sw.check_degrees().unwrap();
            }
        }
    }

    #[test]
    fn beyond_cap_is_rejected() {
        let g = named("bubble").unwrap();
        let spec = LocalFunctionalSpec::monomial(&g, 1, 1.0);
        assert!(matches!(f_gamma_taylor(&g, &spec, SYMBOLIC_CAP + 1, Geometry::Plane), Err(Error::SizeLimit(_))));
    }
}
