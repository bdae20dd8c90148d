//! Gaussian moments over polytopes by recursive reduction in the last variable.
//!
//! The integrand is `p(x) exp(E(x))` with `E` of degree at most two, on a
//! nested domain where the bounds of `x_i` are affine in `x_0..x_{i-1}`.
//! Integrating the last variable with the generalized 1D recursion leaves
//! boundary atoms, which are again Gaussian-polynomial integrands (the form is
//! updated by substituting the affine bound), and one `I_0` term. The `I_0`
//! term is an error-function factor; it is factored out exactly when it does
//! not depend on the outer variables and integrated numerically otherwise.

use super::{i0_general_numeric, recursion_coefficients, Endpoint};
use crate::linalg::Matrix;
use crate::poly::Poly;
use crate::quad::{nested, Tolerance};
use crate::scalar::Q;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Bound {
    Infinite,
    /// Affine in the outer variables; `nvars` equals the variable's index.
    Affine(Poly<f64>),
}

impl Bound {
    pub fn constant(i: usize, c: f64) -> Self {
        Bound::Affine(Poly::constant(i, c))
    }

    fn eval(&self, x: &[f64], lower: bool) -> f64 {
        match self {
            Bound::Infinite if lower => f64::NEG_INFINITY,
            Bound::Infinite => f64::INFINITY,
            Bound::Affine(p) => p.eval(&x[..p.nvars()]),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NestedDomain {
    pub lower: Vec<Bound>,
    pub upper: Vec<Bound>,
}

impl NestedDomain {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn bounds_at(&self, i: usize, x: &[f64]) -> (f64, f64) {
        (self.lower[i].eval(x, true), self.upper[i].eval(x, false))
    }

    fn drop_last(&self) -> Self {
        let d = self.dim();
        NestedDomain { lower: self.lower[..d - 1].to_vec(), upper: self.upper[..d - 1].to_vec() }
    }

    /// Standard simplex `{u_i >= 0, sum u <= 1}` in nested form.
    pub fn standard_simplex(d: usize) -> Self {
        let lower = (0..d).map(|i| Bound::constant(i, 0.0)).collect();
        let upper = (0..d)
            .map(|i| {
                let coeffs = vec![-1.0; i];
                Bound::Affine(Poly::affine(i, 1.0, &coeffs))
            })
            .collect();
        NestedDomain { lower, upper }
    }

    pub fn boxed(lo: &[Endpoint], hi: &[Endpoint]) -> Self {
        let mk = |i: usize, e: Endpoint| match e {
            Endpoint::Finite(v) => Bound::constant(i, v),
            _ => Bound::Infinite,
        };
        NestedDomain {
            lower: lo.iter().enumerate().map(|(i, &e)| mk(i, e)).collect(),
            upper: hi.iter().enumerate().map(|(i, &e)| mk(i, e)).collect(),
        }
    }
}

const ALPHA_EPS: f64 = 1e-13;

fn numeric_tol() -> Tolerance {
    Tolerance::new(1e-300, 1e-12)
}

/// Splits `p` by powers of its last variable into polynomials in the others.
fn split_last(p: &Poly<f64>) -> Vec<Poly<f64>> {
    let d = p.nvars();
    let mut out: Vec<Poly<f64>> = Vec::new();
    for (m, c) in p.terms() {
        let k = m[d - 1] as usize;
        while out.len() <= k {
            out.push(Poly::zero(d - 1));
        }
        out[k].add_term(m[..d - 1].to_vec(), *c);
    }
    out
}

fn is_constant(p: &Poly<f64>) -> bool {
    p.terms().all(|(m, _)| m.iter().all(|&e| e == 0))
}

fn constant_of(p: &Poly<f64>) -> f64 {
    p.coeff(&vec![0; p.nvars()])
}

fn pointwise(poly: &Poly<f64>, expo: &Poly<f64>, x: &[f64]) -> f64 {
    let v = poly.eval(x);
    if v == 0.0 {
        0.0
    } else {
        v * expo.eval(x).exp()
    }
}

/// `∫_domain poly(x) exp(expo(x)) dx`, with `expo` of total degree at most two.
pub fn integrate_nested(domain: &NestedDomain, poly: &Poly<f64>, expo: &Poly<f64>) -> Result<f64> {
    let d = domain.dim();
    assert_eq!(poly.nvars(), d);
    assert_eq!(expo.nvars(), d);
    if poly.is_zero() {
        return Ok(0.0);
    }
    if d == 0 {
        return Ok(constant_of(poly) * constant_of(expo).exp());
    }
    let e = split_last(expo);
    if e.len() > 3 {
        return Err(Error::InvalidParameter("exponent must be at most quadratic".into()));
    }
    let get = |k: usize| e.get(k).cloned().unwrap_or_else(|| Poly::zero(d - 1));
    let (r, beta, quad) = (get(0), get(1), get(2));
    if !is_constant(&quad) {
        return Err(Error::InvalidParameter("exponent must be at most quadratic".into()));
    }
    let alpha = -2.0 * constant_of(&quad);
    let parts = split_last(poly);
    let outer = domain.drop_last();
    let lo = &domain.lower[d - 1];
    let hi = &domain.upper[d - 1];

    if alpha > ALPHA_EPS {
        let nv = d - 1;
        let mut i0_coef = Poly::zero(nv);
        let mut j_coef: Vec<Poly<f64>> = Vec::new();
        for (k, pk) in parts.iter().enumerate() {
            if pk.is_zero() {
                continue;
            }
            let (c0, js) = recursion_coefficients(k as u32, &alpha, &beta);
            i0_coef = i0_coef.add(&pk.mul(&c0));
            for (l, jl) in js.into_iter().enumerate() {
                while j_coef.len() <= l {
                    j_coef.push(Poly::zero(nv));
                }
                j_coef[l] = j_coef[l].add(&pk.mul(&jl));
            }
        }
        let mut total = 0.0;
        // Boundary atoms: substitute the affine bound into the last variable.
        for (bound, sign) in [(hi, 1.0), (lo, -1.0)] {
            let Bound::Affine(b) = bound else { continue };
            let mut atom_poly = Poly::zero(nv);
            let mut bl = Poly::one(nv);
            for jl in &j_coef {
                atom_poly = atom_poly.add(&jl.mul(&bl));
                bl = bl.mul(b);
            }
            if atom_poly.is_zero() {
                continue;
            }
            let b_full = b.remap(nv, &(0..b.nvars()).collect::<Vec<_>>());
            let mut subs: Vec<Poly<f64>> = (0..nv).map(|i| Poly::var(nv, i)).collect();
            subs.push(b_full);
            let new_expo = expo.compose(&subs);
            total += sign * integrate_nested(&outer, &atom_poly, &new_expo)?;
        }
        if !i0_coef.is_zero() {
            let lo_const = match lo {
                Bound::Infinite => true,
                Bound::Affine(p) => is_constant(p),
            };
            let hi_const = match hi {
                Bound::Infinite => true,
                Bound::Affine(p) => is_constant(p),
            };
            if lo_const && hi_const && is_constant(&beta) {
                let ep = |b: &Bound, lower: bool| match b {
                    Bound::Infinite if lower => Endpoint::NegInf,
                    Bound::Infinite => Endpoint::PosInf,
                    Bound::Affine(p) => Endpoint::Finite(constant_of(p)),
                };
                let i0 = i0_general_numeric(alpha, constant_of(&beta), ep(lo, true), ep(hi, false));
                total += i0 * integrate_nested(&outer, &i0_coef, &r)?;
            } else {
                let f = |x: &[f64]| -> f64 {
                    let c = i0_coef.eval(x);
                    if c == 0.0 {
                        return 0.0;
                    }
                    let (a, b) = (lo.eval(x, true), hi.eval(x, false));
                    if !(b > a) {
                        return 0.0;
                    }
                    c * r.eval(x).exp() * i0_general_numeric(alpha, beta.eval(x), Endpoint::from_f64(a), Endpoint::from_f64(b))
                };
                total += nested(nv, &|i, x| outer.bounds_at(i, x), &f, numeric_tol());
            }
        }
        return Ok(total);
    }

    if alpha.abs() <= ALPHA_EPS && beta.is_zero() {
        // Flat in the last variable: exact polynomial antiderivative.
        let (Bound::Affine(a), Bound::Affine(b)) = (lo, hi) else {
            return Err(Error::Divergent("flat direction with an infinite bound".into()));
        };
        let nv = d - 1;
        let mut acc = Poly::zero(nv);
        for (k, pk) in parts.iter().enumerate() {
            if pk.is_zero() {
                continue;
            }
            let prim = b.pow(k as u32 + 1).sub(&a.pow(k as u32 + 1));
            acc = acc.add(&pk.mul(&prim.remap(nv, &(0..prim.nvars()).collect::<Vec<_>>())).scale(&(1.0 / (k as f64 + 1.0))));
        }
        return integrate_nested(&outer, &acc, &r);
    }

    if matches!(lo, Bound::Infinite) || matches!(hi, Bound::Infinite) {
        return Err(Error::Divergent("non-positive curvature with an infinite bound".into()));
    }
    Ok(nested(d, &|i, x| domain.bounds_at(i, x), &|x| pointwise(poly, expo, x), numeric_tol()))
}

/// Direct nested quadrature of the same integral (oracle).
pub fn integrate_nested_quadrature(domain: &NestedDomain, poly: &Poly<f64>, expo: &Poly<f64>, tol: Tolerance) -> f64 {
    nested(domain.dim(), &|i, x| domain.bounds_at(i, x), &|x| pointwise(poly, expo, x), tol)
}

fn diag_expo(alphas: &[f64]) -> Poly<f64> {
    let d = alphas.len();
    let mut e = Poly::zero(d);
    for (i, &a) in alphas.iter().enumerate() {
        let mut m = vec![0; d];
        m[i] = 2;
        e.add_term(m, -a / 2.0);
    }
    e
}

fn monomial_poly(k: &[u32]) -> Poly<f64> {
    Poly::monomial(k.to_vec(), 1.0)
}

/// `∫_box x^k exp(-sum alpha_i x_i^2 / 2) dx` through the recursive engine.
pub fn wick_box(alphas: &[f64], lo: &[Endpoint], hi: &[Endpoint], k: &[u32]) -> Result<f64> {
    let dom = NestedDomain::boxed(lo, hi);
    integrate_nested(&dom, &monomial_poly(k), &diag_expo(alphas))
}

/// Halfspace `normal · x <= offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

const GEOM_EPS: f64 = 1e-10;

fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(p, c);
        b.swap(p, c);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for j in c..n {
                    a[r][j] -= f * a[c][j];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn rank(rows: &[Vec<f64>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut a = rows.to_vec();
    let (n, m) = (a.len(), a[0].len());
    let mut r = 0;
    for c in 0..m {
        let Some(p) = (r..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())) else { break };
        if a[p][c].abs() < 1e-9 {
            continue;
        }
        a.swap(p, r);
        for i in 0..n {
            if i != r {
                let f = a[i][c] / a[r][c];
                for j in c..m {
                    a[i][j] -= f * a[r][j];
                }
            }
        }
        r += 1;
        if r == n {
            break;
        }
    }
    r
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Vertices of a bounded full-dimensional polytope (dimension ≤ 4).
pub fn polytope_vertices(h: &[Halfspace], d: usize) -> Result<Vec<Vec<f64>>> {
    let normals: Vec<Vec<f64>> = h.iter().map(|s| s.normal.clone()).collect();
    if rank(&normals) < d {
        return Err(Error::Divergent("polytope has a lineality direction".into()));
    }
    // A pointed recession cone is nonzero iff it has an extreme ray, which is
    // cut out by d-1 tight constraints.
    for sub in subsets(h.len(), d.saturating_sub(1)) {
        let rows: Vec<Vec<f64>> = sub.iter().map(|&i| normals[i].clone()).collect();
        if rank(&rows) != d - 1 {
            continue;
        }
        for axis in 0..d {
            let mut a = rows.clone();
            let mut e = vec![0.0; d];
            e[axis] = 1.0;
            a.push(e);
            let mut b = vec![0.0; d - 1];
            b.push(1.0);
            if let Some(ray) = solve(a, b) {
                for sign in [1.0, -1.0] {
                    if normals.iter().all(|n| sign * n.iter().zip(&ray).map(|(x, y)| x * y).sum::<f64>() <= GEOM_EPS) {
                        return Err(Error::Divergent("unbounded polytope".into()));
                    }
                }
                break;
            }
        }
    }
    let mut verts: Vec<Vec<f64>> = Vec::new();
    for sub in subsets(h.len(), d) {
        let a: Vec<Vec<f64>> = sub.iter().map(|&i| normals[i].clone()).collect();
        let b: Vec<f64> = sub.iter().map(|&i| h[i].offset).collect();
        let Some(x) = solve(a, b) else { continue };
        let feasible = h.iter().all(|s| s.normal.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() <= s.offset + GEOM_EPS);
        if feasible && !verts.iter().any(|v| v.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-9)) {
            verts.push(x);
        }
    }
    if verts.len() < d + 1 {
        return Err(Error::InvalidParameter("polytope is not full-dimensional".into()));
    }
    Ok(verts)
}

fn affine_dim(verts: &[Vec<f64>], idx: &[usize]) -> usize {
    if idx.is_empty() {
        return 0;
    }
    let v0 = &verts[idx[0]];
    let rows: Vec<Vec<f64>> = idx[1..].iter().map(|&i| verts[i].iter().zip(v0).map(|(a, b)| a - b).collect()).collect();
    rank(&rows)
}

/// Pulling triangulation: cone from the lowest vertex over the facets not
/// containing it, recursively.
pub fn triangulate(verts: &[Vec<f64>], h: &[Halfspace], d: usize) -> Vec<Vec<usize>> {
    fn tight(verts: &[Vec<f64>], s: &Halfspace, face: &[usize]) -> Vec<usize> {
        face.iter().copied().filter(|&i| (s.normal.iter().zip(&verts[i]).map(|(a, b)| a * b).sum::<f64>() - s.offset).abs() < 1e-8).collect()
    }
    fn go(verts: &[Vec<f64>], h: &[Halfspace], face: &[usize], dim: usize) -> Vec<Vec<usize>> {
        if dim == 0 {
            return vec![vec![face[0]]];
        }
        let v0 = face[0];
        let mut seen: Vec<Vec<usize>> = Vec::new();
        let mut out = Vec::new();
        for s in h {
            let sub = tight(verts, s, face);
            if sub.contains(&v0) || sub.len() < dim || affine_dim(verts, &sub) != dim - 1 || seen.contains(&sub) {
                continue;
            }
            seen.push(sub.clone());
            for simp in go(verts, h, &sub, dim - 1) {
                let mut t = vec![v0];
                t.extend(simp);
                out.push(t);
            }
        }
        out
    }
    let all: Vec<usize> = (0..verts.len()).collect();
    go(verts, h, &all, d)
}

/// Integral of `x^k exp(-sum alpha_i x_i^2/2)` over a simplex given by vertices.
pub fn integrate_simplex(verts: &[Vec<f64>], poly: &Poly<f64>, expo: &Poly<f64>) -> Result<f64> {
    let d = verts.len() - 1;
    let v0 = &verts[0];
    let edges: Vec<Vec<f64>> = verts[1..].iter().map(|v| v.iter().zip(v0).map(|(a, b)| a - b).collect()).collect();
    // x_i = v0_i + sum_j u_j (v_{j+1} - v0)_i
    let subs: Vec<Poly<f64>> = (0..d).map(|i| Poly::affine(d, v0[i], &edges.iter().map(|e| e[i]).collect::<Vec<_>>())).collect();
    let jac = crate::quad::determinant_f64(&edges).abs();
    let p = poly.compose(&subs);
    let e = expo.compose(&subs);
    Ok(jac * integrate_nested(&NestedDomain::standard_simplex(d), &p, &e)?)
}

fn is_box(h: &[Halfspace]) -> bool {
    h.iter().all(|s| s.normal.iter().filter(|&&c| c != 0.0).count() == 1)
}

/// `∫_P x^k exp(-sum alpha_i x_i^2/2) dx` for a polytope `P` given by halfspaces.
/// Axis-aligned boxes (possibly unbounded) go straight to the nested engine;
/// other polytopes must be bounded and are triangulated.
pub fn wick_polytope(alphas: &[f64], h: &[Halfspace], k: &[u32]) -> Result<f64> {
    let d = alphas.len();
    if alphas.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::NonPositiveAlpha(alphas.iter().cloned().fold(f64::INFINITY, f64::min)));
    }
    if is_box(h) {
        let mut lo = vec![f64::NEG_INFINITY; d];
        let mut hi = vec![f64::INFINITY; d];
        for s in h {
            let (i, c) = s.normal.iter().enumerate().find(|(_, c)| **c != 0.0).map(|(i, c)| (i, *c)).unwrap();
            let v = s.offset / c;
            if c > 0.0 {
                hi[i] = hi[i].min(v);
            } else {
                lo[i] = lo[i].max(v);
            }
        }
        if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
            return Ok(0.0);
        }
        let lo: Vec<Endpoint> = lo.into_iter().map(Endpoint::from_f64).collect();
        let hi: Vec<Endpoint> = hi.into_iter().map(Endpoint::from_f64).collect();
        return wick_box(alphas, &lo, &hi, k);
    }
    let verts = polytope_vertices(h, d)?;
    let simplices = triangulate(&verts, h, d);
    let poly = monomial_poly(k);
    let expo = diag_expo(alphas);
    let mut total = 0.0;
    for s in simplices {
        let vs: Vec<Vec<f64>> = s.iter().map(|&i| verts[i].clone()).collect();
        total += integrate_simplex(&vs, &poly, &expo)?;
    }
    Ok(total)
}

/// Exact check of `det(A + alpha_n d d^T) = det(A) (1 + alpha_n d^T A^{-1} d)`
/// for diagonal `A`; returns both sides.
pub fn induced_form_determinants(alphas: &[Q], alpha_n: &Q, d: &[Q]) -> (Q, Q) {
    let n = alphas.len();
    let mut m = Matrix::<Q>::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut v = alpha_n.clone() * d[i].clone() * d[j].clone();
            if i == j {
                v += alphas[i].clone();
            }
            m.set(i, j, v);
        }
    }
    let lhs = m.det();
    let mut det_a: Q = num_traits::One::one();
    let mut quad: Q = num_traits::One::one();
    for i in 0..n {
        det_a *= alphas[i].clone();
        quad += alpha_n.clone() * d[i].clone() * d[i].clone() / alphas[i].clone();
    }
    (lhs, det_a * quad)
}

/// The compact polytope `P_u` in nested form: `-u <= z_1 <= (m-1)u`,
/// `z_{i-1} - u <= z_i <= (m-i)u`.
pub fn pu_domain(m: usize, u: f64) -> NestedDomain {
    let dim = m - 1;
    let mut lower = Vec::with_capacity(dim);
    let mut upper = Vec::with_capacity(dim);
    for i in 0..dim {
        if i == 0 {
            lower.push(Bound::constant(0, -u));
        } else {
            let mut c = vec![0.0; i];
            c[i - 1] = 1.0;
            lower.push(Bound::Affine(Poly::affine(i, -u, &c)));
        }
        upper.push(Bound::constant(i, (m - 1 - i) as f64 * u));
    }
    NestedDomain { lower, upper }
}

/// Exponent `-sum a_ij z_i z_j - sum b_i u z_i` as a polynomial in `z`.
pub fn pu_exponent(a: &[Vec<f64>], b: &[f64], u: f64) -> Poly<f64> {
    let dim = b.len();
    let mut e = Poly::zero(dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut m = vec![0; dim];
            m[i] += 1;
            m[j] += 1;
            e.add_term(m, -a[i][j]);
        }
        let mut m = vec![0; dim];
        m[i] = 1;
        e.add_term(m, -b[i] * u);
    }
    e
}

/// `∫_{P_u} exp(-Q(z,u)) z^K dz` with `m - 1 = K.len()` variables.
pub fn wick_simplex_pu(a: &[Vec<f64>], b: &[f64], u: f64, k: &[u32]) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::InvalidParameter(format!("u must be positive, got {u}")));
    }
    let m = k.len() + 1;
    integrate_nested(&pu_domain(m, u), &monomial_poly(k), &pu_exponent(a, b, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi};
    use crate::wick::wick_interval;

    fn hs(n: Vec<f64>, o: f64) -> Halfspace {
        Halfspace { normal: n, offset: o }
    }

    #[test]
    fn box_is_product_of_intervals() {
        let al = [1.0, 0.5, 3.0];
        let k = [2u32, 1, 0];
        let lo = [Endpoint::Finite(0.0), Endpoint::Finite(-1.0), Endpoint::NegInf];
        let hi = [Endpoint::Finite(1.0), Endpoint::Finite(2.0), Endpoint::PosInf];
        let v = wick_box(&al, &lo, &hi, &k).unwrap();
        let qa = [qi(1), q(1, 2), qi(3)];
        let mut prod = 1.0;
        for i in 0..3 {
            prod *= wick_interval(k[i], &qa[i], lo[i], hi[i]).unwrap().1;
        }
        assert!((v - prod).abs() <= 1e-13 * prod.abs());
    }

    #[test]
    fn triangle_first_moment() {
        let h = vec![hs(vec![-1.0, 0.0], 0.0), hs(vec![0.0, -1.0], 0.0), hs(vec![1.0, 1.0], 1.0)];
        let v = wick_polytope(&[1.0, 1.0], &h, &[1, 0]).unwrap();
        let o = integrate_nested_quadrature(
            &NestedDomain::standard_simplex(2),
            &Poly::var(2, 0),
            &diag_expo(&[1.0, 1.0]),
            Tolerance::new(1e-300, 1e-13),
        );
        assert!((v - o).abs() < 1e-8 * o.abs());
    }

    #[test]
    fn induced_form_nondegenerate() {
        let (l, r) = induced_form_determinants(&[qi(1), q(1, 2)], &qi(3), &[qi(2), q(-1, 3)]);
        assert_eq!(l, r);
        assert!(l > qi(0));
    }

    #[test]
    fn pu_flat_volume_and_one_dimensional_case() {
        let v = wick_simplex_pu(&[vec![0.0]], &[0.0], 0.7, &[0]).unwrap();
        assert!((v - 1.4).abs() < 1e-14);
        let v = wick_simplex_pu(&[vec![1.0]], &[0.0], 0.7, &[0]).unwrap();
        let w = wick_interval(0, &qi(2), Endpoint::Finite(-0.7), Endpoint::Finite(0.7)).unwrap().1;
        assert!((v - w).abs() < 1e-14);
    }

    #[test]
    fn unbounded_polytope_rejected() {
        let h = vec![hs(vec![-1.0, 0.0], 0.0), hs(vec![-1.0, -1.0], 0.0), hs(vec![1.0, -1.0], 1.0)];
        assert!(polytope_vertices(&h, 2).is_err());
    }
}
