//! Flat heat kernels on `R^n` and on the half space `x_n ≥ 0` (Dirichlet,
//! method of images), kernel derivative polynomials and the regularized
//! propagator `P_ε^L = ∫_ε^L K_t dt`.
//!
//! Sign convention: `∂_t K = ΔK`, i.e. `∂_t K + D K = 0` with `D = -Δ`.

use crate::poly::Poly;
use crate::quad::{adaptive, Tolerance};
use crate::scalar::{q, qi, Q};
use crate::{Error, Result};
use num_traits::One;
use libm::erfc;
use std::f64::consts::PI;

pub const MAX_DERIVATIVE_ORDER: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Geometry {
    Plane,
    HalfSpace,
}

impl std::str::FromStr for Geometry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plane" => Ok(Geometry::Plane),
            "halfspace" => Ok(Geometry::HalfSpace),
            _ => Err(Error::InvalidParameter(format!("geometry must be plane or halfspace, got {s}"))),
        }
    }
}

impl std::fmt::Display for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Geometry::Plane => "plane",
            Geometry::HalfSpace => "halfspace",
        })
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("time must be positive, got {t}")));
    }
    Ok(())
}

fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `(4πt)^{-n/2} exp(-|x-y|^2/4t)`.
pub fn kernel_rn(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    check_t(t)?;
    if x.len() != y.len() {
        return Err(Error::InvalidParameter("points of different dimension".into()));
    }
    let n = x.len() as f64;
    Ok((4.0 * PI * t).powf(-n / 2.0) * (-dist2(x, y) / (4.0 * t)).exp())
}

/// Reflection through the boundary hyperplane `x_n = 0`.
pub fn reflect(y: &[f64]) -> Vec<f64> {
    let mut r = y.to_vec();
    if let Some(last) = r.last_mut() {
        *last = -*last;
    }
    r
}

/// Dirichlet kernel `K_t(x,y) - K_t(x,y*)` on the half space.
pub fn kernel_hn(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    check_t(t)?;
    if x.last().copied().unwrap_or(0.0) < 0.0 || y.last().copied().unwrap_or(0.0) < 0.0 {
        return Err(Error::InvalidParameter("normal coordinate must be non-negative".into()));
    }
    kernel_hn_extended(t, x, y)
}

/// The image difference without the domain check: odd under reflecting `y`.
pub fn kernel_hn_extended(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let pref = (4.0 * PI * t).powf(-n / 2.0);
    // Both exponents share the tangential part; the normal parts differ by x_n y_n / t.
    let tang: f64 = x[..x.len() - 1].iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let (xn, yn) = (x[x.len() - 1], y[y.len() - 1]);
    let direct = (-(tang + (xn - yn) * (xn - yn)) / (4.0 * t)).exp();
    // exp(-a) - exp(-a - xn yn / t) = exp(-a) * (-expm1(-xn yn / t)).
    Ok(pref * direct * -(-(xn * yn) / t).exp_m1())
}

pub fn kernel(geometry: Geometry, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    match geometry {
        Geometry::Plane => kernel_rn(t, x, y),
        Geometry::HalfSpace => kernel_hn(t, x, y),
    }
}

/// `∂^k K_t / ∂x_i^k = P_{i,k} K_t` with `P_{i,k}` a polynomial in
/// `d = x_i - y_i` (variable 0) and `s = 1/t` (variable 1).
#[derive(Clone, Debug, PartialEq)]
pub struct KernelDerivative {
    pub variable: usize,
    pub order: u32,
    pub poly: Poly<Q>,
}

impl KernelDerivative {
    pub fn eval(&self, d: f64, t: f64) -> f64 {
        let p = self.poly.map_coeffs(crate::scalar::ratio_to_f64);
        p.eval(&[d, 1.0 / t])
    }

    /// Degree in `1/t`.
    pub fn degree_in_inverse_t(&self) -> u32 {
        self.poly.degree_in(1).unwrap_or(0)
    }
}

fn check_order(k: u32) -> Result<()> {
    if k > MAX_DERIVATIVE_ORDER {
        return Err(Error::SizeLimit(format!("derivative order {k} exceeds {MAX_DERIVATIVE_ORDER}")));
    }
    Ok(())
}

/// Product rule on `P·K`: `P_{k+1} = ∂_d P_k - (d s / 2) P_k`.
pub fn derivative_poly(i: usize, k: u32) -> Result<KernelDerivative> {
    check_order(k)?;
    let v = Poly::monomial(vec![1, 1], q(-1, 2));
    let mut p = Poly::one(2);
    for _ in 0..k {
        p = p.deriv(0).add(&v.mul(&p));
    }
    Ok(KernelDerivative { variable: i, order: k, poly: p })
}

/// The same polynomial from the composition sum: `P_k = Σ_s F_s` with
/// `F_s` the alternating word `∂^{s_1} v^{s_2} ∂^{s_3} …` (or starting with
/// `v`) applied to 1, evaluated through falling factorials. Here
/// `v = -(x_i - y_i)/2t`, so this equals `(-1)^k` times the expansion in
/// `+(x_i - y_i)/2t`.
pub fn derivative_poly_compositions(i: usize, k: u32) -> Result<KernelDerivative> {
    check_order(k)?;
    let mut total = Poly::zero(2);
    for comp in compositions(k) {
        total = total.add(&f_sequence(&comp));
    }
    if k == 0 {
        total = Poly::one(2);
    }
    Ok(KernelDerivative { variable: i, order: k, poly: total })
}

fn compositions(k: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    fn go(rem: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rem == 0 {
            if !cur.is_empty() {
                out.push(cur.clone());
            }
            return;
        }
        for s in 1..=rem {
            cur.push(s);
            go(rem - s, cur, out);
            cur.pop();
        }
    }
    go(k, &mut Vec::new(), &mut out);
    out
}

/// `F_{s_1..s_{k'}}` as a polynomial in `(d, s)`. The innermost factor is
/// always a power of `v`; derivatives lower the `v` power by falling factorials
/// and each contributes `∂v = -s/2`.
fn f_sequence(comp: &[u32]) -> Poly<Q> {
    // Words alternate; the last run multiplies by v.
    let mut power: u32 = 0;
    let mut coeff = Q::one();
    let mut derivs: u32 = 0;
    for (pos, &s) in comp.iter().enumerate().rev() {
        let is_mult = (comp.len() - 1 - pos) % 2 == 0;
        if is_mult {
            power += s;
        } else {
            if s > power {
                return Poly::zero(2);
            }
            for j in 0..s {
                coeff *= qi((power - j) as i64);
            }
            power -= s;
            derivs += s;
        }
    }
    // v^power (∂v)^derivs with v = -d s/2 and ∂v = -s/2.
    let sign = if (power + derivs) % 2 == 0 { Q::one() } else { -Q::one() };
    let two = num_bigint::BigInt::from(2u32).pow(power + derivs);
    let c = sign * coeff / Q::from_integer(two);
    Poly::monomial(vec![power, power + derivs], c)
}

/// `∂^I K_t(x,y)` for a multi-index on `x`.
pub fn kernel_derivative_rn(t: f64, x: &[f64], y: &[f64], multi: &[u32]) -> Result<f64> {
    let mut v = kernel_rn(t, x, y)?;
    for (i, &k) in multi.iter().enumerate() {
        if k > 0 {
            v *= derivative_poly(i, k)?.eval(x[i] - y[i], t);
        }
    }
    Ok(v)
}

/// `∫_ε^L K_t(x,y) dt` by adaptive quadrature, relative tolerance 1e-10.
pub fn propagator(eps: f64, l: f64, x: &[f64], y: &[f64], geometry: Geometry) -> Result<f64> {
    if !(eps > 0.0) || !(eps < l) {
        return Err(Error::InvalidParameter(format!("need 0 < ε < L, got ε={eps}, L={l}")));
    }
    kernel(geometry, l, x, y)?;
    // Integrate in log t: the integrand spans many scales near ε.
    let f = |s: f64| {
        let t = s.exp();
        t * kernel(geometry, t, x, y).unwrap_or(0.0)
    };
    Ok(adaptive(f, eps.ln(), l.ln(), Tolerance::new(0.0, 1e-11)).value)
}

/// Closed form on the line: `F(t) = sqrt(t/π) e^{-d²/4t} - (|d|/2) erfc(|d|/2√t)`
/// is an antiderivative of `K_t` in `t`.
pub fn propagator_line_closed(eps: f64, l: f64, x: f64, y: f64) -> f64 {
    let a = (x - y).abs();
    let anti = |t: f64| (t / PI).sqrt() * (-a * a / (4.0 * t)).exp() - a / 2.0 * erfc(a / (2.0 * t.sqrt()));
    anti(l) - anti(eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coincidence_normalization() {
        let t = 1.0 / (4.0 * PI);
        assert!((kernel_rn(t, &[0.3], &[0.3]).unwrap() - 1.0).abs() < 1e-15);
        assert!(kernel_rn(0.0, &[0.0], &[0.0]).is_err());
    }

    #[test]
    fn dirichlet_zero_on_boundary() {
        assert_eq!(kernel_hn(0.3, &[0.2, 0.7], &[1.0, 0.0]).unwrap(), 0.0);
        assert!(kernel_hn(0.3, &[0.2, -0.7], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn first_two_derivatives() {
        let p1 = derivative_poly(0, 1).unwrap();
        assert_eq!(p1.poly, Poly::monomial(vec![1, 1], q(-1, 2)));
        let p2 = derivative_poly(0, 2).unwrap();
        let expect = Poly::monomial(vec![2, 2], q(1, 4)).add(&Poly::monomial(vec![0, 1], q(-1, 2)));
        assert_eq!(p2.poly, expect);
    }

    #[test]
    fn compositions_match_product_rule() {
        for k in 0..=10 {
            assert_eq!(derivative_poly(0, k).unwrap().poly, derivative_poly_compositions(0, k).unwrap().poly, "k={k}");
            let p = derivative_poly(0, k).unwrap();
            assert_eq!(p.degree_in_inverse_t(), k);
            let lead = p.poly.coeff(&[k, k]);
            let sign = if k % 2 == 0 { 1 } else { -1 };
            assert_eq!(lead, Q::new(sign.into(), num_bigint::BigInt::from(2).pow(k)));
        }
        assert!(derivative_poly(0, 13).is_err());
    }

    #[test]
    fn propagator_line_oracle() {
        let (eps, l, x, y) = (0.01, 1.5, 0.2, -0.35);
        let num = propagator(eps, l, &[x], &[y], Geometry::Plane).unwrap();
        let exact = propagator_line_closed(eps, l, x, y);
        assert!((num - exact).abs() < 1e-10 * exact);
        let back = propagator(eps, l, &[y], &[x], Geometry::Plane).unwrap();
        assert_eq!(num, back);
    }
}
