//! One-dimensional Gaussian moments over intervals, homogeneous and
//! inhomogeneous, as exact decompositions into `I_0` and boundary atoms.

use super::{check_interval, i0_general_numeric, j_numeric, Endpoint};
use crate::poly::Poly;
use crate::scalar::{double_factorial, qi, ratio_to_f64, Scalar, Q};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Pow, Signed, Zero};
use std::f64::consts::PI;

/// `∫_a^b x^m exp(-alpha x^2/2 + beta x) dx = i0_coefficient * I_0(a,b)
///  + sum_l coeff_l * J_l(a,b)` with `J_l = [x^l exp(..)]_a^b`.
#[derive(Clone, Debug, PartialEq)]
pub struct WickDecomposition1D {
    pub m: u32,
    pub alpha: Q,
    pub beta: Q,
    pub i0_coefficient: Q,
    /// `(l, coefficient)` pairs, sorted by descending `l`, zero coefficients dropped.
    pub boundary_terms: Vec<(u32, Q)>,
}

impl WickDecomposition1D {
    pub fn value(&self, a: Endpoint, b: Endpoint) -> f64 {
        if let (Endpoint::Finite(x), Endpoint::Finite(y)) = (a, b) {
            if x < y {
                if let Some(v) = super::precise::value_finite(self, x, y) {
                    return v;
                }
            }
        }
        self.value_f64(a, b)
    }

    /// Same sum with f64 atoms; exact at infinite endpoints, where the atoms
    /// do not cancel against each other.
    pub fn value_f64(&self, a: Endpoint, b: Endpoint) -> f64 {
        let alpha = ratio_to_f64(&self.alpha);
        let beta = ratio_to_f64(&self.beta);
        let mut v = 0.0;
        if !self.i0_coefficient.is_zero() {
            v += ratio_to_f64(&self.i0_coefficient) * i0_general_numeric(alpha, beta, a, b);
        }
        for (l, c) in &self.boundary_terms {
            v += ratio_to_f64(c) * j_numeric(*l, alpha, beta, a, b);
        }
        v
    }

    /// Exact value on the half line (0, ∞) for `beta = 0`: `J_l(0,∞) = -[l = 0]`.
    pub fn half_line_value(&self) -> ExactValue {
        assert!(self.beta.is_zero(), "half-line closed form needs beta = 0");
        let rational = self.boundary_terms.iter().filter(|(l, _)| *l == 0).map(|(_, c)| -c.clone()).fold(Q::zero(), |a, b| a + b);
        ExactValue { rational, gauss: self.i0_coefficient.clone() / qi(2), alpha: self.alpha.clone() }
    }

    /// Exact value on the whole line for `beta = 0`: all boundary atoms vanish.
    pub fn full_line_value(&self) -> ExactValue {
        assert!(self.beta.is_zero(), "full-line closed form needs beta = 0");
        ExactValue { rational: Q::zero(), gauss: self.i0_coefficient.clone(), alpha: self.alpha.clone() }
    }
}

/// `rational + gauss * sqrt(2π/alpha)`, exact in both coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactValue {
    pub rational: Q,
    pub gauss: Q,
    pub alpha: Q,
}

impl ExactValue {
    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.rational) + ratio_to_f64(&self.gauss) * (2.0 * PI / ratio_to_f64(&self.alpha)).sqrt()
    }
}

fn alpha_pow(alpha: &Q, k: u32) -> Q {
    Pow::pow(alpha.clone(), k)
}

fn positive(alpha: &Q) -> Result<()> {
    if !alpha.is_positive() {
        return Err(Error::NonPositiveAlpha(ratio_to_f64(alpha)));
    }
    Ok(())
}

/// Closed form for `beta = 0`: `C_m / alpha^{m/2}` on `I_0` and
/// `-C~_{i,m} / alpha^{i+1}` on `J_{m-1-2i}`.
pub fn decompose_interval(m: u32, alpha: &Q) -> Result<WickDecomposition1D> {
    positive(alpha)?;
    let i0_coefficient = if m % 2 == 0 {
        Q::from_integer(double_factorial(m as i64 - 1)) / alpha_pow(alpha, m / 2)
    } else {
        Q::zero()
    };
    let mut boundary_terms = Vec::new();
    if m >= 1 {
        for i in 0..=((m - 1) / 2) {
            let ct = Q::new(double_factorial(m as i64 - 1), double_factorial(m as i64 - 1 - 2 * i as i64));
            boundary_terms.push((m - 1 - 2 * i, -ct / alpha_pow(alpha, i + 1)));
        }
    }
    Ok(WickDecomposition1D { m, alpha: alpha.clone(), beta: Q::zero(), i0_coefficient, boundary_terms })
}

/// Three-term recursion `I_m = -(1/α) J_{m-1} + (β/α) I_{m-1} + ((m-1)/α) I_{m-2}`
/// unrolled top-down. Coefficients live in a polynomial ring so that `beta`
/// may depend on outer variables; returns the `I_0` coefficient and the
/// `J_l` coefficients indexed by `l`.
pub fn recursion_coefficients<C: Scalar>(m: u32, alpha: &C, beta: &Poly<C>) -> (Poly<C>, Vec<Poly<C>>) {
    let nv = beta.nvars();
    let m = m as usize;
    let inv = C::one() / alpha.clone();
    let mut w: Vec<Poly<C>> = vec![Poly::zero(nv); m + 1];
    let mut j: Vec<Poly<C>> = vec![Poly::zero(nv); m.max(1)];
    w[m] = Poly::one(nv);
    let beta_over = beta.scale(&inv);
    for d in (1..=m).rev() {
        if w[d].is_zero() {
            continue;
        }
        let wd = w[d].clone();
        j[d - 1] = j[d - 1].sub(&wd.scale(&inv));
        w[d - 1] = w[d - 1].add(&wd.mul(&beta_over));
        if d >= 2 {
            let f = C::from_i64(d as i64 - 1) * inv.clone();
            w[d - 2] = w[d - 2].add(&wd.scale(&f));
        }
    }
    if m == 0 {
        j.clear();
    }
    (w[0].clone(), j)
}

fn pack(m: u32, alpha: &Q, beta: &Q, i0: Q, j: Vec<Q>) -> WickDecomposition1D {
    let mut boundary_terms: Vec<(u32, Q)> = j.into_iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(l, c)| (l as u32, c)).collect();
    boundary_terms.sort_by(|x, y| y.0.cmp(&x.0));
    WickDecomposition1D { m, alpha: alpha.clone(), beta: beta.clone(), i0_coefficient: i0, boundary_terms }
}

/// Decomposition of the inhomogeneous moment via the three-term recursion.
pub fn decompose_general_recursion(m: u32, alpha: &Q, beta: &Q) -> Result<WickDecomposition1D> {
    positive(alpha)?;
    let (i0, j) = recursion_coefficients(m, alpha, &Poly::constant(0, beta.clone()));
    let i0 = i0.coeff(&[]);
    let j = j.into_iter().map(|p| p.coeff(&[])).collect();
    Ok(pack(m, alpha, beta, i0, j))
}

/// Decomposition via the sum over step sequences `a_j ∈ {1,2}`. A 1-step
/// carries `beta`, a 2-step ending at partial sum `s` (read from the bottom of
/// the chain) carries `m - 1 + s - i`, and every step carries `1/alpha`.
/// The sum is memoized over the partial sum.
pub fn decompose_general_closed(m: u32, alpha: &Q, beta: &Q) -> Result<WickDecomposition1D> {
    positive(alpha)?;
    let inv = Q::one() / alpha.clone();
    // f[s] = Σ over sequences with total s of the product of step weights.
    let chain = |total: u32| -> Q {
        let mut f: Vec<Q> = vec![Q::zero(); total as usize + 1];
        f[0] = Q::one();
        for s in 1..=total as usize {
            let mut v = f[s - 1].clone() * beta.clone() * inv.clone();
            if s >= 2 {
                let w = Q::from_integer(BigInt::from(m as i64 - 1 + s as i64 - total as i64));
                v += f[s - 2].clone() * w * inv.clone();
            }
            f[s] = v;
        }
        f[total as usize].clone()
    };
    let mut j = vec![Q::zero(); m as usize];
    for i in 0..m {
        j[(m - i - 1) as usize] = -chain(i) * inv.clone();
    }
    let i0 = chain(m);
    Ok(pack(m, alpha, beta, i0, j))
}

/// `∫_a^b x^m exp(-alpha x^2/2) dx`: exact decomposition and numeric value.
pub fn wick_interval(m: u32, alpha: &Q, a: Endpoint, b: Endpoint) -> Result<(WickDecomposition1D, f64)> {
    check_interval(ratio_to_f64(alpha), a, b)?;
    let d = decompose_interval(m, alpha)?;
    let v = if a == b { 0.0 } else { d.value(a, b) };
    Ok((d, v))
}

/// `∫_R x^m exp(-alpha x^2/2) dx = sqrt(2π) (2k)!/(k! 2^k) alpha^{-(2k+1)/2}` for
/// `m = 2k`, zero for odd `m`.
pub fn wick_r(m: u32, alpha: &Q) -> Result<ExactValue> {
    positive(alpha)?;
    if m % 2 == 1 {
        return Ok(ExactValue { rational: Q::zero(), gauss: Q::zero(), alpha: alpha.clone() });
    }
    let k = (m / 2) as u64;
    let num = crate::scalar::factorial(2 * k);
    let den = crate::scalar::factorial(k) * (BigInt::one() << k as usize);
    // sqrt(2π) alpha^{-(2k+1)/2} = sqrt(2π/alpha) alpha^{-k}
    Ok(ExactValue { rational: Q::zero(), gauss: Q::new(num, den) / alpha_pow(alpha, k as u32), alpha: alpha.clone() })
}

/// Half-line moments: even `m` gives half the full-line value, odd `m = 2k+1`
/// gives `2^k k! / alpha^{k+1}`.
pub fn wick_rplus(m: u32, alpha: &Q) -> Result<ExactValue> {
    positive(alpha)?;
    if m % 2 == 0 {
        let full = wick_r(m, alpha)?;
        return Ok(ExactValue { rational: Q::zero(), gauss: full.gauss / qi(2), alpha: alpha.clone() });
    }
    let k = ((m - 1) / 2) as u64;
    let num = crate::scalar::factorial(k) * (BigInt::one() << k as usize);
    Ok(ExactValue { rational: Q::from_integer(num) / alpha_pow(alpha, k as u32 + 1), gauss: Q::zero(), alpha: alpha.clone() })
}

#[derive(Clone, Debug)]
pub struct GeneralWick {
    pub recursion: WickDecomposition1D,
    pub closed: WickDecomposition1D,
    pub value_recursion: f64,
    pub value_closed: f64,
}

/// Inhomogeneous moment `∫_a^b x^m exp(-alpha x^2/2 + beta x) dx` by both the
/// recursion and the sequence-sum closed form.
pub fn wick_general(m: u32, alpha: &Q, beta: &Q, a: Endpoint, b: Endpoint) -> Result<GeneralWick> {
    if !alpha.is_positive() && (!a.is_finite() || !b.is_finite()) {
        return Err(Error::Divergent(format!("alpha = {} with an infinite endpoint", alpha)));
    }
    check_interval(ratio_to_f64(alpha), a, b)?;
    let recursion = decompose_general_recursion(m, alpha, beta)?;
    let closed = decompose_general_closed(m, alpha, beta)?;
    let (value_recursion, value_closed) = if a == b { (0.0, 0.0) } else { (recursion.value(a, b), closed.value(a, b)) };
    Ok(GeneralWick { recursion, closed, value_recursion, value_closed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{adaptive_ext, Tolerance};
    use crate::scalar::q;

    fn oracle(m: u32, alpha: f64, beta: f64, a: f64, b: f64) -> f64 {
        adaptive_ext(|x| x.powi(m as i32) * (-alpha * x * x / 2.0 + beta * x).exp(), a, b, Tolerance::new(1e-300, 1e-13)).value
    }

    #[test]
    fn first_moment_on_half_line() {
        for al in [q(1, 2), qi(1), qi(7)] {
            let (_, v) = wick_interval(1, &al, Endpoint::Finite(0.0), Endpoint::PosInf).unwrap();
            assert!((v - 1.0 / ratio_to_f64(&al)).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_interval_is_zero() {
        let (_, v) = wick_interval(3, &qi(2), Endpoint::Finite(0.7), Endpoint::Finite(0.7)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn fourth_moment_on_interval() {
        let (_, v) = wick_interval(4, &qi(2), Endpoint::Finite(-1.0), Endpoint::Finite(3.0)).unwrap();
        let o = oracle(4, 2.0, 0.0, -1.0, 3.0);
        assert!(((v - o) / o).abs() < 1e-10);
    }

    #[test]
    fn full_line_values() {
        let v = wick_r(2, &qi(1)).unwrap();
        assert!((v.to_f64() - (2.0 * PI).sqrt()).abs() < 1e-14);
        assert_eq!(wick_r(3, &qi(5)).unwrap().to_f64(), 0.0);
        let v = wick_r(0, &qi(4)).unwrap();
        assert!((v.to_f64() - (2.0 * PI).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn half_line_values() {
        assert!((wick_rplus(0, &qi(1)).unwrap().to_f64() - (2.0 * PI).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(wick_rplus(3, &qi(1)).unwrap().rational, qi(2));
        assert_eq!(wick_rplus(5, &qi(2)).unwrap().rational, qi(1));
        assert!((oracle(5, 2.0, 0.0, 0.0, f64::INFINITY) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn limits_agree_exactly_with_line_formulas() {
        for m in 0..=12 {
            for al in [q(1, 2), qi(1), qi(3), q(7, 5)] {
                let d = decompose_interval(m, &al).unwrap();
                assert_eq!(d.full_line_value(), wick_r(m, &al).unwrap());
                assert_eq!(d.half_line_value(), wick_rplus(m, &al).unwrap());
            }
        }
    }

    #[test]
    fn generalized_routes_agree_and_reduce() {
        for m in 0..=10 {
            for al in [q(1, 2), qi(1), qi(3)] {
                for be in [qi(-1), qi(0), qi(1), q(2, 3)] {
                    let r = decompose_general_recursion(m, &al, &be).unwrap();
                    let c = decompose_general_closed(m, &al, &be).unwrap();
                    assert_eq!(r, c, "m={m} alpha={al} beta={be}");
                }
                let z = decompose_general_closed(m, &al, &Q::zero()).unwrap();
                assert_eq!(z, decompose_interval(m, &al).unwrap());
            }
        }
    }

    #[test]
    fn generalized_examples() {
        let g = wick_general(0, &qi(1), &qi(1), Endpoint::NegInf, Endpoint::PosInf).unwrap();
        assert!((g.value_closed - (2.0 * PI).sqrt() * 0.5f64.exp()).abs() < 1e-13);
        let g = wick_general(2, &qi(3), &qi(-1), Endpoint::Finite(0.0), Endpoint::Finite(2.0)).unwrap();
        let o = oracle(2, 3.0, -1.0, 0.0, 2.0);
        assert!(((g.value_recursion - o) / o).abs() < 1e-10);
        assert!(((g.value_closed - o) / o).abs() < 1e-10);
    }

    #[test]
    fn errors() {
        assert!(wick_interval(2, &qi(0), Endpoint::Finite(0.0), Endpoint::Finite(1.0)).is_err());
        assert!(wick_interval(2, &qi(1), Endpoint::Finite(1.0), Endpoint::Finite(0.0)).is_err());
        assert!(matches!(wick_general(2, &qi(-1), &qi(0), Endpoint::NegInf, Endpoint::Finite(0.0)), Err(Error::Divergent(_))));
    }

    #[test]
    fn cancelling_atoms_keep_full_accuracy() {
        // The I_0 term is ~5e5 here for a value ~0.03; f64 atoms lose 1e-9.
        let (a, b) = (Endpoint::Finite(-1.0), Endpoint::Finite(0.0));
        for be in [qi(1), qi(-1)] {
            let g = wick_general(10, &q(1, 2), &be, a, b).unwrap();
            let want = oracle(10, 0.5, ratio_to_f64(&be), -1.0, 0.0);
            for v in [g.value_closed, g.value_recursion] {
                assert!((v - want).abs() < 1e-12 * want, "{v} vs {want}");
            }
            let rough = g.closed.value_f64(a, b);
            assert!((rough - want).abs() > 1e-11 * want);
        }
    }
}
