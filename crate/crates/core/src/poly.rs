//! Sparse multivariate polynomials over a [`Scalar`] ring.
//!
//! Monomials are exponent vectors of fixed length `nvars`; zero coefficients
//! are never stored.

use crate::scalar::Scalar;
use std::collections::BTreeMap;
use std::fmt;

pub type Monomial = Vec<u32>;

#[derive(Clone, PartialEq)]
pub struct Poly<C: Scalar> {
    nvars: usize,
    terms: BTreeMap<Monomial, C>,
}

impl<C: Scalar> fmt::Debug for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly[{}](", self.nvars)?;
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{:?}*{:?}", c, m)?;
        }
        write!(f, ")")
    }
}

impl<C: Scalar> Poly<C> {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, C::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut m = vec![0; nvars];
        m[i] = 1;
        Self::monomial(m, C::one())
    }

    pub fn monomial(m: Monomial, c: C) -> Self {
        let mut p = Self::zero(m.len());
        p.add_term(m, c);
        p
    }

    /// Affine form `c0 + sum_i a_i x_i`.
    pub fn affine(nvars: usize, c0: C, coeffs: &[C]) -> Self {
        let mut p = Self::constant(nvars, c0);
        for (i, a) in coeffs.iter().enumerate() {
            let mut m = vec![0; nvars];
            m[i] = 1;
            p.add_term(m, a.clone());
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &[u32]) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: C) {
        debug_assert_eq!(m.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                let s = v.clone() + c;
                if s.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.nvars, o.nvars);
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&(-C::one()))
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut r = Self::zero(self.nvars);
        if c.is_zero() {
            return r;
        }
        for (m, v) in &self.terms {
            r.add_term(m.clone(), v.clone() * c.clone());
        }
        r
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.nvars, o.nvars);
        let mut r = Self::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                let m: Monomial = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                r.add_term(m, ca.clone() * cb.clone());
            }
        }
        r
    }

    /// Product keeping only monomials whose degree in `mask` variables is ≤ `max`.
    pub fn mul_truncated(&self, o: &Self, mask: &[bool], max: u32) -> Self {
        let mut r = Self::zero(self.nvars);
        for (ma, ca) in &self.terms {
            let da = masked_degree(ma, mask);
            if da > max {
                continue;
            }
            for (mb, cb) in &o.terms {
                if da + masked_degree(mb, mask) > max {
                    continue;
                }
                let m: Monomial = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                r.add_term(m, ca.clone() * cb.clone());
            }
        }
        r
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut r = Self::one(self.nvars);
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }

    pub fn deriv(&self, i: usize) -> Self {
        let mut r = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            if m[i] == 0 {
                continue;
            }
            let mut mm = m.clone();
            let e = mm[i];
            mm[i] -= 1;
            r.add_term(mm, c.clone() * C::from_i64(e as i64));
        }
        r
    }

    pub fn eval(&self, x: &[C]) -> C {
        assert_eq!(x.len(), self.nvars);
        let mut s = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &e) in x.iter().zip(m) {
                for _ in 0..e {
                    t = t * xi.clone();
                }
            }
            s = s + t;
        }
        s
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.iter().sum()).max()
    }

    pub fn min_total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.iter().sum()).min()
    }

    /// `Some(d)` if every monomial has total degree `d`; `None` for the zero
    /// polynomial or mixed degrees.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let lo = self.min_total_degree()?;
        let hi = self.total_degree()?;
        if lo == hi {
            Some(lo)
        } else {
            None
        }
    }

    pub fn degree_in(&self, i: usize) -> Option<u32> {
        self.terms.keys().map(|m| m[i]).max()
    }

    pub fn masked_degree_max(&self, mask: &[bool]) -> Option<u32> {
        self.terms.keys().map(|m| masked_degree(m, mask)).max()
    }

    /// Drops monomials whose degree in the `mask` variables exceeds `max`.
    pub fn truncate(&self, mask: &[bool], max: u32) -> Self {
        let mut r = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            if masked_degree(m, mask) <= max {
                r.terms.insert(m.clone(), c.clone());
            }
        }
        r
    }

    /// Keeps only monomials with the given degree in the `mask` variables.
    pub fn graded_part(&self, mask: &[bool], deg: u32) -> Self {
        let mut r = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            if masked_degree(m, mask) == deg {
                r.terms.insert(m.clone(), c.clone());
            }
        }
        r
    }

    /// Composition: variable `i` is replaced by `subs[i]` (all in a common ring
    /// of `subs[0].nvars()` variables).
    pub fn compose(&self, subs: &[Poly<C>]) -> Poly<C> {
        assert_eq!(subs.len(), self.nvars);
        let target = subs.first().map(|p| p.nvars).unwrap_or(0);
        let mut cache: Vec<Vec<Poly<C>>> = subs.iter().map(|s| vec![Poly::one(s.nvars), s.clone()]).collect();
        let mut r = Poly::zero(target);
        for (m, c) in &self.terms {
            let mut t = Poly::constant(target, c.clone());
            for (i, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while cache[i].len() <= e as usize {
                    let next = cache[i].last().unwrap().mul(&subs[i]);
                    cache[i].push(next);
                }
                t = t.mul(&cache[i][e as usize]);
            }
            r = r.add(&t);
        }
        r
    }

    /// Re-embeds into a ring with `nvars` variables; variable `i` maps to `map[i]`.
    pub fn remap(&self, nvars: usize, map: &[usize]) -> Self {
        let mut r = Self::zero(nvars);
        for (m, c) in &self.terms {
            let mut mm = vec![0; nvars];
            for (i, &e) in m.iter().enumerate() {
                mm[map[i]] += e;
            }
            r.add_term(mm, c.clone());
        }
        r
    }

    pub fn map_coeffs<D: Scalar>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        let mut r = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            r.add_term(m.clone(), f(c));
        }
        r
    }

    /// Exact division by a nonzero scalar.
    pub fn div_scalar(&self, c: &C) -> Self {
        let mut r = Self::zero(self.nvars);
        for (m, v) in &self.terms {
            r.add_term(m.clone(), v.clone() / c.clone());
        }
        r
    }
}

pub fn masked_degree(m: &[u32], mask: &[bool]) -> u32 {
    m.iter().zip(mask).filter(|(_, &b)| b).map(|(e, _)| *e).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{qi, Q};

    #[test]
    fn product_and_derivative() {
        let x = Poly::<Q>::var(2, 0);
        let y = Poly::<Q>::var(2, 1);
        let p = x.add(&y).pow(3);
        assert_eq!(p.coeff(&[2, 1]), qi(3));
        assert_eq!(p.homogeneous_degree(), Some(3));
        let d = p.deriv(0);
        assert_eq!(d.coeff(&[1, 1]), qi(6));
        assert_eq!(p.eval(&[qi(1), qi(2)]), qi(27));
    }

    #[test]
    fn composition_matches_evaluation() {
        let x = Poly::<f64>::var(1, 0);
        let p = x.pow(2).add(&Poly::constant(1, 1.0));
        let s = Poly::<f64>::affine(2, 1.0, &[2.0, -1.0]);
        let c = p.compose(&[s]);
        let (a, b) = (0.3f64, -0.7f64);
        let direct = (1.0 + 2.0 * a - b).powi(2) + 1.0;
        assert!((c.eval(&[a, b]) - direct).abs() < 1e-14);
    }

    #[test]
    fn truncation_by_mask() {
        let x = Poly::<Q>::var(2, 0);
        let y = Poly::<Q>::var(2, 1);
        let p = x.add(&y).pow(4);
        let t = p.truncate(&[false, true], 1);
        assert_eq!(t.len(), 2);
        let m = x.add(&y).pow(2).mul_truncated(&x.add(&y).pow(2), &[false, true], 1);
        assert_eq!(m, t);
    }
}
