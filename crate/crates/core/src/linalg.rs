//! Small dense matrices over a field, plus determinant and adjugate of
//! matrices with polynomial entries (division-free Laplace expansion).

use crate::poly::Poly;
use crate::scalar::Scalar;
use std::collections::HashMap;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<C: Scalar> {
    pub n: usize,
    pub data: Vec<C>,
}

impl<C: Scalar> Matrix<C> {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![C::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, C::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<C>>) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
            data.extend(r);
        }
        Matrix { n, data }
    }

    pub fn get(&self, i: usize, j: usize) -> &C {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C) {
        self.data[i * self.n + j] = v;
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        let mut r = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = C::zero();
                for k in 0..n {
                    s = s + self.get(i, k).clone() * o.get(k, j).clone();
                }
                r.set(i, j, s);
            }
        }
        r
    }

    pub fn map<D: Scalar>(&self, f: impl Fn(&C) -> D) -> Matrix<D> {
        Matrix { n: self.n, data: self.data.iter().map(f).collect() }
    }

    /// Gaussian elimination; returns (determinant, inverse if nonsingular).
    pub fn det_inverse(&self) -> (C, Option<Self>) {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let mut det = C::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&r| !a.get(r, c).is_zero()) else {
                return (C::zero(), None);
            };
            if p != c {
                for j in 0..n {
                    a.data.swap(p * n + j, c * n + j);
                    inv.data.swap(p * n + j, c * n + j);
                }
                det = -det;
            }
            let piv = a.get(c, c).clone();
            det = det * piv.clone();
            for j in 0..n {
                let v = a.get(c, j).clone() / piv.clone();
                a.set(c, j, v);
                let w = inv.get(c, j).clone() / piv.clone();
                inv.set(c, j, w);
            }
            for r in 0..n {
                if r == c || a.get(r, c).is_zero() {
                    continue;
                }
                let k = a.get(r, c).clone();
                for j in 0..n {
                    let v = a.get(r, j).clone() - k.clone() * a.get(c, j).clone();
                    a.set(r, j, v);
                    let w = inv.get(r, j).clone() - k.clone() * inv.get(c, j).clone();
                    inv.set(r, j, w);
                }
            }
        }
        (det, Some(inv))
    }

    pub fn det(&self) -> C {
        self.det_inverse().0
    }

    /// Sylvester's criterion on leading principal minors.
    pub fn is_positive_definite(&self) -> bool
    where
        C: PartialOrd,
    {
        (1..=self.n).all(|k| {
            let mut m = Matrix::zeros(k);
            for i in 0..k {
                for j in 0..k {
                    m.set(i, j, self.get(i, j).clone());
                }
            }
            m.det() > C::zero()
        })
    }
}

/// Determinant of a square matrix of polynomials, by Laplace expansion along
/// rows with memoization over the set of remaining columns.
pub fn poly_det<C: Scalar>(m: &[Vec<Poly<C>>], nvars: usize) -> Poly<C> {
    let n = m.len();
    if n == 0 {
        return Poly::one(nvars);
    }
    assert!(n <= 24, "polynomial determinant limited to 24x24");
    let mut memo: HashMap<u32, Poly<C>> = HashMap::new();
    fn go<C: Scalar>(row: usize, cols: u32, m: &[Vec<Poly<C>>], nvars: usize, memo: &mut HashMap<u32, Poly<C>>) -> Poly<C> {
        let n = m.len();
        if row == n {
            return Poly::one(nvars);
        }
        if let Some(v) = memo.get(&cols) {
            return v.clone();
        }
        let mut acc = Poly::zero(nvars);
        let mut sign_pos = true;
        for c in 0..n {
            if cols & (1 << c) == 0 {
                continue;
            }
            if !m[row][c].is_zero() {
                let minor = go(row + 1, cols & !(1 << c), m, nvars, memo);
                let term = m[row][c].mul(&minor);
                acc = if sign_pos { acc.add(&term) } else { acc.sub(&term) };
            }
            sign_pos = !sign_pos;
        }
        memo.insert(cols, acc.clone());
        acc
    }
    go(0, (1u32 << n) - 1, m, nvars, &mut memo)
}

/// Adjugate (transpose of the cofactor matrix) of a polynomial matrix.
pub fn poly_adjugate<C: Scalar>(m: &[Vec<Poly<C>>], nvars: usize) -> Vec<Vec<Poly<C>>> {
    let n = m.len();
    let mut adj = vec![vec![Poly::zero(nvars); n]; n];
    if n == 1 {
        adj[0][0] = Poly::one(nvars);
        return adj;
    }
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<Poly<C>>> = (0..n)
                .filter(|&r| r != i)
                .map(|r| (0..n).filter(|&c| c != j).map(|c| m[r][c].clone()).collect())
                .collect();
            let d = poly_det(&minor, nvars);
            adj[j][i] = if (i + j) % 2 == 0 { d } else { d.neg() };
        }
    }
    adj
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qi, Q};

    #[test]
    fn rational_inverse() {
        let a = Matrix::from_rows(vec![vec![qi(2), qi(1)], vec![qi(1), qi(2)]]);
        let (d, inv) = a.det_inverse();
        assert_eq!(d, qi(3));
        let inv = inv.unwrap();
        assert_eq!(*inv.get(0, 1), q(-1, 3));
        assert_eq!(a.mul(&inv), Matrix::identity(2));
        assert!(a.is_positive_definite());
    }

    #[test]
    fn polynomial_det_and_adjugate() {
        // [[t0+t1, -t1], [-t1, t1+t2]] has det t0 t1 + t0 t2 + t1 t2.
        let t = |i| Poly::<Q>::var(3, i);
        let m = vec![vec![t(0).add(&t(1)), t(1).neg()], vec![t(1).neg(), t(1).add(&t(2))]];
        let d = poly_det(&m, 3);
        let expect = t(0).mul(&t(1)).add(&t(0).mul(&t(2))).add(&t(1).mul(&t(2)));
        assert_eq!(d, expect);
        let adj = poly_adjugate(&m, 3);
        // m * adj = det * I
        for i in 0..2 {
            for j in 0..2 {
                let mut s = Poly::zero(3);
                for k in 0..2 {
                    s = s.add(&m[i][k].mul(&adj[k][j]));
                }
                let want = if i == j { d.clone() } else { Poly::zero(3) };
                assert_eq!(s, want);
            }
        }
    }
}
