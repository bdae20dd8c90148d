//! Gaussian moments on R^n: pairing sums over the inverse form.

use crate::linalg::Matrix;
use crate::quad::gl;
use crate::scalar::{ratio_to_f64, Q};
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::{Signed, Zero};
use std::f64::consts::PI;

/// `exp(-(x·Ax)/2 + b·x + c)`; only the quadratic part is used by the pairing
/// engine. Nondegeneracy is computed, never assumed.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticFormND {
    pub a: Matrix<Q>,
    pub linear: Option<Vec<Q>>,
    pub constant: Option<Q>,
}

impl QuadraticFormND {
    pub fn new(a: Matrix<Q>) -> Result<Self> {
        if !a.is_symmetric() {
            return Err(Error::InvalidParameter("quadratic form matrix is not symmetric".into()));
        }
        Ok(QuadraticFormND { a, linear: None, constant: None })
    }

    pub fn dim(&self) -> usize {
        self.a.n
    }

    pub fn is_nondegenerate(&self) -> bool {
        !self.a.det().is_zero()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a.is_positive_definite()
    }
}

/// Calls `f` once per perfect matching of `0..k` (nothing for odd `k`).
pub fn for_each_pairing(k: usize, f: &mut dyn FnMut(&[(usize, usize)])) {
    if k % 2 == 1 {
        return;
    }
    fn go(free: &mut Vec<usize>, acc: &mut Vec<(usize, usize)>, f: &mut dyn FnMut(&[(usize, usize)])) {
        if free.is_empty() {
            f(acc);
            return;
        }
        let first = free.remove(0);
        for i in 0..free.len() {
            let partner = free.remove(i);
            acc.push((first, partner));
            go(free, acc, f);
            acc.pop();
            free.insert(i, partner);
        }
        free.insert(0, first);
    }
    let mut free: Vec<usize> = (0..k).collect();
    go(&mut free, &mut Vec::new(), f);
}

/// `(2π)^{n/2} / sqrt(det A) * pairing_sum`, with `pairing_sum` exact.
#[derive(Clone, Debug, PartialEq)]
pub struct RnValue {
    pub n: usize,
    pub det: Q,
    pub pairing_sum: Q,
}

impl RnValue {
    pub fn to_f64(&self) -> f64 {
        (2.0 * PI).powf(self.n as f64 / 2.0) / ratio_to_f64(&self.det).sqrt() * ratio_to_f64(&self.pairing_sum)
    }
}

/// `∫_{R^n} x_{m_1}..x_{m_k} exp(-(x·Ax)/2) dx` by the pairing sum over `A^{-1}`.
pub fn wick_rn(form: &QuadraticFormND, monomial: &[usize]) -> Result<RnValue> {
    if !form.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let (det, inv) = form.a.det_inverse();
    let inv = inv.expect("positive definite forms are invertible");
    let mut sum = Q::zero();
    for_each_pairing(monomial.len(), &mut |p| {
        let mut t: Q = num_traits::One::one();
        for &(i, j) in p {
            t = t * inv.get(monomial[i], monomial[j]).clone();
        }
        sum += t;
    });
    debug_assert!(det.is_positive());
    Ok(RnValue { n: form.dim(), det, pairing_sum: sum })
}

fn line_moment(m: usize, alpha: f64) -> f64 {
    if m % 2 == 1 {
        return 0.0;
    }
    // (m-1)!! alpha^{-m/2} sqrt(2π/alpha)
    let mut df = 1.0;
    let mut k = m as i64 - 1;
    while k > 1 {
        df *= k as f64;
        k -= 2;
    }
    df * alpha.powi(-(m as i32) / 2) * (2.0 * PI / alpha).sqrt()
}

/// Same integral through the orthogonal diagonalization `A = S D S^T`: the
/// monomial is expanded in eigen-coordinates and each axis uses the 1D formula.
pub fn wick_rn_diagonal(a: &[Vec<f64>], monomial: &[usize]) -> f64 {
    let n = a.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let eig = SymmetricEigen::new(m);
    let s = eig.eigenvectors;
    let alphas = eig.eigenvalues;
    let k = monomial.len();
    let mut total = 0.0;
    let mut idx = vec![0usize; k];
    loop {
        let mut coeff = 1.0;
        let mut counts = vec![0usize; n];
        for (pos, &i) in idx.iter().enumerate() {
            coeff *= s[(monomial[pos], i)];
            counts[i] += 1;
        }
        if coeff != 0.0 {
            let mut v = coeff;
            for i in 0..n {
                v *= line_moment(counts[i], alphas[i]);
            }
            total += v;
        }
        let mut p = 0;
        loop {
            if p == k {
                return total;
            }
            idx[p] += 1;
            if idx[p] < n {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
        if k == 0 {
            return total;
        }
    }
}

/// Tensor-product Gauss–Legendre oracle on a box wide enough that the
/// Gaussian tail is below `exp(-40)`.
pub fn wick_rn_quadrature(a: &[Vec<f64>], monomial: &[usize], panels: usize) -> f64 {
    let n = a.len();
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let lam_min = SymmetricEigen::new(m).eigenvalues.min();
    let k = monomial.len() as f64;
    let half = ((80.0 + 4.0 * k) / lam_min).sqrt() + 2.0;
    let rule = gl(20);
    let h = 2.0 * half / panels as f64;
    let axis: Vec<(f64, f64)> = (0..panels).flat_map(|p| rule.mapped(-half + p as f64 * h, -half + (p + 1) as f64 * h).collect::<Vec<_>>()).collect();
    let np = axis.len();
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for i in 0..n {
            x[i] = axis[idx[i]].0;
            w *= axis[idx[i]].1;
        }
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                q += x[i] * a[i][j] * x[j];
            }
        }
        let mono: f64 = monomial.iter().map(|&i| x[i]).product();
        total += w * mono * (-q / 2.0).exp();
        let mut p = 0;
        loop {
            if p == n {
                return total;
            }
            idx[p] += 1;
            if idx[p] < np {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}
