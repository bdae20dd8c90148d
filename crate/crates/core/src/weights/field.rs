//! Test fields: products over coordinates of one-dimensional factors
//! `a(x) = P(x) exp(-s (x-c)^2 / 2)`. Derivatives, Taylor coefficients and
//! Gaussian integrals of such factors are available in closed form.

use crate::{Error, Result};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub struct Field1D {
    /// Coefficients of `x^j` in `P`.
    pub poly: Vec<f64>,
    pub s: f64,
    pub c: f64,
}

fn horner(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

impl Field1D {
    pub fn gaussian(s: f64, c: f64) -> Self {
        Field1D { poly: vec![1.0], s, c }
    }

    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.poly, x) * (-self.s * (x - self.c) * (x - self.c) / 2.0).exp()
    }

    /// `a' = (P' - s (x - c) P) exp(...)`.
    pub fn derivative(&self) -> Field1D {
        let d = self.poly.len();
        let mut out = vec![0.0; d + 1];
        for j in 1..d {
            out[j - 1] += j as f64 * self.poly[j];
        }
        for (j, &a) in self.poly.iter().enumerate() {
            out[j + 1] -= self.s * a;
            out[j] += self.s * self.c * a;
        }
        while out.len() > 1 && *out.last().unwrap() == 0.0 {
            out.pop();
        }
        Field1D { poly: out, s: self.s, c: self.c }
    }

    pub fn nth_derivative(&self, m: u32) -> Field1D {
        let mut f = self.clone();
        for _ in 0..m {
            f = f.derivative();
        }
        f
    }

    /// Coefficients of `ζ^j`, `j ≤ order`, in `a(x0 + ζ)`.
    pub fn series(&self, x0: f64, order: usize) -> Vec<f64> {
        // Gaussian part: E' = q' E with q(ζ) = -b ζ - s ζ^2 / 2.
        let b = self.s * (x0 - self.c);
        let g0 = (-self.s * (x0 - self.c) * (x0 - self.c) / 2.0).exp();
        let mut e = vec![0.0; order + 1];
        e[0] = g0;
        for j in 0..order {
            let prev = if j >= 1 { e[j - 1] } else { 0.0 };
            e[j + 1] = (-b * e[j] - self.s * prev) / (j + 1) as f64;
        }
        // Polynomial part shifted to x0.
        let d = self.poly.len();
        let mut shifted = vec![0.0; d];
        for (k, &a) in self.poly.iter().enumerate() {
            // (x0 + ζ)^k = sum binom(k, j) x0^{k-j} ζ^j
            let mut binom = 1.0;
            for j in 0..=k {
                shifted[j] += a * binom * x0.powi((k - j) as i32);
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
        }
        let mut out = vec![0.0; order + 1];
        for (i, &p) in shifted.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for j in 0..=order.saturating_sub(i) {
                if i + j <= order {
                    out[i + j] += p * e[j];
                }
            }
        }
        out
    }
}

/// `∫_R Π_i a_i(x) dx` for factors sharing nothing but the variable; the
/// product is a polynomial times one Gaussian, integrated by moments.
pub fn product_integral_line(factors: &[&Field1D]) -> f64 {
    let mut poly = vec![1.0];
    let (mut s, mut sc, mut scc) = (0.0, 0.0, 0.0);
    for f in factors {
        poly = poly_mul(&poly, &f.poly);
        s += f.s;
        sc += f.s * f.c;
        scc += f.s * f.c * f.c;
    }
    if factors.is_empty() || s <= 0.0 {
        return f64::INFINITY;
    }
    // exp(-(s x^2 - 2 sc x + scc)/2) = exp(-(scc - sc^2/s)/2) exp(-s (x - μ)^2 / 2)
    let mu = sc / s;
    let pref = (-(scc - sc * sc / s) / 2.0).exp() * (2.0 * PI / s).sqrt();
    // E[P(μ + Z)], Z ~ N(0, 1/s)
    let mut total = 0.0;
    for (k, &a) in poly.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let mut binom = 1.0;
        for j in 0..=k {
            if j % 2 == 0 {
                total += a * binom * mu.powi((k - j) as i32) * gaussian_moment(j as u32, s);
            }
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    pref * total
}

/// `E[Z^j]` for `Z ~ N(0, 1/s)`.
pub fn gaussian_moment(j: u32, s: f64) -> f64 {
    if j % 2 == 1 {
        return 0.0;
    }
    let mut v = 1.0;
    let mut k = j as i64 - 1;
    while k > 1 {
        v *= k as f64;
        k -= 2;
    }
    v / s.powi(j as i32 / 2)
}

pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// A test field on `R^n` or the half space: `α(x) = Π_i a_i(x_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub name: String,
    pub factors: Vec<Field1D>,
}

pub const FIELD_NAMES: [&str; 5] = ["gauss", "wide", "narrow", "linear", "quartic"];

impl Field {
    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.factors.iter().zip(x).map(|(f, &xi)| f.eval(xi)).product()
    }

    /// `∂^I α` as another product field.
    pub fn derivative(&self, multi: &[u32]) -> Field {
        let factors = self.factors.iter().zip(multi).map(|(f, &m)| f.nth_derivative(m)).collect();
        Field { name: format!("d{:?}{}", multi, self.name), factors }
    }

    /// Library member `name` in dimension `n`. The last coordinate is centred
    /// inside the half space so the same field serves both geometries.
    pub fn library(name: &str, n: usize) -> Result<Field> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        let centre = |i: usize, inner: f64| if i + 1 == n { inner } else { 0.0 };
        let factors: Vec<Field1D> = (0..n)
            .map(|i| match name {
                "gauss" => Some(Field1D::gaussian(1.0, centre(i, 0.5))),
                "wide" => Some(Field1D::gaussian(0.5, centre(i, 1.0))),
                "narrow" => Some(Field1D::gaussian(4.0, centre(i, 0.75))),
                "linear" => Some(Field1D { poly: vec![1.0, 0.5], s: 1.0, c: centre(i, 0.5) }),
                "quartic" => Some(Field1D { poly: vec![1.0, 0.0, -1.0 / 3.0, 0.0, 0.05], s: 2.0, c: centre(i, 0.5) }),
                _ => None,
            })
            .collect::<Option<_>>()
            .ok_or_else(|| Error::InvalidParameter(format!("unknown field {name}; expected one of {FIELD_NAMES:?}")))?;
        Ok(Field { name: name.to_string(), factors })
    }

    pub fn all(n: usize) -> Vec<Field> {
        FIELD_NAMES.iter().map(|s| Field::library(s, n).unwrap()).collect()
    }
}
