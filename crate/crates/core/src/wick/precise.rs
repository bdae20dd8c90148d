//! Extended-precision evaluation of interval decompositions.
//!
//! The atoms of a decomposition can cancel by many orders of magnitude
//! (`m = 10, alpha = 1/2` on `[-1, 0]` has an `I_0` term near `5e5` for a
//! value near `0.03`), so f64 atoms cap the accuracy well above 1e-9. Here the
//! exact coefficients meet atoms computed in binary floating point with a few
//! hundred bits.

use super::interval::WickDecomposition1D;
use crate::scalar::Q;
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::IBig;
use num_traits::Zero;
use std::str::FromStr;

type F = FBig<HalfEven, 2>;

/// Beyond this `alpha y^2 / 2` the power series for `I_0` needs too many
/// terms and bits; callers fall back to f64 atoms.
const MAX_EXPONENT: f64 = 200.0;

fn int(x: &num_bigint::BigInt, prec: usize) -> F {
    F::from(IBig::from_str(&x.to_string()).expect("decimal integer")).with_precision(prec).value()
}

fn rational(x: &Q, prec: usize) -> F {
    int(x.numer(), prec) / int(x.denom(), prec)
}

fn float(x: f64, prec: usize) -> F {
    F::try_from(x).expect("finite endpoint").with_precision(prec).value()
}

/// `∫_a^b x^m exp(-alpha x^2/2 + beta x) dx` from the decomposition, for finite
/// `a < b` and `alpha > 0`. `None` when the interval is too far into the
/// Gaussian tail for the series.
pub(crate) fn value_finite(d: &WickDecomposition1D, a: f64, b: f64) -> Option<f64> {
    let (af, bf) = (crate::scalar::ratio_to_f64(&d.alpha), crate::scalar::ratio_to_f64(&d.beta));
    if !(af > 0.0) {
        return None;
    }
    let mu = bf / af;
    let reach = af * (a - mu).abs().max((b - mu).abs()).powi(2) / 2.0;
    if reach > MAX_EXPONENT || (bf * bf / (2.0 * af)) > MAX_EXPONENT {
        return None;
    }
    // The series for I_0 cancels down by about exp(reach).
    let prec = 256 + (reach * std::f64::consts::LOG2_E) as usize;
    let alpha = rational(&d.alpha, prec);
    let beta = rational(&d.beta, prec);
    let (a, b) = (float(a, prec), float(b, prec));
    let two = F::from(2).with_precision(prec).value();
    let exponent = |x: &F| -(&alpha * x * x) / &two + &beta * x;

    let mut total = F::ZERO.with_precision(prec).value();
    if !d.i0_coefficient.is_zero() {
        // I_0 = exp(beta^2/2alpha) ∫ exp(-alpha y^2/2) dy over the shifted interval.
        let mu = &beta / &alpha;
        let (ya, yb) = (&a - &mu, &b - &mu);
        let step = -(&alpha) / &two;
        let (mut pa, mut pb) = (ya.clone(), yb.clone());
        let mut sum = &pb - &pa;
        let mut largest = sum.to_f64().value().abs();
        let mut k = 1u64;
        loop {
            let kf = F::from(k).with_precision(prec).value();
            pa = &pa * &ya * &ya * &step / &kf;
            pb = &pb * &yb * &yb * &step / &kf;
            let term = (&pb - &pa) / F::from(2 * k + 1).with_precision(prec).value();
            let size = term.to_f64().value().abs();
            largest = largest.max(size);
            sum += term;
            if k as f64 > reach + 2.0 && size <= largest * (-(prec as f64)).exp2() {
                break;
            }
            k += 1;
        }
        let shift = (&beta * &beta / (&two * &alpha)).exp();
        total += rational(&d.i0_coefficient, prec) * shift * sum;
    }
    if !d.boundary_terms.is_empty() {
        let (ea, eb) = (exponent(&a).exp(), exponent(&b).exp());
        for (l, c) in &d.boundary_terms {
            let atom = b.powi((*l).into()) * &eb - a.powi((*l).into()) * &ea;
            total += rational(c, prec) * atom;
        }
    }
    Some(total.to_f64().value())
}
