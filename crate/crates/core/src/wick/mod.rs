//! Gaussian moment engines.
//!
//! Convention: every form is written `exp(-Q/2)`, so the 1D weight is
//! `exp(-alpha x^2 / 2 + beta x)`. Callers holding `exp(-Q/4t)` pass `alpha = 1/(2t)`.

mod interval;
mod polytope;
mod precise;
mod rn;

pub use interval::*;
pub use polytope::*;
pub use rn::*;

use libm::{erf, erfc};
use std::f64::consts::PI;

/// Interval endpoint with explicit infinities, so boundary terms at infinity
/// vanish by rule rather than by underflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Endpoint {
    NegInf,
    Finite(f64),
    PosInf,
}

impl Endpoint {
    pub fn value(self) -> f64 {
        match self {
            Endpoint::NegInf => f64::NEG_INFINITY,
            Endpoint::Finite(x) => x,
            Endpoint::PosInf => f64::INFINITY,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == f64::NEG_INFINITY {
            Endpoint::NegInf
        } else if x == f64::INFINITY {
            Endpoint::PosInf
        } else {
            Endpoint::Finite(x)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Endpoint::Finite(_))
    }
}

/// `∫_a^b exp(-alpha x^2/2) dx` via the error function. Same-sign tails use
/// erfc to avoid cancellation.
pub fn i0_numeric(alpha: f64, a: Endpoint, b: Endpoint) -> f64 {
    let s = (alpha / 2.0).sqrt();
    let pref = (PI / (2.0 * alpha)).sqrt();
    let (x, y) = (a.value() * s, b.value() * s);
    if x >= y {
        return 0.0;
    }
    if x >= 0.0 {
        pref * (erfc(x) - erfc(y))
    } else if y <= 0.0 {
        pref * (erfc(-y) - erfc(-x))
    } else {
        pref * (erf(y) - erf(x))
    }
}

/// `∫_a^b exp(-alpha x^2/2 + beta x) dx` by completing the square.
pub fn i0_general_numeric(alpha: f64, beta: f64, a: Endpoint, b: Endpoint) -> f64 {
    let shift = beta / alpha;
    let mv = |e: Endpoint| match e {
        Endpoint::Finite(x) => Endpoint::Finite(x - shift),
        other => other,
    };
    (beta * beta / (2.0 * alpha)).exp() * i0_numeric(alpha, mv(a), mv(b))
}

/// `x^l exp(-alpha x^2/2 + beta x)` at one endpoint; zero at infinity.
pub fn boundary_atom(l: u32, alpha: f64, beta: f64, x: Endpoint) -> f64 {
    match x {
        Endpoint::Finite(x) => {
            let p = if l == 0 { 1.0 } else { x.powi(l as i32) };
            p * (-alpha * x * x / 2.0 + beta * x).exp()
        }
        _ => 0.0,
    }
}

/// `J_{l,alpha,beta}(a,b)`: boundary atom at b minus boundary atom at a.
pub fn j_numeric(l: u32, alpha: f64, beta: f64, a: Endpoint, b: Endpoint) -> f64 {
    boundary_atom(l, alpha, beta, b) - boundary_atom(l, alpha, beta, a)
}

fn check_interval(alpha: f64, a: Endpoint, b: Endpoint) -> crate::Result<()> {
    if !(alpha > 0.0) {
        return Err(crate::Error::NonPositiveAlpha(alpha));
    }
    if a.value() > b.value() {
        return Err(crate::Error::ReversedInterval(a.value(), b.value()));
    }
    Ok(())
}
