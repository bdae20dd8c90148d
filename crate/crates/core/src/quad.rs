//! Numerical quadrature: adaptive Gauss–Legendre in 1D (finite and infinite
//! intervals), nested adaptive integration over regions with variable bounds,
//! tensor rules on boxes and collapsed (Duffy) rules on simplices.
//!
//! These are the oracles the exact engines are checked against, so they stay
//! deliberately simple: bisection with a two-level error estimate.

use gauss_quad::GaussLegendre;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

/// Cached Gauss–Legendre nodes and weights on [-1, 1].
pub struct GlRule {
    pairs: Vec<(f64, f64)>,
}

impl GlRule {
    pub fn new(n: usize) -> Self {
        let gl = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
        GlRule { pairs: gl.as_node_weight_pairs().to_vec() }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        self.pairs.iter().map(move |&(x, w)| (c + h * x, h * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn gl15() -> &'static GlRule {
    static R: OnceLock<GlRule> = OnceLock::new();
    R.get_or_init(|| GlRule::new(15))
}

/// Shared rule of a given order (orders are cached lazily).
pub fn gl(n: usize) -> &'static GlRule {
    use std::collections::HashMap;
    use std::sync::Mutex;
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static GlRule>>> = OnceLock::new();
    let m = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = m.lock().unwrap();
    *guard.entry(n).or_insert_with(|| Box::leak(Box::new(GlRule::new(n))))
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_depth: u32,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-14, rel: 1e-12, max_depth: 40 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel, ..Default::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Adaptive bisection with a 15-point Gauss–Legendre rule. The local error is
/// the difference between the whole-interval rule and the sum over halves.
pub fn adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Estimate {
    if a == b {
        return Estimate { value: 0.0, error: 0.0, evaluations: 0 };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let rule = gl15();
    let mut evals = 0usize;
    let mut eval = |x0: f64, x1: f64, f: &mut dyn FnMut(f64) -> f64| {
        evals += rule.len();
        rule.integrate(x0, x1, f)
    };
    let whole = eval(lo, hi, &mut f);
    // Stack of (a, b, coarse estimate, depth).
    let mut stack = vec![(lo, hi, whole, 0u32)];
    let mut total = 0.0;
    let mut err = 0.0;
    // First pass with a global scale guess; the relative target uses |whole|.
    let scale = whole.abs();
    while let Some((x0, x1, coarse, depth)) = stack.pop() {
        let mid = 0.5 * (x0 + x1);
        let l = eval(x0, mid, &mut f);
        let r = eval(mid, x1, &mut f);
        let fine = l + r;
        let local = (fine - coarse).abs();
        let width = (x1 - x0) / (hi - lo);
        let target = (tol.abs.max(tol.rel * scale.max(fine.abs()))) * width.max(1e-3);
        if local <= target || depth >= tol.max_depth || mid <= x0 || mid >= x1 {
            total += fine;
            err += local;
        } else {
            stack.push((x0, mid, l, depth + 1));
            stack.push((mid, x1, r, depth + 1));
        }
    }
    Estimate { value: sign * total, error: err, evaluations: evals }
}

/// Adaptive integration over an interval with possibly infinite endpoints.
/// Half-lines are mapped by x = a + s/(1-s); the full line is split at 0.
pub fn adaptive_ext(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Estimate {
    adaptive_ext_dyn(&f, a, b, tol)
}

fn adaptive_ext_dyn(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Estimate {
    assert!(a <= b || a.is_nan() || b.is_nan(), "interval must satisfy a <= b");
    let combine = |x: Estimate, y: Estimate| Estimate {
        value: x.value + y.value,
        error: x.error + y.error,
        evaluations: x.evaluations + y.evaluations,
    };
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive(f, a, b, tol),
        (true, false) => adaptive(
            |s| {
                let d = 1.0 - s;
                let v = f(a + s / d) / (d * d);
                if v.is_finite() { v } else { 0.0 }
            },
            0.0,
            1.0,
            tol,
        ),
        (false, true) => adaptive(
            |s| {
                let d = 1.0 - s;
                let v = f(b - s / d) / (d * d);
                if v.is_finite() { v } else { 0.0 }
            },
            0.0,
            1.0,
            tol,
        ),
        (false, false) => combine(adaptive_ext_dyn(f, f64::NEG_INFINITY, 0.0, tol), adaptive_ext_dyn(f, 0.0, f64::INFINITY, tol)),
    }
}

/// Nested adaptive integration: variable `i` ranges over `bounds(i, outer)`,
/// where `outer` holds the already fixed variables `x_0..x_{i-1}`.
pub fn nested(
    dim: usize,
    bounds: &dyn Fn(usize, &[f64]) -> (f64, f64),
    f: &dyn Fn(&[f64]) -> f64,
    tol: Tolerance,
) -> f64 {
    fn go(
        level: usize,
        dim: usize,
        x: &mut Vec<f64>,
        bounds: &dyn Fn(usize, &[f64]) -> (f64, f64),
        f: &dyn Fn(&[f64]) -> f64,
        tol: Tolerance,
    ) -> f64 {
        if level == dim {
            return f(x);
        }
        let (a, b) = bounds(level, x);
        if !(b > a) {
            return 0.0;
        }
        let cell = std::cell::RefCell::new(std::mem::take(x));
        let est = adaptive_ext(
            |s| {
                let mut xs = cell.borrow().clone();
                xs.push(s);
                go(level + 1, dim, &mut xs, bounds, f, tol)
            },
            a,
            b,
            tol,
        );
        *x = cell.into_inner();
        est.value
    }
    let mut x = Vec::with_capacity(dim);
    go(0, dim, &mut x, bounds, f, tol)
}

/// Tensor-product Gauss–Legendre over a box.
pub fn tensor_gl(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], n: usize) -> f64 {
    let rule = gl(n);
    let dim = lo.len();
    let pts: Vec<Vec<(f64, f64)>> = (0..dim).map(|i| rule.mapped(lo[i], hi[i]).collect()).collect();
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    let mut total = 0.0;
    if dim == 0 {
        return f(&x);
    }
    loop {
        let mut w = 1.0;
        for i in 0..dim {
            let (xi, wi) = pts[i][idx[i]];
            x[i] = xi;
            w *= wi;
        }
        total += w * f(&x);
        let mut i = 0;
        loop {
            idx[i] += 1;
            if idx[i] < n {
                break;
            }
            idx[i] = 0;
            i += 1;
            if i == dim {
                return total;
            }
        }
    }
}

/// Collapsed Gauss–Legendre rule on the simplex spanned by `verts` (d+1
/// points in d dimensions). The Duffy map sends the cube onto the simplex with
/// Jacobian `prod (1-u_i)^{d-1-i}` times the simplex volume factor.
pub fn simplex_gl(f: &dyn Fn(&[f64]) -> f64, verts: &[Vec<f64>], n: usize) -> f64 {
    let d = verts.len() - 1;
    let v0 = &verts[0];
    let edges: Vec<Vec<f64>> = verts[1..].iter().map(|v| v.iter().zip(v0).map(|(a, b)| a - b).collect()).collect();
    let jac = determinant_f64(&edges).abs();
    if jac == 0.0 {
        return 0.0;
    }
    let f_std = |u: &[f64]| -> f64 {
        // Barycentric weights from cube coordinates.
        let mut lam = vec![0.0; d];
        let mut rest = 1.0;
        let mut w = 1.0;
        for i in 0..d {
            lam[i] = rest * u[i];
            w *= rest;
            rest *= 1.0 - u[i];
        }
        // lam are the barycentric coordinates of vertices 1..d.
        let mut x = v0.clone();
        for (l, e) in lam.iter().zip(&edges) {
            for (xi, ei) in x.iter_mut().zip(e) {
                *xi += l * ei;
            }
        }
        w * f(&x)
    };
    let lo = vec![0.0; d];
    let hi = vec![1.0; d];
    jac * tensor_gl(&f_std, &lo, &hi, n)
}

/// Plain LU determinant for small dense f64 matrices.
/// Linear inequality `a·y ≤ b`.
pub type HalfSpace = (Vec<f64>, f64);

const FM_TOL: f64 = 1e-12;

fn normalize(row: &HalfSpace) -> Option<HalfSpace> {
    let scale = row.0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale <= FM_TOL {
        return None;
    }
    Some((row.0.iter().map(|x| x / scale).collect(), row.1 / scale))
}

fn push_unique(rows: &mut Vec<HalfSpace>, row: HalfSpace) {
    let same = |r: &HalfSpace| r.0.iter().zip(&row.0).all(|(a, b)| (a - b).abs() <= 1e-10);
    if let Some(r) = rows.iter_mut().find(|r| same(r)) {
        r.1 = r.1.min(row.1);
    } else {
        rows.push(row);
    }
}

/// Fourier–Motzkin projections: entry `i` constrains `y_0..=y_i` only.
/// `None` when a constant row is violated (empty polytope).
fn projections(dim: usize, rows: &[HalfSpace]) -> Option<Vec<Vec<HalfSpace>>> {
    let mut cur: Vec<HalfSpace> = Vec::new();
    for r in rows {
        match normalize(r) {
            Some(n) => push_unique(&mut cur, n),
            None if r.1 < -FM_TOL => return None,
            None => {}
        }
    }
    let mut out = vec![Vec::new(); dim];
    for j in (0..dim).rev() {
        out[j] = cur.clone();
        if j == 0 {
            break;
        }
        let (mut pos, mut neg, mut next) = (Vec::new(), Vec::new(), Vec::new());
        for r in cur {
            if r.0[j] > FM_TOL {
                pos.push(r);
            } else if r.0[j] < -FM_TOL {
                neg.push(r);
            } else {
                push_unique(&mut next, r);
            }
        }
        for p in &pos {
            for q in &neg {
                let (cp, cq) = (p.0[j], -q.0[j]);
                let a: Vec<f64> = p.0.iter().zip(&q.0).map(|(x, y)| x / cp + y / cq).collect();
                let row = (a, p.1 / cp + q.1 / cq);
                match normalize(&row) {
                    Some(n) => push_unique(&mut next, n),
                    None if row.1 < -FM_TOL => return None,
                    None => {}
                }
            }
        }
        cur = next;
    }
    Some(out)
}

/// Integral of a vector-valued `f` over the bounded polytope `{a·y ≤ b}`,
/// variables nested with `y_0` outermost. Each variable's range is split
/// where the next variable's bounds cross, so every panel sees a smooth
/// integrand; panels are at most `panel` long with an `n`-point rule.
pub fn polytope_gl(dim: usize, rows: &[HalfSpace], f: &mut dyn FnMut(&[f64]) -> Vec<f64>, m: usize, panel: f64, n: usize) -> Vec<f64> {
    let mut acc = vec![0.0; m];
    let Some(sys) = projections(dim, rows) else {
        return acc;
    };
    fn range(sys: &[HalfSpace], i: usize, y: &[f64]) -> (f64, f64) {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (a, b) in sys {
            let c = a[i];
            if c.abs() <= FM_TOL {
                continue;
            }
            let rhs = b - a[..i].iter().zip(y).map(|(x, z)| x * z).sum::<f64>();
            if c > 0.0 {
                hi = hi.min(rhs / c);
            } else {
                lo = lo.max(rhs / c);
            }
        }
        (lo, hi)
    }
    fn go(i: usize, dim: usize, sys: &[Vec<HalfSpace>], y: &mut Vec<f64>, w: f64, f: &mut dyn FnMut(&[f64]) -> Vec<f64>, acc: &mut [f64], panel: f64, n: usize) {
        let (lo, hi) = range(&sys[i], i, y);
        if !(hi > lo) {
            return;
        }
        assert!(lo.is_finite() && hi.is_finite(), "polytope must be bounded");
        let mut cuts = vec![lo, hi];
        if i + 1 < dim {
            // Bounds of y_{i+1} as affine functions α + β y_i.
            let lines: Vec<(f64, f64)> = sys[i + 1]
                .iter()
                .filter(|(a, _)| a[i + 1].abs() > FM_TOL)
                .map(|(a, b)| {
                    let rhs = b - a[..i].iter().zip(y.iter()).map(|(x, z)| x * z).sum::<f64>();
                    (rhs / a[i + 1], -a[i] / a[i + 1])
                })
                .collect();
            for (p, &(a1, b1)) in lines.iter().enumerate() {
                for &(a2, b2) in &lines[p + 1..] {
                    if (b1 - b2).abs() > FM_TOL {
                        let x = (a2 - a1) / (b1 - b2);
                        if x > lo && x < hi {
                            cuts.push(x);
                        }
                    }
                }
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for win in cuts.windows(2) {
            let len = win[1] - win[0];
            if len <= 0.0 {
                continue;
            }
            let panels = (len / panel).ceil().max(1.0) as usize;
            let h = len / panels as f64;
            for pnl in 0..panels {
                let a = win[0] + pnl as f64 * h;
                for (x, wx) in gl(n).mapped(a, a + h) {
                    y.push(x);
                    if i + 1 == dim {
                        let v = f(y);
                        for (s, vi) in acc.iter_mut().zip(v) {
                            *s += w * wx * vi;
                        }
                    } else {
                        go(i + 1, dim, sys, y, w * wx, f, acc, panel, n);
                    }
                    y.pop();
                }
            }
        }
    }
    let mut y = Vec::with_capacity(dim);
    go(0, dim, &sys, &mut y, 1.0, f, &mut acc, panel, n);
    acc
}

pub fn determinant_f64(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let k = a[r][c] / a[c][c];
            for j in c..n {
                a[r][j] -= k * a[c][j];
            }
        }
    }
    det
}
