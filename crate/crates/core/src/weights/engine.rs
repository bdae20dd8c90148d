//! Per-coordinate evaluation of Feynman weights and their Taylor truncations.
//!
//! Kernels and product test fields factorize over coordinate directions, so
//! each direction is a graph integral on the line (plane, tangential
//! directions) or the half line (normal direction). Taylor truncation couples
//! directions only through total degree: each direction returns its
//! contributions binned by degree and the caller convolves.
//!
//! Expansion levels: the edge set is partitioned into `S_1..S_p`. Level `j`
//! uses spanning-forest coordinates of `S_j` over the clusters formed by the
//! earlier levels, a cluster sitting at the mean of its vertices. The level-`j`
//! Gaussian `exp(-Σ_{S_j} (ℓ_e^{(j)} · y_j)^2 / 4t_e)` is kept exactly;
//! everything else is expanded jointly, and the contribution of a monomial is
//! binned by its degree in each level.

use super::field::Field1D;
use crate::graphs::StableGraph;
use crate::heatkernel::derivative_poly;
use crate::linalg::Matrix;
use crate::quad::{gl, nested, Tolerance};
use crate::scalar::{qi, ratio_to_f64, Q};
use crate::{Error, Result};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Contributions binned by per-level degree, each level capped.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeArray {
    pub caps: Vec<usize>,
    pub data: Vec<f64>,
}

impl DegreeArray {
    pub fn zeros(caps: &[usize]) -> Self {
        let size = caps.iter().map(|c| c + 1).product();
        DegreeArray { caps: caps.to_vec(), data: vec![0.0; size] }
    }

    pub fn index(&self, d: &[usize]) -> usize {
        let mut idx = 0;
        for (j, &dj) in d.iter().enumerate() {
            idx = idx * (self.caps[j] + 1) + dj;
        }
        idx
    }

    pub fn degrees(&self, mut idx: usize) -> Vec<usize> {
        let mut d = vec![0; self.caps.len()];
        for j in (0..self.caps.len()).rev() {
            d[j] = idx % (self.caps[j] + 1);
            idx /= self.caps[j] + 1;
        }
        d
    }

    pub fn get(&self, d: &[usize]) -> f64 {
        self.data[self.index(d)]
    }

    pub fn scale(&mut self, c: f64) {
        for x in &mut self.data {
            *x *= c;
        }
    }

    pub fn add_assign(&mut self, o: &DegreeArray, c: f64) {
        assert_eq!(self.caps, o.caps);
        for (x, y) in self.data.iter_mut().zip(&o.data) {
            *x += c * y;
        }
    }

    /// Degree-wise product truncated at the caps.
    pub fn convolve(&self, o: &DegreeArray) -> DegreeArray {
        assert_eq!(self.caps, o.caps);
        let mut r = DegreeArray::zeros(&self.caps);
        for i in 0..self.data.len() {
            if self.data[i] == 0.0 {
                continue;
            }
            let di = self.degrees(i);
            for j in 0..o.data.len() {
                if o.data[j] == 0.0 {
                    continue;
                }
                let dj = o.degrees(j);
                let s: Vec<usize> = di.iter().zip(&dj).map(|(a, b)| a + b).collect();
                if s.iter().zip(&self.caps).all(|(a, c)| a <= c) {
                    let k = r.index(&s);
                    r.data[k] += self.data[i] * o.data[j];
                }
            }
        }
        r
    }

    /// Sum over the box `d_j ≤ n_j`.
    pub fn sum_box(&self, n: &[usize]) -> f64 {
        (0..self.data.len()).filter(|&i| self.degrees(i).iter().zip(n).all(|(d, m)| d <= m)).map(|i| self.data[i]).sum()
    }

    /// Sum over everything outside the box, up to the caps.
    pub fn sum_outside(&self, n: &[usize]) -> f64 {
        (0..self.data.len()).filter(|&i| !self.degrees(i).iter().zip(n).all(|(d, m)| d <= m)).map(|i| self.data[i]).sum()
    }

    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Largest magnitude among bins whose degree in some level is within
    /// `width` of its cap: a proxy for the unresolved series tail.
    pub fn edge_magnitude(&self, width: usize) -> f64 {
        (0..self.data.len())
            .filter(|&i| self.degrees(i).iter().zip(&self.caps).any(|(d, c)| *c >= width && *d + width > *c))
            .map(|i| self.data[i].abs())
            .fold(0.0, f64::max)
    }
}

/// Dense truncated power series in a few variables grouped into levels.
pub(crate) struct Layout {
    pub level_of: Vec<usize>,
    pub caps: Vec<usize>,
    stride: Vec<usize>,
    code_to_idx: Vec<u32>,
    pub monos: Vec<Vec<u32>>,
    codes: Vec<usize>,
    pub degs: Vec<Vec<usize>>,
}

impl Layout {
    pub fn new(level_of: &[usize], caps: &[usize]) -> Self {
        let nvars = level_of.len();
        let mut stride = vec![1usize; nvars];
        let mut size = 1usize;
        for i in 0..nvars {
            stride[i] = size;
            size *= caps[level_of[i]] + 1;
        }
        let mut code_to_idx = vec![u32::MAX; size];
        let mut monos = Vec::new();
        let mut codes = Vec::new();
        let mut degs = Vec::new();
        for code in 0..size {
            let mut m = vec![0u32; nvars];
            let mut d = vec![0usize; caps.len()];
            let mut rest = code;
            for i in (0..nvars).rev() {
                m[i] = (rest / stride[i]) as u32;
                rest %= stride[i];
                d[level_of[i]] += m[i] as usize;
            }
            if d.iter().zip(caps).all(|(a, c)| a <= c) {
                code_to_idx[code] = monos.len() as u32;
                monos.push(m);
                codes.push(code);
                degs.push(d);
            }
        }
        Layout { level_of: level_of.to_vec(), caps: caps.to_vec(), stride, code_to_idx, monos, codes, degs }
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    fn fits(&self, a: usize, b: usize) -> bool {
        self.degs[a].iter().zip(&self.degs[b]).zip(&self.caps).all(|((x, y), c)| x + y <= *c)
    }

    fn product_index(&self, a: usize, b: usize) -> usize {
        self.code_to_idx[self.codes[a] + self.codes[b]] as usize
    }

    pub fn one(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.len()];
        s[0] = 1.0;
        s
    }

    pub fn mul(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.len()];
        let nb: Vec<usize> = (0..b.len()).filter(|&j| b[j] != 0.0).collect();
        for i in 0..a.len() {
            if a[i] == 0.0 {
                continue;
            }
            for &j in &nb {
                if self.fits(i, j) {
                    r[self.product_index(i, j)] += a[i] * b[j];
                }
            }
        }
        r
    }

    /// Series of the affine form `c0 + Σ lin_k y_k`.
    pub fn affine(&self, c0: f64, lin: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.len()];
        s[0] = c0;
        for (k, &c) in lin.iter().enumerate() {
            if c != 0.0 && self.caps[self.level_of[k]] >= 1 {
                s[self.code_to_idx[self.stride[k]] as usize] += c;
            }
        }
        s
    }

    /// `Σ_j coeffs[j] ζ^j` with `ζ` an affine series, by Horner.
    pub fn compose(&self, coeffs: &[f64], zeta: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.len()];
        for &c in coeffs.iter().rev() {
            p = self.mul(&p, zeta);
            p[0] += c;
        }
        p
    }

    /// `exp(-D)` for a series `D` without constant term.
    pub fn exp_neg(&self, d: &[f64]) -> Vec<f64> {
        assert!(d[0] == 0.0);
        let mut total = self.one();
        let mut term = self.one();
        let neg: Vec<f64> = d.iter().map(|x| -x).collect();
        for m in 1.. {
            term = self.mul(&term, &neg);
            if term.iter().all(|&x| x == 0.0) {
                break;
            }
            for x in &mut term {
                *x /= m as f64;
            }
            for (t, x) in total.iter_mut().zip(&term) {
                *t += x;
            }
        }
        total
    }

    /// Square of an affine form divided by `4t`, as a series.
    pub fn square_over_4t(&self, c0: f64, lin: &[f64], t: f64) -> Vec<f64> {
        let a = self.affine(c0, lin);
        let mut s = self.mul(&a, &a);
        for x in &mut s {
            *x /= 4.0 * t;
        }
        s
    }
}

/// Gaussian moments `∫ y^K exp(-y^T A y / 2) dy` for all `K` in a layout's
/// level block, by Isserlis' recursion on the covariance.
fn gaussian_moments(a: &[Vec<f64>], cap: usize) -> Result<Vec<(Vec<u32>, f64)>> {
    let d = a.len();
    if d == 0 {
        return Ok(vec![(vec![], 1.0)]);
    }
    let m = DMatrix::from_fn(d, d, |i, j| a[i][j]);
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let det: f64 = chol.l().diagonal().iter().map(|x| x * x).product();
    let cov = chol.inverse();
    let norm = (2.0 * PI).powf(d as f64 / 2.0) / det.sqrt();
    let cov_rows: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| cov[(i, j)]).collect()).collect();
    Ok(normalized_moments(&cov_rows, cap).into_iter().map(|(k, v)| (k, v * norm)).collect())
}

/// Orders of derivatives in one coordinate direction.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordOrders {
    /// `(vertex, order)` for every tail.
    pub tails: Vec<(usize, u32)>,
    /// Orders at the two ends of every edge.
    pub edges: Vec<(u32, u32)>,
}

impl CoordOrders {
    pub fn none(g: &StableGraph) -> Self {
        CoordOrders { tails: g.tails().iter().map(|&h| (g.vertex_of(h), 0)).collect(), edges: vec![(0, 0); g.num_edges()] }
    }

    fn vertex_series(&self, field: &Field1D, v: usize, x0: f64, order: usize) -> Vec<f64> {
        let mut s = vec![0.0; order + 1];
        s[0] = 1.0;
        for &(w, m) in &self.tails {
            if w == v {
                let f = field.nth_derivative(m).series(x0, order);
                let mut r = vec![0.0; order + 1];
                for i in 0..=order {
                    if s[i] == 0.0 {
                        continue;
                    }
                    for j in 0..=order - i {
                        r[i + j] += s[i] * f[j];
                    }
                }
                s = r;
            }
        }
        s
    }

    fn edge_poly(&self, e: usize, t: f64) -> Result<Option<(Vec<f64>, bool)>> {
        let (ka, kb) = self.edges[e];
        if ka + kb == 0 {
            return Ok(None);
        }
        // ∂_{x_a}^{ka} ∂_{x_b}^{kb} K(x_a - x_b) = (-1)^{kb} P_{ka+kb}(x_a - x_b) K,
        // and for the image K(x_a + x_b) both derivatives act with sign +1.
        let p = derivative_poly(0, ka + kb)?;
        let pf = p.poly.map_coeffs(ratio_to_f64);
        let deg = pf.degree_in(0).unwrap_or(0) as usize;
        let mut c = vec![0.0; deg + 1];
        for (m, &v) in pf.terms() {
            c[m[0] as usize] += v * (1.0 / t).powi(m[1] as i32);
        }
        Ok(Some((c, kb % 2 == 1)))
    }
}

/// Hierarchical coordinates on the line for a partition of the edges.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    pub nvars: usize,
    pub level_of_var: Vec<usize>,
    pub edge_level: Vec<usize>,
    /// `x_v = W + x_of[v] · y`.
    pub x_of: Vec<Vec<f64>>,
    pub ell: Vec<Vec<f64>>,
    /// `ℓ_e` restricted to its own level's variables.
    pub ell_own: Vec<Vec<f64>>,
    /// `|det ∂x/∂(W,y)|`.
    pub jacobian: f64,
    /// Cluster of every vertex after each level.
    pub clusters: Vec<Vec<usize>>,
}

impl Hierarchy {
    pub fn new(g: &StableGraph, levels: &[Vec<usize>]) -> Result<Self> {
        let v = g.num_vertices();
        let k = g.num_edges();
        let mut edge_level = vec![usize::MAX; k];
        for (j, s) in levels.iter().enumerate() {
            for &e in s {
                if e >= k || edge_level[e] != usize::MAX {
                    return Err(Error::InvalidParameter("levels must partition the edge set".into()));
                }
                edge_level[e] = j;
            }
        }
        if edge_level.iter().any(|&l| l == usize::MAX) {
            return Err(Error::InvalidParameter("levels must partition the edge set".into()));
        }
        let mut cluster: Vec<usize> = (0..v).collect();
        let mut rows: Vec<Vec<Q>> = Vec::new();
        let mut level_of_var = Vec::new();
        let mut clusters = Vec::new();
        let center = |cl: &[usize], c: usize| -> Vec<Q> {
            let members: Vec<usize> = (0..v).filter(|&u| cl[u] == c).collect();
            let w = Q::new(1.into(), (members.len() as i64).into());
            (0..v).map(|u| if cl[u] == c { w.clone() } else { qi(0) }).collect()
        };
        for (j, s) in levels.iter().enumerate() {
            let before = cluster.clone();
            let mut merged = cluster.clone();
            let find = |m: &Vec<usize>, mut x: usize| {
                while m[x] != x {
                    x = m[x];
                }
                x
            };
            // Union-find over the cluster labels (labels are vertex ids).
            let mut parent: Vec<usize> = (0..v).collect();
            for &e in s {
                let (a, b) = g.endpoints(e);
                let (ca, cb) = (before[a], before[b]);
                let (ra, rb) = (find(&parent, ca), find(&parent, cb));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                    let xa = center(&before, ca);
                    let xb = center(&before, cb);
                    rows.push(xa.iter().zip(&xb).map(|(p, q)| p - q).collect());
                    level_of_var.push(j);
                }
            }
            for u in 0..v {
                merged[u] = find(&parent, before[u]);
            }
            cluster = merged;
            clusters.push(cluster.clone());
        }
        if cluster.iter().any(|&c| c != cluster[0]) {
            return Err(Error::Disconnected);
        }
        let nvars = rows.len();
        debug_assert_eq!(nvars + 1, v);
        let mut full = vec![vec![Q::new(1.into(), (v as i64).into()); v]];
        full.extend(rows);
        let (det, inv) = Matrix::from_rows(full).det_inverse();
        let inv = inv.ok_or_else(|| Error::InvalidParameter("degenerate hierarchical coordinates".into()))?;
        let jacobian = 1.0 / ratio_to_f64(&det).abs();
        // Column 0 of the inverse multiplies W; the rest multiply y.
        let x_of: Vec<Vec<f64>> = (0..v).map(|u| (1..v).map(|c| ratio_to_f64(inv.get(u, c))).collect()).collect();
        let ell: Vec<Vec<f64>> = (0..k)
            .map(|e| {
                let (a, b) = g.endpoints(e);
                x_of[a].iter().zip(&x_of[b]).map(|(p, q)| p - q).collect()
            })
            .collect();
        let mut ell_own = Vec::with_capacity(k);
        for e in 0..k {
            let j = edge_level[e];
            let own: Vec<f64> = (0..nvars).map(|i| if level_of_var[i] == j { ell[e][i] } else { 0.0 }).collect();
            if (0..nvars).any(|i| level_of_var[i] > j && ell[e][i].abs() > 1e-12) {
                return Err(Error::InvalidParameter(format!("edge {e} depends on a later level")));
            }
            ell_own.push(own);
        }
        Ok(Hierarchy { nvars, level_of_var, edge_level, x_of, ell, ell_own, jacobian, clusters })
    }

    pub fn num_levels(&self) -> usize {
        self.clusters.len()
    }

    /// Level-`j` Gaussian matrix `A_j` for `exp(-y_j^T A_j y_j / 2)`.
    pub fn level_matrix(&self, j: usize, t: &[f64]) -> Vec<Vec<f64>> {
        let vars: Vec<usize> = (0..self.nvars).filter(|&i| self.level_of_var[i] == j).collect();
        let mut a = vec![vec![0.0; vars.len()]; vars.len()];
        for (e, l) in self.ell_own.iter().enumerate() {
            if self.edge_level[e] != j {
                continue;
            }
            for (p, &i) in vars.iter().enumerate() {
                for (q, &m) in vars.iter().enumerate() {
                    a[p][q] += l[i] * l[m] / (2.0 * t[e]);
                }
            }
        }
        a
    }
}

/// Moments of every layout monomial: products of per-level Gaussian moments.
fn layout_moments(lay: &Layout, h: &Hierarchy, t: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![1.0; lay.len()];
    for j in 0..lay.caps.len() {
        let vars: Vec<usize> = (0..h.nvars).filter(|&i| h.level_of_var[i] == j).collect();
        let a = h.level_matrix(j, t);
        let table = gaussian_moments(&a, lay.caps[j])?;
        let map: std::collections::HashMap<Vec<u32>, f64> = table.into_iter().collect();
        for (idx, m) in lay.monos.iter().enumerate() {
            let sub: Vec<u32> = vars.iter().map(|&i| m[i]).collect();
            out[idx] *= map[&sub];
        }
    }
    Ok(out)
}

fn check_times(t: &[f64], k: usize) -> Result<()> {
    if t.len() != k {
        return Err(Error::InvalidParameter(format!("need {k} times, got {}", t.len())));
    }
    if let Some(&bad) = t.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::InvalidParameter(format!("times must be positive, got {bad}")));
    }
    Ok(())
}

/// Composite Gauss–Legendre nodes on `[a, b]`.
fn composite(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    (0..panels).flat_map(|p| gl(order).mapped(a + p as f64 * h, a + (p + 1) as f64 * h).collect::<Vec<_>>()).collect()
}

/// Support of the product of the tail fields: centre and width scale.
fn field_window(field: &Field1D, orders: &CoordOrders) -> Result<(f64, f64)> {
    let n = orders.tails.len();
    if n == 0 {
        return Err(Error::Divergent("a graph without tails has infinite volume on the line".into()));
    }
    let s = field.s * n as f64;
    Ok((field.c, 16.0 / s.sqrt() + 2.0))
}

/// Degree-binned contributions of one line direction.
pub fn line_contributions(
    g: &StableGraph,
    h: &Hierarchy,
    t: &[f64],
    field: &Field1D,
    orders: &CoordOrders,
    caps: &[usize],
) -> Result<DegreeArray> {
    check_times(t, g.num_edges())?;
    let lay = Layout::new(&h.level_of_var, caps);
    // Kernel part: derivative polynomials and the expanded deviations.
    let mut kp = lay.one();
    let mut dev = vec![0.0; lay.len()];
    let mut pref = h.jacobian;
    for e in 0..g.num_edges() {
        pref *= (4.0 * PI * t[e]).powf(-0.5);
        let full = lay.square_over_4t(0.0, &h.ell[e], t[e]);
        let own = lay.square_over_4t(0.0, &h.ell_own[e], t[e]);
        for i in 0..lay.len() {
            dev[i] += full[i] - own[i];
        }
        if let Some((c, neg)) = orders.edge_poly(e, t[e])? {
            let mut p = lay.compose(&c, &lay.affine(0.0, &h.ell[e]));
            if neg {
                p.iter_mut().for_each(|x| *x = -*x);
            }
            kp = lay.mul(&kp, &p);
        }
    }
    dev[0] = 0.0;
    kp = lay.mul(&kp, &lay.exp_neg(&dev));
    let mom = layout_moments(&lay, h, t)?;
    // G[a][bin] = Σ_b kp[b] mom[a+b]
    let mut out = DegreeArray::zeros(caps);
    let nb: Vec<usize> = (0..lay.len()).filter(|&b| kp[b] != 0.0).collect();
    let mut gtab: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lay.len()];
    for a in 0..lay.len() {
        let mut acc: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for &b in &nb {
            if lay.fits(a, b) {
                let ab = lay.product_index(a, b);
                *acc.entry(out.index(&lay.degs[ab])).or_insert(0.0) += kp[b] * mom[ab];
            }
        }
        gtab[a] = acc.into_iter().filter(|(_, v)| *v != 0.0).collect();
    }
    let order: usize = caps.iter().sum();
    let (c, half) = field_window(field, orders)?;
    let zetas: Vec<Vec<f64>> = (0..g.num_vertices()).map(|v| lay.affine(0.0, &h.x_of[v])).collect();
    for (w, wt) in composite(c - half, c + half, 8, 24) {
        let mut fp = lay.one();
        for v in 0..g.num_vertices() {
            let s = orders.vertex_series(field, v, w, order);
            if s.len() == 1 || s[1..].iter().all(|&x| x == 0.0) {
                for x in &mut fp {
                    *x *= s[0];
                }
            } else {
                fp = lay.mul(&fp, &lay.compose(&s, &zetas[v]));
            }
        }
        for a in 0..lay.len() {
            if fp[a] == 0.0 {
                continue;
            }
            for &(bin, val) in &gtab[a] {
                out.data[bin] += wt * fp[a] * val;
            }
        }
    }
    out.scale(pref);
    Ok(out)
}

/// Full line integral in closed form: the integrand is a polynomial times a
/// Gaussian on `R^V`.
pub fn line_closed(g: &StableGraph, t: &[f64], field: &Field1D, orders: &CoordOrders) -> Result<f64> {
    check_times(t, g.num_edges())?;
    let v = g.num_vertices();
    field_window(field, orders)?;
    let mut m = DMatrix::<f64>::zeros(v, v);
    let mut b = vec![0.0; v];
    let mut c0 = 0.0;
    let mut pref = 1.0;
    let mut poly = crate::poly::Poly::<f64>::one(v);
    for e in 0..g.num_edges() {
        let (a, bb) = g.endpoints(e);
        pref *= (4.0 * PI * t[e]).powf(-0.5);
        if a != bb {
            let w = 1.0 / (2.0 * t[e]);
            m[(a, a)] += w;
            m[(bb, bb)] += w;
            m[(a, bb)] -= w;
            m[(bb, a)] -= w;
        }
        if let Some((c, neg)) = orders.edge_poly(e, t[e])? {
            let mut lin = vec![0.0; v];
            lin[a] += 1.0;
            lin[bb] -= 1.0;
            let d = crate::poly::Poly::affine(v, 0.0, &lin);
            let mut p = crate::poly::Poly::zero(v);
            for &ci in c.iter().rev() {
                p = p.mul(&d).add(&crate::poly::Poly::constant(v, ci));
            }
            if neg {
                p = p.neg();
            }
            poly = poly.mul(&p);
        }
    }
    for &(u, k) in &orders.tails {
        let f = field.nth_derivative(k);
        m[(u, u)] += f.s;
        b[u] += f.s * f.c;
        c0 -= f.s * f.c * f.c / 2.0;
        let mut p = crate::poly::Poly::zero(v);
        for (j, &a) in f.poly.iter().enumerate() {
            let mut mono = vec![0u32; v];
            mono[u] = j as u32;
            p.add_term(mono, a);
        }
        poly = poly.mul(&p);
    }
    gaussian_poly_integral(&m, &b, c0, &poly).map(|x| pref * x)
}

/// `∫_{R^d} P(x) exp(-x^T M x / 2 + b·x + c0) dx`.
pub fn gaussian_poly_integral(m: &DMatrix<f64>, b: &[f64], c0: f64, poly: &crate::poly::Poly<f64>) -> Result<f64> {
    let d = b.len();
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let det: f64 = chol.l().diagonal().iter().map(|x| x * x).product();
    let cov = chol.inverse();
    let bv = nalgebra::DVector::from_column_slice(b);
    let mu = &cov * &bv;
    let norm = (2.0 * PI).powf(d as f64 / 2.0) / det.sqrt() * (c0 + 0.5 * bv.dot(&mu)).exp();
    // P(μ + z), then E[z^K] under N(0, cov).
    let subs: Vec<crate::poly::Poly<f64>> = (0..d)
        .map(|i| {
            let mut lin = vec![0.0; d];
            lin[i] = 1.0;
            crate::poly::Poly::affine(d, mu[i], &lin)
        })
        .collect();
    let shifted = poly.compose(&subs);
    let cap = shifted.total_degree().unwrap_or(0) as usize;
    let cov_rows: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| cov[(i, j)]).collect()).collect();
    let table = normalized_moments(&cov_rows, cap);
    let mut s = 0.0;
    for (mono, c) in shifted.terms() {
        s += c * table.get(mono).copied().unwrap_or(0.0);
    }
    Ok(norm * s)
}

/// `E[z^K]` under `N(0, cov)` for `|K| ≤ cap`, by Isserlis' recursion.
/// Monomials are ordered by code and every strict sub-multi-index has a
/// smaller code, so one forward sweep suffices.
fn normalized_moments(cov: &[Vec<f64>], cap: usize) -> std::collections::HashMap<Vec<u32>, f64> {
    let d = cov.len();
    let lay = Layout::new(&vec![0; d], &[cap]);
    let mut val = vec![0.0; lay.len()];
    val[0] = 1.0;
    for idx in 1..lay.len() {
        let k = &lay.monos[idx];
        let i = (0..d).find(|&i| k[i] > 0).unwrap();
        let mut km = k.clone();
        km[i] -= 1;
        let mut s = 0.0;
        for l in 0..d {
            if km[l] == 0 {
                continue;
            }
            let mut kk = km.clone();
            kk[l] -= 1;
            let code: usize = kk.iter().enumerate().map(|(v, &e)| e as usize * lay.stride[v]).sum();
            s += cov[i][l] * km[l] as f64 * val[lay.code_to_idx[code] as usize];
        }
        val[idx] = s;
    }
    lay.monos.iter().cloned().zip(val).collect()
}

/// Nested adaptive quadrature whose absolute floor comes from a coarse pass
/// over `|f|`, so that sign-changing integrands with small integrals stop.
fn nested_with_scale(dim: usize, bounds: &dyn Fn(usize, &[f64]) -> (f64, f64), f: &dyn Fn(&[f64]) -> f64, rel: f64) -> f64 {
    let magnitude = nested(dim, bounds, &|x| f(x).abs(), Tolerance::new(1e-300, 1e-4));
    nested(dim, bounds, f, Tolerance::new(1e-3 * rel * magnitude, rel))
}

/// Integrand of one line direction at vertex positions `x`.
fn line_integrand(g: &StableGraph, t: &[f64], field: &Field1D, orders: &CoordOrders, x: &[f64]) -> Result<f64> {
    let mut v = 1.0;
    for e in 0..g.num_edges() {
        let (a, b) = g.endpoints(e);
        let d = x[a] - x[b];
        let mut k = (4.0 * PI * t[e]).powf(-0.5) * (-d * d / (4.0 * t[e])).exp();
        if let Some((c, neg)) = orders.edge_poly(e, t[e])? {
            let p = c.iter().rev().fold(0.0, |acc, &ci| acc * d + ci);
            k *= if neg { -p } else { p };
        }
        v *= k;
    }
    for &(u, m) in &orders.tails {
        v *= field.nth_derivative(m).eval(x[u]);
    }
    Ok(v)
}

/// Oracle: nested adaptive quadrature of the defining integral in the
/// one-level tree coordinates, with boxes sized by the Gaussian covariance.
pub fn line_quadrature(g: &StableGraph, t: &[f64], field: &Field1D, orders: &CoordOrders, rel: f64) -> Result<f64> {
    check_times(t, g.num_edges())?;
    let h = Hierarchy::new(g, &[(0..g.num_edges()).collect()])?;
    let (c, half) = field_window(field, orders)?;
    let a = h.level_matrix(0, t);
    let d = h.nvars;
    let radius: Vec<f64> = if d == 0 {
        vec![]
    } else {
        let m = DMatrix::from_fn(d, d, |i, j| a[i][j]);
        let cov = m.cholesky().ok_or(Error::NotPositiveDefinite)?.inverse();
        (0..d).map(|i| 12.0 * cov[(i, i)].sqrt()).collect()
    };
    let bounds = |i: usize, _: &[f64]| if i == 0 { (c - half, c + half) } else { (-radius[i - 1], radius[i - 1]) };
    let err = std::cell::Cell::new(None);
    let f = |p: &[f64]| {
        let x: Vec<f64> = (0..g.num_vertices()).map(|u| p[0] + h.x_of[u].iter().zip(&p[1..]).map(|(a, b)| a * b).sum::<f64>()).collect();
        match line_integrand(g, t, field, orders, &x) {
            Ok(v) => v,
            Err(e) => {
                err.set(Some(e));
                0.0
            }
        }
    };
    let v = nested_with_scale(d + 1, &bounds, &f, rel);
    if let Some(e) = err.take() {
        return Err(e);
    }
    Ok(h.jacobian * v)
}

/// Half-line setup: `x_v = u + z̃_v`; level 0 must connect every vertex.
#[derive(Clone, Debug)]
pub struct HalfSetup {
    pub z_tilde: Vec<Vec<f64>>,
    pub edge_level: Vec<usize>,
    pub num_levels: usize,
    pub jacobian: f64,
}

impl HalfSetup {
    pub fn new(g: &StableGraph, levels: &[Vec<usize>]) -> Result<Self> {
        let v = g.num_vertices();
        if v > 3 {
            return Err(Error::SizeLimit(format!("half-line weights support at most 3 vertices, got {v}")));
        }
        let h = Hierarchy::new(g, levels)?;
        if h.clusters[0].iter().any(|&c| c != h.clusters[0][0]) {
            return Err(Error::InvalidParameter(
                "on the half space the first expansion level must connect all vertices".into(),
            ));
        }
        let zt = super::form::z_tilde_basis(v);
        let z_tilde: Vec<Vec<f64>> = zt.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
        let mut cols = vec![vec![1.0; v]];
        for j in 0..v - 1 {
            cols.push((0..v).map(|u| z_tilde[u][j]).collect());
        }
        let jacobian = crate::quad::determinant_f64(&cols).abs();
        let num_levels = h.num_levels();
        Ok(HalfSetup { z_tilde, edge_level: h.edge_level, num_levels, jacobian })
    }
}

/// `∫_{P_u} z^K exp(-Q(z)) dz` for all `K` of total degree `≤ cap`, where
/// `Q(z) = z^T M z + q·z` (one or two variables). Composite Gauss–Legendre on
/// the polytope, trimmed to where the Gaussian factor is not negligible.
fn pu_moments(m: &[Vec<f64>], q: &[f64], c: f64, u: f64, lay: &Layout) -> Vec<f64> {
    let dim = q.len();
    let mut out = vec![0.0; lay.len()];
    if dim == 0 {
        out[0] = (-c).exp();
        return out;
    }
    let degree = lay.degs.iter().map(|d| d.iter().sum::<usize>()).max().unwrap_or(0);
    let mut pw = vec![vec![1.0; degree + 1]; dim];
    for (z, w) in pu_nodes(m, q, u, degree) {
        let e: f64 = c + (0..dim).map(|i| (0..dim).map(|j| m[i][j] * z[i] * z[j]).sum::<f64>() + q[i] * z[i]).sum::<f64>();
        let base = w * (-e).exp();
        if base == 0.0 {
            continue;
        }
        for i in 0..dim {
            for k in 1..=degree {
                pw[i][k] = pw[i][k - 1] * z[i];
            }
        }
        for (idx, mono) in lay.monos.iter().enumerate() {
            let mut p = base;
            for (i, &k) in mono.iter().enumerate() {
                p *= pw[i][k as usize];
            }
            out[idx] += p;
        }
    }
    out
}

/// Quadrature nodes on `P_u` (one or two variables), trimmed to where
/// `z^K exp(-(z^T M z + q·z))` with `|K| ≤ degree` is not negligible.
fn pu_nodes(m: &[Vec<f64>], q: &[f64], u: f64, degree: usize) -> Vec<([f64; 2], f64)> {
    let reach = 9.0 + (degree as f64).sqrt();
    // Window and panel count in units of the Gaussian width, 20 nodes each.
    let trim = |prec: f64, lin: f64, lo: f64, hi: f64| -> (f64, f64, usize) {
        if prec <= 1e-300 || hi <= lo {
            return (lo, hi, 2);
        }
        let centre = (-lin / (2.0 * prec)).clamp(lo, hi);
        let w = reach / prec.sqrt();
        let (a, b) = (lo.max(centre - w), hi.min(centre + w));
        let panels = ((b - a) * prec.sqrt() / 6.0).ceil().clamp(1.0, 8.0) as usize;
        (a, b, panels)
    };
    let mut out = Vec::new();
    match q.len() {
        0 => out.push(([0.0; 2], 1.0)),
        1 => {
            let (a, b, np) = trim(m[0][0], q[0], -u, u);
            if b > a {
                out.extend(composite(a, b, np, 20).into_iter().map(|(z, w)| ([z, 0.0], w)));
            }
        }
        2 => {
            // z_1 ∈ [-u, 2u], z_2 ∈ [z_1 - u, u]; outer trimmed by the marginal.
            let schur = if m[1][1] > 1e-300 { m[0][0] - m[0][1] * m[0][1] / m[1][1] } else { 0.0 };
            let lin_marg = if m[1][1] > 1e-300 { q[0] - m[0][1] * q[1] / m[1][1] } else { q[0] };
            let (a, b, np) = trim(schur, lin_marg, -u, 2.0 * u);
            if b > a {
                for (z1, w1) in composite(a, b, np, 20) {
                    let (c, d, np2) = trim(m[1][1], q[1] + 2.0 * m[0][1] * z1, z1 - u, u);
                    if d > c {
                        out.extend(composite(c, d, np2, 20).into_iter().map(|(z2, w2)| ([z1, z2], w1 * w2)));
                    }
                }
            }
        }
        _ => unreachable!("at most three vertices"),
    }
    out
}

fn beta_patterns(k: usize) -> Vec<Vec<bool>> {
    (0..1u32 << k).map(|mask| (0..k).map(|e| mask >> e & 1 == 1).collect()).collect()
}

/// Panels in `u` that resolve the boundary layer of width `sqrt(t_min)`.
fn u_nodes(t: &[f64], hi: f64) -> Vec<(f64, f64)> {
    let tmin = t.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut cuts = vec![0.0];
    let mut x = tmin.sqrt();
    while x < 0.5f64.min(hi) {
        cuts.push(x);
        x *= 2.0;
    }
    let last = *cuts.last().unwrap();
    let panels = (((hi - last) / 0.75).ceil() as usize).max(1);
    for p in 1..=panels {
        cuts.push(last + (hi - last) * p as f64 / panels as f64);
    }
    cuts.windows(2).flat_map(|w| gl(16).mapped(w[0], w[1]).collect::<Vec<_>>()).collect()
}

/// Degree-binned contributions of the normal direction on the half line,
/// summed over boundary sign patterns with their signs.
pub fn halfline_contributions(
    g: &StableGraph,
    hs: &HalfSetup,
    t: &[f64],
    field: &Field1D,
    orders: &CoordOrders,
    caps: &[usize],
) -> Result<DegreeArray> {
    check_times(t, g.num_edges())?;
    let v = g.num_vertices();
    let nz = v - 1;
    let lay = Layout::new(&vec![0; nz], caps);
    let order: usize = caps.iter().sum();
    let mut out = DegreeArray::zeros(caps);
    if orders.tails.is_empty() {
        return Err(Error::Divergent("a graph without tails has infinite volume on the half line".into()));
    }
    let nodes = u_nodes(t, halfline_hi(field, orders));
    let pref: f64 = hs.jacobian * t.iter().map(|&te| (4.0 * PI * te).powf(-0.5)).product::<f64>();
    let zetas: Vec<Vec<f64>> = (0..v).map(|u| lay.affine(0.0, &hs.z_tilde[u])).collect();
    let patterns = beta_patterns(g.num_edges());
    let bins: Vec<usize> = lay.degs.iter().map(|d| out.index(&pad_degrees(d, caps.len()))).collect();
    for (u, wu) in nodes {
        let mut fp = lay.one();
        for vx in 0..v {
            let s = orders.vertex_series(field, vx, u, order);
            fp = lay.mul(&fp, &lay.compose(&s, &zetas[vx]));
        }
        for beta in &patterns {
            let sign = if beta.iter().filter(|&&b| b).count() % 2 == 0 { 1.0 } else { -1.0 };
            // Level-0 measure exp(-(z^T M z + q·z) - c u^2); other edges expanded.
            let mut mm = vec![vec![0.0; nz]; nz];
            let mut qq = vec![0.0; nz];
            let mut cu0 = 0.0;
            let mut cu = 0.0;
            let mut kp = lay.one();
            let mut dev = vec![0.0; lay.len()];
            for e in 0..g.num_edges() {
                let (a, b) = g.endpoints(e);
                let (c0, lin): (f64, Vec<f64>) = if beta[e] {
                    (2.0 * u, (0..nz).map(|i| hs.z_tilde[a][i] + hs.z_tilde[b][i]).collect())
                } else {
                    (0.0, (0..nz).map(|i| hs.z_tilde[a][i] - hs.z_tilde[b][i]).collect())
                };
                if hs.edge_level[e] == 0 {
                    for i in 0..nz {
                        for j in 0..nz {
                            mm[i][j] += lin[i] * lin[j] / (4.0 * t[e]);
                        }
                        qq[i] += 2.0 * c0 * lin[i] / (4.0 * t[e]);
                    }
                    cu0 += c0 * c0 / (4.0 * t[e]);
                } else {
                    let sq = lay.square_over_4t(c0, &lin, t[e]);
                    cu += sq[0];
                    for i in 1..lay.len() {
                        dev[i] += sq[i];
                    }
                }
                if let Some((c, neg)) = orders.edge_poly(e, t[e])? {
                    // The image term carries no sign flip for derivatives at b.
                    let mut p = lay.compose(&c, &lay.affine(c0, &lin));
                    if neg && !beta[e] {
                        p.iter_mut().for_each(|x| *x = -*x);
                    }
                    kp = lay.mul(&kp, &p);
                }
            }
            let weight = sign * (-cu).exp();
            if weight == 0.0 {
                continue;
            }
            kp = lay.mul(&kp, &lay.exp_neg(&dev));
            let full = lay.mul(&fp, &kp);
            let mom = pu_moments(&mm, &qq, cu0, u, &lay);
            for idx in 0..lay.len() {
                out.data[bins[idx]] += wu * weight * full[idx] * mom[idx];
            }
        }
    }
    out.scale(pref);
    Ok(out)
}

fn pad_degrees(d: &[usize], levels: usize) -> Vec<usize> {
    let mut r = d.to_vec();
    r.resize(levels, 0);
    r
}

/// Dirichlet integrand of the normal direction at positions `x ≥ 0`.
fn halfline_integrand(g: &StableGraph, t: &[f64], tails: &[Field1D], orders: &CoordOrders, x: &[f64]) -> Result<f64> {
    let mut val = 1.0;
    for e in 0..g.num_edges() {
        let (a, b) = g.endpoints(e);
        let pref = (4.0 * PI * t[e]).powf(-0.5);
        let d = x[a] - x[b];
        let k = match orders.edge_poly(e, t[e])? {
            None => pref * (-d * d / (4.0 * t[e])).exp() * -(-(x[a] * x[b]) / t[e]).exp_m1(),
            Some((c, neg)) => {
                let s = x[a] + x[b];
                let pd = c.iter().rev().fold(0.0, |acc, &ci| acc * d + ci);
                let ps = c.iter().rev().fold(0.0, |acc, &ci| acc * s + ci);
                let direct = if neg { -pd } else { pd } * (-d * d / (4.0 * t[e])).exp();
                pref * (direct - ps * (-s * s / (4.0 * t[e])).exp())
            }
        };
        val *= k;
    }
    for (&(a, _), f) in orders.tails.iter().zip(tails) {
        val *= f.eval(x[a]);
    }
    Ok(val)
}

/// Upper end of the `u` range: the tail fields' Gaussian is below `e^{-50}`.
fn halfline_hi(field: &Field1D, orders: &CoordOrders) -> f64 {
    field.c + 10.0 / (field.s * orders.tails.len() as f64).sqrt() + 1.0
}

/// Full normal-direction weight by fixed composite Gauss–Legendre on the
/// same `u` panels and trimmed `P_u` nodes as the expansion. The trimming
/// Gaussian is the direct kernel, which dominates the Dirichlet kernel.
pub fn halfline_direct(g: &StableGraph, t: &[f64], field: &Field1D, orders: &CoordOrders) -> Result<f64> {
    check_times(t, g.num_edges())?;
    let v = g.num_vertices();
    let nz = v - 1;
    let hs = HalfSetup::new(g, &[(0..g.num_edges()).collect()])?;
    if orders.tails.is_empty() {
        return Err(Error::Divergent("a graph without tails has infinite volume on the half line".into()));
    }
    let mut mm = vec![vec![0.0; nz]; nz];
    for e in 0..g.num_edges() {
        let (a, b) = g.endpoints(e);
        for i in 0..nz {
            for j in 0..nz {
                mm[i][j] += (hs.z_tilde[a][i] - hs.z_tilde[b][i]) * (hs.z_tilde[a][j] - hs.z_tilde[b][j]) / (4.0 * t[e]);
            }
        }
    }
    let tails: Vec<Field1D> = orders.tails.iter().map(|&(_, m)| field.nth_derivative(m)).collect();
    let mut total = 0.0;
    for (u, wu) in u_nodes(t, halfline_hi(field, orders)) {
        for (z, wz) in pu_nodes(&mm, &vec![0.0; nz], u, 0) {
            let x: Vec<f64> = (0..v).map(|a| u + hs.z_tilde[a].iter().zip(&z[..nz]).map(|(c, zi)| c * zi).sum::<f64>()).collect();
            total += wu * wz * halfline_integrand(g, t, &tails, orders, &x)?;
        }
    }
    Ok(hs.jacobian * total)
}

/// Oracle for the normal direction: nested adaptive quadrature over
/// `u ≥ 0`, `z ∈ P_u` of the Dirichlet integrand (no sign-pattern split).
pub fn halfline_quadrature(g: &StableGraph, t: &[f64], field: &Field1D, orders: &CoordOrders, rel: f64) -> Result<f64> {
    check_times(t, g.num_edges())?;
    let v = g.num_vertices();
    let hs = HalfSetup::new(g, &[(0..g.num_edges()).collect()])?;
    if orders.tails.is_empty() {
        return Err(Error::Divergent("a graph without tails has infinite volume on the half line".into()));
    }
    let hi = halfline_hi(field, orders);
    let tails: Vec<Field1D> = orders.tails.iter().map(|&(_, m)| field.nth_derivative(m)).collect();
    // The boundary layer has width sqrt(t_min); split u there so the
    // adaptive rule cannot step over it.
    let tmin = t.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut cuts = vec![0.0];
    let mut x = tmin.sqrt();
    while x < hi {
        cuts.push(x);
        x *= 2.0;
    }
    cuts.push(hi);
    let panel = std::cell::Cell::new((0.0, hi));
    let bounds = |i: usize, p: &[f64]| -> (f64, f64) {
        if i == 0 {
            return panel.get();
        }
        // x_v = u + z̃_v ≥ 0 for every v.
        let u = p[0];
        let hi = (v - i) as f64 * u;
        if i == 1 {
            (-u, hi)
        } else {
            (p[i - 1] - u, hi)
        }
    };
    let err = std::cell::Cell::new(None);
    let f = |p: &[f64]| {
        let x: Vec<f64> = (0..v).map(|a| p[0] + hs.z_tilde[a].iter().zip(&p[1..]).map(|(c, z)| c * z).sum::<f64>()).collect();
        halfline_integrand(g, t, &tails, orders, &x).unwrap_or_else(|e| {
            err.set(Some(e));
            0.0
        })
    };
    let mut r = 0.0;
    for w in cuts.windows(2) {
        panel.set((w[0], w[1]));
        r += nested_with_scale(v, &bounds, &f, rel);
    }
    if let Some(e) = err.take() {
        return Err(e);
    }
    Ok(hs.jacobian * r)
}
