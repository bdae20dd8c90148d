//! Exact quadratic forms of Feynman graphs in spanning-tree coordinates.
//!
//! With `y_f = x_{a(f)} - x_{b(f)}` for tree edges `f`, every edge difference
//! is an integer combination `ℓ_e · y`, and the Gaussian part of the weight is
//! `exp(-<y, A y>)` with `A = A_s ⊗ I_n`, `A_s = Σ_e ℓ_e ℓ_e^T / 4t_e`.
//! `B = 4 Π_e t_e · A` has integer polynomial entries and `P_γ = det B`.

use crate::graphs::StableGraph;
use crate::linalg::{poly_adjugate, poly_det};
use crate::poly::Poly;
use crate::scalar::{qi, ratio_to_f64, Q};
use crate::wick::for_each_pairing;
use crate::{Error, Result};
use num_traits::{One, Zero};
use std::f64::consts::PI;

/// Positions relative to the root: `x_v - x_root = pos[v] · y`.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeCoordinates {
    pub tree: Vec<usize>,
    pub pos: Vec<Vec<i64>>,
    /// `x_a - x_b = ell[e] · y` for every edge.
    pub ell: Vec<Vec<i64>>,
}

impl TreeCoordinates {
    pub fn new(g: &StableGraph, tree: &[usize]) -> Result<Self> {
        let v = g.num_vertices();
        if tree.len() + 1 != v {
            return Err(Error::InvalidParameter(format!("a spanning tree of {v} vertices has {} edges, got {}", v - 1, tree.len())));
        }
        let d = tree.len();
        let mut pos: Vec<Option<Vec<i64>>> = vec![None; v];
        pos[0] = Some(vec![0; d]);
        // Repeated sweeps suffice for the small trees handled here.
        for _ in 0..v {
            for (k, &f) in tree.iter().enumerate() {
                let (a, b) = g.endpoints(f);
                match (pos[a].clone(), pos[b].clone()) {
                    (Some(pa), None) => {
                        let mut pb = pa;
                        pb[k] -= 1;
                        pos[b] = Some(pb);
                    }
                    (None, Some(pb)) => {
                        let mut pa = pb;
                        pa[k] += 1;
                        pos[a] = Some(pa);
                    }
                    _ => {}
                }
            }
        }
        let pos: Vec<Vec<i64>> = pos.into_iter().collect::<Option<_>>().ok_or_else(|| Error::InvalidParameter("edge set is not a spanning tree".into()))?;
        let ell = g
            .edges()
            .iter()
            .enumerate()
            .map(|(e, _)| {
                let (a, b) = g.endpoints(e);
                pos[a].iter().zip(&pos[b]).map(|(x, y)| x - y).collect()
            })
            .collect();
        Ok(TreeCoordinates { tree: tree.to_vec(), pos, ell })
    }

    pub fn dim(&self) -> usize {
        self.tree.len()
    }
}

/// `A_s` and `B_s = 4 Π t · A_s` for one coordinate direction; the full form
/// in `n` dimensions is the Kronecker product with `I_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticFormT {
    pub n: usize,
    pub num_edges: usize,
    pub coords: TreeCoordinates,
    /// `B_s` entries, polynomials in `t_0..t_{k-1}`.
    pub b: Vec<Vec<Poly<Q>>>,
}

impl QuadraticFormT {
    /// `A_s(t)` numerically.
    pub fn a_scalar(&self, t: &[f64]) -> Vec<Vec<f64>> {
        let d = self.coords.dim();
        let mut a = vec![vec![0.0; d]; d];
        for (e, l) in self.coords.ell.iter().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    a[i][j] += (l[i] * l[j]) as f64 / (4.0 * t[e]);
                }
            }
        }
        a
    }

    pub fn prod_t(&self) -> Poly<Q> {
        Poly::monomial(vec![1; self.num_edges], Q::one())
    }

    /// `P_γ = det(B) = det(B_s)^n`.
    pub fn p_gamma(&self) -> Poly<Q> {
        poly_det(&self.b, self.num_edges).pow(self.n as u32)
    }

    /// `det(B)` assembled from the full `n(|V|-1)` block matrix, for checking
    /// the Kronecker shortcut.
    pub fn p_gamma_full(&self) -> Poly<Q> {
        let d = self.coords.dim();
        let big = d * self.n;
        let k = self.num_edges;
        let m: Vec<Vec<Poly<Q>>> = (0..big)
            .map(|r| (0..big).map(|c| if r % self.n == c % self.n { self.b[r / self.n][c / self.n].clone() } else { Poly::zero(k) }).collect())
            .collect();
        poly_det(&m, k)
    }
}

pub fn assemble_quadratic_form(g: &StableGraph, tree: &[usize], n: usize) -> Result<QuadraticFormT> {
    let coords = TreeCoordinates::new(g, tree)?;
    let k = g.num_edges();
    let d = coords.dim();
    let mut b = vec![vec![Poly::zero(k); d]; d];
    for (e, l) in coords.ell.iter().enumerate() {
        let mut others = vec![1u32; k];
        others[e] = 0;
        for i in 0..d {
            for j in 0..d {
                let c = l[i] * l[j];
                if c != 0 {
                    b[i][j].add_term(others.clone(), qi(c));
                }
            }
        }
    }
    Ok(QuadraticFormT { n, num_edges: k, coords, b })
}

/// `P_γ` from the lowest spanning tree.
pub fn p_gamma(g: &StableGraph, n: usize) -> Result<Poly<Q>> {
    Ok(assemble_quadratic_form(g, &g.spanning_tree()?, n)?.p_gamma())
}

/// `I_A^K = ∫ y^K exp(-<y,Ay>) dy = 𝒫_A^K / P_γ^{(|K|+1)/2}` with
/// `𝒫_A^K = π^{d/2} 2^d (Π t)^{d/2} · numer`, `d = n(|V|-1)`, and `numer` the
/// pairing sum of `C/2`, `C = 4 Π t · adj(B)`. The `1/2` per pairing is the
/// covariance of `exp(-<y,Ay>)`, which is `(2A)^{-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct IakSymbolic {
    pub d: usize,
    pub num_edges: usize,
    pub k_abs: u32,
    pub numer: Poly<Q>,
    pub p_gamma: Poly<Q>,
}

impl IakSymbolic {
    /// Twice the homogeneous degree of `𝒫_A^K`.
    pub fn twice_numerator_degree(&self) -> Option<u64> {
        let h = if self.numer.is_zero() { return None } else { self.numer.homogeneous_degree()? };
        Some((self.num_edges * self.d) as u64 + 2 * h as u64)
    }

    pub fn value(&self, t: &[f64]) -> f64 {
        let num = self.numer.map_coeffs(ratio_to_f64).eval(t);
        let pg = self.p_gamma.map_coeffs(ratio_to_f64).eval(t);
        let prod: f64 = t.iter().product();
        let d = self.d as f64;
        PI.powf(d / 2.0) * 2f64.powf(d) * prod.powf(d / 2.0) * num / pg.powf((self.k_abs as f64 + 1.0) / 2.0)
    }
}

/// `2 R_γ(n,K) = n|E|(|V|-1) + |K| [(|E|-1) n (|V|-1) + 1]`.
pub fn twice_r_gamma(n: usize, edges: usize, vertices: usize, k_abs: u32) -> u64 {
    let d = (n * (vertices - 1)) as u64;
    edges as u64 * d + k_abs as u64 * ((edges as u64 - 1) * d + 1)
}

/// `2 deg Q_A^{J,K} = -2|J| + n|E| + n(|V|-1)(|E|-1)(|K|+1)`, where `|J| ≤ 0`
/// is the signed total of the `t` powers from kernel derivatives.
pub fn twice_q_degree(n: usize, edges: usize, vertices: usize, j_sum: i64, k_abs: u32) -> i64 {
    let d = (n * (vertices - 1)) as i64;
    -2 * j_sum + (n * edges) as i64 + d * (edges as i64 - 1) * (k_abs as i64 + 1)
}

/// `K` is indexed by `(tree edge a, coordinate i) ↦ a n + i`.
pub fn i_a_k(form: &QuadraticFormT, k: &[u32]) -> Result<IakSymbolic> {
    Ok(i_a_k_batch(form, &[k.to_vec()])?.pop().expect("one multi-index in, one out"))
}

/// [`i_a_k`] for many multi-indices, sharing `P_γ` and the adjugate.
pub fn i_a_k_batch(form: &QuadraticFormT, ks: &[Vec<u32>]) -> Result<Vec<IakSymbolic>> {
    let n = form.n;
    let ds = form.coords.dim();
    for k in ks {
        if k.len() != ds * n {
            return Err(Error::InvalidParameter(format!("multi-index must have {} entries, got {}", ds * n, k.len())));
        }
        let k_abs: u32 = k.iter().sum();
        if k_abs > 14 {
            return Err(Error::SizeLimit(format!("|K| = {k_abs} exceeds 14 for the exact pairing sum")));
        }
    }
    let nv = form.num_edges;
    let p = form.p_gamma();
    let mut c: Option<Vec<Vec<Poly<Q>>>> = None;
    let mut out = Vec::with_capacity(ks.len());
    for k in ks {
        let k_abs: u32 = k.iter().sum();
        if k_abs % 2 == 1 {
            out.push(IakSymbolic { d: ds * n, num_edges: nv, k_abs, numer: Poly::zero(nv), p_gamma: p.clone() });
            continue;
        }
        let c = c.get_or_insert_with(|| {
            let det_s = poly_det(&form.b, nv);
            let adj = poly_adjugate(&form.b, nv);
            let scale = form.prod_t().scale(&qi(2)).mul(&det_s.pow(n as u32 - 1));
            adj.iter().map(|row| row.iter().map(|e| e.mul(&scale)).collect()).collect()
        });
        let mut idx = Vec::new();
        for (pos, &m) in k.iter().enumerate() {
            idx.extend(std::iter::repeat(pos).take(m as usize));
        }
        let mut numer = Poly::zero(nv);
        for_each_pairing(idx.len(), &mut |pairs| {
            let mut term = Poly::one(nv);
            for &(x, y) in pairs {
                let (ax, ix) = (idx[x] / n, idx[x] % n);
                let (ay, iy) = (idx[y] / n, idx[y] % n);
                if ix != iy {
                    return;
                }
                term = term.mul(&c[ax][ay]);
            }
            numer = numer.add(&term);
        });
        out.push(IakSymbolic { d: ds * n, num_edges: nv, k_abs, numer, p_gamma: p.clone() });
    }
    Ok(out)
}

/// Exact check that `x_a - x_b` written through one tree agrees with
/// another: for trees `T`, `T'` there is an integer `U` with `y_T' = U y_T`,
/// and `B_T = U^T B_T' U`.
pub fn tree_change(g: &StableGraph, from: &[usize], to: &[usize]) -> Result<Vec<Vec<i64>>> {
    let a = TreeCoordinates::new(g, from)?;
    let b = TreeCoordinates::new(g, to)?;
    // y'_f' = ell_T[f'] · y_T
    Ok(b.tree.iter().map(|&f| a.ell[f].clone()).collect())
}

pub fn b_transforms(g: &StableGraph, from: &[usize], to: &[usize]) -> Result<bool> {
    let fa = assemble_quadratic_form(g, from, 1)?;
    let fb = assemble_quadratic_form(g, to, 1)?;
    let u = tree_change(g, from, to)?;
    let d = fa.coords.dim();
    let k = g.num_edges();
    for i in 0..d {
        for j in 0..d {
            let mut s = Poly::zero(k);
            for p in 0..d {
                for q in 0..d {
                    let c = u[p][i] * u[q][j];
                    if c != 0 {
                        s = s.add(&fb.b[p][q].scale(&qi(c)));
                    }
                }
            }
            if s != fa.b[i][j] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `Σ_e c_e / t_e`, stored by coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct InvT(pub Vec<Q>);

impl InvT {
    pub fn zero(k: usize) -> Self {
        InvT(vec![Q::zero(); k])
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        self.0.iter().zip(t).map(|(c, &te)| ratio_to_f64(c) / te).sum()
    }

    pub fn eval_exact(&self, t: &[Q]) -> Q {
        self.0.iter().zip(t).fold(Q::zero(), |acc, (c, te)| acc + c / te)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| c.is_zero())
    }
}

/// Half-space exponent for a boundary sign pattern `β` (`true` = image
/// term). Normal coordinates are `x_{v,n} = u + z̃_v` with `z̃_1 = z_1`,
/// `z̃_i = z_i - z_{i-1}`, `z̃_V = -z_{V-1}`. Then the full exponent is
/// `Q(ȳ) + Q^β(z,u) + Q^β(u)`:
/// `Q(ȳ) = <ȳ, A_s ȳ>` per tangential direction,
/// `Q^β(z,u) = z^T M z + u b·z`, `Q^β(u) = c u^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct HnDecomposition {
    pub tangential: Vec<Vec<InvT>>,
    pub z_quadratic: Vec<Vec<InvT>>,
    pub uz_linear: Vec<InvT>,
    pub u_quadratic: InvT,
    /// `z̃_v` as integer combinations of `z`.
    pub z_tilde: Vec<Vec<i64>>,
}

pub fn z_tilde_basis(v: usize) -> Vec<Vec<i64>> {
    let m = v.saturating_sub(1);
    (0..v)
        .map(|i| {
            let mut r = vec![0i64; m];
            if i < m {
                r[i] += 1;
            }
            if i >= 1 {
                r[i - 1] -= 1;
            }
            r
        })
        .collect()
}

pub fn hn_q_decomposition(g: &StableGraph, beta: &[bool], tree: &[usize]) -> Result<HnDecomposition> {
    let k = g.num_edges();
    if beta.len() != k {
        return Err(Error::InvalidParameter(format!("need one boundary sign per edge ({k}), got {}", beta.len())));
    }
    let coords = TreeCoordinates::new(g, tree)?;
    let d = coords.dim();
    let v = g.num_vertices();
    let m = v - 1;
    let zt = z_tilde_basis(v);
    let mut tangential = vec![vec![InvT::zero(k); d]; d];
    let mut zq = vec![vec![InvT::zero(k); m]; m];
    let mut uz = vec![InvT::zero(k); m];
    let mut uu = InvT::zero(k);
    let quarter = Q::new(1.into(), 4.into());
    for e in 0..k {
        let l = &coords.ell[e];
        for i in 0..d {
            for j in 0..d {
                tangential[i][j].0[e] += qi(l[i] * l[j]) * quarter.clone();
            }
        }
        let (a, b) = g.endpoints(e);
        // Direct: (z̃_a - z̃_b)^2 / 4t. Image: (2u + z̃_a + z̃_b)^2 / 4t.
        let sgn = if beta[e] { 1 } else { -1 };
        let w: Vec<i64> = zt[a].iter().zip(&zt[b]).map(|(x, y)| x + sgn * y).collect();
        for i in 0..m {
            for j in 0..m {
                zq[i][j].0[e] += qi(w[i] * w[j]) * quarter.clone();
            }
        }
        if beta[e] {
            for i in 0..m {
                uz[i].0[e] += qi(w[i]);
            }
            uu.0[e] += Q::one();
        }
    }
    Ok(HnDecomposition { tangential, z_quadratic: zq, uz_linear: uz, u_quadratic: uu, z_tilde: zt })
}

impl HnDecomposition {
    /// Exact value of the reassembled exponent at tree/half-space coordinates.
    pub fn eval_exact(&self, t: &[Q], ybar: &[Vec<Q>], z: &[Q], u: &Q) -> Q {
        let mut s = Q::zero();
        for row in ybar {
            for i in 0..row.len() {
                for j in 0..row.len() {
                    s += self.tangential[i][j].eval_exact(t) * &row[i] * &row[j];
                }
            }
        }
        for i in 0..z.len() {
            for j in 0..z.len() {
                s += self.z_quadratic[i][j].eval_exact(t) * &z[i] * &z[j];
            }
            s += self.uz_linear[i].eval_exact(t) * u * &z[i];
        }
        s + self.u_quadratic.eval_exact(t) * u * u
    }
}
