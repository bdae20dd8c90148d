//! Feynman weights `f_γ(t)[α]` of local functionals: the integrand of the
//! weight over edge times, its Taylor truncations and their remainders.
//!
//! `field` holds the product-form test fields, `form` the exact quadratic-form
//! algebra in spanning-tree coordinates, `engine` the per-direction numerics
//! and `symbolic` the term-by-term truncated weights.

pub mod engine;
pub mod field;
pub mod form;
pub mod symbolic;

use crate::graphs::StableGraph;
use crate::heatkernel::Geometry;
use crate::{Error, Result};
pub use engine::{CoordOrders, DegreeArray};
pub use field::{Field, Field1D, FIELD_NAMES};
pub use symbolic::{f_gamma_taylor, SymbolicWeight, WeightTerm};

/// Taylor orders above this are evaluated at the cap; the tail check then
/// decides whether the capped value is still exact to double precision.
pub const ORDER_CAP: usize = 40;
/// Extra degrees computed beyond a truncation to read off the series tail.
pub const TAIL_EXTRA: usize = 16;

/// Interaction at every vertex of a graph: a coupling times a product over
/// incident half-edges of derivatives of the field (tails) or of the
/// propagator (edge ends).
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFunctionalSpec {
    pub n: usize,
    pub coupling: Vec<f64>,
    /// Multi-index of length `n` for every half-edge.
    pub derivs: Vec<Vec<u32>>,
    /// Declared order `O(v)` of every vertex.
    pub order: Vec<u32>,
}

impl LocalFunctionalSpec {
    /// `c φ^k` at every vertex: no derivatives, order zero.
    pub fn monomial(g: &StableGraph, n: usize, c: f64) -> Self {
        LocalFunctionalSpec {
            n,
            coupling: vec![c; g.num_vertices()],
            derivs: vec![vec![0; n]; g.num_half_edges()],
            order: vec![0; g.num_vertices()],
        }
    }

    /// Puts `multi` on half-edge `h` and raises the vertex order to fit.
    pub fn with_derivative(mut self, g: &StableGraph, h: usize, multi: &[u32]) -> Self {
        self.derivs[h] = multi.to_vec();
        let v = g.vertex_of(h);
        self.order[v] = self.order[v].max(self.vertex_derivative_count(g, v));
        self
    }

    fn vertex_derivative_count(&self, g: &StableGraph, v: usize) -> u32 {
        (0..g.num_half_edges()).filter(|&h| g.vertex_of(h) == v).map(|h| self.derivs[h].iter().sum::<u32>()).sum()
    }

    /// `O(γ) = Σ_v O(v)`.
    pub fn interaction_order(&self) -> u32 {
        self.order.iter().sum()
    }

    pub fn coupling_product(&self) -> f64 {
        self.coupling.iter().product()
    }

    pub fn validate(&self, g: &StableGraph) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if self.coupling.len() != g.num_vertices() || self.order.len() != g.num_vertices() {
            return Err(Error::InvalidParameter("one coupling and order per vertex required".into()));
        }
        if self.derivs.len() != g.num_half_edges() || self.derivs.iter().any(|m| m.len() != self.n) {
            return Err(Error::InvalidParameter(format!("one multi-index of length {} per half-edge required", self.n)));
        }
        for v in 0..g.num_vertices() {
            let used = self.vertex_derivative_count(g, v);
            if used > self.order[v] {
                return Err(Error::InvalidParameter(format!("vertex {v} uses {used} derivatives but has order {}", self.order[v])));
            }
        }
        Ok(())
    }

    /// Derivative orders in coordinate direction `i`.
    pub fn coord_orders(&self, g: &StableGraph, i: usize) -> CoordOrders {
        CoordOrders {
            tails: g.tails().iter().map(|&h| (g.vertex_of(h), self.derivs[h][i])).collect(),
            edges: g.edges().iter().map(|&(a, b)| (self.derivs[a][i], self.derivs[b][i])).collect(),
        }
    }
}

fn check_inputs(g: &StableGraph, spec: &LocalFunctionalSpec, field: &Field) -> Result<()> {
    spec.validate(g)?;
    if field.dim() != spec.n {
        return Err(Error::InvalidParameter(format!("field has dimension {}, functional {}", field.dim(), spec.n)));
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(())
}

fn is_normal(geometry: Geometry, n: usize, i: usize) -> bool {
    geometry == Geometry::HalfSpace && i + 1 == n
}

/// Full integrand `f_γ(t)[α]` in closed form on the plane; on the half space
/// the normal direction uses a fixed composite rule.
pub fn f_gamma_closed(g: &StableGraph, t: &[f64], spec: &LocalFunctionalSpec, field: &Field, geometry: Geometry) -> Result<f64> {
    check_inputs(g, spec, field)?;
    let mut v = spec.coupling_product();
    for i in 0..spec.n {
        let orders = spec.coord_orders(g, i);
        v *= if is_normal(geometry, spec.n, i) {
            engine::halfline_direct(g, t, &field.factors[i], &orders)?
        } else {
            engine::line_closed(g, t, &field.factors[i], &orders)?
        };
    }
    Ok(v)
}

/// Oracle: adaptive quadrature of the defining integral, one coordinate
/// direction at a time.
pub fn f_gamma_numeric(g: &StableGraph, t: &[f64], spec: &LocalFunctionalSpec, field: &Field, geometry: Geometry) -> Result<f64> {
    check_inputs(g, spec, field)?;
    if g.num_vertices() > 3 || spec.n > 4 {
        return Err(Error::SizeLimit("quadrature oracle needs at most 3 vertices and n ≤ 4".into()));
    }
    let mut v = spec.coupling_product();
    for i in 0..spec.n {
        let orders = spec.coord_orders(g, i);
        v *= if is_normal(geometry, spec.n, i) {
            engine::halfline_quadrature(g, t, &field.factors[i], &orders, 1e-10)?
        } else {
            engine::line_quadrature(g, t, &field.factors[i], &orders, 1e-10)?
        };
    }
    Ok(v)
}

/// Degree-binned terms of the hierarchical Taylor expansion, all coordinate
/// directions combined, coupling included.
pub fn taylor_contributions(
    g: &StableGraph,
    t: &[f64],
    spec: &LocalFunctionalSpec,
    field: &Field,
    geometry: Geometry,
    levels: &[Vec<usize>],
    caps: &[usize],
) -> Result<DegreeArray> {
    check_inputs(g, spec, field)?;
    if caps.len() != levels.len() {
        return Err(Error::InvalidParameter("one degree cap per level required".into()));
    }
    let h = engine::Hierarchy::new(g, levels)?;
    let hs = if geometry == Geometry::HalfSpace { Some(engine::HalfSetup::new(g, levels)?) } else { None };
    let mut total: Option<DegreeArray> = None;
    for i in 0..spec.n {
        let orders = spec.coord_orders(g, i);
        let arr = match &hs {
            Some(hs) if is_normal(geometry, spec.n, i) => engine::halfline_contributions(g, hs, t, &field.factors[i], &orders, caps)?,
            _ => engine::line_contributions(g, &h, t, &field.factors[i], &orders, caps)?,
        };
        total = Some(match total {
            None => arr,
            Some(acc) => acc.convolve(&arr),
        });
    }
    let mut total = total.expect("n ≥ 1");
    total.scale(spec.coupling_product());
    Ok(total)
}

/// A truncated weight together with the full value and the remainder.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedWeight {
    pub truncated: f64,
    pub full: f64,
    /// `f - f^{N′}`, read off the series tail when it has converged.
    pub remainder: f64,
    pub tail_converged: bool,
    /// Orders actually used after applying [`ORDER_CAP`].
    pub orders_used: Vec<usize>,
    pub capped: bool,
}

/// `f^{N′}` for per-level orders `n_prime`, with its remainder.
pub fn f_gamma_truncated(
    g: &StableGraph,
    t: &[f64],
    spec: &LocalFunctionalSpec,
    field: &Field,
    geometry: Geometry,
    levels: &[Vec<usize>],
    n_prime: &[usize],
) -> Result<TruncatedWeight> {
    let used: Vec<usize> = n_prime.iter().map(|&n| n.min(ORDER_CAP)).collect();
    let capped = used != n_prime;
    let ext: Vec<usize> = used.iter().map(|&n| n + TAIL_EXTRA).collect();
    let arr = taylor_contributions(g, t, spec, field, geometry, levels, &ext)?;
    let truncated = arr.sum_box(&used);
    let tail = arr.sum_outside(&used);
    let scale = truncated.abs().max(tail.abs());
    let tail_converged = arr.edge_magnitude(2) <= 1e-15 * scale;
    let (full, remainder) = if tail_converged {
        (truncated + tail, tail)
    } else {
        let full = f_gamma_closed(g, t, spec, field, geometry)?;
        (full, full - truncated)
    };
    Ok(TruncatedWeight { truncated, full, remainder, tail_converged, orders_used: used, capped })
}
