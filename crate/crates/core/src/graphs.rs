//! Stable graphs: genus-labelled vertices, half-edges paired into edges, and
//! unmatched half-edges (tails).
//!
//! Automorphisms are half-edge permutations that induce a genus-preserving
//! vertex bijection and preserve the edge pairing; tails are unlabelled. With
//! that convention `|Aut|` factors as the number of admissible vertex
//! permutations times `prod tails_v! * prod_{u<v} m_uv! * prod_v loops_v! 2^loops_v`.

use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::One;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

pub const DEFAULT_AUT_CAP: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StableGraph {
    vertex_of: Vec<usize>,
    genus: Vec<u32>,
    /// Ordered edges; the pair order is the orientation.
    edges: Vec<(usize, usize)>,
    tails: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub vertex: usize,
    pub genus: u32,
    pub valence: usize,
}

/// Vertex-level description: genus, tail count and loop count per vertex and
/// the multiplicity of edges between distinct vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexForm {
    pub genus: Vec<u32>,
    pub tails: Vec<u32>,
    pub loops: Vec<u32>,
    pub mult: Vec<Vec<u32>>,
}

/// Minimal encoding over all admissible vertex labelings; equal iff isomorphic.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm(pub Vec<u32>);

impl StableGraph {
    /// Checks incidence only: every half-edge is in exactly one edge or is a tail.
    pub fn new(genus: Vec<u32>, vertex_of: Vec<usize>, edges: Vec<(usize, usize)>, tails: Vec<usize>) -> Result<Self> {
        let nh = vertex_of.len();
        if let Some(&v) = vertex_of.iter().find(|&&v| v >= genus.len()) {
            return Err(Error::MalformedGraph(format!("half-edge attached to missing vertex {v}")));
        }
        let mut seen = vec![0u8; nh];
        for &(a, b) in &edges {
            for h in [a, b] {
                if h >= nh {
                    return Err(Error::MalformedGraph(format!("edge uses unknown half-edge {h}")));
                }
                seen[h] += 1;
            }
            if a == b {
                return Err(Error::MalformedGraph(format!("edge pairs half-edge {a} with itself")));
            }
        }
        for &h in &tails {
            if h >= nh {
                return Err(Error::MalformedGraph(format!("tail uses unknown half-edge {h}")));
            }
            seen[h] += 1;
        }
        if let Some(h) = seen.iter().position(|&c| c != 1) {
            let what = if seen[h] == 0 { "dangling" } else { "reused" };
            return Err(Error::MalformedGraph(format!("{what} half-edge {h}")));
        }
        Ok(StableGraph { vertex_of, genus, edges, tails })
    }

    /// Builds a graph from vertex genera, tail counts and an edge list on
    /// vertices; half-edges are numbered edges first, then tails.
    pub fn from_vertices(genus: &[u32], tails: &[u32], edges: &[(usize, usize)]) -> Self {
        let mut vertex_of = Vec::new();
        let mut es = Vec::new();
        for &(u, v) in edges {
            let h = vertex_of.len();
            vertex_of.push(u);
            vertex_of.push(v);
            es.push((h, h + 1));
        }
        let mut ts = Vec::new();
        for (v, &t) in tails.iter().enumerate() {
            for _ in 0..t {
                ts.push(vertex_of.len());
                vertex_of.push(v);
            }
        }
        StableGraph::new(genus.to_vec(), vertex_of, es, ts).expect("generated incidence is well formed")
    }

    pub fn num_vertices(&self) -> usize {
        self.genus.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_tails(&self) -> usize {
        self.tails.len()
    }

    pub fn num_half_edges(&self) -> usize {
        self.vertex_of.len()
    }

    pub fn vertex_genus(&self, v: usize) -> u32 {
        self.genus[v]
    }

    pub fn genera(&self) -> &[u32] {
        &self.genus
    }

    pub fn vertex_of(&self, h: usize) -> usize {
        self.vertex_of[h]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn tails(&self) -> &[usize] {
        &self.tails
    }

    /// Vertex endpoints of edge `e` in orientation order.
    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        let (a, b) = self.edges[e];
        (self.vertex_of[a], self.vertex_of[b])
    }

    pub fn valence(&self, v: usize) -> usize {
        self.vertex_of.iter().filter(|&&w| w == v).count()
    }

    pub fn tails_at(&self, v: usize) -> usize {
        self.tails.iter().filter(|&&h| self.vertex_of[h] == v).count()
    }

    /// Every vertex violating `g=0 ⇒ valence ≥ 3`, `g=1 ⇒ valence ≥ 1`.
    pub fn validate_stable(&self) -> std::result::Result<(), Vec<Violation>> {
        let bad: Vec<Violation> = (0..self.num_vertices())
            .filter_map(|v| {
                let k = self.valence(v);
                let g = self.genus[v];
                let ok = match g {
                    0 => k >= 3,
                    1 => k >= 1,
                    _ => true,
                };
                (!ok).then_some(Violation { vertex: v, genus: g, valence: k })
            })
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(bad)
        }
    }

    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.num_vertices();
        let mut uf = UnionFind::new(n);
        for e in 0..self.num_edges() {
            let (u, v) = self.endpoints(e);
            uf.union(u, v);
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..n {
            groups.entry(uf.find(v)).or_default().push(v);
        }
        groups.into_values().collect()
    }

    pub fn num_components(&self) -> usize {
        self.components().len()
    }

    pub fn is_connected(&self) -> bool {
        self.num_components() <= 1
    }

    /// First Betti number `|E| - |V| + C`.
    pub fn betti(&self) -> u32 {
        (self.num_edges() + self.num_components() - self.num_vertices()) as u32
    }

    /// `b(γ) + sum_v g(v)`.
    pub fn genus(&self) -> u32 {
        self.betti() + self.genus.iter().sum::<u32>()
    }

    /// `sum_v (2 g(v) - 2 + valence(v)) = 2 g(γ) - 2 C(γ) + |T(γ)|`.
    pub fn euler_weight(&self) -> i64 {
        (0..self.num_vertices()).map(|v| 2 * self.genus[v] as i64 - 2 + self.valence(v) as i64).sum()
    }

    pub fn vertex_form(&self) -> VertexForm {
        let n = self.num_vertices();
        let mut tails = vec![0u32; n];
        let mut loops = vec![0u32; n];
        let mut mult = vec![vec![0u32; n]; n];
        for &h in &self.tails {
            tails[self.vertex_of[h]] += 1;
        }
        for e in 0..self.num_edges() {
            let (u, v) = self.endpoints(e);
            if u == v {
                loops[u] += 1;
            } else {
                mult[u][v] += 1;
                mult[v][u] += 1;
            }
        }
        VertexForm { genus: self.genus.clone(), tails, loops, mult }
    }

    /// `|Aut(γ)|`, refusing components with more than `cap` half-edges.
    pub fn automorphism_order_capped(&self, cap: usize) -> Result<BigInt> {
        for comp in self.components() {
            let nh = self.vertex_of.iter().filter(|v| comp.contains(v)).count();
            if nh > cap {
                return Err(Error::SizeLimit(format!("component with {nh} half-edges exceeds the automorphism cap {cap}")));
            }
        }
        Ok(self.vertex_form().automorphism_order())
    }

    pub fn automorphism_order(&self) -> Result<BigInt> {
        self.automorphism_order_capped(DEFAULT_AUT_CAP)
    }

    /// Exhaustive count over half-edge permutations (oracle for small graphs).
    pub fn automorphism_order_bruteforce(&self) -> Result<u64> {
        let nh = self.num_half_edges();
        if nh > 10 {
            return Err(Error::SizeLimit(format!("brute force limited to 10 half-edges, got {nh}")));
        }
        let partner: Vec<Option<usize>> = {
            let mut p = vec![None; nh];
            for &(a, b) in &self.edges {
                p[a] = Some(b);
                p[b] = Some(a);
            }
            p
        };
        let mut count = 0u64;
        let mut perm: Vec<usize> = (0..nh).collect();
        permute_all(&mut perm, 0, &mut |p| {
            // Induced vertex map must be well defined, injective and genus preserving.
            let n = self.num_vertices();
            let mut vmap: Vec<Option<usize>> = vec![None; n];
            for h in 0..nh {
                let (v, w) = (self.vertex_of[h], self.vertex_of[p[h]]);
                match vmap[v] {
                    None => vmap[v] = Some(w),
                    Some(x) if x != w => return,
                    _ => {}
                }
            }
            let mut used = vec![false; n];
            // Isolated vertices have no half-edges; they are counted below.
            for v in 0..n {
                if let Some(w) = vmap[v] {
                    if used[w] || self.genus[v] != self.genus[w] {
                        return;
                    }
                    used[w] = true;
                }
            }
            for h in 0..nh {
                match partner[h] {
                    Some(o) => {
                        if partner[p[h]] != Some(p[o]) {
                            return;
                        }
                    }
                    None => {
                        if partner[p[h]].is_some() {
                            return;
                        }
                    }
                }
            }
            count += 1;
        });
        // Isolated vertices of equal genus permute freely among themselves.
        let mut isolated: BTreeMap<u32, u64> = BTreeMap::new();
        for v in 0..self.num_vertices() {
            if self.valence(v) == 0 {
                *isolated.entry(self.genus[v]).or_default() += 1;
            }
        }
        Ok(isolated.values().fold(count, |acc, &m| acc * (1..=m).product::<u64>()))
    }

    pub fn canonical_form(&self) -> CanonicalForm {
        self.vertex_form().canonical().0
    }

    pub fn disjoint_union(&self, other: &StableGraph) -> StableGraph {
        let nv = self.num_vertices();
        let nh = self.num_half_edges();
        let mut genus = self.genus.clone();
        genus.extend(&other.genus);
        let mut vertex_of = self.vertex_of.clone();
        vertex_of.extend(other.vertex_of.iter().map(|v| v + nv));
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|&(a, b)| (a + nh, b + nh)));
        let mut tails = self.tails.clone();
        tails.extend(other.tails.iter().map(|h| h + nh));
        StableGraph { vertex_of, genus, edges, tails }
    }

    /// Spanning tree by Kruskal in edge order: lowest edge indices first.
    pub fn spanning_tree(&self) -> Result<Vec<usize>> {
        if !self.is_connected() {
            return Err(Error::Disconnected);
        }
        let mut uf = UnionFind::new(self.num_vertices());
        let mut tree = Vec::new();
        for e in 0..self.num_edges() {
            let (u, v) = self.endpoints(e);
            if uf.find(u) != uf.find(v) {
                uf.union(u, v);
                tree.push(e);
            }
        }
        Ok(tree)
    }

    /// All spanning trees (edge index sets), for tree-independence checks.
    pub fn all_spanning_trees(&self) -> Vec<Vec<usize>> {
        let need = self.num_vertices().saturating_sub(1);
        let mut out = Vec::new();
        let m = self.num_edges();
        fn go(g: &StableGraph, start: usize, need: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == need {
                let mut uf = UnionFind::new(g.num_vertices());
                for &e in cur.iter() {
                    let (u, v) = g.endpoints(e);
                    if uf.find(u) == uf.find(v) {
                        return;
                    }
                    uf.union(u, v);
                }
                out.push(cur.clone());
                return;
            }
            for e in start..m {
                cur.push(e);
                go(g, e + 1, need, m, cur, out);
                cur.pop();
            }
        }
        go(self, 0, need, m, &mut Vec::new(), &mut out);
        out
    }

    /// Splits off the subgraph spanned by `subset` (edge indices).
    pub fn subgraph_surgery(&self, subset: &[usize]) -> Surgery {
        let sub: BTreeSet<usize> = subset.iter().copied().collect();
        let mut verts: BTreeSet<usize> = BTreeSet::new();
        for &e in &sub {
            let (u, v) = self.endpoints(e);
            verts.insert(u);
            verts.insert(v);
        }
        let vlist: Vec<usize> = verts.iter().copied().collect();
        let local = |v: usize| vlist.iter().position(|&w| w == v).unwrap();
        // Subgraph: every half-edge at V(γ') that is not in a chosen edge becomes a tail.
        let mut vertex_of = Vec::new();
        let mut edges = Vec::new();
        let mut tails = Vec::new();
        let mut sub_half = BTreeMap::new();
        for &e in &sub {
            let (a, b) = self.edges[e];
            for h in [a, b] {
                sub_half.insert(h, vertex_of.len());
                vertex_of.push(local(self.vertex_of[h]));
            }
            edges.push((sub_half[&a], sub_half[&b]));
        }
        for h in 0..self.num_half_edges() {
            if verts.contains(&self.vertex_of[h]) && !sub_half.contains_key(&h) {
                sub_half.insert(h, vertex_of.len());
                tails.push(vertex_of.len());
                vertex_of.push(local(self.vertex_of[h]));
            }
        }
        let genus: Vec<u32> = vlist.iter().map(|&v| self.genus[v]).collect();
        let sub_graph = StableGraph { vertex_of, genus, edges, tails };

        let shared_tails: Vec<usize> = self.tails.iter().copied().filter(|h| verts.contains(&self.vertex_of[*h])).collect();
        let f_edges: Vec<usize> = (0..self.num_edges())
            .filter(|e| !sub.contains(e))
            .filter(|&e| {
                let (u, v) = self.endpoints(e);
                verts.contains(&u) || verts.contains(&v)
            })
            .collect();
        let mut outer_vertices: BTreeSet<usize> = BTreeSet::new();
        for &e in &f_edges {
            let (u, v) = self.endpoints(e);
            for w in [u, v] {
                if !verts.contains(&w) {
                    outer_vertices.insert(w);
                }
            }
        }

        // Quotient: V(γ') collapses to one distinguished vertex whose genus keeps g(γ/γ') = g(γ).
        let (quotient, distinguished) = if sub.is_empty() {
            (self.clone(), None)
        } else {
            let mut map = vec![usize::MAX; self.num_vertices()];
            let mut genus = vec![sub_graph.genus()];
            genus[0] += (sub_graph.num_components() as u32).saturating_sub(1);
            for v in 0..self.num_vertices() {
                if verts.contains(&v) {
                    map[v] = 0;
                } else {
                    map[v] = genus.len();
                    genus.push(self.genus[v]);
                }
            }
            let mut vertex_of = Vec::new();
            let mut edges = Vec::new();
            let mut tails = Vec::new();
            for e in 0..self.num_edges() {
                if sub.contains(&e) {
                    continue;
                }
                let (a, b) = self.edges[e];
                let h = vertex_of.len();
                vertex_of.push(map[self.vertex_of[a]]);
                vertex_of.push(map[self.vertex_of[b]]);
                edges.push((h, h + 1));
            }
            for &h in &self.tails {
                tails.push(vertex_of.len());
                vertex_of.push(map[self.vertex_of[h]]);
            }
            (StableGraph { vertex_of, genus, edges, tails }, Some(0))
        };
        let quotient_edges: Vec<usize> = (0..self.num_edges()).filter(|e| !sub.contains(e)).collect();
        Surgery {
            subgraph: sub_graph,
            subgraph_vertices: vlist,
            subgraph_edges: sub.into_iter().collect(),
            shared_tails,
            f_edges,
            outer_vertices: outer_vertices.into_iter().collect(),
            quotient,
            quotient_edges,
            distinguished,
        }
    }

    /// Text serialization: `v<id> g=<genus>`, `e<id> h<a>:v<u> h<b>:v<w>`,
    /// `t<id> h<a>:v<u>`, behind a versioned header.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# stable-graph v1\n");
        for (v, g) in self.genus.iter().enumerate() {
            writeln!(s, "v{v} g={g}").unwrap();
        }
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            writeln!(s, "e{i} h{a}:v{} h{b}:v{}", self.vertex_of[a], self.vertex_of[b]).unwrap();
        }
        for (i, &h) in self.tails.iter().enumerate() {
            writeln!(s, "t{i} h{h}:v{}", self.vertex_of[h]).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut genus: BTreeMap<usize, u32> = BTreeMap::new();
        let mut halves: BTreeMap<usize, usize> = BTreeMap::new();
        let mut edges = Vec::new();
        let mut tails = Vec::new();
        let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let half = |tok: &str, line: usize, halves: &mut BTreeMap<usize, usize>| -> Result<usize> {
            let (h, v) = tok.split_once(':').ok_or_else(|| perr(line, "half-edge must look like h<id>:v<vertex>"))?;
            let h: usize = h.strip_prefix('h').and_then(|x| x.parse().ok()).ok_or_else(|| perr(line, "bad half-edge id"))?;
            let v: usize = v.strip_prefix('v').and_then(|x| x.parse().ok()).ok_or_else(|| perr(line, "bad vertex id"))?;
            if halves.insert(h, v).is_some() {
                return Err(perr(line, "half-edge listed twice"));
            }
            Ok(h)
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = l.split_whitespace().collect();
            match toks[0].chars().next() {
                Some('v') => {
                    let id: usize = toks[0][1..].parse().map_err(|_| perr(line, "bad vertex id"))?;
                    let g = toks.get(1).and_then(|t| t.strip_prefix("g=")).and_then(|x| x.parse().ok()).ok_or_else(|| perr(line, "vertex needs g=<genus>"))?;
                    genus.insert(id, g);
                }
                Some('e') => {
                    if toks.len() != 3 {
                        return Err(perr(line, "edge needs two half-edges"));
                    }
                    let a = half(toks[1], line, &mut halves)?;
                    let b = half(toks[2], line, &mut halves)?;
                    edges.push((a, b));
                }
                Some('t') => {
                    if toks.len() != 2 {
                        return Err(perr(line, "tail needs one half-edge"));
                    }
                    tails.push(half(toks[1], line, &mut halves)?);
                }
                _ => return Err(perr(line, "unknown record")),
            }
        }
        let nv = genus.len();
        if genus.keys().copied().ne(0..nv) {
            return Err(perr(0, "vertex ids must be 0..n-1"));
        }
        let nh = halves.len();
        if halves.keys().copied().ne(0..nh) {
            return Err(perr(0, "half-edge ids must be 0..n-1"));
        }
        StableGraph::new(genus.into_values().collect(), halves.into_values().collect(), edges, tails)
    }
}

pub struct Surgery {
    /// γ': vertices touched by the chosen edges; other half-edges there are tails.
    pub subgraph: StableGraph,
    /// `V(γ')` as vertex ids of γ, in increasing order.
    pub subgraph_vertices: Vec<usize>,
    pub subgraph_edges: Vec<usize>,
    /// `T(γ', γ)`: tails of γ located on `V(γ')` (half-edge ids of γ).
    pub shared_tails: Vec<usize>,
    /// `F(γ', γ)`: edges outside γ' with a half-edge on `V(γ')`.
    pub f_edges: Vec<usize>,
    /// `V(γ', γ)`: vertices outside γ' incident to an edge of `F`.
    pub outer_vertices: Vec<usize>,
    /// γ/γ' with the collapsed vertex at index 0 when γ' is nonempty.
    pub quotient: StableGraph,
    /// Edge ids of γ that survive in the quotient, in quotient order.
    pub quotient_edges: Vec<usize>,
    pub distinguished: Option<usize>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }
    fn find(&mut self, x: usize) -> usize {
        let p = self.parent[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.parent[x] = r;
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn permute_all(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute_all(p, k + 1, f);
        p.swap(k, i);
    }
}

fn factorial_big(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, k| a * BigInt::from(k))
}

impl VertexForm {
    pub fn num_vertices(&self) -> usize {
        self.genus.len()
    }

    pub fn internal_degree(&self, v: usize) -> u32 {
        2 * self.loops[v] + self.mult[v].iter().sum::<u32>()
    }

    fn key(&self, v: usize) -> (u32, u32, u32, u32) {
        (self.genus[v], self.tails[v] + self.internal_degree(v), self.tails[v], self.loops[v])
    }

    /// Vertex permutations preserving genus, tails, loops and multiplicities.
    pub fn vertex_automorphisms(&self) -> u64 {
        let n = self.num_vertices();
        let mut img = vec![usize::MAX; n];
        let mut used = vec![false; n];
        fn go(f: &VertexForm, v: usize, img: &mut Vec<usize>, used: &mut Vec<bool>) -> u64 {
            let n = f.num_vertices();
            if v == n {
                return 1;
            }
            let mut c = 0;
            for w in 0..n {
                if used[w] || f.key(v) != f.key(w) {
                    continue;
                }
                if (0..v).any(|u| f.mult[v][u] != f.mult[w][img[u]]) {
                    continue;
                }
                img[v] = w;
                used[w] = true;
                c += go(f, v + 1, img, used);
                used[w] = false;
            }
            c
        }
        go(self, 0, &mut img, &mut used)
    }

    pub fn automorphism_order(&self) -> BigInt {
        let n = self.num_vertices();
        let mut a = BigInt::from(self.vertex_automorphisms());
        for v in 0..n {
            a *= factorial_big(self.tails[v]);
            a *= factorial_big(self.loops[v]) * (BigInt::one() << self.loops[v] as usize);
            for u in v + 1..n {
                a *= factorial_big(self.mult[v][u]);
            }
        }
        a
    }

    /// Canonical form and the relabeled form realizing it. Vertices are first
    /// sorted by the (genus, valence) preorder refined by tails and loops, then
    /// permuted within classes to minimize the multiplicity encoding.
    pub fn canonical(&self) -> (CanonicalForm, VertexForm) {
        let n = self.num_vertices();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| std::cmp::Reverse(self.key(v)));
        let keys: Vec<_> = order.iter().map(|&v| self.key(v)).collect();
        let mut best: Option<(Vec<u32>, Vec<usize>)> = None;
        let mut perm = Vec::with_capacity(n);
        let mut used = vec![false; n];
        fn go(
            f: &VertexForm,
            keys: &[(u32, u32, u32, u32)],
            order: &[usize],
            perm: &mut Vec<usize>,
            used: &mut Vec<bool>,
            best: &mut Option<(Vec<u32>, Vec<usize>)>,
        ) {
            let n = keys.len();
            let pos = perm.len();
            if let Some((b, _)) = best {
                // Prune: the partial encoding already exceeds the best one.
                let part = encode_partial(f, perm);
                if part.as_slice() > &b[..part.len()] {
                    return;
                }
            }
            if pos == n {
                let enc = encode_partial(f, perm);
                if best.as_ref().map_or(true, |(b, _)| enc < *b) {
                    *best = Some((enc, perm.clone()));
                }
                return;
            }
            for &v in order {
                if used[v] || f.key(v) != keys[pos] {
                    continue;
                }
                used[v] = true;
                perm.push(v);
                go(f, keys, order, perm, used, best);
                perm.pop();
                used[v] = false;
            }
        }
        go(self, &keys, &order, &mut perm, &mut used, &mut best);
        let (enc, perm) = best.unwrap_or((Vec::new(), Vec::new()));
        let relabeled = VertexForm {
            genus: perm.iter().map(|&v| self.genus[v]).collect(),
            tails: perm.iter().map(|&v| self.tails[v]).collect(),
            loops: perm.iter().map(|&v| self.loops[v]).collect(),
            mult: perm.iter().map(|&v| perm.iter().map(|&u| self.mult[v][u]).collect()).collect(),
        };
        let edges: u32 = (0..n).map(|v| self.loops[v] + self.mult[v][v + 1..].iter().sum::<u32>()).sum();
        let tails: u32 = self.tails.iter().sum();
        let mut full = vec![n as u32, edges, tails];
        for k in &keys {
            full.extend([k.0, k.1, k.2, k.3]);
        }
        full.extend(enc);
        (CanonicalForm(full), relabeled)
    }

    /// Graph with edges listed loops-and-pairs in row order, tails last.
    pub fn to_graph(&self) -> StableGraph {
        let n = self.num_vertices();
        let mut edges = Vec::new();
        for v in 0..n {
            for _ in 0..self.loops[v] {
                edges.push((v, v));
            }
            for u in v + 1..n {
                for _ in 0..self.mult[v][u] {
                    edges.push((v, u));
                }
            }
        }
        StableGraph::from_vertices(&self.genus, &self.tails, &edges)
    }
}

/// Row-major upper triangle of the relabeled multiplicity matrix, restricted
/// to the already placed vertices (so prefixes compare consistently).
fn encode_partial(f: &VertexForm, perm: &[usize]) -> Vec<u32> {
    let mut out = Vec::new();
    for j in 0..perm.len() {
        for i in 0..j {
            out.push(f.mult[perm[i]][perm[j]]);
        }
    }
    out
}

/// Search bounds for connected stable graphs.
#[derive(Clone, Debug)]
pub struct EnumerationBounds {
    pub max_genus: u32,
    pub tails: u32,
    pub max_edges: u32,
    /// Optional bound on `2g - 2 + |T|`.
    pub max_euler: Option<u32>,
    /// Optional whitelist of vertex types `(genus, valence)`.
    pub allowed: Option<Vec<(u32, u32)>>,
}

pub const MAX_ENUMERATION_EDGES: u32 = 10;

/// One representative per isomorphism class of connected stable graphs with
/// `g(γ) ≤ max_genus`, exactly `tails` tails and at most `max_edges` edges.
pub fn enumerate_connected_stable(max_genus: u32, tails: u32, max_edges: u32) -> Result<Vec<StableGraph>> {
    enumerate_with(&EnumerationBounds { max_genus, tails, max_edges, max_euler: None, allowed: None })
}

pub fn enumerate_with(b: &EnumerationBounds) -> Result<Vec<StableGraph>> {
    if b.max_edges > MAX_ENUMERATION_EDGES {
        return Err(Error::SizeLimit(format!("enumeration limited to {MAX_ENUMERATION_EDGES} edges")));
    }
    let mut found: BTreeMap<CanonicalForm, VertexForm> = BTreeMap::new();
    let max_v = b.max_edges as usize + 1;
    for nv in 1..=max_v {
        if let Some(e) = b.max_euler {
            if nv as u32 > e {
                break;
            }
        }
        let mut types: Vec<(u32, u32, u32)> = Vec::new();
        vertex_types(b, nv, &mut types, &mut |types| {
            let deg: Vec<u32> = types.iter().map(|t| t.2).collect();
            let total: u32 = deg.iter().sum();
            let ne = total / 2;
            let mut mult = vec![vec![0u32; nv]; nv];
            let mut loops = vec![0u32; nv];
            let mut rem = deg.clone();
            fill_matrix(0, 0, nv, &mut rem, &mut mult, &mut loops, &mut |mult, loops| {
                let f = VertexForm {
                    genus: types.iter().map(|t| t.0).collect(),
                    tails: types.iter().map(|t| t.1).collect(),
                    loops: loops.to_vec(),
                    mult: mult.to_vec(),
                };
                if !connected_form(&f) {
                    return;
                }
                let genus = ne + 1 - nv as u32 + f.genus.iter().sum::<u32>();
                if genus > b.max_genus {
                    return;
                }
                let (c, relabeled) = f.canonical();
                found.entry(c).or_insert(relabeled);
            });
        });
    }
    Ok(found.into_values().map(|f| f.to_graph()).collect())
}

fn connected_form(f: &VertexForm) -> bool {
    let n = f.num_vertices();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for u in 0..n {
            if !seen[u] && f.mult[v][u] > 0 {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Nonincreasing sequences of `(genus, tails, internal degree)` meeting the bounds.
fn vertex_types(b: &EnumerationBounds, nv: usize, cur: &mut Vec<(u32, u32, u32)>, f: &mut dyn FnMut(&[(u32, u32, u32)])) {
    let tails_used: u32 = cur.iter().map(|t| t.1).sum();
    let deg_used: u32 = cur.iter().map(|t| t.2).sum();
    let genus_used: u32 = cur.iter().map(|t| t.0).sum();
    let euler_used: i64 = cur.iter().map(|t| 2 * t.0 as i64 - 2 + (t.1 + t.2) as i64).sum();
    if cur.len() == nv {
        if tails_used != b.tails || deg_used % 2 == 1 {
            return;
        }
        let ne = deg_used / 2;
        if ne > b.max_edges || (ne as usize) + 1 < nv {
            return;
        }
        if let Some(e) = b.max_euler {
            if euler_used > e as i64 {
                return;
            }
        }
        f(cur);
        return;
    }
    let prev = cur.last().copied();
    for g in 0..=b.max_genus.saturating_sub(genus_used) {
        for t in 0..=(b.tails - tails_used) {
            for d in 0..=(2 * b.max_edges - deg_used) {
                let cand = (g, t, d);
                if let Some(p) = prev {
                    if cand > p {
                        continue;
                    }
                }
                let k = t + d;
                let stable = match g {
                    0 => k >= 3,
                    1 => k >= 1,
                    _ => true,
                };
                if !stable {
                    continue;
                }
                if nv > 1 && d == 0 {
                    continue;
                }
                if let Some(allowed) = &b.allowed {
                    if !allowed.contains(&(g, k)) {
                        continue;
                    }
                }
                if let Some(e) = b.max_euler {
                    // Every remaining vertex contributes at least 1.
                    let rest = (nv - cur.len() - 1) as i64;
                    if euler_used + 2 * g as i64 - 2 + k as i64 + rest > e as i64 {
                        continue;
                    }
                }
                cur.push(cand);
                vertex_types(b, nv, cur, f);
                cur.pop();
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn fill_matrix(
    i: usize,
    j: usize,
    n: usize,
    rem: &mut Vec<u32>,
    mult: &mut Vec<Vec<u32>>,
    loops: &mut Vec<u32>,
    f: &mut dyn FnMut(&[Vec<u32>], &[u32]),
) {
    if i == n {
        f(mult, loops);
        return;
    }
    if j == n {
        if rem[i] == 0 {
            fill_matrix(i + 1, i + 1, n, rem, mult, loops, f);
        }
        return;
    }
    if j == i {
        for l in 0..=rem[i] / 2 {
            loops[i] = l;
            rem[i] -= 2 * l;
            fill_matrix(i, j + 1, n, rem, mult, loops, f);
            rem[i] += 2 * l;
        }
        loops[i] = 0;
        return;
    }
    // The rest of row i must fit into the remaining columns.
    let capacity: u32 = rem[j..].iter().sum();
    if rem[i] > capacity {
        return;
    }
    for m in 0..=rem[i].min(rem[j]) {
        mult[i][j] = m;
        mult[j][i] = m;
        rem[i] -= m;
        rem[j] -= m;
        fill_matrix(i, j + 1, n, rem, mult, loops, f);
        rem[i] += m;
        rem[j] += m;
    }
    mult[i][j] = 0;
    mult[j][i] = 0;
}

/// For labelled vertices of the given `(genus, valence)` types and `j`
/// contractions, counts the pairings of inputs producing each graph class.
pub fn partition_class_counts(types: &[(u32, u32)], j: usize) -> BTreeMap<CanonicalForm, (StableGraph, u64)> {
    let mut inputs = Vec::new();
    for (v, &(_, k)) in types.iter().enumerate() {
        for _ in 0..k {
            inputs.push(v);
        }
    }
    let genus: Vec<u32> = types.iter().map(|t| t.0).collect();
    let mut out: BTreeMap<CanonicalForm, (StableGraph, u64)> = BTreeMap::new();
    let n = inputs.len();
    let mut used = vec![false; n];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    fn go(
        start: usize,
        j: usize,
        inputs: &[usize],
        genus: &[u32],
        used: &mut Vec<bool>,
        pairs: &mut Vec<(usize, usize)>,
        out: &mut BTreeMap<CanonicalForm, (StableGraph, u64)>,
    ) {
        if pairs.len() == j {
            let mut tails = vec![0u32; genus.len()];
            for (h, &v) in inputs.iter().enumerate() {
                if !used[h] {
                    tails[v] += 1;
                }
            }
            let edges: Vec<(usize, usize)> = pairs.iter().map(|&(a, b)| (inputs[a], inputs[b])).collect();
            let g = StableGraph::from_vertices(genus, &tails, &edges);
            let c = g.canonical_form();
            out.entry(c).or_insert((g, 0)).1 += 1;
            return;
        }
        // Pairs are generated with increasing first elements.
        for a in start..inputs.len() {
            if used[a] {
                continue;
            }
            used[a] = true;
            for b in a + 1..inputs.len() {
                if used[b] {
                    continue;
                }
                used[b] = true;
                pairs.push((a, b));
                go(a + 1, j, inputs, genus, used, pairs, out);
                pairs.pop();
                used[b] = false;
            }
            used[a] = false;
        }
    }
    if 2 * j <= n {
        go(0, j, &inputs, &genus, &mut used, &mut pairs, &mut out);
    }
    out
}

/// Small named graphs used throughout tests, examples and the CLI.
pub fn named(name: &str) -> Option<StableGraph> {
    let g = match name {
        "bubble" => StableGraph::from_vertices(&[0, 0], &[2, 2], &[(0, 1), (0, 1)]),
        "theta" => StableGraph::from_vertices(&[0, 0], &[0, 0], &[(0, 1), (0, 1), (0, 1)]),
        "theta-tails" => StableGraph::from_vertices(&[0, 0], &[1, 1], &[(0, 1), (0, 1), (0, 1)]),
        "tadpole" => StableGraph::from_vertices(&[0], &[1], &[(0, 0)]),
        "tree" => StableGraph::from_vertices(&[0, 0], &[2, 2], &[(0, 1)]),
        "triangle" => StableGraph::from_vertices(&[0, 0, 0], &[1, 1, 1], &[(0, 1), (1, 2), (0, 2)]),
        "genus-one-loop" => StableGraph::from_vertices(&[1], &[0], &[(0, 0)]),
        _ => return None,
    };
    Some(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stability_rules() {
        assert!(StableGraph::from_vertices(&[0], &[3], &[]).validate_stable().is_ok());
        let bad = StableGraph::from_vertices(&[0], &[2], &[]).validate_stable().unwrap_err();
        assert_eq!(bad, vec![Violation { vertex: 0, genus: 0, valence: 2 }]);
        assert!(named("genus-one-loop").unwrap().validate_stable().is_ok());
    }

    #[test]
    fn malformed_incidence_is_distinct() {
        let e = StableGraph::new(vec![0], vec![0, 0, 0], vec![(0, 1)], vec![]).unwrap_err();
        assert!(matches!(e, Error::MalformedGraph(_)));
    }

    #[test]
    fn betti_and_genus() {
        let b = named("bubble").unwrap();
        assert_eq!((b.betti(), b.genus()), (1, 1));
        let t = named("theta").unwrap();
        assert_eq!((t.betti(), t.genus()), (2, 2));
        assert_eq!(named("tree").unwrap().betti(), 0);
        assert_eq!(StableGraph::from_vertices(&[1], &[1], &[]).genus(), 1);
    }

    #[test]
    fn automorphisms_match_brute_force() {
        for name in ["bubble", "theta", "tadpole", "tree", "triangle", "genus-one-loop", "theta-tails"] {
            let g = named(name).unwrap();
            let fast = g.automorphism_order().unwrap();
            let slow = g.automorphism_order_bruteforce().unwrap();
            assert_eq!(fast, BigInt::from(slow), "{name}");
        }
        assert_eq!(named("genus-one-loop").unwrap().automorphism_order().unwrap(), BigInt::from(2));
    }

    #[test]
    fn disjoint_union_aut() {
        let b = named("bubble").unwrap();
        let a = b.automorphism_order().unwrap();
        let u = b.disjoint_union(&b);
        assert_eq!(u.automorphism_order().unwrap(), &a * &a * 2);
    }

    #[test]
    fn bubble_orbit_count() {
        let counts = partition_class_counts(&[(0, 4), (0, 4)], 2);
        let b = named("bubble").unwrap();
        let (_, c) = &counts[&b.canonical_form()];
        let group = 2u64 * 24 * 24;
        let aut: u64 = b.automorphism_order().unwrap().try_into().unwrap();
        assert_eq!(*c, group / aut);
    }

    #[test]
    fn enumeration_examples() {
        assert!(enumerate_connected_stable(0, 0, 3).unwrap().is_empty());
        let t = named("tadpole").unwrap().canonical_form();
        assert!(enumerate_connected_stable(1, 1, 1).unwrap().iter().any(|g| g.canonical_form() == t));
        let b = named("bubble").unwrap().canonical_form();
        assert!(enumerate_connected_stable(1, 4, 2).unwrap().iter().any(|g| g.canonical_form() == b));
    }

    #[test]
    fn surgery_on_bubble() {
        let b = named("bubble").unwrap();
        let s = b.subgraph_surgery(&[0]);
        assert_eq!(s.subgraph.num_edges(), 1);
        assert_eq!(s.subgraph.num_vertices(), 2);
        assert_eq!(s.f_edges, vec![1]);
        assert_eq!(s.quotient.num_vertices(), 1);
        assert_eq!(s.quotient.num_edges(), 1);
        assert_eq!(s.quotient.num_tails(), 4);
        let all = b.subgraph_surgery(&[0, 1]);
        assert_eq!((all.quotient.num_vertices(), all.quotient.num_edges(), all.quotient.num_tails()), (1, 0, 4));
        let none = b.subgraph_surgery(&[]);
        assert_eq!(none.quotient, b);
    }

    #[test]
    fn spanning_trees() {
        assert_eq!(named("bubble").unwrap().spanning_tree().unwrap(), vec![0]);
        assert_eq!(named("theta").unwrap().spanning_tree().unwrap(), vec![0]);
        assert_eq!(named("tree").unwrap().spanning_tree().unwrap(), vec![0]);
        assert_eq!(named("triangle").unwrap().all_spanning_trees().len(), 3);
    }

    #[test]
    fn text_round_trip() {
        for name in ["bubble", "triangle", "tadpole"] {
            let g = named(name).unwrap();
            assert_eq!(StableGraph::from_text(&g.to_text()).unwrap(), g);
        }
    }
}
