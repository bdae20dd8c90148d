//! Covering of the time cube `(0, ∞)^k` by sector regions built from chains
//! of scale comparisons.
//!
//! Inside a sector every defining inequality has the form `t_a^p < t_b^q`.
//! Comparisons run on `log t`, where they are linear; near-ties fall back to
//! exact rational powers when the exponents are small integers.

use crate::scalar::f64_to_ratio;
use crate::{Error, Result};
use num_traits::pow::Pow;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::collections::BTreeMap;

pub const DEFAULT_R: f64 = 4.0;

/// `t_small^small_pow < t_large^large_pow`, on sector positions `1..=k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub small: usize,
    pub small_pow: f64,
    pub large: usize,
    pub large_pow: f64,
}

impl Constraint {
    /// `t_a < t_b`.
    pub fn order(a: usize, b: usize) -> Self {
        Constraint { small: a, small_pow: 1.0, large: b, large_pow: 1.0 }
    }

    /// `B^j_S`: `t_j < t_{j+1}^S`.
    pub fn b(j: usize, s: f64) -> Self {
        Constraint { small: j, small_pow: 1.0, large: j + 1, large_pow: s }
    }

    /// `C^{i,j}_S`: `t_j^S < t_i`.
    pub fn c(i: usize, j: usize, s: f64) -> Self {
        Constraint { small: j, small_pow: s, large: i, large_pow: 1.0 }
    }

    /// `D^{i,j}_S`: `t_i < t_j^S`.
    pub fn d(i: usize, j: usize, s: f64) -> Self {
        Constraint { small: i, small_pow: 1.0, large: j, large_pow: s }
    }

    /// Strict or closed evaluation on sector-ordered log times.
    pub fn holds(&self, log_t: &[f64], t: Option<&[f64]>, closed: bool) -> bool {
        match compare_powers(log_t, t, self.small, self.small_pow, self.large, self.large_pow) {
            Ordering::Less => true,
            Ordering::Equal => closed,
            Ordering::Greater => false,
        }
    }

    pub fn describe(&self) -> String {
        let side = |i: usize, p: f64| if p == 1.0 { format!("t{i}") } else { format!("t{i}^{p}") };
        format!("{}<{}", side(self.small, self.small_pow), side(self.large, self.large_pow))
    }
}

/// Orders `p log t_a` against `q log t_b` (1-based positions).
fn compare_powers(log_t: &[f64], t: Option<&[f64]>, a: usize, p: f64, b: usize, q: f64) -> Ordering {
    let (x, y) = (p * log_t[a - 1], q * log_t[b - 1]);
    if (x - y).abs() >= 1e-12 * (1.0 + x.abs().max(y.abs())) {
        return x.partial_cmp(&y).unwrap_or(Ordering::Equal);
    }
    if let Some(t) = t {
        if let Some(o) = exact_power_cmp(t[a - 1], p, t[b - 1], q) {
            return o;
        }
    }
    x.partial_cmp(&y).unwrap_or(Ordering::Equal)
}

/// `t_a^p` against `t_b^q` in exact rationals for integer exponents ≤ 4096.
fn exact_power_cmp(ta: f64, p: f64, tb: f64, q: f64) -> Option<Ordering> {
    let int = |e: f64| (e.fract() == 0.0 && e > 0.0 && e <= 4096.0).then_some(e as u32);
    let (p, q) = (int(p)?, int(q)?);
    let (ra, rb) = (f64_to_ratio(ta)?, f64_to_ratio(tb)?);
    Some(ra.pow(p).cmp(&rb.pow(q)))
}

/// Default exponent schedule `s_0 = 1`, `s_i = 2^{i-1}`, long enough for `k`.
pub fn default_schedule(k: usize) -> Vec<f64> {
    let mut s = vec![1.0];
    for i in 1..=k + 1 {
        s.push(2f64.powi(i as i32 - 1));
    }
    s
}

fn is_default_schedule(s: &[f64]) -> bool {
    s.iter().enumerate().all(|(i, &x)| x == if i == 0 { 1.0 } else { 2f64.powi(i as i32 - 1) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverRegion {
    pub k: usize,
    /// `sector[p]` is the 0-based time variable holding sector position `p+1`.
    pub sector: Vec<usize>,
    /// Index sequence `start = i_0 < … < i_m ≤ k` (1-based sector positions).
    pub sequence: Vec<usize>,
    pub schedule: Vec<f64>,
    pub r: f64,
}

impl CoverRegion {
    pub fn start(&self) -> usize {
        self.sequence[0]
    }

    pub fn m(&self) -> usize {
        self.sequence.len() - 1
    }

    fn exponent(&self, j: usize) -> f64 {
        self.r.powf(self.schedule[j])
    }

    /// Defining inequalities beyond the sector ordering.
    pub fn constraints(&self) -> Vec<Constraint> {
        let k = self.k;
        let i = &self.sequence;
        let m = self.m();
        let mut out = Vec::new();
        if m == 0 {
            if i[0] < k {
                out.push(Constraint::b(i[0], self.exponent(1)));
            }
            return out;
        }
        for j in 1..=m {
            let s = self.exponent(j);
            out.push(Constraint::c(i[j - 1], i[j], s));
            if i[j] < k {
                out.push(Constraint::d(i[j - 1], i[j] + 1, s));
            }
        }
        if i[m] < k {
            out.push(Constraint::b(i[m], self.exponent(m + 1)));
        }
        out
    }

    pub fn sector_constraints(&self) -> Vec<Constraint> {
        (1..self.k).map(|p| Constraint::order(p, p + 1)).collect()
    }

    /// Membership on sector-ordered log times (no exact fallback available).
    pub fn contains_sorted_log(&self, log_sorted: &[f64], closed: bool) -> bool {
        self.sector_constraints().iter().chain(self.constraints().iter()).all(|c| c.holds(log_sorted, None, closed))
    }

    pub fn label(&self) -> String {
        let seq: Vec<String> = self.sequence.iter().map(|x| x.to_string()).collect();
        let sec: Vec<String> = self.sector.iter().map(|x| (x + 1).to_string()).collect();
        format!("s[{}]I({})", sec.join(""), seq.join(","))
    }
}

/// Strict or closed membership of a time vector.
pub fn member(t: &[f64], region: &CoverRegion, closed: bool) -> Result<bool> {
    if t.len() != region.k {
        return Err(Error::InvalidParameter(format!("expected {} times, got {}", region.k, t.len())));
    }
    if let Some(&x) = t.iter().find(|&&x| !(x > 0.0)) {
        return Err(Error::InvalidParameter(format!("time coordinate {x} is not positive")));
    }
    let sorted_t: Vec<f64> = region.sector.iter().map(|&v| t[v]).collect();
    let log_sorted: Vec<f64> = sorted_t.iter().map(|x| x.ln()).collect();
    Ok(region
        .sector_constraints()
        .iter()
        .chain(region.constraints().iter())
        .all(|c| c.holds(&log_sorted, Some(&sorted_t), closed)))
}

/// Membership on raw log times, for points too extreme for `f64` times.
pub fn member_log(log_t: &[f64], region: &CoverRegion, closed: bool) -> bool {
    let sorted: Vec<f64> = region.sector.iter().map(|&v| log_t[v]).collect();
    region.contains_sorted_log(&sorted, closed)
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 1.0) {
        return Err(Error::InvalidParameter(format!("R must exceed 1, got {r}")));
    }
    Ok(())
}

/// Every index sequence `start = i_0 < … < i_m ≤ k`, in lexicographic order.
pub fn sequences_from(start: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn go(cur: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        let last = *cur.last().unwrap();
        for n in last + 1..=k {
            cur.push(n);
            go(cur, k, out);
            cur.pop();
        }
    }
    go(&mut vec![start], k, &mut out);
    out
}

/// Regions of the identity sector whose sequences start at `start`.
pub fn sector_regions(k: usize, r: f64, schedule: &[f64], start: usize) -> Vec<CoverRegion> {
    sequences_from(start, k)
        .into_iter()
        .map(|sequence| CoverRegion { k, sector: (0..k).collect(), sequence, schedule: schedule.to_vec(), r })
        .collect()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..k).collect();
    fn go(p: &mut Vec<usize>, i: usize, out: &mut Vec<Vec<usize>>) {
        if i == p.len() {
            out.push(p.clone());
            return;
        }
        for j in i..p.len() {
            p.swap(i, j);
            go(p, i + 1, out);
            p.swap(i, j);
        }
    }
    go(&mut p, 0, &mut out);
    out.sort();
    out
}

/// All top-level regions of all sectors.
pub fn build_cover(k: usize, r: f64, schedule: Option<&[f64]>) -> Result<Vec<CoverRegion>> {
    check_r(r)?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let schedule = schedule.map(|s| s.to_vec()).unwrap_or_else(|| default_schedule(k));
    if schedule.len() < k + 1 {
        return Err(Error::InvalidParameter(format!("schedule needs {} entries", k + 1)));
    }
    let mut out = Vec::new();
    for sector in permutations(k) {
        for mut reg in sector_regions(k, r, &schedule, 1) {
            reg.sector = sector.clone();
            out.push(reg);
        }
    }
    Ok(out)
}

/// The sector permutation sorting `log_t` increasingly; ties by variable index.
pub fn sector_of(log_t: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..log_t.len()).collect();
    idx.sort_by(|&a, &b| log_t[a].partial_cmp(&log_t[b]).unwrap().then(a.cmp(&b)));
    idx
}

/// The constructive procedure of the covering argument on sector-ordered
/// log times, restricted to positions `start..=k`. Its output is the owner of
/// the point under the half-open boundary assignment.
pub fn assign_sequence(log_sorted: &[f64], start: usize, r: f64, schedule: &[f64]) -> Vec<usize> {
    let k = log_sorted.len();
    let le = |a: usize, p: f64, b: usize, q: f64| compare_powers(log_sorted, None, a, p, b, q) != Ordering::Greater;
    let mut seq = vec![start];
    if start == k {
        return seq;
    }
    if le(start, 1.0, start + 1, r.powf(schedule[1])) {
        return seq;
    }
    let mut cur = start;
    let mut m = 0;
    loop {
        m += 1;
        let s = r.powf(schedule[m]);
        // Positions with t_j^s ≤ t_cur form an initial segment inside the sector.
        let mut next = cur + 1;
        while next < k && le(next + 1, s, cur, 1.0) {
            next += 1;
        }
        seq.push(next);
        cur = next;
        if cur == k || le(cur, 1.0, cur + 1, r.powf(schedule[m + 1])) {
            return seq;
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoverReport {
    pub k: usize,
    pub r: f64,
    pub samples: usize,
    /// Samples whose assigned region closure does not contain them.
    pub cover_failures: usize,
    /// Samples strictly inside more than one region.
    pub double_memberships: usize,
    /// Samples strictly inside no region (boundary points).
    pub boundary_points: usize,
    /// Assignments per identity-sector sequence.
    pub assigned: BTreeMap<Vec<usize>, usize>,
}

/// Log times spread over many decades of scale separation, with a minority
/// of points above 1 so the whole of `(0, ∞)^k` is probed.
pub fn sample_log_times(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k)
        .map(|_| {
            let mag = 10f64.powf(rng.gen_range(-3.0..5.0));
            if rng.gen_bool(0.1) {
                rng.gen_range(0.0..2.5)
            } else {
                -mag
            }
        })
        .collect()
}

pub fn verify_cover(k: usize, r: f64, samples: usize, seed: u64) -> Result<CoverReport> {
    check_r(r)?;
    let schedule = default_schedule(k);
    let regions = sector_regions(k, r, &schedule, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = CoverReport { k, r, samples, ..Default::default() };
    for _ in 0..samples {
        let lt = sample_log_times(&mut rng, k);
        let sector = sector_of(&lt);
        let sorted: Vec<f64> = sector.iter().map(|&v| lt[v]).collect();
        let seq = assign_sequence(&sorted, 1, r, &schedule);
        let owner = regions.iter().find(|g| g.sequence == seq).expect("assigned sequences are enumerated");
        if !owner.contains_sorted_log(&sorted, true) {
            rep.cover_failures += 1;
        }
        let strict = regions.iter().filter(|g| g.contains_sorted_log(&sorted, false)).count();
        match strict {
            0 => rep.boundary_points += 1,
            1 => {}
            _ => rep.double_memberships += 1,
        }
        *rep.assigned.entry(seq).or_default() += 1;
    }
    Ok(rep)
}

/// Which emptiness lemma separates two regions.
#[derive(Clone, Debug, PartialEq)]
pub enum Contradiction {
    /// `C^{i,j}_S ∩ D^{l,m}_S = ∅` for `i ≤ l`, `m ≤ j`.
    CD { level: usize, c: (usize, usize), d: (usize, usize), s: f64 },
    /// `B^l_S ∩ C^{i,j}_S = ∅` for `i ≤ l < j`.
    BC { level: usize, b: usize, c: (usize, usize), s: f64 },
}

impl Contradiction {
    /// Checks the lemma hypotheses on the indices.
    pub fn discharged(&self) -> bool {
        match *self {
            Contradiction::CD { c: (i, j), d: (l, m), .. } => i <= l && m <= j,
            Contradiction::BC { b: l, c: (i, j), .. } => i <= l && l < j,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisjointReport {
    pub pairs: Vec<(Vec<usize>, Vec<usize>, Contradiction)>,
    pub undischarged: usize,
    pub samples: usize,
    pub double_memberships: usize,
}

/// Contradiction between two distinct sequences, following the disjointness
/// argument: first differing position gives C∩D, a proper prefix gives B∩C.
pub fn contradiction(i: &[usize], j: &[usize], r: f64, schedule: &[f64]) -> Option<Contradiction> {
    let (a, b) = if i.len() <= j.len() { (i, j) } else { (j, i) };
    if a == b {
        return None;
    }
    let m = a.len() - 1;
    match (1..=m).find(|&l| a[l] != b[l]) {
        Some(l) => {
            let s = r.powf(schedule[l]);
            let (hi, lo) = if a[l] > b[l] { (a[l], b[l]) } else { (b[l], a[l]) };
            // The sequence reaching further carries C^{i_{l-1}, hi}; the other carries D^{i_{l-1}, lo+1}.
            Some(Contradiction::CD { level: l, c: (a[l - 1], hi), d: (a[l - 1], lo + 1), s })
        }
        None => {
            let s = r.powf(schedule[m + 1]);
            Some(Contradiction::BC { level: m, b: a[m], c: (a[m], b[m + 1]), s })
        }
    }
}

pub fn verify_disjoint(k: usize, r: f64, samples: usize, seed: u64) -> Result<DisjointReport> {
    check_r(r)?;
    let schedule = default_schedule(k);
    let seqs = sequences_from(1, k);
    let mut pairs = Vec::new();
    for x in 0..seqs.len() {
        for y in x + 1..seqs.len() {
            let c = contradiction(&seqs[x], &seqs[y], r, &schedule).expect("distinct sequences");
            pairs.push((seqs[x].clone(), seqs[y].clone(), c));
        }
    }
    let undischarged = pairs.iter().filter(|p| !p.2.discharged()).count();
    let rep = verify_cover(k, r, samples, seed)?;
    Ok(DisjointReport { pairs, undischarged, samples, double_memberships: rep.double_memberships })
}

/// `(i_m, R^{2^m})`: the A-set containing the region on the unit cube.
pub fn containing_a(region: &CoverRegion) -> Result<(usize, f64)> {
    if !is_default_schedule(&region.schedule) {
        return Err(Error::InvalidParameter("containment needs the default schedule".into()));
    }
    let m = region.m();
    Ok((*region.sequence.last().unwrap(), region.r.powf(2f64.powi(m as i32))))
}

/// Inequalities of `A^j_S`: `A^1 = B^1`, `A^k = C^{1,k}`, else `B^j ∩ C^{1,j}`.
pub fn a_set_constraints(j: usize, k: usize, s: f64) -> Vec<Constraint> {
    let mut out = Vec::new();
    if j > 1 {
        out.push(Constraint::c(1, j, s));
    }
    if j < k {
        out.push(Constraint::b(j, s));
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContainmentReport {
    pub per_region: BTreeMap<Vec<usize>, (usize, usize)>,
}

impl ContainmentReport {
    pub fn violations(&self) -> usize {
        self.per_region.values().map(|v| v.1).sum()
    }
    pub fn min_samples(&self) -> usize {
        self.per_region.values().map(|v| v.0).min().unwrap_or(0)
    }
}

/// Samples `(0,1)^k` in the identity sector until every region has `per_region`
/// strict members, checking each against its A-set.
pub fn verify_containment(k: usize, r: f64, per_region: usize, seed: u64) -> Result<ContainmentReport> {
    check_r(r)?;
    let schedule = default_schedule(k);
    let regions = sector_regions(k, r, &schedule, 1);
    let mut rep = ContainmentReport::default();
    for g in &regions {
        rep.per_region.insert(g.sequence.clone(), (0, 0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Region membership only depends on ratios of consecutive log times; the
    // thresholds sit at R^{2^m}, so the log of each ratio is drawn log-uniformly
    // and every band gets comparable mass.
    let span = (2f64.powi(k as i32) * r.ln() + 1.0).ln();
    let cap = per_region * regions.len() * 400;
    for _ in 0..cap {
        if rep.min_samples() >= per_region {
            break;
        }
        let mut lt = vec![0.0; k];
        lt[k - 1] = -rng.gen_range(0.01..1.0);
        for p in (0..k - 1).rev() {
            lt[p] = lt[p + 1] * rng.gen_range(-8.0..span).exp().exp();
        }
        let seq = assign_sequence(&lt, 1, r, &schedule);
        let g = regions.iter().find(|g| g.sequence == seq).unwrap();
        if !g.contains_sorted_log(&lt, false) {
            continue;
        }
        let entry = rep.per_region.get_mut(&seq).unwrap();
        if entry.0 >= per_region {
            continue;
        }
        entry.0 += 1;
        let (j, s) = containing_a(g)?;
        if !a_set_constraints(j, k, s).iter().all(|c| c.holds(&lt, None, false)) {
            entry.1 += 1;
        }
    }
    Ok(rep)
}

/// A refined-cover cell: consecutive links, the next starting one past the
/// previous sequence's last index, the final one ending at `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub links: Vec<CoverRegion>,
}

impl Chain {
    /// Split points `i^{(j)}_{m^{(j)}}` of all links but the last.
    pub fn split_points(&self) -> Vec<usize> {
        self.links[..self.links.len() - 1].iter().map(|l| *l.sequence.last().unwrap()).collect()
    }

    pub fn contains_sorted_log(&self, log_sorted: &[f64], closed: bool) -> bool {
        self.links.iter().all(|l| l.contains_sorted_log(log_sorted, closed))
    }

    pub fn label(&self) -> String {
        self.links
            .iter()
            .map(|l| format!("({})", l.sequence.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
            .collect::<Vec<_>>()
            .join("")
    }

    /// Sector-ordered inequalities of the intersection.
    pub fn constraints(&self) -> Vec<Constraint> {
        let mut out = self.links[0].sector_constraints();
        for l in &self.links {
            out.extend(l.constraints());
        }
        out
    }
}

pub fn refined_cover(k: usize, r: f64) -> Result<Vec<Chain>> {
    check_r(r)?;
    let schedule = default_schedule(k);
    let mut out = Vec::new();
    fn go(start: usize, k: usize, r: f64, schedule: &[f64], cur: &mut Vec<CoverRegion>, out: &mut Vec<Chain>) {
        for link in sector_regions(k, r, schedule, start) {
            let last = *link.sequence.last().unwrap();
            cur.push(link);
            if last == k {
                out.push(Chain { links: cur.clone() });
            } else {
                go(last + 1, k, r, schedule, cur, out);
            }
            cur.pop();
        }
    }
    go(1, k, r, &schedule, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Chain owning a sector-ordered point: the covering procedure iterated.
pub fn assign_chain(log_sorted: &[f64], r: f64) -> Vec<Vec<usize>> {
    let k = log_sorted.len();
    let schedule = default_schedule(k);
    let mut out = Vec::new();
    let mut start = 1;
    loop {
        let seq = assign_sequence(log_sorted, start, r, &schedule);
        let last = *seq.last().unwrap();
        out.push(seq);
        if last == k {
            return out;
        }
        start = last + 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region(k: usize, seq: &[usize]) -> CoverRegion {
        CoverRegion { k, sector: (0..k).collect(), sequence: seq.to_vec(), schedule: default_schedule(k), r: 2.0 }
    }

    #[test]
    fn membership_examples() {
        let b1 = region(2, &[1]);
        let c12 = region(2, &[1, 2]);
        assert!(member(&[0.1, 0.5], &b1, true).unwrap());
        assert!(member(&[0.3, 0.5], &c12, false).unwrap());
        assert!(!member(&[0.3, 0.5], &b1, false).unwrap());
        let tie = [0.4, 0.4];
        let strict = [&b1, &c12].iter().filter(|g| member(&tie, g, false).unwrap()).count();
        let closed = [&b1, &c12].iter().filter(|g| member(&tie, g, true).unwrap()).count();
        assert_eq!((strict, closed > 0), (0, true));
        assert!(member(&[0.0, 1.0], &b1, true).is_err());
    }

    #[test]
    fn exact_tie_on_boundary() {
        // t1 = t2^2 exactly: on the B/C boundary for R = 2.
        let b1 = region(2, &[1]);
        assert!(member(&[0.25, 0.5], &b1, true).unwrap());
        assert!(!member(&[0.25, 0.5], &b1, false).unwrap());
    }

    #[test]
    fn region_counts() {
        assert_eq!(build_cover(1, 4.0, None).unwrap().len(), 1);
        assert!(build_cover(1, 4.0, None).unwrap()[0].constraints().is_empty());
        let seqs: Vec<_> = sequences_from(1, 3);
        assert_eq!(seqs, vec![vec![1], vec![1, 2], vec![1, 2, 3], vec![1, 3]]);
        assert_eq!(build_cover(3, 4.0, None).unwrap().len(), 6 * 4);
        assert!(build_cover(3, 1.0, None).is_err());
    }

    #[test]
    fn cover_small_sample() {
        let rep = verify_cover(3, 4.0, 2000, 7).unwrap();
        assert_eq!((rep.cover_failures, rep.double_memberships), (0, 0));
    }

    #[test]
    fn disjointness_cases() {
        let s = default_schedule(3);
        match contradiction(&[1, 2], &[1, 3], 4.0, &s).unwrap() {
            Contradiction::CD { level, .. } => assert_eq!(level, 1),
            other => panic!("{other:?}"),
        }
        assert!(matches!(contradiction(&[1, 2], &[1, 2, 3], 4.0, &s).unwrap(), Contradiction::BC { .. }));
        assert_eq!(verify_disjoint(4, 4.0, 500, 1).unwrap().undischarged, 0);
    }

    #[test]
    fn containment_examples() {
        let g = region(3, &[1]);
        assert_eq!(containing_a(&g).unwrap(), (1, 2.0));
        let g = region(3, &[1, 3]);
        assert_eq!(containing_a(&g).unwrap(), (3, 4.0));
        let rep = verify_containment(3, 4.0, 200, 3).unwrap();
        assert_eq!(rep.violations(), 0);
        assert!(rep.min_samples() >= 200);
    }

    #[test]
    fn refined_chains_for_two_edges() {
        let chains = refined_cover(2, 4.0).unwrap();
        let labels: Vec<String> = chains.iter().map(|c| c.label()).collect();
        assert_eq!(labels, vec!["(1)(2)", "(1,2)"]);
    }
}
