//! Brute-force enumeration and classification of closed paths.
//!
//! A closed path of length `m` is stored as `v_0 .. v_{m-1}`; the closing
//! vertex `v_m = v_0` is implicit. Backtracking is tested at interior
//! positions only, so a proper closed path may satisfy `v_1 = v_{m-1}`; those
//! are exactly the paths with a tail.

use crate::error::{Error, Result};
use crate::fractal_builders::{CopyIndex, Exhaustion};
use crate::graph_core::{Graph, VertexSet};
use crate::scalar::{ratio, rational_to_f64};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};

/// Default enumeration budget, in predicted leaf paths.
pub const DEFAULT_BUDGET: u64 = 200_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClosedPath {
    vertices: Vec<u32>,
}

impl ClosedPath {
    /// Validates adjacency of consecutive vertices, including `v_{m-1} v_0`.
    pub fn new(g: &Graph, vertices: Vec<u32>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::NotProper("empty path".into()));
        }
        let m = vertices.len();
        for i in 0..m {
            let (a, b) = (vertices[i] as usize, vertices[(i + 1) % m] as usize);
            if a >= g.num_vertices() || b >= g.num_vertices() {
                return Err(Error::VertexOutOfRange { vertex: a.max(b), n: g.num_vertices() });
            }
            if !g.has_edge(a, b) {
                return Err(Error::NotProper(format!("{a} and {b} are not adjacent")));
            }
        }
        Ok(ClosedPath { vertices })
    }

    fn unchecked(vertices: Vec<u32>) -> Self {
        ClosedPath { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[u32] {
        &self.vertices
    }

    pub fn origin(&self) -> u32 {
        self.vertices[0]
    }

    #[inline]
    fn at(&self, i: usize) -> u32 {
        self.vertices[i % self.vertices.len()]
    }

    /// No `v_{i-1} = v_{i+1}` for `1 <= i <= m-1`.
    pub fn is_proper(&self) -> bool {
        let m = self.len();
        (1..m).all(|i| self.at(i - 1) != self.at(i + 1))
    }

    /// Some `k` in `1..=floor(m/2)-1` with `v_j = v_{m-j}` for all `j <= k`.
    pub fn has_tail(&self) -> bool {
        let m = self.len();
        (1..(m / 2)).any(|k| (1..=k).all(|j| self.at(j) == self.at(m - j)))
    }

    /// Smallest `p` dividing `m` with `v_{i+p} = v_i`.
    pub fn effective_length(&self) -> usize {
        let m = self.len();
        (1..=m)
            .find(|&p| m.is_multiple_of(p) && (0..m).all(|i| self.at(i + p) == self.at(i)))
            .unwrap()
    }

    /// The same cycle traversed `k` times.
    pub fn power(&self, k: usize) -> ClosedPath {
        ClosedPath::unchecked(self.vertices.iter().copied().cycle().take(self.len() * k).collect())
    }

    pub fn reversed(&self) -> ClosedPath {
        let mut v = self.vertices.clone();
        v[1..].reverse();
        ClosedPath::unchecked(v)
    }

    /// Lexicographically least rotation; the shift-class key.
    pub fn canonical_rotation(&self) -> Vec<u32> {
        least_rotation(&self.vertices)
    }

    /// Least rotation over both orientations.
    pub fn canonical_form(&self) -> Vec<u32> {
        let a = least_rotation(&self.vertices);
        let b = least_rotation(&self.reversed().vertices);
        a.min(b)
    }
}

fn least_rotation(v: &[u32]) -> Vec<u32> {
    let m = v.len();
    let best = (0..m)
        .min_by(|&a, &b| (0..m).map(|i| v[(a + i) % m]).cmp((0..m).map(|i| v[(b + i) % m])))
        .unwrap_or(0);
    (0..m).map(|i| v[(best + i) % m]).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathClass {
    pub has_tail: bool,
    pub reduced: bool,
    pub primitive: bool,
}

/// Tail, reducedness and primitivity of a proper closed path.
pub fn classify_path(p: &ClosedPath) -> Result<PathClass> {
    if !p.is_proper() {
        return Err(Error::NotProper(format!("{:?} backtracks", p.vertices())));
    }
    let has_tail = p.has_tail();
    Ok(PathClass { has_tail, reduced: !has_tail, primitive: !has_tail && p.effective_length() == p.len() })
}

/// Predicted number of DFS leaves for length `m` from `origins` start points.
pub fn enumeration_estimate(g: &Graph, m: usize, origins: usize) -> f64 {
    let d = g.max_degree() as f64;
    if m < 2 {
        return origins as f64 * d;
    }
    origins as f64 * d * (d - 1.0).max(1.0).powi(m as i32 - 2)
}

fn check_budget(g: &Graph, m: usize, origins: usize, budget: u64) -> Result<()> {
    let estimate = enumeration_estimate(g, m, origins);
    if estimate > budget as f64 {
        return Err(Error::BudgetExceeded { estimate, budget });
    }
    Ok(())
}

/// Depth-first walk over proper paths of length `m` from `origin` that end at
/// `origin`; `visit` sees each completed path.
fn walk_closed(g: &Graph, m: usize, origin: u32, visit: &mut dyn FnMut(&[u32])) {
    let mut path = Vec::with_capacity(m + 1);
    path.push(origin);
    fn rec(g: &Graph, m: usize, path: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) {
        let len = path.len() - 1;
        let here = *path.last().unwrap();
        let prev = if len >= 1 { Some(path[len - 1]) } else { None };
        if len + 1 == m {
            // last step must return to the origin
            if Some(path[0]) != prev && g.has_edge(here as usize, path[0] as usize) {
                visit(&path[..]);
            }
            return;
        }
        for &w in g.neighbors(here as usize) {
            if Some(w) == prev {
                continue;
            }
            path.push(w);
            rec(g, m, path, visit);
            path.pop();
        }
    }
    if m == 0 {
        return;
    }
    rec(g, m, &mut path, visit);
}

/// All proper closed paths of length `m` starting in `origins`, ordered by
/// origin and then lexicographically.
pub fn enumerate_proper_closed(g: &Graph, m: usize, origins: &VertexSet, budget: u64) -> Result<Vec<ClosedPath>> {
    if m == 0 {
        return Err(Error::Inconsistent("closed paths have length at least 1".into()));
    }
    check_budget(g, m, origins.len(), budget)?;
    let out: Vec<Vec<ClosedPath>> = origins
        .members()
        .par_iter()
        .map(|&v| {
            let mut found = Vec::new();
            walk_closed(g, m, v, &mut |p| found.push(ClosedPath::unchecked(p.to_vec())));
            found
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

/// Per-vertex counts of proper closed paths and of those with a tail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexCounts {
    pub proper: Vec<u64>,
    pub tailed: Vec<u64>,
}

pub fn count_closed_per_vertex(g: &Graph, m: usize, origins: &VertexSet, budget: u64) -> Result<VertexCounts> {
    check_budget(g, m, origins.len(), budget)?;
    let n = g.num_vertices();
    let per: Vec<(u32, u64, u64)> = origins
        .members()
        .par_iter()
        .map(|&v| {
            let (mut proper, mut tailed) = (0u64, 0u64);
            walk_closed(g, m, v, &mut |p| {
                proper += 1;
                if m >= 4 && p[1] == p[m - 1] {
                    tailed += 1;
                }
            });
            (v, proper, tailed)
        })
        .collect();
    let mut vc = VertexCounts { proper: vec![0; n], tailed: vec![0; n] };
    for (v, p, t) in per {
        vc.proper[v as usize] = p;
        vc.tailed[v as usize] = t;
    }
    Ok(vc)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusRow {
    pub m: usize,
    /// Reduced closed paths (origin marked) inside the graph.
    pub raw_count: u64,
    /// Oriented cycles, i.e. reduced closed paths up to rotation.
    pub shift_classes: u64,
    /// Cycles up to rotation and reversal.
    pub unoriented_classes: u64,
}

fn reduced_paths(g: &Graph, m: usize, origins: &VertexSet, budget: u64) -> Result<Vec<ClosedPath>> {
    Ok(enumerate_proper_closed(g, m, origins, budget)?.into_iter().filter(|p| !p.has_tail()).collect())
}

/// Reduced closed paths of every length `1..=max_len` inside `g`.
pub fn reduced_cycle_census(g: &Graph, max_len: usize, budget: u64) -> Result<Vec<CensusRow>> {
    let all = VertexSet::full(g.num_vertices());
    let mut rows = Vec::new();
    for m in 1..=max_len {
        let paths = reduced_paths(g, m, &all, budget)?;
        let mut rot: Vec<Vec<u32>> = paths.iter().map(|p| p.canonical_rotation()).collect();
        rot.sort_unstable();
        rot.dedup();
        let mut both: Vec<Vec<u32>> = paths.iter().map(|p| p.canonical_form()).collect();
        both.sort_unstable();
        both.dedup();
        rows.push(CensusRow {
            m,
            raw_count: paths.len() as u64,
            shift_classes: rot.len() as u64,
            unoriented_classes: both.len() as u64,
        });
    }
    Ok(rows)
}

/// Multiplicity of a cycle class, exact or bracketed.
#[derive(Clone, Debug, PartialEq)]
pub struct Multiplicity {
    /// Exact limit for families with a closed form, otherwise the
    /// finite-level ratio at the deepest level with a known frontier.
    pub value: BigRational,
    /// Zero for closed forms; otherwise the one-sided convergence gap.
    pub gap: f64,
    /// Level of the ratio used (the size itself for closed forms).
    pub level: usize,
}

#[derive(Clone, Debug)]
pub struct CycleRecord {
    /// Representative as a cycle in `K_{s(C)}` coordinates, least rotation.
    pub canonical: Vec<u32>,
    pub length: usize,
    pub primitive: bool,
    pub size: usize,
    pub effective_length: usize,
    pub multiplicity: Multiplicity,
}

/// Reverse copy indices for every size, built once per exhaustion.
pub struct SizeOracle<'a> {
    x: &'a Exhaustion,
    indices: Vec<CopyIndex>,
    multiplicities: Vec<Option<Multiplicity>>,
}

impl<'a> SizeOracle<'a> {
    pub fn new(x: &'a Exhaustion) -> Result<Self> {
        let indices = (1..=x.max_level()).map(|s| x.copy_index(s)).collect::<Result<Vec<_>>>()?;
        let multiplicities = (1..=x.max_level()).map(|s| multiplicity(x, s).ok()).collect();
        Ok(SizeOracle { x, indices, multiplicities })
    }

    /// Least `s` with the path inside a copy of `K_s`, and the local images.
    fn locate(&self, p: &ClosedPath) -> Option<(usize, Vec<u32>)> {
        for idx in &self.indices {
            let first = &idx.by_vertex[p.origin() as usize];
            for &(copy, _) in first {
                let local: Option<Vec<u32>> = p
                    .vertices()
                    .iter()
                    .map(|&v| idx.by_vertex[v as usize].iter().find(|(c, _)| *c == copy).map(|&(_, l)| l))
                    .collect();
                if let Some(local) = local {
                    return Some((idx.size, local));
                }
            }
        }
        None
    }

    /// Size, effective length, primitivity and multiplicity of a reduced
    /// closed path given in deepest-level vertex numbers.
    pub fn cycle_stats(&self, p: &ClosedPath) -> Result<CycleRecord> {
        let class = classify_path(p)?;
        if !class.reduced {
            return Err(Error::NotProper("cycle statistics need a reduced closed path".into()));
        }
        let (size, local) = self
            .locate(p)
            .ok_or_else(|| Error::Inconsistent("cycle not contained in any copy up to the deepest level".into()))?;
        let multiplicity = self.multiplicities[size - 1].clone().ok_or_else(|| {
            Error::Inconsistent(format!("multiplicity of size {size} needs a deeper exhaustion"))
        })?;
        Ok(CycleRecord {
            canonical: least_rotation(&local),
            length: p.len(),
            primitive: class.primitive,
            size,
            effective_length: p.effective_length(),
            multiplicity,
        })
    }

    pub fn exhaustion(&self) -> &Exhaustion {
        self.x
    }
}

/// `μ` for copies of `K_s`: closed form where available, else the ratio at
/// the deepest level that still has an invariant frontier, with gap
/// `2 ε_n (d+1) / |Ω_{s,1}|`.
pub fn multiplicity(x: &Exhaustion, s: usize) -> Result<Multiplicity> {
    if let Some(f) = x.family() {
        if let Some(value) = f.multiplicity_closed_form(s) {
            return Ok(Multiplicity { value, gap: 0.0, level: s });
        }
    } else {
        // a single finite graph is its own unique copy
        let n = x.top().num_vertices() as i128;
        return Ok(Multiplicity { value: ratio(1, n), gap: 0.0, level: x.max_level() });
    }
    let deepest = x.max_level().saturating_sub(1).max(s);
    let value = finite_ratio(x, s, deepest)?;
    let eps = rational_to_f64(&x.epsilon(deepest)?);
    let d = x.max_degree() as f64;
    let gs = x.level(s)?;
    let fs = x.invariant_frontier(s)?;
    let omega = gs.num_vertices() - crate::graph_core::ball(gs, &fs.set, 1).len();
    let gap = if omega == 0 { f64::INFINITY } else { 2.0 * eps * (d + 1.0) / omega as f64 };
    Ok(Multiplicity { value, gap, level: deepest })
}

/// `|G(s, n)| / |K_n|`.
pub fn finite_ratio(x: &Exhaustion, s: usize, n: usize) -> Result<BigRational> {
    let count = x.copy_count(s, n)?;
    Ok(BigRational::new(count, BigInt::from(x.level(n)?.num_vertices())))
}

#[derive(Clone, Debug)]
pub struct WeightedRow {
    pub m: usize,
    pub raw_count: u64,
    pub shift_classes: u64,
    pub g_classes: u64,
    /// `Σ μ(C) ℓ(C)` over classes of size at most the deepest level.
    pub weighted_sum: BigRational,
    /// Accumulated multiplicity gaps (non-closed-form families only).
    pub multiplicity_gap: f64,
    /// Heuristic contribution of sizes beyond the deepest level: the class
    /// count at the largest size times `ℓ Σ_{s > N} μ(s)`.
    pub tail_bound: f64,
}

#[derive(Clone, Debug)]
pub struct WeightedCensus {
    pub rows: Vec<WeightedRow>,
    /// One record per G-class, sorted by (length, size, canonical form).
    pub classes: Vec<CycleRecord>,
}

impl WeightedCensus {
    /// Prime classes only.
    pub fn primes(&self) -> impl Iterator<Item = &CycleRecord> {
        self.classes.iter().filter(|c| c.primitive)
    }

    /// `Σ ℓ(C) |G(s(C), n)|` over classes of length `m` and size `<= n`:
    /// must equal the raw reduced census of `K_n`.
    pub fn finite_level_count(&self, x: &Exhaustion, m: usize, n: usize) -> Result<BigInt> {
        let mut total = BigInt::zero();
        for c in self.classes.iter().filter(|c| c.length == m && c.size <= n) {
            total += x.copy_count(c.size, n)? * BigInt::from(c.effective_length);
        }
        Ok(total)
    }
}

/// Reduced cycles of the deepest level grouped into G-classes by transport to
/// their minimal size, with `Σ μ ℓ` per length.
pub fn weighted_census(x: &Exhaustion, max_len: usize, budget: u64) -> Result<WeightedCensus> {
    let oracle = SizeOracle::new(x)?;
    let g = x.top();
    let all = VertexSet::full(g.num_vertices());
    let top = x.max_level();
    let mut rows = Vec::new();
    let mut classes = Vec::new();
    for m in 1..=max_len {
        let paths = reduced_paths(g, m, &all, budget)?;
        let mut shift: Vec<Vec<u32>> = paths.iter().map(|p| p.canonical_rotation()).collect();
        shift.sort_unstable();
        shift.dedup();
        let mut by_key: BTreeMap<(usize, Vec<u32>), CycleRecord> = BTreeMap::new();
        for rot in &shift {
            let rec = oracle.cycle_stats(&ClosedPath::unchecked(rot.clone()))?;
            by_key.entry((rec.size, rec.canonical.clone())).or_insert(rec);
        }
        let mut weighted = BigRational::zero();
        let mut gap = 0.0;
        let mut per_size: HashMap<usize, usize> = HashMap::new();
        for rec in by_key.values() {
            let l = BigRational::from_integer(BigInt::from(rec.effective_length));
            weighted += &rec.multiplicity.value * l;
            gap += rec.multiplicity.gap * rec.effective_length as f64;
            *per_size.entry(rec.size).or_default() += rec.effective_length;
        }
        let tail_bound = match per_size.get(&top) {
            Some(&weight) => weight as f64 * multiplicity_tail(x, top),
            None => 0.0,
        };
        rows.push(WeightedRow {
            m,
            raw_count: paths.len() as u64,
            shift_classes: shift.len() as u64,
            g_classes: by_key.len() as u64,
            weighted_sum: weighted,
            multiplicity_gap: gap,
            tail_bound,
        });
        classes.extend(by_key.into_values());
    }
    Ok(WeightedCensus { rows, classes })
}

/// `Σ_{s > n} μ(s)`, summed geometrically from the per-level copy factor.
fn multiplicity_tail(x: &Exhaustion, n: usize) -> f64 {
    let Some(f) = x.family() else { return 0.0 };
    let q = f.copies_per_level() as f64;
    let mu_n = match f.multiplicity_closed_form(n) {
        Some(v) => rational_to_f64(&v),
        None => multiplicity(x, n).map(|m| rational_to_f64(&m.value) + m.gap).unwrap_or(f64::INFINITY),
    };
    mu_n / (q - 1.0)
}

/// Numerator and denominator of a rational as decimal strings.
pub fn num_den(r: &BigRational) -> (String, String) {
    (r.numer().to_string(), r.denom().to_string())
}

/// `Σ_v` of a per-vertex count, as an exact integer.
pub fn total(counts: &[u64]) -> u128 {
    counts.iter().map(|&c| c as u128).sum()
}

/// Lossy conversion for reporting.
pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| rational_to_f64(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal_builders::Family;
    use crate::graph_core::test_graphs::*;

    fn triangle() -> Graph {
        complete(3)
    }

    #[test]
    fn triangle_paths() {
        let g = triangle();
        let one = VertexSet::from_iter(3, [0]).unwrap();
        assert_eq!(enumerate_proper_closed(&g, 3, &one, 1000).unwrap().len(), 2);
        assert_eq!(enumerate_proper_closed(&g, 4, &one, 1000).unwrap().len(), 0);
        let rows = reduced_cycle_census(&g, 3, 1000).unwrap();
        assert_eq!(rows[2].raw_count, 6);
        assert_eq!(rows[2].shift_classes, 2);
        assert_eq!(rows[2].unoriented_classes, 1);
        assert_eq!(rows[0].raw_count + rows[1].raw_count, 0);
    }

    #[test]
    fn classification() {
        let g = triangle();
        let c = ClosedPath::new(&g, vec![0, 1, 2]).unwrap();
        assert_eq!(classify_path(&c).unwrap(), PathClass { has_tail: false, reduced: true, primitive: true });
        let c2 = c.power(2);
        assert_eq!(classify_path(&c2).unwrap(), PathClass { has_tail: false, reduced: true, primitive: false });
        assert_eq!(c2.effective_length(), 3);
        // backtracking in the interior
        let bt = ClosedPath::new(&g, vec![0, 1, 0, 2, 1, 2]).unwrap();
        assert!(classify_path(&bt).is_err());
    }

    #[test]
    fn tail_witness_on_gasket() {
        let x = Exhaustion::build(Family::Gasket, 2).unwrap();
        let g = x.level(2).unwrap();
        // a -> b, loop around a triangle at b, back to a
        let b = 1usize;
        let a = g.neighbors(b)[0] as usize;
        let others: Vec<u32> = g.neighbors(b).iter().copied().filter(|&w| w as usize != a).collect();
        let (c, d) = others
            .iter()
            .flat_map(|&c| others.iter().map(move |&d| (c, d)))
            .find(|&(c, d)| c != d && g.has_edge(c as usize, d as usize))
            .unwrap();
        let p = ClosedPath::new(g, vec![a as u32, b as u32, c, d, b as u32]).unwrap();
        assert!(p.is_proper());
        assert!(classify_path(&p).unwrap().has_tail);
    }

    #[test]
    fn shift_classes_have_effective_length_markings() {
        let g = complete(4);
        let all = VertexSet::full(4);
        for m in 3..=8 {
            let paths = reduced_paths(&g, m, &all, 1 << 20).unwrap();
            let mut groups: BTreeMap<Vec<u32>, Vec<&ClosedPath>> = BTreeMap::new();
            for p in &paths {
                groups.entry(p.canonical_rotation()).or_default().push(p);
            }
            for (_, members) in groups {
                assert_eq!(members.len(), members[0].effective_length());
            }
        }
    }

    #[test]
    fn tail_and_reduced_partition_proper_paths() {
        let x = Exhaustion::build(Family::Gasket, 3).unwrap();
        let g = x.level(3).unwrap();
        let all = VertexSet::full(g.num_vertices());
        let d = g.max_degree() as u64;
        for m in 1..=8 {
            let proper = enumerate_proper_closed(g, m, &all, 1 << 24).unwrap();
            let tailed = proper.iter().filter(|p| p.has_tail()).count();
            let reduced = proper.iter().filter(|p| !p.has_tail()).count();
            assert_eq!(tailed + reduced, proper.len());
            let counts = count_closed_per_vertex(g, m, &all, 1 << 24).unwrap();
            assert_eq!(total(&counts.tailed), tailed as u128);
            assert_eq!(total(&counts.proper), proper.len() as u128);
            if m >= 2 {
                assert!(counts.tailed.iter().all(|&t| t <= d * (d - 1).pow(m as u32 - 2)));
            }
        }
    }

    #[test]
    fn gasket_level_two_triangles() {
        let x = Exhaustion::build(Family::Gasket, 2).unwrap();
        let rows = reduced_cycle_census(x.level(2).unwrap(), 3, 1 << 20).unwrap();
        // three corner triangles and the central one, six markings each
        assert_eq!(rows[2].raw_count, 24);
    }

    #[test]
    fn budget_guard() {
        let g = complete(9);
        let all = VertexSet::full(9);
        match enumerate_proper_closed(&g, 14, &all, 1000) {
            Err(Error::BudgetExceeded { estimate, .. }) => assert!(estimate > 1000.0),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn gasket_cycle_sizes_and_multiplicities() {
        let x = Exhaustion::build(Family::Gasket, 4).unwrap();
        let oracle = SizeOracle::new(&x).unwrap();
        let census = weighted_census(&x, 4, 1 << 24).unwrap();
        let triangles: Vec<_> = census.classes.iter().filter(|c| c.length == 3).collect();
        // two orientations each of the corner triangle (size 1) and the central triangle (size 2)
        assert_eq!(triangles.len(), 4);
        assert_eq!(triangles.iter().filter(|c| c.size == 1).count(), 2);
        for t in &triangles {
            let expect = if t.size == 1 { ratio(2, 3) } else { ratio(2, 9) };
            assert_eq!(t.multiplicity.value, expect);
            assert_eq!(t.effective_length, 3);
        }
        // N_3 = 3 (2 * 2/3 + 2 * 2/9) = 16/3
        assert_eq!(census.rows[2].weighted_sum, ratio(16, 3));
        assert_eq!(census.rows[0].weighted_sum, ratio(0, 1));
        assert_eq!(census.rows[1].weighted_sum, ratio(0, 1));
        // a doubled cycle shares size, effective length and multiplicity
        let g = x.top();
        let all = VertexSet::full(g.num_vertices());
        let tri = reduced_paths(g, 3, &all, 1 << 20).unwrap().into_iter().next().unwrap();
        let one = oracle.cycle_stats(&tri).unwrap();
        let two = oracle.cycle_stats(&tri.power(2)).unwrap();
        assert_eq!((one.size, one.effective_length), (two.size, two.effective_length));
        assert_eq!(one.multiplicity, two.multiplicity);
        assert!(!two.primitive);
    }

    #[test]
    fn class_counts_reproduce_finite_census() {
        for (f, levels, len) in [(Family::Gasket, 4, 8), (Family::Vicsek, 3, 8), (Family::Lindstrom, 2, 8)] {
            let x = Exhaustion::build(f, levels).unwrap();
            let census = weighted_census(&x, len, 1 << 26).unwrap();
            for n in 1..=levels {
                let rows = reduced_cycle_census(x.level(n).unwrap(), len, 1 << 26).unwrap();
                for row in rows {
                    assert_eq!(
                        census.finite_level_count(&x, row.m, n).unwrap(),
                        BigInt::from(row.raw_count),
                        "{f} level {n} length {}",
                        row.m
                    );
                }
            }
        }
    }

    #[test]
    fn vicsek_squares() {
        let x = Exhaustion::build(Family::Vicsek, 3).unwrap();
        let census = weighted_census(&x, 8, 1 << 24).unwrap();
        // only the unit squares have length 4: two orientations, μ = 1/3
        assert_eq!(census.rows[3].weighted_sum, ratio(8, 3));
        assert!(census.classes.iter().filter(|c| c.length == 4).all(|c| c.size == 1));
        // size-2 classes carry μ = 1/15
        let two: Vec<_> = census.classes.iter().filter(|c| c.size == 2).collect();
        assert!(!two.is_empty());
        assert!(two.iter().all(|c| c.multiplicity.value == ratio(1, 15)));
    }

    #[test]
    fn carpet_multiplicity_is_bracketed() {
        let x = Exhaustion::build(Family::Carpet, 4).unwrap();
        let m = multiplicity(&x, 1).unwrap();
        assert_eq!(m.level, 3);
        assert_eq!(m.value, finite_ratio(&x, 1, 3).unwrap());
        // the limit 35/44 lies within the one-sided bracket
        let limit = 35.0 / 44.0;
        let lo = to_f64(&m.value);
        assert!(lo <= limit && limit <= lo + m.gap);
    }

    #[test]
    fn gasket_ratio_sequence_is_monotone() {
        let x = Exhaustion::build(Family::Gasket, 7).unwrap();
        let seq: Vec<f64> = (2..=7).map(|n| to_f64(&finite_ratio(&x, 2, n).unwrap())).collect();
        assert!(seq.windows(2).all(|w| w[1] >= w[0]));
        assert!((2.0 / 9.0 - seq.last().unwrap()).abs() < 1e-2);
    }
}
