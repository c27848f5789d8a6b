//! Self-similar exhaustions `K_1 ⊂ K_2 ⊂ ...` built from an iterated function
//! system with a fixed address (the first map is applied at every level).
//!
//! Level 1 is the generating polygon. Copies of `K_n` inside `K_{n+1}` are
//! produced by lattice translations; vertices are glued by coordinate, and the
//! copy maps are kept as explicit vertex maps. The first copy map of every
//! level is the inclusion `K_n ⊂ K_{n+1}`.

use crate::error::{Error, Result};
use crate::graph_core::{frontier, Graph, VertexSet};
use crate::scalar::ratio;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

/// Default cap on the number of vertices of a single level.
pub const DEFAULT_VERTEX_CAP: usize = 3_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Gasket,
    Vicsek,
    Lindstrom,
    Carpet,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Gasket, Family::Vicsek, Family::Lindstrom, Family::Carpet];

    pub fn name(self) -> &'static str {
        match self {
            Family::Gasket => "gasket",
            Family::Vicsek => "vicsek",
            Family::Lindstrom => "lindstrom",
            Family::Carpet => "carpet",
        }
    }

    /// Number of copies of `K_n` in `K_{n+1}`.
    pub fn copies_per_level(self) -> usize {
        self.spec().offsets.len()
    }

    /// Predicted `|V(K_n)|`, computed in floating point so that absurd levels
    /// can be rejected before any allocation.
    pub fn predicted_vertices(self, level: usize) -> f64 {
        let n = level as f64;
        match self {
            Family::Gasket => (3f64.powf(n) + 3.0) / 2.0,
            Family::Vicsek => 3.0 * 5f64.powf(n - 1.0) + 1.0,
            Family::Lindstrom => 4.0 * 7f64.powf(n - 1.0) + 2.0,
            Family::Carpet => {
                // V_{k+1} = 8 V_k - 8 (3^{k-1} + 1), V_1 = 4
                let mut v = 4.0f64;
                for k in 1..level {
                    v = 8.0 * v - 8.0 * (3f64.powi(k as i32 - 1) + 1.0);
                    if !v.is_finite() {
                        return f64::INFINITY;
                    }
                }
                v
            }
        }
    }

    /// Limit of `(|V| - |E|) / |V|` along the exhaustion.
    pub fn average_euler_characteristic(self) -> BigRational {
        match self {
            Family::Gasket => ratio(-1, 1),
            Family::Vicsek => ratio(-1, 3),
            Family::Lindstrom => ratio(-1, 2),
            Family::Carpet => ratio(-10, 11),
        }
    }

    /// `lim_n |G(s, n)| / |K_n|` when it has a closed form.
    pub fn multiplicity_closed_form(self, s: usize) -> Option<BigRational> {
        assert!(s >= 1);
        let p = (s - 1) as u32;
        match self {
            // 3^{n-s} / ((3^n + 3) / 2)
            Family::Gasket => Some(BigRational::new(BigInt::from(2), BigInt::from(3).pow(s as u32))),
            // 5^{n-s} / (3 * 5^{n-1} + 1)
            Family::Vicsek => Some(BigRational::new(BigInt::one(), BigInt::from(3) * BigInt::from(5).pow(p))),
            // 7^{n-s} / (4 * 7^{n-1} + 2)
            Family::Lindstrom => Some(BigRational::new(BigInt::one(), BigInt::from(4) * BigInt::from(7).pow(p))),
            Family::Carpet => None,
        }
    }

    fn spec(self) -> IfsSpec {
        match self {
            // triangular lattice coordinates
            Family::Gasket => IfsSpec {
                base: vec![(0, 0), (1, 0), (0, 1)],
                edges: vec![(0, 1), (1, 2), (2, 0)],
                scale: 2,
                offsets: vec![(0, 0), (1, 0), (0, 1)],
            },
            Family::Vicsek => IfsSpec {
                base: vec![(0, 0), (1, 0), (1, 1), (0, 1)],
                edges: vec![(0, 1), (1, 2), (2, 3), (3, 0)],
                scale: 3,
                offsets: vec![(0, 0), (2, 0), (0, 2), (2, 2), (1, 1)],
            },
            // triangular lattice; the fixed copy is the central hexagon
            Family::Lindstrom => {
                let u = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];
                let mut offsets = vec![(0, 0)];
                offsets.extend(u.iter().map(|&(a, b)| (2 * a, 2 * b)));
                IfsSpec {
                    base: u.to_vec(),
                    edges: (0..6).map(|i| (i, (i + 1) % 6)).collect(),
                    scale: 3,
                    offsets,
                }
            }
            Family::Carpet => IfsSpec {
                base: vec![(0, 0), (1, 0), (1, 1), (0, 1)],
                edges: vec![(0, 1), (1, 2), (2, 3), (3, 0)],
                scale: 3,
                offsets: vec![(0, 0), (1, 0), (2, 0), (0, 1), (2, 1), (0, 2), (1, 2), (2, 2)],
            },
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gasket" | "sierpinski" => Ok(Family::Gasket),
            "vicsek" => Ok(Family::Vicsek),
            "lindstrom" => Ok(Family::Lindstrom),
            "carpet" => Ok(Family::Carpet),
            other => Err(Error::Inconsistent(format!(
                "unknown family `{other}` (expected gasket, vicsek, lindstrom or carpet)"
            ))),
        }
    }
}

struct IfsSpec {
    base: Vec<(i64, i64)>,
    edges: Vec<(usize, usize)>,
    scale: i64,
    offsets: Vec<(i64, i64)>,
}

/// Vertex map of one copy `K_n -> K_{n+1}` (or a composite `K_n -> K_m`).
pub type CopyMap = Vec<u32>;

/// An increasing exhaustion together with its copy maps.
#[derive(Clone, Debug)]
pub struct Exhaustion {
    family: Option<Family>,
    levels: Vec<Graph>,
    copies: Vec<Vec<CopyMap>>,
    outer_degrees: Vec<usize>,
    outer_frontier: VertexSet,
}

/// `F_G(K_n)` with the depth at which the truncated union stopped changing.
#[derive(Clone, Debug)]
pub struct InvariantFrontier {
    pub level: usize,
    pub set: VertexSet,
    pub stabilized_at: usize,
    pub truncation: usize,
}

impl InvariantFrontier {
    pub fn epsilon(&self) -> BigRational {
        ratio(self.set.len() as i128, self.set.universe() as i128)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelDescriptor {
    pub level: usize,
    #[serde(rename = "V")]
    pub vertices: usize,
    #[serde(rename = "E")]
    pub edges: usize,
    /// `|F_G(K_n)| / |K_n|` as `p/q`; absent at the deepest level.
    pub eps: Option<String>,
    pub chi: i64,
}

/// Copies of `K_s` inside the deepest level, indexed by vertex.
#[derive(Clone, Debug)]
pub struct CopyIndex {
    pub size: usize,
    pub maps: Vec<CopyMap>,
    /// For each top-level vertex, the `(copy, local vertex)` pairs containing it.
    pub by_vertex: Vec<Vec<(u32, u32)>>,
}

impl Exhaustion {
    /// Builds levels `1..=max_level` of a built-in family.
    pub fn build(family: Family, max_level: usize) -> Result<Self> {
        Self::build_with_cap(family, max_level, DEFAULT_VERTEX_CAP)
    }

    pub fn build_with_cap(family: Family, max_level: usize, cap: usize) -> Result<Self> {
        if max_level == 0 {
            return Err(Error::Inconsistent("levels are numbered from 1".into()));
        }
        let predicted = family.predicted_vertices(max_level);
        // the virtual next level is touched at the top, so guard one level up
        if !(predicted <= cap as f64) {
            return Err(Error::LevelTooLarge { level: max_level, vertices: predicted, cap });
        }
        let spec = family.spec();
        let mut coords = spec.base.clone();
        let mut levels = vec![Graph::from_edges(coords.len(), &spec.edges)?];
        let mut copies = Vec::new();
        let mut step = 1i64;
        for _ in 1..max_level {
            let g = levels.last().unwrap();
            let mut index: HashMap<(i64, i64), u32> = HashMap::new();
            let mut next_coords = Vec::new();
            let mut maps = Vec::with_capacity(spec.offsets.len());
            for &(ox, oy) in &spec.offsets {
                let map: CopyMap = coords
                    .iter()
                    .map(|&(x, y)| {
                        let p = (x + ox * step, y + oy * step);
                        *index.entry(p).or_insert_with(|| {
                            next_coords.push(p);
                            (next_coords.len() - 1) as u32
                        })
                    })
                    .collect();
                maps.push(map);
            }
            let mut edges = Vec::with_capacity(g.num_edges() * maps.len());
            for map in &maps {
                for (u, v) in g.edges() {
                    edges.push((map[u] as usize, map[v] as usize));
                }
            }
            let next = Graph::from_edges_dedup(next_coords.len(), &edges)?;
            levels.push(next);
            copies.push(maps);
            coords = next_coords;
            step *= spec.scale;
        }
        let (outer_degrees, outer_frontier) = outer_structure(levels.last().unwrap(), &coords, &spec, step);
        Ok(Exhaustion { family: Some(family), levels, copies, outer_degrees, outer_frontier })
    }

    /// Degenerate exhaustion in which every level is `g` and the only copy
    /// map is the identity. Useful for running the machinery on a finite graph.
    pub fn from_single_graph(g: Graph, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::Inconsistent("levels are numbered from 1".into()));
        }
        let n = g.num_vertices();
        let identity: CopyMap = (0..n as u32).collect();
        Ok(Exhaustion {
            family: None,
            outer_degrees: g.degrees(),
            outer_frontier: VertexSet::empty(n),
            copies: vec![vec![identity]; levels - 1],
            levels: vec![g; levels],
        })
    }

    pub fn family(&self) -> Option<Family> {
        self.family
    }

    pub fn label(&self) -> String {
        self.family.map(|f| f.name().to_string()).unwrap_or_else(|| "graph".into())
    }

    pub fn max_level(&self) -> usize {
        self.levels.len()
    }

    fn check_level(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.max_level() {
            return Err(Error::MissingLevel { level: n, max: self.max_level() });
        }
        Ok(())
    }

    pub fn level(&self, n: usize) -> Result<&Graph> {
        self.check_level(n)?;
        Ok(&self.levels[n - 1])
    }

    /// Deepest built level.
    pub fn top(&self) -> &Graph {
        self.levels.last().unwrap()
    }

    /// Maximum degree of the union, i.e. of the deepest level seen from outside.
    pub fn max_degree(&self) -> usize {
        self.outer_degrees.iter().copied().max().unwrap_or(0)
    }

    /// `G(n, n+1)`; the first entry is the inclusion.
    pub fn copies(&self, n: usize) -> Result<&[CopyMap]> {
        if n == 0 || n >= self.max_level() {
            return Err(Error::MissingLevel { level: n + 1, max: self.max_level() });
        }
        Ok(&self.copies[n - 1])
    }

    /// Inclusion `K_n -> K_m`, `n <= m`.
    pub fn embedding(&self, n: usize, m: usize) -> Result<CopyMap> {
        self.check_level(n)?;
        self.check_level(m)?;
        if n > m {
            return Err(Error::Inconsistent(format!("no embedding of level {n} into level {m}")));
        }
        let mut map: CopyMap = (0..self.levels[n - 1].num_vertices() as u32).collect();
        for k in n..m {
            let step = &self.copies[k - 1][0];
            for v in map.iter_mut() {
                *v = step[*v as usize];
            }
        }
        Ok(map)
    }

    /// Degrees in the union of all levels, for vertices of `K_n`.
    pub fn ambient_degrees(&self, n: usize) -> Result<Vec<usize>> {
        let emb = self.embedding(n, self.max_level())?;
        Ok(emb.iter().map(|&v| self.outer_degrees[v as usize]).collect())
    }

    /// Vertices of the deepest level with a neighbour outside it.
    pub fn outer_frontier(&self) -> &VertexSet {
        &self.outer_frontier
    }

    /// The composite `γ_{m-1} ... γ_n`, where `word[k]` picks the copy used
    /// from level `n + k` to `n + k + 1`. The empty word is the identity.
    pub fn compose_copy_maps(&self, n: usize, m: usize, word: &[usize]) -> Result<CopyMap> {
        self.check_level(n)?;
        self.check_level(m)?;
        if n > m || word.len() != m - n {
            return Err(Error::Inconsistent(format!(
                "word of length {} does not lead from level {n} to level {m}",
                word.len()
            )));
        }
        let mut map: CopyMap = (0..self.levels[n - 1].num_vertices() as u32).collect();
        for (k, &choice) in word.iter().enumerate() {
            let maps = &self.copies[n + k - 1];
            let step = maps.get(choice).ok_or_else(|| {
                Error::Inconsistent(format!("copy {choice} does not exist at level {}", n + k))
            })?;
            for v in map.iter_mut() {
                *v = step[*v as usize];
            }
        }
        Ok(map)
    }

    /// All composite maps `K_n -> K_m`, i.e. the set `G(n, m)`.
    pub fn composite_copies(&self, n: usize, m: usize) -> Result<Vec<CopyMap>> {
        self.check_level(n)?;
        self.check_level(m)?;
        if n > m {
            return Err(Error::Inconsistent(format!("no copies of level {n} in level {m}")));
        }
        let mut maps: Vec<CopyMap> = vec![(0..self.levels[n - 1].num_vertices() as u32).collect()];
        for k in n..m {
            let mut next = Vec::with_capacity(maps.len() * self.copies[k - 1].len());
            for w in &maps {
                for c in &self.copies[k - 1] {
                    next.push(w.iter().map(|&v| c[v as usize]).collect());
                }
            }
            maps = next;
        }
        Ok(maps)
    }

    /// `|G(n, m)|`.
    pub fn copy_count(&self, n: usize, m: usize) -> Result<BigInt> {
        self.check_level(n)?;
        self.check_level(m)?;
        let mut c = BigInt::one();
        for k in n..m {
            c *= BigInt::from(self.copies[k - 1].len());
        }
        Ok(c)
    }

    /// Copies of `K_s` in the deepest level with a reverse index.
    pub fn copy_index(&self, s: usize) -> Result<CopyIndex> {
        let maps = self.composite_copies(s, self.max_level())?;
        let mut by_vertex = vec![Vec::new(); self.top().num_vertices()];
        for (c, map) in maps.iter().enumerate() {
            for (local, &v) in map.iter().enumerate() {
                by_vertex[v as usize].push((c as u32, local as u32));
            }
        }
        Ok(CopyIndex { size: s, maps, by_vertex })
    }

    /// Frontier in the union of a subset of the deepest level.
    fn outer_set_frontier(&self, set: &VertexSet) -> VertexSet {
        let f = frontier(self.top(), set);
        let extra = VertexSet::from_mask(
            set.mask().iter().zip(self.outer_frontier.mask()).map(|(a, b)| *a && *b).collect(),
        );
        f.union(&extra)
    }

    /// `F_G(K_n)`: union over all copies `γ K_n` up to the deepest level of the
    /// pulled-back frontiers. Unavailable at the deepest level itself.
    pub fn invariant_frontier(&self, n: usize) -> Result<InvariantFrontier> {
        self.check_level(n)?;
        let top = self.max_level();
        let size = self.levels[n - 1].num_vertices();
        if self.family.is_none() {
            return Ok(InvariantFrontier { level: n, set: VertexSet::empty(size), stabilized_at: n, truncation: top });
        }
        if n == top {
            return Err(Error::MissingLevel { level: n + 1, max: top });
        }
        let mut acc = vec![false; size];
        let mut stabilized_at = n;
        let top_n = self.top().num_vertices();
        for m in n..=top {
            let into_top = self.embedding(m, top)?;
            let before = acc.iter().filter(|&&b| b).count();
            for gamma in self.composite_copies(n, m)? {
                let image: Vec<u32> = gamma.iter().map(|&v| into_top[v as usize]).collect();
                let set = VertexSet::from_iter(top_n, image.iter().map(|&v| v as usize))?;
                let f = self.outer_set_frontier(&set);
                for (local, &v) in image.iter().enumerate() {
                    if f.contains(v as usize) {
                        acc[local] = true;
                    }
                }
            }
            if acc.iter().filter(|&&b| b).count() != before {
                stabilized_at = m;
            }
        }
        Ok(InvariantFrontier { level: n, set: VertexSet::from_mask(acc), stabilized_at, truncation: top })
    }

    /// `ε_n = |F_G(K_n)| / |K_n|`.
    pub fn epsilon(&self, n: usize) -> Result<BigRational> {
        Ok(self.invariant_frontier(n)?.epsilon())
    }

    pub fn descriptor(&self, n: usize) -> Result<LevelDescriptor> {
        let g = self.level(n)?;
        let eps = self.epsilon(n).ok().map(|e| crate::scalar::rational_string(&e));
        Ok(LevelDescriptor {
            level: n,
            vertices: g.num_vertices(),
            edges: g.num_edges(),
            eps,
            chi: g.euler_characteristic(),
        })
    }

    /// `χ(K_n) / |K_n|` for every level.
    pub fn euler_characteristic_average(&self) -> Vec<BigRational> {
        self.levels
            .iter()
            .map(|g| ratio(g.euler_characteristic() as i128, g.num_vertices() as i128))
            .collect()
    }

    /// Checks `|G(n,m)| |Ω_{n,1}| <= |K_m| <= |G(n,m)| |K_n|` for all built
    /// `n < m`, returning the offending pair on failure.
    pub fn check_cardinality_sandwich(&self) -> Result<()> {
        for n in 1..self.max_level() {
            let inv = self.invariant_frontier(n)?;
            let g = &self.levels[n - 1];
            let omega = g.num_vertices() - crate::graph_core::ball(g, &inv.set, 1).len();
            for m in n + 1..=self.max_level() {
                let count = self.copy_count(n, m)?;
                let km = BigInt::from(self.levels[m - 1].num_vertices());
                let lower = &count * BigInt::from(omega);
                let upper = &count * BigInt::from(g.num_vertices());
                if lower > km || km > upper {
                    return Err(Error::Inconsistent(format!(
                        "cardinality sandwich fails for n={n}, m={m}: {lower} <= {km} <= {upper}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Degrees and frontier of the deepest level as seen inside the next level,
/// which is never materialised.
fn outer_structure(g: &Graph, coords: &[(i64, i64)], spec: &IfsSpec, step: i64) -> (Vec<usize>, VertexSet) {
    let index: HashMap<(i64, i64), u32> = coords.iter().enumerate().map(|(i, &p)| (p, i as u32)).collect();
    let n = g.num_vertices();
    let mut nbr_sets: Vec<HashSet<(i64, i64)>> = vec![HashSet::new(); n];
    let mut outer = vec![false; n];
    for (i, &(ox, oy)) in spec.offsets.iter().enumerate() {
        let shift = |p: (i64, i64)| (p.0 + ox * step, p.1 + oy * step);
        for w in 0..n {
            let Some(&v) = index.get(&shift(coords[w])) else { continue };
            for &w2 in g.neighbors(w) {
                let p = shift(coords[w2 as usize]);
                nbr_sets[v as usize].insert(p);
                if i > 0 && !(index.contains_key(&p) && g.has_edge(v as usize, index[&p] as usize)) {
                    outer[v as usize] = true;
                }
            }
        }
    }
    (nbr_sets.iter().map(|s| s.len()).collect(), VertexSet::from_mask(outer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_core::ball;

    fn sizes(f: Family, levels: usize) -> Vec<(usize, usize)> {
        let x = Exhaustion::build(f, levels).unwrap();
        (1..=levels).map(|n| {
            let g = x.level(n).unwrap();
            (g.num_vertices(), g.num_edges())
        }).collect()
    }

    #[test]
    fn gasket_sizes() {
        let s = sizes(Family::Gasket, 6);
        for (i, &(v, e)) in s.iter().enumerate() {
            let n = i as u32 + 1;
            assert_eq!(v, (3usize.pow(n) + 3) / 2);
            assert_eq!(e, 3usize.pow(n));
        }
        assert_eq!(s[1], (6, 9));
        assert_eq!(s[2], (15, 27));
    }

    #[test]
    fn vicsek_and_lindstrom_sizes() {
        for (i, &(v, e)) in sizes(Family::Vicsek, 5).iter().enumerate() {
            let p = i as u32;
            assert_eq!(v, 3 * 5usize.pow(p) + 1);
            assert_eq!(e, 4 * 5usize.pow(p));
        }
        for (i, &(v, e)) in sizes(Family::Lindstrom, 4).iter().enumerate() {
            let p = i as u32;
            assert_eq!(v, 4 * 7usize.pow(p) + 2);
            assert_eq!(e, 6 * 7usize.pow(p));
        }
    }

    #[test]
    fn carpet_sizes_follow_recurrence_and_limits() {
        let s = sizes(Family::Carpet, 5);
        assert_eq!(s[0], (4, 4));
        assert_eq!(s[1], (16, 24));
        assert_eq!(s[2], (96, 168));
        for (n, &(v, _)) in s.iter().enumerate() {
            assert_eq!(v as f64, Family::Carpet.predicted_vertices(n + 1));
        }
        // |V|/8^{n-1} -> 44/35 and |E|/8^{n-1} -> 12/5 with tails
        // sum_{k>=n} (3^{k-1} + 1)/8^{k-1} and sum_{k>=n} (3/8)^{k-1}
        let (v, e) = s[4];
        let scale = 8f64.powi(4);
        let r = 3.0f64 / 8.0;
        let v_tail = r.powi(4) / (1.0 - r) + 8f64.powi(-4) / (1.0 - 1.0 / 8.0);
        let e_tail = r.powi(4) / (1.0 - r);
        assert!((v as f64 / scale - 44.0 / 35.0 - v_tail).abs() < 1e-12);
        assert!((e as f64 / scale - 12.0 / 5.0 - e_tail).abs() < 1e-12);
    }

    #[test]
    fn predicted_sizes_match_builds() {
        for f in Family::ALL {
            let x = Exhaustion::build(f, 4).unwrap();
            for n in 1..=4 {
                assert_eq!(x.level(n).unwrap().num_vertices() as f64, f.predicted_vertices(n));
            }
        }
    }

    #[test]
    fn memory_guard_rejects_deep_levels() {
        match Exhaustion::build(Family::Gasket, 40) {
            Err(Error::LevelTooLarge { level: 40, vertices, .. }) => assert!(vertices > 1e18),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn copy_maps_are_isomorphisms_covering_the_next_level() {
        for f in Family::ALL {
            let x = Exhaustion::build(f, 4).unwrap();
            for n in 1..4 {
                let small = x.level(n).unwrap();
                let big = x.level(n + 1).unwrap();
                let maps = x.copies(n).unwrap();
                assert_eq!(maps.len(), f.copies_per_level());
                let mut covered = vec![false; big.num_vertices()];
                let mut images = Vec::new();
                for map in maps {
                    let mut seen = HashSet::new();
                    for &v in map {
                        assert!(seen.insert(v), "copy map not injective");
                        covered[v as usize] = true;
                    }
                    for a in 0..small.num_vertices() {
                        for b in 0..small.num_vertices() {
                            assert_eq!(
                                small.has_edge(a, b),
                                big.has_edge(map[a] as usize, map[b] as usize),
                                "{f} copy map is not an induced isomorphism"
                            );
                        }
                    }
                    images.push(VertexSet::from_iter(big.num_vertices(), map.iter().map(|&v| v as usize)).unwrap());
                }
                assert!(covered.iter().all(|&c| c));
                for i in 0..images.len() {
                    for j in i + 1..images.len() {
                        let fi = frontier(big, &images[i]);
                        let fj = frontier(big, &images[j]);
                        for &v in images[i].members() {
                            if images[j].contains(v as usize) {
                                assert!(fi.contains(v as usize) && fj.contains(v as usize));
                            }
                        }
                    }
                }
                // the first copy is the inclusion
                assert!(maps[0].iter().enumerate().all(|(i, &v)| v as usize == i));
            }
        }
    }

    #[test]
    fn outer_structure_matches_next_level() {
        for f in Family::ALL {
            let small = Exhaustion::build(f, 3).unwrap();
            let big = Exhaustion::build(f, 4).unwrap();
            let g4 = big.level(4).unwrap();
            let g3 = big.level(3).unwrap();
            let k3 = VertexSet::full(g3.num_vertices());
            let emb = big.embedding(3, 4).unwrap();
            let k3_in_4 = VertexSet::from_iter(g4.num_vertices(), emb.iter().map(|&v| v as usize)).unwrap();
            let f4 = frontier(g4, &k3_in_4);
            for v in 0..g3.num_vertices() {
                assert_eq!(small.outer_degrees[v], g4.degree(emb[v] as usize), "{f}");
                assert_eq!(small.outer_frontier.contains(v), f4.contains(emb[v] as usize), "{f}");
            }
            // degrees at vertices of K_2 are final inside K_3 and K_4
            assert_eq!(small.ambient_degrees(2).unwrap(), big.ambient_degrees(2).unwrap());
            let _ = k3;
        }
    }

    #[test]
    fn gasket_degrees_and_marked_point() {
        let x = Exhaustion::build(Family::Gasket, 6).unwrap();
        for n in 2..=6 {
            let d = x.ambient_degrees(n).unwrap();
            assert_eq!(d.iter().filter(|&&k| k == 2).count(), 1);
            assert!(d.iter().all(|&k| k == 2 || k == 4));
            assert_eq!(d[0], 2);
        }
        assert_eq!(x.max_degree(), 4);
    }

    #[test]
    fn invariant_frontier_of_gasket_is_the_corners() {
        let x = Exhaustion::build(Family::Gasket, 6).unwrap();
        for n in 1..6 {
            let inv = x.invariant_frontier(n).unwrap();
            assert_eq!(inv.set.len(), 3);
            assert!(inv.stabilized_at <= n + 1);
            let g = x.level(n).unwrap();
            let inner = x.embedding(n, n + 1).unwrap();
            let big = x.level(n + 1).unwrap();
            let image = VertexSet::from_iter(big.num_vertices(), inner.iter().map(|&v| v as usize)).unwrap();
            let f = frontier(big, &image);
            for v in 0..g.num_vertices() {
                if f.contains(inner[v] as usize) {
                    assert!(inv.set.contains(v));
                }
            }
        }
        assert!(x.invariant_frontier(6).is_err());
        assert_eq!(x.epsilon(3).unwrap(), ratio(3, 15));
    }

    #[test]
    fn invariant_frontier_sizes_for_other_families() {
        for (f, count) in [(Family::Vicsek, 4usize), (Family::Lindstrom, 6usize)] {
            let x = Exhaustion::build(f, 4).unwrap();
            for n in 1..4 {
                assert_eq!(x.invariant_frontier(n).unwrap().set.len(), count, "{f} level {n}");
            }
        }
        let x = Exhaustion::build(Family::Carpet, 4).unwrap();
        for n in 1..4u32 {
            // the whole boundary square
            assert_eq!(x.invariant_frontier(n as usize).unwrap().set.len(), 4 * 3usize.pow(n - 1));
        }
    }

    #[test]
    fn cardinality_sandwich_and_ratio_bound() {
        for f in Family::ALL {
            let x = Exhaustion::build(f, 4).unwrap();
            x.check_cardinality_sandwich().unwrap();
            let d = x.max_degree() as f64;
            for n in 1..4 {
                let eps = crate::scalar::rational_to_f64(&x.epsilon(n).unwrap());
                for m in n + 1..=4 {
                    let count = crate::scalar::rational_to_f64(&BigRational::from_integer(x.copy_count(n, m).unwrap()));
                    let r = x.level(m).unwrap().num_vertices() as f64 / (count * x.level(n).unwrap().num_vertices() as f64);
                    assert!(r <= 1.0 + 1e-12);
                    assert!(r >= 1.0 - eps * (d + 1.0) - 1e-12);
                }
            }
        }
    }

    #[test]
    fn euler_averages_approach_targets() {
        let x = Exhaustion::build(Family::Gasket, 7).unwrap();
        let chi = x.euler_characteristic_average();
        let last = crate::scalar::rational_to_f64(chi.last().unwrap());
        assert!((last + 1.0).abs() < 0.02);
        // monotone approach for the gasket: (3 - 3^n) / (3^n + 3) decreases to -1
        assert!(chi.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn degenerate_exhaustion() {
        let g = crate::graph_core::test_graphs::complete(3);
        let x = Exhaustion::from_single_graph(g, 3).unwrap();
        assert_eq!(x.max_level(), 3);
        assert_eq!(x.embedding(1, 3).unwrap(), vec![0, 1, 2]);
        assert!(x.invariant_frontier(1).unwrap().set.is_empty());
        assert_eq!(x.copy_count(1, 3).unwrap(), BigInt::one());
        let b = ball(x.top(), &VertexSet::empty(3), 2);
        assert!(b.is_empty());
    }

    #[test]
    fn composite_copies_count() {
        let x = Exhaustion::build(Family::Vicsek, 4).unwrap();
        assert_eq!(x.composite_copies(1, 4).unwrap().len(), 125);
        assert_eq!(x.copy_count(2, 4).unwrap(), BigInt::from(25));
        let idx = x.copy_index(2).unwrap();
        assert_eq!(idx.maps.len(), 25);
        assert!(idx.by_vertex.iter().all(|v| !v.is_empty()));
    }

    #[test]
    fn composed_words() {
        let x = Exhaustion::build(Family::Gasket, 3).unwrap();
        assert_eq!(x.compose_copy_maps(2, 2, &[]).unwrap(), (0..6).collect::<Vec<u32>>());
        assert!(x.compose_copy_maps(1, 3, &[0]).is_err());
        assert!(x.compose_copy_maps(1, 3, &[0, 3]).is_err());
        let all = x.composite_copies(1, 3).unwrap();
        assert_eq!(all.len(), 9);
        for a in 0..3 {
            for b in 0..3 {
                assert!(all.contains(&x.compose_copy_maps(1, 3, &[a, b]).unwrap()));
            }
        }
        // distinct unit triangles share at most one corner and never an edge
        let g = x.level(3).unwrap();
        for i in 0..9 {
            for j in i + 1..9 {
                let shared = all[i].iter().filter(|v| all[j].contains(v)).count();
                assert!(shared <= 1);
            }
        }
        assert_eq!(g.num_edges(), 27);
        assert_eq!(x.copy_count(1, 3).unwrap(), BigInt::from(9));
    }

    #[test]
    fn family_parsing() {
        assert_eq!("Gasket".parse::<Family>().unwrap(), Family::Gasket);
        assert!("koch".parse::<Family>().is_err());
    }
}
