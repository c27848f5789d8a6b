//! Finite simple graphs in compressed adjacency form, vertex subsets, and the
//! local operators `A`, `Q = D - I` together with their restrictions to subsets.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Undirected simple graph. Neighbour lists are sorted ascending; the
/// adjacency relation is symmetric and loop-free by construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Loops, duplicate edges and
    /// out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n > u32::MAX as usize {
            return Err(Error::InvalidGraph(format!("{n} vertices exceeds u32 indexing")));
        }
        let mut deg = vec![0usize; n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {u}")));
            }
            deg[u] += 1;
            deg[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &deg {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut targets = vec![0u32; offsets[n]];
        for &(u, v) in edges {
            targets[fill[u]] = v as u32;
            fill[u] += 1;
            targets[fill[v]] = u as u32;
            fill[v] += 1;
        }
        for v in 0..n {
            let row = &mut targets[offsets[v]..offsets[v + 1]];
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidGraph(format!("duplicate edge at vertex {v}")));
            }
        }
        Ok(Graph { offsets, targets })
    }

    /// Same as [`Graph::from_edges`] but silently merges duplicate edges.
    pub fn from_edges_dedup(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut e: Vec<(usize, usize)> = edges
            .iter()
            .map(|&(u, v)| if u < v { (u, v) } else { (v, u) })
            .collect();
        e.sort_unstable();
        e.dedup();
        Self::from_edges(n, &e)
    }

    pub fn num_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_vertices()).map(|v| self.degree(v)).collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_vertices()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Edges with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for u in 0..self.num_vertices() {
            for &v in self.neighbors(u) {
                if (u as u32) < v {
                    out.push((u, v as usize));
                }
            }
        }
        out
    }

    /// Euler characteristic `|V| - |E|`.
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64
    }

    /// Sub-graph induced on `set`, with vertices renumbered in ascending order.
    pub fn induced(&self, set: &VertexSet) -> Graph {
        let mut local = vec![u32::MAX; self.num_vertices()];
        for (i, &v) in set.members().iter().enumerate() {
            local[v as usize] = i as u32;
        }
        let mut edges = Vec::new();
        for (i, &v) in set.members().iter().enumerate() {
            for &w in self.neighbors(v as usize) {
                let j = local[w as usize];
                if j != u32::MAX && (i as u32) < j {
                    edges.push((i, j as usize));
                }
            }
        }
        Graph::from_edges(set.len(), &edges).expect("induced subgraph of a simple graph")
    }

    /// Parses the `p <n> <m>` / `e <u> <v>` edge-list format (0-based).
    /// Blank lines and lines starting with `c` or `#` are ignored.
    pub fn parse_edge_list(text: &str) -> Result<Graph> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = i + 1;
            if line.is_empty() || line.starts_with('c') || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let tag = parts.next().unwrap();
            let nums: Vec<usize> = parts
                .map(|s| {
                    s.parse::<usize>().map_err(|_| Error::Parse {
                        line: lineno,
                        msg: format!("expected non-negative integer, found `{s}`"),
                    })
                })
                .collect::<Result<_>>()?;
            match (tag, nums.as_slice()) {
                ("p", [n, m]) => {
                    if header.is_some() {
                        return Err(Error::Parse { line: lineno, msg: "duplicate header".into() });
                    }
                    header = Some((*n, *m));
                }
                ("e", [u, v]) => {
                    if header.is_none() {
                        return Err(Error::Parse { line: lineno, msg: "edge before header".into() });
                    }
                    edges.push((*u, *v));
                }
                _ => {
                    return Err(Error::Parse { line: lineno, msg: format!("unrecognised line `{line}`") })
                }
            }
        }
        let (n, m) = header.ok_or(Error::Parse { line: 0, msg: "missing `p` header".into() })?;
        if edges.len() != m {
            return Err(Error::Parse {
                line: 0,
                msg: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Graph::from_edges(n, &edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut s = format!("p {} {}\n", self.num_vertices(), self.num_edges());
        for (u, v) in self.edges() {
            s.push_str(&format!("e {u} {v}\n"));
        }
        s
    }

    pub fn to_json(&self) -> String {
        let g = GraphJson {
            n: self.num_vertices(),
            edges: self.edges().into_iter().map(|(u, v)| [u, v]).collect(),
        };
        serde_json::to_string(&g).expect("graph serialises")
    }

    pub fn from_json(text: &str) -> Result<Graph> {
        let g: GraphJson = serde_json::from_str(text)?;
        let edges: Vec<(usize, usize)> = g.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::from_edges(g.n, &edges)
    }

    /// Largest-eigenvalue estimate of `A` by power iteration; never exceeds
    /// the true operator norm by more than rounding.
    pub fn spectral_radius_estimate(&self, iterations: usize) -> f64 {
        let n = self.num_vertices();
        if n == 0 || self.num_edges() == 0 {
            return 0.0;
        }
        let mut x = vec![1.0 / (n as f64).sqrt(); n];
        let mut lambda = 0.0;
        for _ in 0..iterations {
            // (A + I) shares the top eigenvector and avoids bipartite oscillation.
            let mut y: Vec<f64> = (0..n)
                .map(|v| x[v] + self.neighbors(v).iter().map(|&w| x[w as usize]).sum::<f64>())
                .collect();
            let norm = y.iter().map(|t| t * t).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            for t in &mut y {
                *t /= norm;
            }
            x = y;
            lambda = norm - 1.0;
        }
        let ax: Vec<f64> =
            (0..n).map(|v| self.neighbors(v).iter().map(|&w| x[w as usize]).sum()).collect();
        let rayleigh: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        rayleigh.max(lambda.min(self.max_degree() as f64)).min(self.max_degree() as f64)
    }
}

/// Ordered subset of the vertices of a fixed graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet {
    mask: Vec<bool>,
    members: Vec<u32>,
}

impl VertexSet {
    pub fn empty(n: usize) -> Self {
        VertexSet { mask: vec![false; n], members: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        VertexSet { mask: vec![true; n], members: (0..n as u32).collect() }
    }

    pub fn from_iter<I: IntoIterator<Item = usize>>(n: usize, it: I) -> Result<Self> {
        let mut mask = vec![false; n];
        for v in it {
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, n });
            }
            mask[v] = true;
        }
        Ok(Self::from_mask(mask))
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let members = mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u32).collect();
        VertexSet { mask, members }
    }

    /// Size of the ambient vertex set.
    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.mask.get(v).copied().unwrap_or(false)
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        assert_eq!(self.universe(), other.universe());
        VertexSet::from_mask(self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect())
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        assert_eq!(self.universe(), other.universe());
        VertexSet::from_mask(self.mask.iter().zip(&other.mask).map(|(a, b)| *a && !*b).collect())
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.members.iter().all(|&v| other.contains(v as usize))
    }
}

/// The linear combination `a*A + q*Q + id*I` of local operators, `Q = D - I`.
#[derive(Clone, Debug)]
pub struct LocalOp<T> {
    pub a: T,
    pub q: T,
    pub id: T,
}

impl<T: Scalar> LocalOp<T> {
    pub fn adjacency() -> Self {
        LocalOp { a: T::one(), q: T::zero(), id: T::zero() }
    }

    pub fn q_op() -> Self {
        LocalOp { a: T::zero(), q: T::one(), id: T::zero() }
    }

    /// `A - u Q`.
    pub fn a_minus_uq(u: T) -> Self {
        LocalOp { a: T::one(), q: -u, id: T::zero() }
    }
}

fn check_len(g: &Graph, len: usize) -> Result<()> {
    if len != g.num_vertices() {
        return Err(Error::Inconsistent(format!(
            "vector of length {len} for graph on {} vertices",
            g.num_vertices()
        )));
    }
    Ok(())
}

/// `op * x` on the whole graph.
pub fn apply<T: Scalar>(g: &Graph, op: &LocalOp<T>, x: &[T]) -> Result<Vec<T>> {
    check_len(g, x.len())?;
    Ok((0..g.num_vertices())
        .map(|v| {
            let mut s = T::zero();
            for &w in g.neighbors(v) {
                s = s + x[w as usize].clone();
            }
            let qv = T::from_i64(g.degree(v) as i64 - 1);
            op.a.clone() * s + op.q.clone() * qv * x[v].clone() + op.id.clone() * x[v].clone()
        })
        .collect())
}

/// `P(K) op P(K) x`: entries outside `k` are ignored on input and zero on output.
pub fn restrict_apply<T: Scalar>(g: &Graph, op: &LocalOp<T>, k: &VertexSet, x: &[T]) -> Result<Vec<T>> {
    check_len(g, x.len())?;
    if k.universe() != g.num_vertices() {
        return Err(Error::Inconsistent("vertex set belongs to a different graph".into()));
    }
    let mut y = vec![T::zero(); g.num_vertices()];
    for &v in k.members() {
        let v = v as usize;
        let mut s = T::zero();
        for &w in g.neighbors(v) {
            if k.contains(w as usize) {
                s = s + x[w as usize].clone();
            }
        }
        let qv = T::from_i64(g.degree(v) as i64 - 1);
        y[v] = op.a.clone() * s + op.q.clone() * qv * x[v].clone() + op.id.clone() * x[v].clone();
    }
    Ok(y)
}

/// Multi-source BFS distances; `None` for unreachable vertices.
pub fn distances_from(g: &Graph, sources: &VertexSet) -> Vec<Option<u32>> {
    let mut dist = vec![None; g.num_vertices()];
    let mut queue = VecDeque::new();
    for &s in sources.members() {
        dist[s as usize] = Some(0);
        queue.push_back(s as usize);
    }
    while let Some(v) = queue.pop_front() {
        let dv = dist[v].unwrap();
        for &w in g.neighbors(v) {
            if dist[w as usize].is_none() {
                dist[w as usize] = Some(dv + 1);
                queue.push_back(w as usize);
            }
        }
    }
    dist
}

/// `B_r(omega)`: vertices within graph distance `r` of `omega`.
pub fn ball(g: &Graph, omega: &VertexSet, r: usize) -> VertexSet {
    let dist = distances_from(g, omega);
    VertexSet::from_mask(dist.iter().map(|d| matches!(d, Some(x) if (*x as usize) <= r)).collect())
}

/// Vertices of `k` having at least one neighbour outside `k`.
pub fn frontier(g: &Graph, k: &VertexSet) -> VertexSet {
    let mut mask = vec![false; g.num_vertices()];
    for &v in k.members() {
        if g.neighbors(v as usize).iter().any(|&w| !k.contains(w as usize)) {
            mask[v as usize] = true;
        }
    }
    VertexSet::from_mask(mask)
}
