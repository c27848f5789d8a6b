//! Path operators `A_m`, normalised geometric traces and the reduced-cycle
//! counts `N_m` derived from them.
//!
//! `A_m(v, w)` counts proper paths of length `m` from `v` to `w`. It obeys
//! `A_0 = I`, `A_1 = A`, `A_2 = A^2 - Q - I` and `A_m = A_{m-1} A - A_{m-2} Q`
//! for `m >= 3`, with `Q = D - I`. All counting is exact (`i128` entries,
//! `BigRational` traces); only error bounds are floating point.

use crate::cycle_oracle::{count_closed_per_vertex, reduced_cycle_census};
use crate::error::{Error, Result};
use crate::fractal_builders::{CopyMap, Exhaustion};
use crate::graph_core::{distances_from, Graph, VertexSet};
use crate::scalar::{rational_to_f64, Scalar};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

/// Largest supported order.
pub const MAX_ORDER: usize = 64;

/// Entries stay below this magnitude so that one recursion step cannot
/// overflow `i128`.
const ENTRY_LIMIT: f64 = 1e36;

/// `α = (d + sqrt(d^2 + 4d)) / 2`, so that `‖A_m‖ <= α^m`.
pub fn alpha(d: usize) -> f64 {
    let d = d as f64;
    (d + (d * d + 4.0 * d).sqrt()) / 2.0
}

/// `d (d-1)^{m-1}`, the number of proper paths of length `m >= 1` from a
/// vertex; `1` for `m = 0`.
pub fn proper_path_bound(d: usize, m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    d as f64 * (d as f64 - 1.0).max(0.0).powi(m as i32 - 1)
}

/// `sup |deg - 2|` over graphs of maximum degree `d`, a bound for `‖Q - I‖`.
pub fn q_minus_i_norm(d: usize) -> f64 {
    (d as f64 - 2.0).max(2.0)
}

fn check_order(d: usize, order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::OrderTooLarge { order, cap: MAX_ORDER });
    }
    if proper_path_bound(d.max(2), order) * d.max(2) as f64 > ENTRY_LIMIT {
        return Err(Error::Overflow("path operator entries"));
    }
    Ok(())
}

/// Implicit `A_0..A_M` on a finite graph with a prescribed `Q` diagonal
/// (the graph's own `deg - 1` by default, or ambient degrees).
#[derive(Clone, Debug)]
pub struct PathOperators<'a> {
    g: &'a Graph,
    q: Vec<i64>,
    max_order: usize,
}

impl<'a> PathOperators<'a> {
    pub fn new(g: &'a Graph, max_order: usize) -> Result<Self> {
        let q = g.degrees().iter().map(|&d| d as i64 - 1).collect();
        Self::with_q(g, q, max_order)
    }

    /// `q[v]` must be at least `deg(v) - 1`; larger values model a vertex
    /// with edges leaving the graph.
    pub fn with_q(g: &'a Graph, q: Vec<i64>, max_order: usize) -> Result<Self> {
        if q.len() != g.num_vertices() {
            return Err(Error::Inconsistent("Q diagonal has the wrong length".into()));
        }
        let d = q.iter().map(|&x| (x + 1).max(0) as usize).max().unwrap_or(0).max(g.max_degree());
        check_order(d, max_order)?;
        Ok(PathOperators { g, q, max_order })
    }

    pub fn graph(&self) -> &Graph {
        self.g
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn q(&self) -> &[i64] {
        &self.q
    }

    /// `‖A_m‖ <= α^m`.
    pub fn norm_bound(&self, m: usize) -> f64 {
        let d = self.q.iter().map(|&x| (x + 1).max(0) as usize).max().unwrap_or(0);
        alpha(d).powi(m as i32)
    }

    /// `A_m x` through `A_j x = A (A_{j-1} x) - Q (A_{j-2} x)`.
    pub fn apply<T: Scalar>(&self, m: usize, x: &[T]) -> Result<Vec<T>> {
        if m > self.max_order {
            return Err(Error::OrderTooLarge { order: m, cap: self.max_order });
        }
        if x.len() != self.g.num_vertices() {
            return Err(Error::Inconsistent("vector length does not match the graph".into()));
        }
        let adj = |y: &[T]| -> Vec<T> {
            (0..self.g.num_vertices())
                .map(|v| self.g.neighbors(v).iter().fold(T::zero(), |s, &w| s + y[w as usize].clone()))
                .collect()
        };
        let mut prev = x.to_vec();
        if m == 0 {
            return Ok(prev);
        }
        let mut cur = adj(&prev);
        for j in 2..=m {
            let extra = if j == 2 { 1 } else { 0 };
            let next: Vec<T> = adj(&cur)
                .into_iter()
                .enumerate()
                .map(|(v, s)| s - T::from_i64(self.q[v] + extra) * prev[v].clone())
                .collect();
            prev = std::mem::replace(&mut cur, next);
        }
        Ok(cur)
    }

    /// `A_m(v, v)` for `m = 0..=M` and each listed vertex.
    pub fn diagonals(&self, vertices: &[u32]) -> Vec<Vec<i128>> {
        ball_diagonals(self.g, Some(&self.q), self.max_order, vertices)
    }

    /// Dense `A_0..A_M`, row-major. Limited to small graphs.
    pub fn dense(&self) -> Result<Vec<Vec<i128>>> {
        let n = self.g.num_vertices();
        if n > 5000 || (n * n) as f64 * (self.max_order + 1) as f64 > 5e7 {
            return Err(Error::Guard(format!("dense path operators on {n} vertices to order {}", self.max_order)));
        }
        // right multiplication by the sparse A
        let times_a = |m: &[i128]| -> Vec<i128> {
            let mut out = vec![0i128; n * n];
            for r in 0..n {
                for c in 0..n {
                    out[r * n + c] = self.g.neighbors(c).iter().map(|&k| m[r * n + k as usize]).sum();
                }
            }
            out
        };
        let mut mats = Vec::with_capacity(self.max_order + 1);
        let mut id = vec![0i128; n * n];
        for v in 0..n {
            id[v * n + v] = 1;
        }
        mats.push(id);
        if self.max_order >= 1 {
            let a = times_a(&mats[0]);
            mats.push(a);
        }
        for j in 2..=self.max_order {
            let extra = if j == 2 { 1 } else { 0 };
            let mut next = times_a(&mats[j - 1]);
            let older = &mats[j - 2];
            for r in 0..n {
                for c in 0..n {
                    next[r * n + c] -= older[r * n + c] * (self.q[c] as i128 + extra);
                }
            }
            mats.push(next);
        }
        Ok(mats)
    }

    /// Checks `(Σ_m A_m u^m)(I - A u + Q u^2) = (1 - u^2) I` coefficient-wise
    /// through order `M`, in exact arithmetic, using dense matrices.
    pub fn generating_identity_residual(&self) -> Result<i128> {
        let mats = self.dense()?;
        let n = self.g.num_vertices();
        let mut worst = 0i128;
        for k in 0..=self.max_order {
            for r in 0..n {
                for c in 0..n {
                    let mut coeff = mats[k][r * n + c];
                    if k >= 1 {
                        let prod: i128 = self.g.neighbors(c).iter().map(|&w| mats[k - 1][r * n + w as usize]).sum();
                        coeff -= prod;
                    }
                    if k >= 2 {
                        coeff += mats[k - 2][r * n + c] * self.q[c] as i128;
                    }
                    let target = match (k, r == c) {
                        (0, true) => 1,
                        (2, true) => -1,
                        _ => 0,
                    };
                    worst = worst.max((coeff - target).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Diagonals through order `M` of the proper-path recursion (`q` given) or of
/// plain walks `A^m` (`q = None`).
///
/// For the final order `M`, `x_j = A_j e_v` is needed only at distance
/// `<= min(j, M - j)` from `v`, so the recursion runs on the ball of radius
/// `M / 2`; every value read outside the stored range is a true zero.
fn ball_diagonals(g: &Graph, q: Option<&[i64]>, big_m: usize, vertices: &[u32]) -> Vec<Vec<i128>> {
    let n = g.num_vertices();
    let radius = big_m / 2;
    vertices
        .par_iter()
        .map_init(
            || vec![u32::MAX; n],
            |local, &v| {
                // BFS to `radius`; `order` is sorted by distance.
                let mut order: Vec<u32> = vec![v];
                let mut dist: Vec<usize> = vec![0];
                local[v as usize] = 0;
                let mut head = 0;
                while head < order.len() {
                    let u = order[head] as usize;
                    let du = dist[head];
                    head += 1;
                    if du == radius {
                        continue;
                    }
                    for &w in g.neighbors(u) {
                        if local[w as usize] == u32::MAX {
                            local[w as usize] = order.len() as u32;
                            order.push(w);
                            dist.push(du + 1);
                        }
                    }
                }
                let size = order.len();
                // prefix[r] = number of ball vertices at distance <= r
                let mut prefix = vec![0usize; radius + 1];
                for &d in &dist {
                    prefix[d] += 1;
                }
                for r in 1..=radius {
                    prefix[r] += prefix[r - 1];
                }
                let nbrs: Vec<Vec<u32>> = order
                    .iter()
                    .map(|&u| {
                        g
                            .neighbors(u as usize)
                            .iter()
                            .filter_map(|&w| {
                                let l = local[w as usize];
                                (l != u32::MAX).then_some(l)
                            })
                            .collect()
                    })
                    .collect();
                let q: Option<Vec<i128>> = q.map(|q| order.iter().map(|&u| q[u as usize] as i128).collect());
                for &u in &order {
                    local[u as usize] = u32::MAX;
                }

                let mut out = vec![0i128; big_m + 1];
                out[0] = 1;
                if big_m == 0 {
                    return out;
                }
                let mut prev = vec![0i128; size];
                prev[0] = 1;
                let mut cur = vec![0i128; size];
                for &l in &nbrs[0] {
                    cur[l as usize] = 1;
                }
                let mut next = vec![0i128; size];
                for j in 2..=big_m {
                    let limit = prefix[j.min(big_m - j).min(radius)];
                    let extra = if j == 2 { 1 } else { 0 };
                    for i in 0..limit {
                        let s: i128 = nbrs[i].iter().map(|&l| cur[l as usize]).sum();
                        next[i] = match &q {
                            Some(q) => s - (q[i] + extra) * prev[i],
                            None => s,
                        };
                    }
                    for x in next[limit..].iter_mut() {
                        *x = 0;
                    }
                    std::mem::swap(&mut prev, &mut cur);
                    std::mem::swap(&mut cur, &mut next);
                    out[j] = cur[0];
                }
                out
            },
        )
        .collect()
}

/// `A^m(v, v)`, closed walks of length `m`, for `m = 0..=M`.
pub fn closed_walk_diagonals(g: &Graph, max_order: usize, vertices: &[u32]) -> Result<Vec<Vec<i128>>> {
    check_order(g.max_degree().max(2) + 1, max_order)?;
    Ok(ball_diagonals(g, None, max_order, vertices))
}

/// One term `coeff * (Q - I)^{w} A_order` with `w ∈ {0, 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OpTerm {
    pub coeff: i64,
    pub tail_weight: bool,
    pub order: usize,
}

/// A geometric operator given as a combination of `A_k` and `(Q - I) A_k`,
/// with its declared propagation radius.
#[derive(Clone, Debug, Serialize)]
pub struct GeometricOp {
    pub label: String,
    pub terms: Vec<OpTerm>,
    pub radius: Option<usize>,
}

impl GeometricOp {
    fn single(label: String, tail_weight: bool, order: usize) -> Self {
        GeometricOp { label, terms: vec![OpTerm { coeff: 1, tail_weight, order }], radius: Some(order) }
    }

    pub fn identity() -> Self {
        Self::single("I".into(), false, 0)
    }

    pub fn adjacency() -> Self {
        Self::single("A".into(), false, 1)
    }

    pub fn q_minus_i() -> Self {
        Self::single("Q-I".into(), true, 0)
    }

    pub fn path(m: usize) -> Self {
        Self::single(format!("A_{m}"), false, m)
    }

    /// `(Q - I) A_m`.
    pub fn tail_weighted(m: usize) -> Self {
        Self::single(format!("(Q-I)A_{m}"), true, m)
    }

    /// `B_m = A_m - (Q - I) Σ_{k=1}^{⌊m/2⌋} A_{m-2k}`.
    pub fn b_operator(m: usize) -> Self {
        let mut terms = vec![OpTerm { coeff: 1, tail_weight: false, order: m }];
        for k in 1..=m / 2 {
            terms.push(OpTerm { coeff: -1, tail_weight: true, order: m - 2 * k });
        }
        GeometricOp { label: format!("B_{m}"), terms, radius: Some(m) }
    }

    /// Operator without a declared radius; traces of it are rejected.
    pub fn undeclared(label: &str, terms: Vec<OpTerm>) -> Self {
        GeometricOp { label: label.into(), terms, radius: None }
    }

    pub fn max_order(&self) -> usize {
        self.terms.iter().map(|t| t.order).max().unwrap_or(0)
    }

    /// Triangle-inequality bound on `‖T‖` for maximum degree `d`.
    pub fn norm_bound(&self, d: usize) -> f64 {
        let a = alpha(d);
        self.terms
            .iter()
            .map(|t| {
                let w = if t.tail_weight { q_minus_i_norm(d) } else { 1.0 };
                t.coeff.unsigned_abs() as f64 * w * a.powi(t.order as i32)
            })
            .sum()
    }

    fn checked_radius(&self) -> Result<usize> {
        let r = self
            .radius
            .ok_or_else(|| Error::Guard(format!("operator {} has no declared propagation radius", self.label)))?;
        if r < self.max_order() {
            return Err(Error::Guard(format!(
                "operator {} declares radius {r} but contains A_{}",
                self.label,
                self.max_order()
            )));
        }
        Ok(r)
    }

    fn diagonal_entry(&self, diag: &[i128], ambient_q: i64) -> i128 {
        self.terms
            .iter()
            .map(|t| {
                let w = if t.tail_weight { ambient_q as i128 - 1 } else { 1 };
                t.coeff as i128 * w * diag[t.order]
            })
            .sum()
    }
}

/// Diagonals `A_m(v, v)` of the operators of the union graph `X` for the
/// vertices of `K_through`, computed on the deepest level.
#[derive(Clone, Debug)]
pub struct LevelDiagonals {
    pub through: usize,
    pub max_order: usize,
    /// Per vertex of `K_through`: `A_0(v,v)..A_M(v,v)`.
    pub diag: Vec<Vec<i128>>,
    /// Ambient `Q(v, v) = deg_X(v) - 1` per vertex of `K_through`.
    pub ambient_q: Vec<i64>,
    /// Largest order for which level `k` (index `k - 1`) sees exact `X` values.
    pub safe_order: Vec<usize>,
    /// Inclusions `K_k -> K_through`.
    embeddings: Vec<CopyMap>,
    max_degree: usize,
}

impl LevelDiagonals {
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    fn level_vertices(&self, k: usize) -> &[u32] {
        &self.embeddings[k - 1]
    }

    /// `Tr(P(K_k) T) / |K_k|`, exactly.
    pub fn normalized(&self, k: usize, op: &GeometricOp) -> BigRational {
        let verts = self.level_vertices(k);
        let total: BigInt = verts
            .iter()
            .map(|&v| BigInt::from(op.diagonal_entry(&self.diag[v as usize], self.ambient_q[v as usize])))
            .sum();
        BigRational::new(total, BigInt::from(verts.len()))
    }

    /// `(1/|S|) Σ_{v ∈ S} T(v, v)` over a subset `S` of `K_k` (local indices).
    pub fn normalized_on(&self, k: usize, op: &GeometricOp, subset: &[u32]) -> Option<BigRational> {
        if subset.is_empty() {
            return None;
        }
        let verts = self.level_vertices(k);
        let total: BigInt = subset
            .iter()
            .map(|&l| {
                let v = verts[l as usize] as usize;
                BigInt::from(op.diagonal_entry(&self.diag[v], self.ambient_q[v]))
            })
            .sum();
        Some(BigRational::new(total, BigInt::from(subset.len())))
    }

    /// `A_m(v, v)` in `X` for local vertex `v` of `K_k`.
    pub fn entry(&self, k: usize, v: usize, m: usize) -> i128 {
        self.diag[self.level_vertices(k)[v] as usize][m]
    }
}

/// Deepest level at which `F_G` is known: one below the top for families.
pub fn default_through(x: &Exhaustion) -> usize {
    if x.family().is_none() {
        x.max_level()
    } else {
        x.max_level().saturating_sub(1).max(1)
    }
}

/// Computes `A_m(v, v)` of `X` for `v ∈ K_through`, `m <= M`.
///
/// The recursion runs on the deepest level `K_N` with its own degrees; it is
/// exact for `X` at `v` whenever `dist(v, outer frontier of K_N) >= ⌊m/2⌋`.
/// Orders beyond that for `K_through` are rejected.
pub fn ambient_diagonals(x: &Exhaustion, through: usize, max_order: usize) -> Result<LevelDiagonals> {
    let top_level = x.max_level();
    x.level(through)?;
    let d = x.max_degree();
    check_order(d, max_order)?;
    let top = x.top();
    let dist = distances_from(top, x.outer_frontier());
    let mut safe_order = Vec::with_capacity(through);
    let mut embeddings = Vec::with_capacity(through);
    let into_top = x.embedding(through, top_level)?;
    for k in 1..=through {
        let emb = x.embedding(k, through)?;
        let r = emb.iter().filter_map(|&v| dist[into_top[v as usize] as usize]).min();
        safe_order.push(match r {
            None => usize::MAX,
            Some(r) => 2 * r as usize + 1,
        });
        embeddings.push(emb);
    }
    if max_order > safe_order[through - 1] {
        return Err(Error::Guard(format!(
            "order {max_order} exceeds the exact range {} of level {through} inside level {top_level}; build a deeper level",
            safe_order[through - 1]
        )));
    }
    let ops = PathOperators::with_q(top, top.degrees().iter().map(|&d| d as i64 - 1).collect(), max_order)?;
    let diag = ops.diagonals(&into_top);
    let ambient_q = x.ambient_degrees(through)?.iter().map(|&d| d as i64 - 1).collect();
    Ok(LevelDiagonals { through, max_order, diag, ambient_q, safe_order, embeddings, max_degree: d })
}

/// `Tr(P(K_k) A^j) / |K_k|` for `k = 1..=through`, `j = 0..=M`, with walks in
/// the union graph; `[k - 1][j]`. Same exactness rule as [`ambient_diagonals`].
pub fn ambient_walk_traces(x: &Exhaustion, through: usize, max_order: usize) -> Result<Vec<Vec<BigRational>>> {
    let top_level = x.max_level();
    x.level(through)?;
    let top = x.top();
    let dist = distances_from(top, x.outer_frontier());
    let into_top = x.embedding(through, top_level)?;
    let r = into_top.iter().filter_map(|&v| dist[v as usize]).min();
    if let Some(r) = r {
        if max_order > 2 * r as usize + 1 {
            return Err(Error::Guard(format!(
                "walk order {max_order} exceeds the exact range {} of level {through}",
                2 * r + 1
            )));
        }
    }
    let diag = closed_walk_diagonals(top, max_order, &into_top)?;
    (1..=through)
        .map(|k| {
            let emb = x.embedding(k, through)?;
            Ok((0..=max_order)
                .map(|j| {
                    let total: BigInt = emb.iter().map(|&v| BigInt::from(diag[v as usize][j])).sum();
                    BigRational::new(total, BigInt::from(emb.len()))
                })
                .collect())
        })
        .collect()
}

/// Normalised trace of one operator at one level.
#[derive(Clone, Debug, Serialize)]
pub struct TraceLevel {
    pub level: usize,
    #[serde(serialize_with = "ser_rational")]
    pub value: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub epsilon: BigRational,
    /// `5 ‖T‖ ε_n (d+1)^r`.
    pub cauchy_bound: f64,
    /// Rigorous bound on `|φ_n(T) - Tr_G(T)|`: the Cauchy bound, capped at
    /// `2‖T‖` since every normalised trace is bounded by `‖T‖`.
    pub limit_bound: f64,
    /// Average over `Ω_{n,r} = K_n \ B_r(F_G(K_n))`, when non-empty.
    #[serde(serialize_with = "ser_opt_rational")]
    pub interior: Option<BigRational>,
    pub interior_size: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceEstimate {
    pub label: String,
    pub radius: usize,
    pub norm_bound: f64,
    pub levels: Vec<TraceLevel>,
    /// Geometric-decay estimate of `Σ_{k >= n} 5‖T‖ε_k(d+1)^r` beyond the
    /// deepest level; heuristic, reported alongside the rigorous bound.
    pub tail_estimate: f64,
}

impl TraceEstimate {
    /// Deepest-level value, the reported `Tr_G` estimate.
    pub fn value(&self) -> &BigRational {
        &self.levels.last().unwrap().value
    }

    pub fn bound(&self) -> f64 {
        self.levels.last().unwrap().limit_bound
    }

    /// Asserts `|φ_n - φ_m| <= 5‖T‖ε_n(d+1)^r` for every computed pair `n < m`.
    pub fn check_telescoping(&self) -> Result<()> {
        for (i, a) in self.levels.iter().enumerate() {
            for b in &self.levels[i + 1..] {
                let gap = rational_to_f64(&(&a.value - &b.value).abs());
                if gap > a.cauchy_bound * (1.0 + 1e-12) {
                    return Err(Error::Inconsistent(format!(
                        "trace of {} moves by {gap} between levels {} and {}, above the bound {}",
                        self.label, a.level, b.level, a.cauchy_bound
                    )));
                }
            }
        }
        Ok(())
    }
}

fn ser_rational<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&crate::scalar::rational_string(r))
}

fn ser_opt_rational<S: serde::Serializer>(r: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => ser_rational(r, s),
        None => s.serialize_none(),
    }
}

/// Per-level frontier data reused across operators.
#[derive(Clone, Debug)]
struct FrontierData {
    epsilon: Vec<BigRational>,
    eps_f64: Vec<f64>,
    /// Distances in `K_k` to `F_G(K_k)`.
    dist: Vec<Vec<Option<u32>>>,
}

fn frontier_data(x: &Exhaustion, through: usize) -> Result<FrontierData> {
    let mut epsilon = Vec::new();
    let mut dist = Vec::new();
    for k in 1..=through {
        let f = x.invariant_frontier(k)?;
        dist.push(distances_from(x.level(k)?, &f.set));
        epsilon.push(f.epsilon());
    }
    let eps_f64 = epsilon.iter().map(rational_to_f64).collect();
    Ok(FrontierData { epsilon, eps_f64, dist })
}

fn cauchy(norm: f64, eps: f64, d: usize, r: usize) -> f64 {
    5.0 * norm * eps * (d as f64 + 1.0).powi(r as i32)
}

/// `min(5‖T‖ε(d+1)^r, 2‖T‖)`: distance from a level trace to its limit.
pub fn limit_bound(norm: f64, eps: f64, d: usize, r: usize) -> f64 {
    cauchy(norm, eps, d, r).min(2.0 * norm)
}

fn trace_estimate(diag: &LevelDiagonals, fd: &FrontierData, op: &GeometricOp) -> Result<TraceEstimate> {
    let r = op.checked_radius()?;
    if op.max_order() > diag.max_order {
        return Err(Error::OrderTooLarge { order: op.max_order(), cap: diag.max_order });
    }
    let d = diag.max_degree;
    let norm = op.norm_bound(d);
    let mut levels = Vec::new();
    for k in 1..=diag.through {
        let eps = fd.eps_f64[k - 1];
        let interior: Vec<u32> = fd.dist[k - 1]
            .iter()
            .enumerate()
            .filter(|(_, dv)| dv.is_none_or(|dv| dv as usize > r))
            .map(|(v, _)| v as u32)
            .collect();
        levels.push(TraceLevel {
            level: k,
            value: diag.normalized(k, op),
            epsilon: fd.epsilon[k - 1].clone(),
            cauchy_bound: cauchy(norm, eps, d, r),
            limit_bound: limit_bound(norm, eps, d, r),
            interior: diag.normalized_on(k, op, &interior),
            interior_size: interior.len(),
        });
    }
    let n = diag.through;
    let tail_estimate = if n >= 2 && fd.eps_f64[n - 2] > 0.0 {
        let rho = fd.eps_f64[n - 1] / fd.eps_f64[n - 2];
        if rho < 1.0 {
            cauchy(norm, fd.eps_f64[n - 1], d, r) / (1.0 - rho)
        } else {
            f64::INFINITY
        }
    } else if fd.eps_f64[n - 1] == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(TraceEstimate { label: op.label.clone(), radius: r, norm_bound: norm, levels, tail_estimate })
}

/// Normalised traces `Tr(P(K_k) T) / |K_k|` for `k = 1..=through`, with the
/// per-level Cauchy bounds.
pub fn normalized_trace(x: &Exhaustion, op: &GeometricOp, through: usize) -> Result<TraceEstimate> {
    op.checked_radius()?;
    let diag = ambient_diagonals(x, through, op.max_order())?;
    let fd = frontier_data(x, through)?;
    trace_estimate(&diag, &fd, op)
}

/// Counts of order `m` across the levels.
#[derive(Clone, Debug, Serialize)]
pub struct PathCountRow {
    pub m: usize,
    #[serde(serialize_with = "ser_rationals")]
    pub tr_am: Vec<BigRational>,
    #[serde(serialize_with = "ser_rationals")]
    pub t_m: Vec<BigRational>,
    #[serde(serialize_with = "ser_rationals")]
    pub n_m: Vec<BigRational>,
    /// The level estimate of `N_m` was negative and has been reset to 0.
    pub clipped: Vec<bool>,
    /// Rigorous bound on the distance of `N_m` at this level from the limit.
    pub err_m: Vec<f64>,
}

fn ser_rationals<S: serde::Serializer>(r: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(r.len()))?;
    for x in r {
        seq.serialize_element(&crate::scalar::rational_string(x))?;
    }
    seq.end()
}

/// `Tr_G A_m`, `t_m` and `N_m` on every level up to `through`, `m = 0..=M`.
#[derive(Clone, Debug, Serialize)]
pub struct PathCountTable {
    pub label: String,
    pub max_order: usize,
    pub max_degree: usize,
    pub levels: Vec<usize>,
    pub rows: Vec<PathCountRow>,
    /// `φ_k(Q - I)` per level.
    #[serde(serialize_with = "ser_rationals")]
    pub tr_q_minus_i: Vec<BigRational>,
    #[serde(skip)]
    diag: LevelDiagonals,
    #[serde(skip)]
    frontier: FrontierData,
}

impl PathCountTable {
    pub fn row(&self, m: usize) -> &PathCountRow {
        &self.rows[m]
    }

    pub fn deepest_index(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn tr_am(&self, m: usize) -> &BigRational {
        &self.rows[m].tr_am[self.deepest_index()]
    }

    pub fn t(&self, m: usize) -> &BigRational {
        &self.rows[m].t_m[self.deepest_index()]
    }

    pub fn n(&self, m: usize) -> &BigRational {
        &self.rows[m].n_m[self.deepest_index()]
    }

    pub fn err(&self, m: usize) -> f64 {
        self.rows[m].err_m[self.deepest_index()]
    }

    pub fn diagonals(&self) -> &LevelDiagonals {
        &self.diag
    }

    pub fn epsilon(&self, level: usize) -> &BigRational {
        &self.frontier.epsilon[level - 1]
    }

    /// Traces of any operator of order `<= M` from the stored diagonals.
    pub fn trace(&self, op: &GeometricOp) -> Result<TraceEstimate> {
        trace_estimate(&self.diag, &self.frontier, op)
    }

    /// `t_m` through the closed form `φ((Q-I) Σ_{j=1}^{⌊(m-1)/2⌋} A_{m-2j})`.
    pub fn tail_closed_form(&self, level: usize, m: usize) -> BigRational {
        let terms = (1..=(m.saturating_sub(1)) / 2)
            .map(|j| OpTerm { coeff: 1, tail_weight: true, order: m - 2 * j })
            .collect();
        let op = GeometricOp { label: format!("tail_{m}"), terms, radius: Some(m) };
        self.diag.normalized(level, &op)
    }

    /// CSV with columns `m,level,tr_Am_num,tr_Am_den,t_m,N_m,err_m`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,level,tr_Am_num,tr_Am_den,t_m,N_m,err_m\n");
        for row in &self.rows {
            for (i, &level) in self.levels.iter().enumerate() {
                let (num, den) = crate::cycle_oracle::num_den(&row.tr_am[i]);
                out.push_str(&format!(
                    "{},{},{},{},{},{},{:e}\n",
                    row.m,
                    level,
                    num,
                    den,
                    crate::scalar::rational_string(&row.t_m[i]),
                    crate::scalar::rational_string(&row.n_m[i]),
                    row.err_m[i]
                ));
            }
        }
        out
    }
}

/// Builds the full count table. `through = None` uses the deepest level for
/// which `F_G` is available.
pub fn path_count_table(x: &Exhaustion, through: Option<usize>, max_order: usize) -> Result<PathCountTable> {
    let through = through.unwrap_or_else(|| default_through(x));
    let diag = ambient_diagonals(x, through, max_order)?;
    let frontier = frontier_data(x, through)?;
    let d = diag.max_degree;
    let levels: Vec<usize> = (1..=through).collect();
    let tr_q_minus_i: Vec<BigRational> =
        levels.iter().map(|&k| diag.normalized(k, &GeometricOp::q_minus_i())).collect();
    let mut rows: Vec<PathCountRow> = Vec::with_capacity(max_order + 1);
    // t_errs[m][i]: accumulated bound on |t_m at level i - t_m|
    let mut t_errs: Vec<Vec<f64>> = Vec::with_capacity(max_order + 1);
    // per-level bound on |φ_n((Q-I)A_k) - Tr_G((Q-I)A_k)|
    let tail_term_err =
        |k: usize, eps: f64| limit_bound(GeometricOp::tail_weighted(k).norm_bound(d), eps, d, k);
    for m in 0..=max_order {
        let mut row = PathCountRow {
            m,
            tr_am: Vec::new(),
            t_m: Vec::new(),
            n_m: Vec::new(),
            clipped: Vec::new(),
            err_m: Vec::new(),
        };
        let mut t_row = Vec::with_capacity(levels.len());
        for (i, &k) in levels.iter().enumerate() {
            let eps = frontier.eps_f64[i];
            let tr = diag.normalized(k, &GeometricOp::path(m));
            let (t, t_err) = if m < 3 {
                (BigRational::zero(), 0.0)
            } else {
                let step = diag.normalized(k, &GeometricOp::tail_weighted(m - 2));
                (&rows[m - 2].t_m[i] + step, t_errs[m - 2][i] + tail_term_err(m - 2, eps))
            };
            let mut n = &tr - &t;
            let clipped = n.is_negative();
            if clipped {
                n = BigRational::zero();
            }
            let err = limit_bound(GeometricOp::path(m).norm_bound(d), eps, d, m) + t_err;
            if m >= 1 && rational_to_f64(&n) > proper_path_bound(d, m) + err {
                return Err(Error::Inconsistent(format!(
                    "N_{m} = {} at level {k} exceeds d(d-1)^(m-1) = {}",
                    rational_to_f64(&n),
                    proper_path_bound(d, m)
                )));
            }
            row.tr_am.push(tr);
            row.t_m.push(t);
            row.n_m.push(n);
            row.clipped.push(clipped);
            row.err_m.push(err);
            t_row.push(t_err);
        }
        rows.push(row);
        t_errs.push(t_row);
    }
    Ok(PathCountTable { label: x.label(), max_order, max_degree: d, levels, rows, tr_q_minus_i, diag, frontier })
}

/// `t_0..t_M` at the deepest usable level.
pub fn tail_counts(x: &Exhaustion, max_order: usize) -> Result<Vec<BigRational>> {
    let table = path_count_table(x, None, max_order)?;
    Ok((0..=max_order).map(|m| table.t(m).clone()).collect())
}

/// `N_m` with its rigorous distance to the limit.
#[derive(Clone, Debug, Serialize)]
pub struct ReducedCount {
    pub m: usize,
    #[serde(serialize_with = "ser_rational")]
    pub value: BigRational,
    pub err: f64,
    pub clipped: bool,
}

/// `N_0..N_M` at the deepest usable level.
pub fn reduced_counts(x: &Exhaustion, max_order: usize) -> Result<Vec<ReducedCount>> {
    let table = path_count_table(x, None, max_order)?;
    let i = table.deepest_index();
    Ok(table
        .rows
        .iter()
        .map(|r| ReducedCount { m: r.m, value: r.n_m[i].clone(), err: r.err_m[i], clipped: r.clipped[i] })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct BmRow {
    pub m: usize,
    #[serde(serialize_with = "ser_rational")]
    pub tr_bm: BigRational,
    /// `N_m` for odd `m`, `N_m - Tr(Q - I)` for even `m`.
    #[serde(serialize_with = "ser_rational")]
    pub expected: BigRational,
    pub difference: f64,
    pub err: f64,
    pub within: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BmReport {
    pub level: usize,
    pub rows: Vec<BmRow>,
    /// Level on which the generating series identity was checked exactly.
    pub identity_level: usize,
    pub identity_order: usize,
}

/// Compares `Tr B_m` with `N_m` (odd `m`) and `N_m - Tr(Q-I)` (even `m`) at
/// the deepest level, and checks the generating identity exactly on the
/// largest level small enough for dense matrices.
pub fn bm_parity_check(x: &Exhaustion, max_order: usize) -> Result<BmReport> {
    let table = path_count_table(x, None, max_order)?;
    let i = table.deepest_index();
    let d = table.max_degree;
    let mut rows = Vec::new();
    for m in 1..=max_order {
        let op = GeometricOp::b_operator(m);
        let tr_bm = table.diag.normalized(table.levels[i], &op);
        let mut expected = table.rows[m].n_m[i].clone();
        if m % 2 == 0 {
            expected -= &table.tr_q_minus_i[i];
        }
        let difference = rational_to_f64(&(&tr_bm - &expected).abs());
        let q_err = if m % 2 == 0 {
            limit_bound(GeometricOp::q_minus_i().norm_bound(d), table.frontier.eps_f64[i], d, 0)
        } else {
            0.0
        };
        let err = table.rows[m].err_m[i] + limit_bound(op.norm_bound(d), table.frontier.eps_f64[i], d, m) + q_err;
        rows.push(BmRow { m, tr_bm, expected, difference, err, within: difference <= err });
    }
    let dense_limit = 400;
    let identity_level = (1..=x.max_level())
        .rev()
        .find(|&k| x.level(k).map(|g| g.num_vertices() <= dense_limit).unwrap_or(false))
        .unwrap_or(1);
    let g = x.level(identity_level)?;
    let ops = PathOperators::new(g, max_order.min(16))?;
    let residual = ops.generating_identity_residual()?;
    if residual != 0 {
        return Err(Error::Inconsistent(format!(
            "generating series identity fails on level {identity_level} with residual {residual}"
        )));
    }
    Ok(BmReport { level: table.levels[i], rows, identity_level, identity_order: ops.max_order() })
}

/// One comparison between the spectral finite-level `N_m` and the census.
#[derive(Clone, Debug, Serialize)]
pub struct OracleComparisonRow {
    pub level: usize,
    pub m: usize,
    pub spectral: f64,
    /// Reduced closed paths inside `K_n` divided by `|K_n|`.
    pub census: f64,
    /// Accumulated error of the tail recursion at this level.
    pub tail_err: f64,
    /// Share of proper closed paths from vertices within `⌊m/2⌋` of `F_G(K_n)`.
    pub boundary_err: f64,
    pub agrees: bool,
}

/// Accumulated error of the finite-level tail recursion:
/// `Σ_{4 <= k <= m, k ≡ m (2)} ε_n d (d+2) (d-1)^{k-2}`.
pub fn tail_recursion_error(eps: f64, d: usize, m: usize) -> f64 {
    let df = d as f64;
    (4..=m)
        .filter(|k| (m - k).is_multiple_of(2))
        .map(|k| eps * df * (df + 2.0) * (df - 1.0).powi(k as i32 - 2))
        .sum()
}

/// Oracle equivalence on the listed levels for `m = 1..=M`.
///
/// `spectral - census` lies in `[-tail_err, boundary_err + tail_err]`: the
/// spectral side also counts reduced paths that leave `K_n`, which start
/// within `⌊m/2⌋` of the frontier, and the tail recursion drifts by at most
/// the per-step crossing-edge error.
pub fn compare_with_census(
    x: &Exhaustion,
    levels: &[usize],
    max_order: usize,
    budget: u64,
) -> Result<Vec<OracleComparisonRow>> {
    let through = levels.iter().copied().max().ok_or_else(|| Error::Inconsistent("no levels".into()))?;
    let table = path_count_table(x, Some(through), max_order)?;
    let d = table.max_degree;
    let mut out = Vec::new();
    for &n in levels {
        let g = x.level(n)?;
        let size = g.num_vertices() as f64;
        let census = reduced_cycle_census(g, max_order, budget)?;
        let dist = &table.frontier.dist[n - 1];
        for row in &census {
            let m = row.m;
            let spectral = rational_to_f64(&table.rows[m].n_m[n - 1]);
            let census_v = row.raw_count as f64 / size;
            let tail_err = tail_recursion_error(table.frontier.eps_f64[n - 1], d, m);
            let boundary: i128 = (0..g.num_vertices())
                .filter(|&v| dist[v].is_some_and(|dv| dv as usize <= m / 2))
                .map(|v| table.diag.entry(n, v, m))
                .sum();
            let boundary_err = boundary as f64 / size;
            let diff = spectral - census_v;
            let slack = 1e-12 * (1.0 + census_v.abs());
            let agrees = diff >= -tail_err - slack && diff <= boundary_err + tail_err + slack;
            out.push(OracleComparisonRow { level: n, m, spectral, census: census_v, tail_err, boundary_err, agrees });
        }
    }
    Ok(out)
}

/// Outcome of the entry-wise check of `A_m(v, v)` against path enumeration.
#[derive(Clone, Debug, Default, Serialize)]
pub struct VertexCheck {
    pub level: usize,
    pub max_order: usize,
    /// `(m, v)` pairs checked with the level's own degrees.
    pub own_checked: usize,
    /// `(m, v)` pairs checked with ambient degrees at interior vertices.
    pub interior_checked: usize,
    /// `(m, v, expected, got)`.
    pub mismatches: Vec<(usize, usize, i128, i128)>,
}

/// Compares recursion diagonals with brute-force counts on `K_n`: for every
/// vertex with the level's own `Q`, and for vertices at distance `>= ⌊m/2⌋`
/// from `F_G(K_n)` with the ambient `Q` of `X`.
pub fn check_vertex_counts(x: &Exhaustion, n: usize, max_order: usize, budget: u64) -> Result<VertexCheck> {
    let g = x.level(n)?;
    let own = PathOperators::new(g, max_order)?;
    let all: Vec<u32> = (0..g.num_vertices() as u32).collect();
    let own_diag = own.diagonals(&all);
    let ambient = if n <= default_through(x) { Some(ambient_diagonals(x, n, max_order)?) } else { None };
    let dist = distances_from(g, &x.invariant_frontier(n).map(|f| f.set).unwrap_or_else(|_| VertexSet::empty(g.num_vertices())));
    let full = VertexSet::full(g.num_vertices());
    let mut check = VertexCheck { level: n, max_order, ..Default::default() };
    for m in 1..=max_order {
        let brute = count_closed_per_vertex(g, m, &full, budget)?;
        for v in 0..g.num_vertices() {
            let expected = brute.proper[v] as i128;
            check.own_checked += 1;
            if own_diag[v][m] != expected {
                check.mismatches.push((m, v, expected, own_diag[v][m]));
            }
            if let Some(ambient) = ambient.as_ref().filter(|_| dist[v].is_none_or(|dv| dv as usize >= m / 2)) {
                check.interior_checked += 1;
                let got = ambient.entry(n, v, m);
                if got != expected {
                    check.mismatches.push((m, v, expected, got));
                }
            }
        }
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle_oracle::{weighted_census, DEFAULT_BUDGET};
    use crate::fractal_builders::Family;
    use crate::graph_core::test_graphs::{complete, cycle};
    use crate::scalar::ratio;
    use proptest::prelude::*;

    #[test]
    fn triangle_low_orders() {
        let g = complete(3);
        let ops = PathOperators::new(&g, 4).unwrap();
        let mats = ops.dense().unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let a = if r == c { 0 } else { 1 };
                assert_eq!(mats[2][r * 3 + c], a, "A_2 zero diagonal and equal to A off it");
            }
        }
        let diag = ops.diagonals(&[0, 1, 2]);
        for d in diag {
            assert_eq!(d[3], 2);
            assert_eq!(d[2], 0);
        }
    }

    #[test]
    fn ball_recursion_matches_dense_and_apply() {
        let x = Exhaustion::build(Family::Gasket, 3).unwrap();
        let g = x.top();
        let ops = PathOperators::new(g, 11).unwrap();
        let mats = ops.dense().unwrap();
        let n = g.num_vertices();
        let all: Vec<u32> = (0..n as u32).collect();
        let diag = ops.diagonals(&all);
        for v in 0..n {
            for m in 0..=11 {
                assert_eq!(diag[v][m], mats[m][v * n + v]);
            }
            let mut e = vec![0i128; n];
            e[v] = 1;
            let col = ops.apply(7, &e).unwrap();
            for w in 0..n {
                assert_eq!(col[w], mats[7][w * n + v]);
            }
        }
    }

    #[test]
    fn recursion_matches_enumeration_on_gasket_level_3() {
        let x = Exhaustion::build(Family::Gasket, 4).unwrap();
        let c = check_vertex_counts(&x, 3, 8, DEFAULT_BUDGET).unwrap();
        assert!(c.mismatches.is_empty(), "{:?}", c.mismatches);
        assert!(c.interior_checked > 0);
    }

    #[test]
    fn generating_identity_on_gasket_level_2() {
        let x = Exhaustion::build(Family::Gasket, 2).unwrap();
        let ops = PathOperators::new(x.level(2).unwrap(), 10).unwrap();
        assert_eq!(ops.generating_identity_residual().unwrap(), 0);
    }

    #[test]
    fn trivial_traces() {
        let x = Exhaustion::build(Family::Gasket, 6).unwrap();
        let id = normalized_trace(&x, &GeometricOp::identity(), 5).unwrap();
        assert!(id.levels.iter().all(|l| l.value == ratio(1, 1)));
        let a = normalized_trace(&x, &GeometricOp::adjacency(), 5).unwrap();
        assert!(a.levels.iter().all(|l| l.value.is_zero()));
        let q = normalized_trace(&x, &GeometricOp::q_minus_i(), 5).unwrap();
        let last = rational_to_f64(q.value());
        assert!((last - 2.0).abs() < 0.02, "{last}");
        assert!((last - 2.0).abs() <= q.bound());
        q.check_telescoping().unwrap();
        for w in q.levels.windows(2) {
            assert!(w[1].value >= w[0].value);
        }
    }

    #[test]
    fn undeclared_radius_is_rejected() {
        let x = Exhaustion::build(Family::Gasket, 3).unwrap();
        let op = GeometricOp::undeclared("T", vec![OpTerm { coeff: 1, tail_weight: false, order: 2 }]);
        assert!(matches!(normalized_trace(&x, &op, 2), Err(Error::Guard(_))));
        let mut short = GeometricOp::path(3);
        short.radius = Some(1);
        assert!(matches!(normalized_trace(&x, &short, 2), Err(Error::Guard(_))));
    }

    #[test]
    fn order_beyond_exact_range_is_rejected() {
        let x = Exhaustion::build(Family::Gasket, 3).unwrap();
        assert!(matches!(ambient_diagonals(&x, 3, 4), Err(Error::Guard(_))));
        assert!(ambient_diagonals(&x, 2, 3).is_ok());
    }

    #[test]
    fn tail_counts_low_orders_and_closed_form() {
        let x = Exhaustion::build(Family::Gasket, 6).unwrap();
        let table = path_count_table(&x, None, 12).unwrap();
        for k in 0..table.levels.len() {
            assert!(table.rows[1].t_m[k].is_zero());
            assert!(table.rows[2].t_m[k].is_zero());
            assert!(table.rows[3].t_m[k].is_zero());
        }
        for &level in &table.levels {
            for m in 0..=12 {
                assert_eq!(table.rows[m].t_m[level - 1], table.tail_closed_form(level, m));
            }
        }
    }

    #[test]
    fn reduced_counts_vanish_below_girth_and_respect_bound() {
        for (family, levels) in [(Family::Gasket, 5), (Family::Vicsek, 4), (Family::Lindstrom, 3), (Family::Carpet, 3)] {
            let x = Exhaustion::build(family, levels).unwrap();
            let counts = reduced_counts(&x, 10).unwrap();
            let d = x.max_degree();
            assert!(counts[1].value.is_zero() && counts[2].value.is_zero(), "{family}");
            for c in counts.iter().skip(1) {
                assert!(!c.value.is_negative());
                assert!(rational_to_f64(&c.value) <= proper_path_bound(d, c.m), "{family} m={}", c.m);
            }
        }
    }

    #[test]
    fn gasket_triangles_match_weighted_census() {
        let x = Exhaustion::build(Family::Gasket, 6).unwrap();
        let table = path_count_table(&x, None, 3).unwrap();
        let n3 = rational_to_f64(table.n(3));
        let w = weighted_census(&Exhaustion::build(Family::Gasket, 5).unwrap(), 3, DEFAULT_BUDGET).unwrap();
        let target = rational_to_f64(&w.rows[2].weighted_sum);
        assert!((target - 16.0 / 3.0).abs() < 1e-12);
        assert!((n3 - target).abs() <= table.err(3), "{n3} vs {target}");
        assert!((n3 - target).abs() < 0.1, "{n3} vs {target}");
    }

    #[test]
    fn census_comparison_on_small_levels() {
        let x = Exhaustion::build(Family::Gasket, 4).unwrap();
        let rows = compare_with_census(&x, &[2, 3], 8, DEFAULT_BUDGET).unwrap();
        assert!(rows.iter().all(|r| r.agrees), "{rows:?}");
    }

    #[test]
    fn b_operator_relations() {
        // B_0 = I, B_1 = A
        let b0 = GeometricOp::b_operator(0);
        assert_eq!(b0.terms, vec![OpTerm { coeff: 1, tail_weight: false, order: 0 }]);
        let b1 = GeometricOp::b_operator(1);
        assert_eq!(b1.terms, vec![OpTerm { coeff: 1, tail_weight: false, order: 1 }]);
        let x = Exhaustion::build(Family::Gasket, 5).unwrap();
        let report = bm_parity_check(&x, 8).unwrap();
        assert!(report.rows.iter().all(|r| r.within && r.difference == 0.0), "{:?}", report.rows);
    }

    #[test]
    fn telescoping_for_path_operators() {
        let x = Exhaustion::build(Family::Vicsek, 5).unwrap();
        let table = path_count_table(&x, None, 8).unwrap();
        for m in 0..=8 {
            table.trace(&GeometricOp::path(m)).unwrap().check_telescoping().unwrap();
        }
    }

    #[test]
    fn single_graph_traces_are_exact_averages() {
        let g = cycle(5);
        let x = Exhaustion::from_single_graph(g, 1).unwrap();
        let table = path_count_table(&x, None, 10).unwrap();
        // a 5-cycle: 2 reduced closed paths of length 5 per vertex
        assert_eq!(table.n(5), &ratio(2, 1));
        assert_eq!(table.n(10), &ratio(2, 1));
        assert!(table.n(4).is_zero());
        assert_eq!(table.err(5), 0.0);
    }

    #[test]
    fn closed_walks_on_triangle() {
        let g = complete(3);
        let d = closed_walk_diagonals(&g, 4, &[0]).unwrap();
        // tr A^k / 3 = (2^k + 2(-1)^k) / 3
        assert_eq!(d[0], vec![1, 0, 2, 2, 6]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn diagonals_match_enumeration_on_random_graphs(
            n in 3usize..14,
            edges in proptest::collection::vec((0usize..14, 0usize..14), 0..30),
        ) {
            let edges: Vec<(usize, usize)> =
                edges.into_iter().map(|(a, b)| (a % n, b % n)).filter(|(a, b)| a != b).collect();
            let g = Graph::from_edges_dedup(n, &edges).unwrap();
            let ops = PathOperators::new(&g, 8).unwrap();
            let all: Vec<u32> = (0..n as u32).collect();
            let diag = ops.diagonals(&all);
            for m in 1..=8 {
                let brute = count_closed_per_vertex(&g, m, &VertexSet::full(n), DEFAULT_BUDGET).unwrap();
                for v in 0..n {
                    prop_assert_eq!(diag[v][m], brute.proper[v] as i128);
                }
            }
        }
    }
}
