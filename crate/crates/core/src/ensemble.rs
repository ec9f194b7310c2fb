//! The matrix ensemble: `(s,t)`-biregular `{0,±1}` matrices stored as signed
//! bipartite graphs.
//!
//! Columns are left vertices (`0..n`), rows are right vertices (`0..m`). Row
//! `r` applied to coordinate `u` is `sign(u,r)` when `(u,r)` is an edge and `0`
//! otherwise.

use std::collections::{HashMap, HashSet};
use std::ops::{Deref, Range};

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the ensemble `M_{m,n,s,t}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleParams {
    /// Left vertices (columns).
    pub n: usize,
    /// Right vertices (rows).
    pub m: usize,
    /// Row sparsity, i.e. right degree.
    pub s: usize,
    /// Column sparsity, i.e. left degree.
    pub t: usize,
    pub seed: u64,
}

impl EnsembleParams {
    pub fn new(n: usize, m: usize, s: usize, t: usize, seed: u64) -> Result<Self> {
        let p = EnsembleParams { n, m, s, t, seed };
        p.validate()?;
        Ok(p)
    }

    /// Structural checks: edge-count consistency and existence of a simple
    /// biregular graph.
    pub fn validate(&self) -> Result<()> {
        let EnsembleParams { n, m, s, t, .. } = *self;
        if n == 0 || m == 0 || s == 0 || t == 0 {
            return Err(Error::InvalidParams(format!(
                "all of n, m, s, t must be positive (n={n}, m={m}, s={s}, t={t})"
            )));
        }
        if n.checked_mul(t) != m.checked_mul(s) {
            return Err(Error::InvalidParams(format!(
                "edge counts disagree: n*t = {} but m*s = {}",
                n * t,
                m * s
            )));
        }
        if t > m || s > n {
            return Err(Error::InvalidParams(format!(
                "no simple graph: need t <= m and s <= n (n={n}, m={m}, s={s}, t={t})"
            )));
        }
        Ok(())
    }

    /// `t ≥ 3`, `s ≥ t` and `m < n`: the regime the attack and the RIP
    /// corollary are stated for.
    pub fn in_attack_regime(&self) -> bool {
        self.t >= 3 && self.s >= self.t && self.m < self.n
    }

    pub fn alpha(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    pub fn edges(&self) -> usize {
        self.n * self.t
    }
}

/// Simple bipartite graph with CSR adjacency in both directions.
///
/// Edges are kept sorted by `(left, right)`; an edge id is its position in
/// that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    n_left: usize,
    n_right: usize,
    edges: Vec<(usize, usize)>,
    left_offsets: Vec<usize>,
    right_offsets: Vec<usize>,
    right_edge_ids: Vec<usize>,
}

impl BipartiteGraph {
    pub fn new(n_left: usize, n_right: usize, mut edges: Vec<(usize, usize)>) -> Result<Self> {
        edges.sort_unstable();
        for w in edges.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidParams(format!(
                    "repeated edge ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        if let Some(&(u, r)) = edges.iter().find(|&&(u, r)| u >= n_left || r >= n_right) {
            return Err(Error::InvalidParams(format!(
                "edge ({u}, {r}) out of range for {n_left}x{n_right} graph"
            )));
        }
        Ok(Self::from_sorted_unchecked(n_left, n_right, edges))
    }

    fn from_sorted_unchecked(n_left: usize, n_right: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut left_offsets = vec![0usize; n_left + 1];
        let mut right_offsets = vec![0usize; n_right + 1];
        for &(u, r) in &edges {
            left_offsets[u + 1] += 1;
            right_offsets[r + 1] += 1;
        }
        for i in 0..n_left {
            left_offsets[i + 1] += left_offsets[i];
        }
        for i in 0..n_right {
            right_offsets[i + 1] += right_offsets[i];
        }
        let mut fill = right_offsets.clone();
        let mut right_edge_ids = vec![0usize; edges.len()];
        // edges are sorted by u, so each right list comes out sorted by u
        for (e, &(_, r)) in edges.iter().enumerate() {
            right_edge_ids[fill[r]] = e;
            fill[r] += 1;
        }
        BipartiteGraph {
            n_left,
            n_right,
            edges,
            left_offsets,
            right_offsets,
            right_edge_ids,
        }
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    /// Edge ids incident to left vertex `u` (contiguous, sorted by right end).
    pub fn left_edges(&self, u: usize) -> Range<usize> {
        self.left_offsets[u]..self.left_offsets[u + 1]
    }

    /// Edge ids incident to right vertex `r`, sorted by left end.
    pub fn right_edges(&self, r: usize) -> &[usize] {
        &self.right_edge_ids[self.right_offsets[r]..self.right_offsets[r + 1]]
    }

    pub fn left_neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges[self.left_edges(u)].iter().map(|&(_, r)| r)
    }

    pub fn right_neighbors(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        self.right_edges(r).iter().map(move |&e| self.edges[e].0)
    }

    pub fn left_degree(&self, u: usize) -> usize {
        self.left_offsets[u + 1] - self.left_offsets[u]
    }

    pub fn right_degree(&self, r: usize) -> usize {
        self.right_offsets[r + 1] - self.right_offsets[r]
    }

    pub fn edge_id(&self, u: usize, r: usize) -> Option<usize> {
        if u >= self.n_left {
            return None;
        }
        let range = self.left_edges(u);
        let start = range.start;
        self.edges[range]
            .binary_search_by(|&(_, rr)| rr.cmp(&r))
            .ok()
            .map(|i| start + i)
    }

    pub fn has_edge(&self, u: usize, r: usize) -> bool {
        self.edge_id(u, r).is_some()
    }

    pub fn is_left_regular(&self, t: usize) -> bool {
        (0..self.n_left).all(|u| self.left_degree(u) == t)
    }

    pub fn is_biregular(&self, t: usize, s: usize) -> bool {
        self.is_left_regular(t) && (0..self.n_right).all(|r| self.right_degree(r) == s)
    }

    pub fn max_right_degree(&self) -> usize {
        (0..self.n_right).map(|r| self.right_degree(r)).max().unwrap_or(0)
    }

    /// Left degree if every left vertex has the same degree.
    pub fn left_regular_degree(&self) -> Option<usize> {
        let t = if self.n_left == 0 { 0 } else { self.left_degree(0) };
        self.is_left_regular(t).then_some(t)
    }

    /// `N(S)`, sorted.
    pub fn neighborhood(&self, set: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = set.iter().flat_map(|&u| self.left_neighbors(u)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// `U(S)`: right vertices with exactly one neighbour in `S`, sorted.
    pub fn unique_neighbors(&self, set: &[usize]) -> Vec<usize> {
        let mut all: Vec<usize> = set.iter().flat_map(|&u| self.left_neighbors(u)).collect();
        all.sort_unstable();
        let mut out = Vec::new();
        let mut i = 0;
        while i < all.len() {
            let mut j = i + 1;
            while j < all.len() && all[j] == all[i] {
                j += 1;
            }
            if j - i == 1 {
                out.push(all[i]);
            }
            i = j;
        }
        out
    }

    pub fn unique_neighbor_count(&self, set: &[usize]) -> usize {
        self.unique_neighbors(set).len()
    }
}

/// A `{0,±1}` matrix given by a signed bipartite graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedMatrix {
    graph: BipartiteGraph,
    /// `±1`, indexed by edge id.
    signs: Vec<i8>,
}

impl SignedMatrix {
    pub fn new(graph: BipartiteGraph, signs: Vec<i8>) -> Result<Self> {
        if signs.len() != graph.n_edges() {
            return Err(Error::DimensionMismatch {
                expected: graph.n_edges(),
                got: signs.len(),
            });
        }
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidParams(format!("sign {bad} is not +1 or -1")));
        }
        Ok(SignedMatrix { graph, signs })
    }

    pub fn all_positive(graph: BipartiteGraph) -> Self {
        let signs = vec![1; graph.n_edges()];
        SignedMatrix { graph, signs }
    }

    pub fn with_random_signs(graph: BipartiteGraph, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signs = (0..graph.n_edges())
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        SignedMatrix { graph, signs }
    }

    pub fn graph(&self) -> &BipartiteGraph {
        &self.graph
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn sign(&self, e: usize) -> i8 {
        self.signs[e]
    }

    /// `sign(u, r)`, or `None` if `(u, r)` is not an edge.
    pub fn entry(&self, u: usize, r: usize) -> Option<i8> {
        self.graph.edge_id(u, r).map(|e| self.signs[e])
    }

    /// Number of columns (`n`).
    pub fn cols(&self) -> usize {
        self.graph.n_left()
    }

    /// Number of rows (`m`).
    pub fn rows(&self) -> usize {
        self.graph.n_right()
    }

    /// `(Ax)_r = Σ_{u∈N(r)} sign(u,r)·x_u`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.rows()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &e in self.graph.right_edges(r) {
                let u = self.graph.edges[e].0;
                acc += f64::from(self.signs[e]) * x[u];
            }
            *o = acc;
        }
    }

    /// Product with a sparse vector; only touches the columns in its support.
    pub fn apply_sparse(&self, x: &SparseVector) -> Result<Vec<f64>> {
        if x.dim() != self.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                got: x.dim(),
            });
        }
        let mut out = vec![0.0; self.rows()];
        for &(u, v) in x.entries() {
            for e in self.graph.left_edges(u) {
                out[self.graph.edges[e].1] += f64::from(self.signs[e]) * v;
            }
        }
        Ok(out)
    }

    /// `(Aᵀz)_u = Σ_{r∈N(u)} sign(u,r)·z_r`.
    pub fn apply_transpose(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                got: z.len(),
            });
        }
        let mut out = vec![0.0; self.cols()];
        self.apply_transpose_into(z, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_transpose_into(&self, z: &[f64], out: &mut [f64]) {
        for (u, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for e in self.graph.left_edges(u) {
                acc += f64::from(self.signs[e]) * z[self.graph.edges[e].1];
            }
            *o = acc;
        }
    }

    /// `AAᵀz` without forming `AAᵀ`.
    pub(crate) fn gram_apply(&self, z: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        self.apply_transpose_into(z, scratch);
        self.apply_into(scratch, out);
    }

    /// Dense `m × n` copy.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.rows(), self.cols());
        for (e, &(u, r)) in self.graph.edges.iter().enumerate() {
            d[(r, u)] = f64::from(self.signs[e]);
        }
        d
    }

    /// Same matrix with every sign replaced by `+1`.
    pub fn unsigned(&self) -> SignedMatrix {
        SignedMatrix::all_positive(self.graph.clone())
    }
}

/// A [`SignedMatrix`] whose graph is `(t,s)`-biregular.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedBiregularMatrix {
    matrix: SignedMatrix,
    s: usize,
    t: usize,
}

impl SignedBiregularMatrix {
    pub fn new(matrix: SignedMatrix, s: usize, t: usize) -> Result<Self> {
        if !matrix.graph.is_biregular(t, s) {
            return Err(Error::InvalidParams(format!(
                "graph is not ({t},{s})-biregular"
            )));
        }
        Ok(SignedBiregularMatrix { matrix, s, t })
    }

    /// Row sparsity (right degree).
    pub fn s(&self) -> usize {
        self.s
    }

    /// Column sparsity (left degree).
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn params(&self, seed: u64) -> EnsembleParams {
        EnsembleParams {
            n: self.cols(),
            m: self.rows(),
            s: self.s,
            t: self.t,
            seed,
        }
    }

    pub fn as_signed(&self) -> &SignedMatrix {
        &self.matrix
    }

    pub fn into_signed(self) -> SignedMatrix {
        self.matrix
    }
}

impl Deref for SignedBiregularMatrix {
    type Target = SignedMatrix;

    fn deref(&self) -> &SignedMatrix {
        &self.matrix
    }
}

/// Sparse vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn new(dim: usize, entries: Vec<(usize, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::InvalidParams(
                    "sparse vector indices must be strictly increasing".into(),
                ));
            }
        }
        if let Some(&(i, _)) = entries.iter().find(|&&(i, _)| i >= dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: i + 1 });
        }
        if entries.iter().any(|&(_, v)| v == 0.0) {
            return Err(Error::InvalidParams("sparse vector stores a zero".into()));
        }
        Ok(SparseVector { dim, entries })
    }

    pub fn from_dense(x: &[f64]) -> Self {
        SparseVector {
            dim: x.len(),
            entries: x
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        SparseVector {
            dim,
            entries: vec![(i, 1.0)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn support(&self) -> Vec<usize> {
        self.entries.iter().map(|&(i, _)| i).collect()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            d[i] = v;
        }
        d
    }
}

/// Sampler tuning. Defaults: burn-in of `10·|E|` swap attempts, repair abort
/// after `100·|E|` failed attempts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub burn_in_per_edge: usize,
    pub max_failures_per_edge: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            burn_in_per_edge: 10,
            max_failures_per_edge: 100,
        }
    }
}

pub fn sample_biregular(params: &EnsembleParams) -> Result<SignedBiregularMatrix> {
    sample_biregular_with(params, &SamplerConfig::default())
}

/// Configuration model, double-edge-swap repair of parallel edges, then a
/// switch-chain burn-in. Signs are i.i.d. uniform, drawn in sorted edge order.
pub fn sample_biregular_with(
    params: &EnsembleParams,
    config: &SamplerConfig,
) -> Result<SignedBiregularMatrix> {
    params.validate()?;
    let EnsembleParams { n, m, s, t, seed } = *params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_edges = n * t;

    let mut right_stubs: Vec<usize> = (0..m).flat_map(|r| std::iter::repeat_n(r, s)).collect();
    for i in (1..right_stubs.len()).rev() {
        let j = rng.random_range(0..=i);
        right_stubs.swap(i, j);
    }
    let mut edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| std::iter::repeat_n(u, t))
        .zip(right_stubs)
        .collect();

    let key = |u: usize, r: usize| (u as u64) * (m as u64) + r as u64;
    let mut counts: HashMap<u64, u32> = HashMap::with_capacity(n_edges);
    for &(u, r) in &edges {
        *counts.entry(key(u, r)).or_insert(0) += 1;
    }

    let mut suspects: Vec<usize> = (0..n_edges)
        .filter(|&i| counts[&key(edges[i].0, edges[i].1)] > 1)
        .collect();
    let max_failures = config.max_failures_per_edge.saturating_mul(n_edges);
    let mut failures = 0usize;
    while !suspects.is_empty() {
        // a random suspect, since a fixed one can be blocked while another
        // copy elsewhere is still movable
        let slot = rng.random_range(0..suspects.len());
        let i = suspects[slot];
        let (u1, r1) = edges[i];
        if counts[&key(u1, r1)] <= 1 {
            suspects.swap_remove(slot);
            continue;
        }
        let j = rng.random_range(0..n_edges);
        let (u2, r2) = edges[j];
        let ok = u1 != u2
            && r1 != r2
            && counts.get(&key(u1, r2)).copied().unwrap_or(0) == 0
            && counts.get(&key(u2, r1)).copied().unwrap_or(0) == 0;
        if !ok {
            failures += 1;
            if failures > max_failures {
                return Err(Error::SamplingFailure(format!(
                    "parallel-edge repair gave up after {failures} failed swaps"
                )));
            }
            continue;
        }
        swap_edges(&mut edges, &mut counts, i, j, key);
        suspects.swap_remove(slot);
        // the swapped-in edges are fresh; j's old edge stays behind only as
        // other copies, which are already on the stack

    }

    let mut present: HashSet<u64> = edges.iter().map(|&(u, r)| key(u, r)).collect();
    debug_assert_eq!(present.len(), n_edges);
    let burn_in = config.burn_in_per_edge.saturating_mul(n_edges);
    if n_edges >= 2 {
        for _ in 0..burn_in {
            let i = rng.random_range(0..n_edges);
            let j = rng.random_range(0..n_edges);
            let (u1, r1) = edges[i];
            let (u2, r2) = edges[j];
            if u1 == u2 || r1 == r2 {
                continue;
            }
            let (a, b) = (key(u1, r2), key(u2, r1));
            if present.contains(&a) || present.contains(&b) {
                continue;
            }
            present.remove(&key(u1, r1));
            present.remove(&key(u2, r2));
            present.insert(a);
            present.insert(b);
            edges[i] = (u1, r2);
            edges[j] = (u2, r1);
        }
    }

    edges.sort_unstable();
    let graph = BipartiteGraph::from_sorted_unchecked(n, m, edges);
    let signs = (0..n_edges)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    SignedBiregularMatrix::new(SignedMatrix { graph, signs }, s, t)
}

fn swap_edges<K: Fn(usize, usize) -> u64>(
    edges: &mut [(usize, usize)],
    counts: &mut HashMap<u64, u32>,
    i: usize,
    j: usize,
    key: K,
) {
    let (u1, r1) = edges[i];
    let (u2, r2) = edges[j];
    for k in [key(u1, r1), key(u2, r2)] {
        let c = counts.get_mut(&k).expect("edge is counted");
        *c -= 1;
        if *c == 0 {
            counts.remove(&k);
        }
    }
    *counts.entry(key(u1, r2)).or_insert(0) += 1;
    *counts.entry(key(u2, r1)).or_insert(0) += 1;
    edges[i] = (u1, r2);
    edges[j] = (u2, r1);
}

/// Random `t`-left-regular graph: each left vertex picks `t` distinct right
/// vertices uniformly. Right degrees are unconstrained.
pub fn sample_left_regular(n: usize, m: usize, t: usize, seed: u64) -> Result<BipartiteGraph> {
    if t > m {
        return Err(Error::InvalidParams(format!("t = {t} exceeds m = {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(n * t);
    for u in 0..n {
        for r in index::sample(&mut rng, m, t) {
            edges.push((u, r));
        }
    }
    BipartiteGraph::new(n, m, edges)
}
