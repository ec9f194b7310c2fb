use std::collections::BTreeMap;

use serde::Serialize;

use crate::ensemble::{BipartiteGraph, SignedMatrix};
use crate::error::{Error, Result};
use crate::spectral::nomadic::{int_matmul, nomadic_matrix};

/// Largest walk length `4ℓ` the enumerator accepts.
pub const MAX_HIKE_LENGTH: usize = 12;
/// Largest edge count the enumerator accepts.
pub const MAX_HIKE_EDGES: usize = 16;

/// A closed walk of length `4ℓ` from a right vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HikeRecord {
    /// Vertices, left `u` as `u` and right `r` as `n_left + r`; `4ℓ + 1`
    /// long, first equals last.
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
    /// Edge id → number of traversals.
    pub multiplicity: BTreeMap<usize, usize>,
    pub even: bool,
    pub singleton_free: bool,
    pub special: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct HikeCounts {
    pub total: u64,
    pub even: u64,
    pub singleton_free: u64,
    pub special: u64,
    pub even_special: u64,
}

fn check_size(g: &BipartiteGraph, ell: usize) -> Result<()> {
    if ell == 0 {
        return Err(Error::InvalidParams("hike parameter must be >= 1".into()));
    }
    if 4 * ell > MAX_HIKE_LENGTH || g.n_edges() > MAX_HIKE_EDGES {
        return Err(Error::BudgetExceeded {
            what: "hike enumeration (walk length 4l and edge count)",
            needed: (4 * ell).max(g.n_edges()) as u128,
            budget: MAX_HIKE_LENGTH.max(MAX_HIKE_EDGES) as u128,
        });
    }
    Ok(())
}

/// Walks every `2ℓ`-hike: steps may not reuse the previous edge, except the
/// step right after the midpoint.
fn walk_hikes<F: FnMut(&[usize], &[usize])>(g: &BipartiteGraph, ell: usize, mut visit: F) {
    let len = 4 * ell;
    let nl = g.n_left();
    let mut verts = Vec::with_capacity(len + 1);
    let mut edges = Vec::with_capacity(len);
    for r in 0..g.n_right() {
        verts.push(nl + r);
        step(g, len, ell, &mut verts, &mut edges, &mut visit);
        verts.pop();
    }
}

fn step<F: FnMut(&[usize], &[usize])>(
    g: &BipartiteGraph,
    len: usize,
    ell: usize,
    verts: &mut Vec<usize>,
    edges: &mut Vec<usize>,
    visit: &mut F,
) {
    let nl = g.n_left();
    if edges.len() == len {
        if verts[len] == verts[0] {
            visit(verts, edges);
        }
        return;
    }
    let here = *verts.last().unwrap();
    // position of the step being taken is edges.len() + 1; backtracking is
    // allowed only from step 2ℓ to 2ℓ+1
    let may_backtrack = edges.len() == 2 * ell;
    let prev = edges.last().copied();
    let candidates: Vec<(usize, usize)> = if here >= nl {
        g.right_edges(here - nl).iter().map(|&e| (e, g.edge(e).0)).collect()
    } else {
        g.left_edges(here).map(|e| (e, nl + g.edge(e).1)).collect()
    };
    for (e, next) in candidates {
        if Some(e) == prev && !may_backtrack {
            continue;
        }
        edges.push(e);
        verts.push(next);
        step(g, len, ell, verts, edges, visit);
        verts.pop();
        edges.pop();
    }
}

fn classify(edges: &[usize], ell: usize) -> (BTreeMap<usize, usize>, bool, bool, bool) {
    let mut mult = BTreeMap::new();
    for &e in edges {
        *mult.entry(e).or_insert(0) += 1;
    }
    let even = mult.values().all(|&c| c % 2 == 0);
    let singleton_free = mult.values().all(|&c| c != 1);
    let l = 4 * ell;
    // 1-based: e1 = e_{4ℓ}, e2 = e_{4ℓ−1}, e_{2ℓ} = e_{2ℓ+1}, e_{2ℓ−1} = e_{2ℓ+2}
    let e = |i: usize| edges[i - 1];
    let special = e(1) == e(l) && e(2) == e(l - 1) && e(2 * ell) == e(2 * ell + 1) && e(2 * ell - 1) == e(2 * ell + 2);
    (mult, even, singleton_free, special)
}

/// Every `2ℓ`-hike with its classification.
pub fn enumerate_hikes(g: &BipartiteGraph, ell: usize) -> Result<Vec<HikeRecord>> {
    check_size(g, ell)?;
    let mut out = Vec::new();
    walk_hikes(g, ell, |v, e| {
        let (multiplicity, even, singleton_free, special) = classify(e, ell);
        out.push(HikeRecord {
            vertices: v.to_vec(),
            edges: e.to_vec(),
            multiplicity,
            even,
            singleton_free,
            special,
        });
    });
    Ok(out)
}

/// Counts of `2ℓ`-hikes by class.
pub fn count_hikes(g: &BipartiteGraph, ell: usize) -> Result<HikeCounts> {
    check_size(g, ell)?;
    let mut c = HikeCounts::default();
    walk_hikes(g, ell, |_, e| {
        let (_, even, sf, special) = classify(e, ell);
        c.total += 1;
        c.even += u64::from(even);
        c.singleton_free += u64::from(sf);
        c.special += u64::from(special);
        c.even_special += u64::from(even && special);
    });
    Ok(c)
}

/// `tr(B^ℓ (Bᵀ)^ℓ) = ‖B^ℓ‖_F²` in exact integers.
pub fn nomadic_trace(a: &SignedMatrix, ell: usize) -> Result<i64> {
    let b = nomadic_matrix(a, 4096)?.to_dense_i64();
    let n = b.len();
    let mut pow: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    for _ in 0..ell {
        pow = int_matmul(&pow, &b);
    }
    Ok(pow.iter().flatten().map(|v| v * v).sum())
}

/// Result of averaging the trace over every signing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceIdentity {
    pub ell: usize,
    /// Sum of `tr(B^ℓ(Bᵀ)^ℓ)` over all `2^{|E|}` signings.
    pub trace_sum: i128,
    pub signings: u64,
    /// Even special `2(ℓ+1)`-hikes.
    pub even_special_hikes: u64,
}

impl TraceIdentity {
    /// Exact equality of the signing average with the hike count.
    pub fn holds(&self) -> bool {
        self.trace_sum == i128::from(self.even_special_hikes) * i128::from(self.signings)
    }
}

/// Averages `tr(B^ℓ(Bᵀ)^ℓ)` over every signing of `g` and counts even special
/// `2(ℓ+1)`-hikes.
pub fn trace_identity(g: &BipartiteGraph, ell: usize) -> Result<TraceIdentity> {
    check_size(g, ell + 1)?;
    let e = g.n_edges();
    let signings = 1u64 << e;
    let mut trace_sum: i128 = 0;
    for mask in 0..signings {
        let signs = (0..e).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
        let a = SignedMatrix::new(g.clone(), signs)?;
        trace_sum += i128::from(nomadic_trace(&a, ell)?);
    }
    Ok(TraceIdentity {
        ell,
        trace_sum,
        signings,
        even_special_hikes: count_hikes(g, ell + 1)?.even_special,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k22() -> BipartiteGraph {
        BipartiteGraph::new(2, 2, vec![(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap()
    }

    fn k42() -> BipartiteGraph {
        let edges = (0..4).flat_map(|u| (0..2).map(move |r| (u, r))).collect();
        BipartiteGraph::new(4, 2, edges).unwrap()
    }

    #[test]
    fn four_cycle_by_hand() {
        // from r: pick u (2 ways), forced r′, then back to u or across to u′,
        // then forced home: 8 hikes; the 4 even ones go back and forth
        let c = count_hikes(&k22(), 1).unwrap();
        assert_eq!(c.total, 8);
        assert_eq!(c.even, 4);
        let hikes = enumerate_hikes(&k22(), 1).unwrap();
        for h in hikes.iter().filter(|h| h.even) {
            assert_eq!(h.edges[1], h.edges[2]);
            assert_eq!(h.edges[0], h.edges[3]);
            assert!(h.special);
        }
    }

    #[test]
    fn hike_invariants() {
        let g = k42();
        for ell in 1..=3 {
            let hikes = enumerate_hikes(&g, ell).unwrap();
            let c = count_hikes(&g, ell).unwrap();
            assert_eq!(hikes.len() as u64, c.total);
            assert!(c.even <= c.singleton_free);
            for h in &hikes {
                assert_eq!(h.vertices.len(), 4 * ell + 1);
                assert_eq!(h.vertices[0], h.vertices[4 * ell]);
                assert!(h.vertices[0] >= 4);
                if h.even {
                    assert!(h.singleton_free);
                }
                for (i, &e) in h.edges.iter().enumerate() {
                    let (u, r) = g.edge(e);
                    let ends = [h.vertices[i], h.vertices[i + 1]];
                    assert!(ends.contains(&u) && ends.contains(&(4 + r)));
                    if i + 1 < h.edges.len() && i + 1 != 2 * ell {
                        assert_ne!(e, h.edges[i + 1]);
                    }
                }
            }
        }
        assert!(count_hikes(&g, 4).is_err());
    }

    #[test]
    fn trace_identity_l1() {
        let r = trace_identity(&k42(), 1).unwrap();
        assert!(r.holds(), "{r:?}");
    }
}
