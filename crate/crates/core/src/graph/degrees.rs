use crate::ensemble::BipartiteGraph;
use crate::error::{Error, Result};

/// Splits high-degree right vertices until every right degree is at most
/// `t/β` with `β = |V_R|/|V_L|`.
///
/// A right vertex `r` over the bound hands its `⌊t/β⌋` smallest-index
/// neighbours to a fresh right vertex, repeatedly. Left degrees are unchanged
/// and no `|U(S)|` decreases.
pub fn bound_right_degrees(g: &BipartiteGraph, t: usize) -> Result<BipartiteGraph> {
    let n = g.n_left();
    let m = g.n_right();
    if !g.is_left_regular(t) {
        return Err(Error::InvalidParams(format!("graph is not {t}-left-regular")));
    }
    if m == 0 || m > n {
        return Err(Error::InvalidParams(format!(
            "need 0 < |V_R| <= |V_L| (got {m} right, {n} left)"
        )));
    }
    // deg > t/β  ⇔  deg·m > t·n ;  ⌊t/β⌋ = ⌊t·n/m⌋
    let chunk = t * n / m;
    let mut lists: Vec<Vec<usize>> = (0..m).map(|r| g.right_neighbors(r).collect()).collect();
    let mut r = 0;
    while r < lists.len() {
        while lists[r].len() * m > t * n {
            let moved: Vec<usize> = lists[r].drain(..chunk).collect();
            lists.push(moved);
        }
        r += 1;
    }
    let edges = lists
        .iter()
        .enumerate()
        .flat_map(|(r, us)| us.iter().map(move |&u| (u, r)))
        .collect();
    BipartiteGraph::new(n, lists.len(), edges)
}
