use serde::Serialize;

use crate::ensemble::BipartiteGraph;
use crate::error::{Error, Result};

/// An acyclic ball of radius `2ℓ+1` around a left vertex, in BFS order.
///
/// Even depths hold left vertices, odd depths right vertices. Positions in
/// each layer are grouped by parent, so children of position `i` at depth `d`
/// occupy a contiguous block at depth `d+1` (see [`TreeBall::children`]).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeBall {
    root: usize,
    ell: usize,
    t: usize,
    s: usize,
    layers: Vec<Vec<usize>>,
    /// Position of each vertex's parent in the previous layer.
    parent_pos: Vec<Vec<usize>>,
    /// Edge id joining each vertex to its parent.
    parent_edge: Vec<Vec<usize>>,
}

impl TreeBall {
    /// BFS from `root` to depth `2ℓ+1`; fails with `InvalidBall` on any
    /// repeated vertex or degree defect inside the ball.
    pub fn from_root(g: &BipartiteGraph, root: usize, ell: usize, t: usize, s: usize) -> Result<Self> {
        if root >= g.n_left() {
            return Err(Error::InvalidBall(format!("root {root} is not a left vertex")));
        }
        if t == 0 || s == 0 {
            return Err(Error::InvalidBall("degrees must be positive".into()));
        }
        let mut seen_left = vec![false; g.n_left()];
        let mut seen_right = vec![false; g.n_right()];
        seen_left[root] = true;
        let mut layers = vec![vec![root]];
        let mut parent_pos = vec![Vec::new()];
        let mut parent_edge = vec![Vec::new()];
        for depth in 0..=2 * ell {
            let from_left = depth % 2 == 0;
            let want = if from_left { t } else { s };
            let mut layer = Vec::new();
            let mut ppos = Vec::new();
            let mut pedge = Vec::new();
            for (i, &v) in layers[depth].iter().enumerate() {
                let up = parent_edge[depth].get(i).copied();
                let (deg, edges): (usize, Vec<usize>) = if from_left {
                    (g.left_degree(v), g.left_edges(v).collect())
                } else {
                    (g.right_degree(v), g.right_edges(v).to_vec())
                };
                if deg != want {
                    return Err(Error::InvalidBall(format!(
                        "vertex {v} at depth {depth} has degree {deg}, expected {want}"
                    )));
                }
                for e in edges {
                    if Some(e) == up {
                        continue;
                    }
                    let (u, r) = g.edge(e);
                    let (w, seen) = if from_left {
                        (r, &mut seen_right[r])
                    } else {
                        (u, &mut seen_left[u])
                    };
                    if *seen {
                        return Err(Error::InvalidBall(format!(
                            "cycle within radius {} of root {root}",
                            depth + 1
                        )));
                    }
                    *seen = true;
                    layer.push(w);
                    ppos.push(i);
                    pedge.push(e);
                }
            }
            layers.push(layer);
            parent_pos.push(ppos);
            parent_edge.push(pedge);
        }
        Ok(TreeBall {
            root,
            ell,
            t,
            s,
            layers,
            parent_pos,
            parent_edge,
        })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// `ℓ`; the ball radius is `2ℓ+1`.
    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn radius(&self) -> usize {
        2 * self.ell + 1
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn layers(&self) -> &[Vec<usize>] {
        &self.layers
    }

    pub fn layer(&self, depth: usize) -> &[usize] {
        &self.layers[depth]
    }

    pub fn parent_pos(&self, depth: usize) -> &[usize] {
        &self.parent_pos[depth]
    }

    pub fn parent_edge(&self, depth: usize) -> &[usize] {
        &self.parent_edge[depth]
    }

    /// Positions in layer `depth+1` of the children of position `i`.
    pub fn children(&self, depth: usize, i: usize) -> std::ops::Range<usize> {
        let k = if depth == 0 {
            self.t
        } else if depth % 2 == 0 {
            self.t - 1
        } else {
            self.s - 1
        };
        i * k..(i + 1) * k
    }

    /// Right vertices at depths `1, 3, …, 2ℓ-1`.
    pub fn internal_right(&self) -> impl Iterator<Item = usize> + '_ {
        (1..2 * self.ell).step_by(2).flat_map(move |d| self.layers[d].iter().copied())
    }

    /// Right vertices at depth `2ℓ+1`.
    pub fn leaf_right(&self) -> &[usize] {
        &self.layers[2 * self.ell + 1]
    }

    pub fn left_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..=2 * self.ell).step_by(2).flat_map(move |d| self.layers[d].iter().copied())
    }

    pub fn vertex_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Re-runs the BFS on `g` and checks it reproduces this ball.
    pub fn validate(&self, g: &BipartiteGraph) -> Result<()> {
        let fresh = TreeBall::from_root(g, self.root, self.ell, self.t, self.s)?;
        if &fresh != self {
            return Err(Error::InvalidBall("ball does not match the graph".into()));
        }
        Ok(())
    }
}

/// Largest `ℓ ≤ max_ell` for which the radius-`2ℓ+1` ball around `root` is an
/// exact `(t,s)` tree, or `None` if even the star at the root is defective.
fn acyclic_depth(
    g: &BipartiteGraph,
    root: usize,
    t: usize,
    s: usize,
    max_ell: usize,
    stamp: u32,
    mark_left: &mut [u32],
    mark_right: &mut [u32],
) -> Option<usize> {
    let mut best = None;
    mark_left[root] = stamp;
    let mut lefts: Vec<(usize, usize)> = vec![(root, usize::MAX)];
    let mut rights: Vec<(usize, usize)> = Vec::new();
    for k in 0..=max_ell {
        rights.clear();
        for &(u, up) in &lefts {
            if g.left_degree(u) != t {
                return best;
            }
            for e in g.left_edges(u) {
                if e == up {
                    continue;
                }
                let r = g.edge(e).1;
                if mark_right[r] == stamp {
                    return best;
                }
                mark_right[r] = stamp;
                rights.push((r, e));
            }
        }
        best = Some(k);
        if k == max_ell {
            break;
        }
        lefts.clear();
        for &(r, up) in &rights {
            if g.right_degree(r) != s {
                return best;
            }
            for &e in g.right_edges(r) {
                if e == up {
                    continue;
                }
                let u = g.edge(e).0;
                if mark_left[u] == stamp {
                    return best;
                }
                mark_left[u] = stamp;
                lefts.push((u, e));
            }
        }
    }
    best
}

/// `ℓ` reached from every left vertex, capped at `max_ell` (`None` where even
/// `ℓ = 0` fails).
pub fn acyclic_depths(g: &BipartiteGraph, t: usize, s: usize, max_ell: usize) -> Vec<Option<usize>> {
    let mut mark_left = vec![0u32; g.n_left()];
    let mut mark_right = vec![0u32; g.n_right()];
    (0..g.n_left())
        .map(|v| {
            acyclic_depth(g, v, t, s, max_ell, v as u32 + 1, &mut mark_left, &mut mark_right)
        })
        .collect()
}

/// The left vertex whose acyclic ball has the largest `ℓ ≤ max_ell`, smallest
/// index on ties.
///
/// `NotFound` unless some ball with `ℓ ≥ 1` exists; with `max_ell = 0` the
/// star at the first vertex of degree `t` is returned.
pub fn find_acyclic_ball(g: &BipartiteGraph, t: usize, s: usize, max_ell: usize) -> Result<TreeBall> {
    let mut mark_left = vec![0u32; g.n_left()];
    let mut mark_right = vec![0u32; g.n_right()];
    let mut best: Option<(usize, usize)> = None;
    for v in 0..g.n_left() {
        let stamp = v as u32 + 1;
        if let Some(ell) = acyclic_depth(g, v, t, s, max_ell, stamp, &mut mark_left, &mut mark_right) {
            if best.is_none_or(|(_, b)| ell > b) {
                best = Some((v, ell));
                if ell == max_ell {
                    break;
                }
            }
        }
    }
    match best {
        Some((v, ell)) if ell >= 1 || max_ell == 0 => TreeBall::from_root(g, v, ell, t, s),
        Some(_) => Err(Error::NotFound(
            "every radius-3 ball contains a cycle or a degree defect".into(),
        )),
        None => Err(Error::NotFound(format!("no left vertex has degree {t}"))),
    }
}

/// Every root attaining the largest `ℓ` (at least 1), in index order.
pub fn maximal_acyclic_roots(g: &BipartiteGraph, t: usize, s: usize, max_ell: usize) -> Result<(usize, Vec<usize>)> {
    let depths = acyclic_depths(g, t, s, max_ell);
    let best = depths.iter().flatten().copied().max();
    match best {
        Some(ell) if ell >= 1 || max_ell == 0 => Ok((
            ell,
            depths
                .iter()
                .enumerate()
                .filter(|(_, d)| **d == Some(ell))
                .map(|(v, _)| v)
                .collect(),
        )),
        _ => Err(Error::NotFound(
            "every radius-3 ball contains a cycle or a degree defect".into(),
        )),
    }
}
