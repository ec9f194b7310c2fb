use std::collections::VecDeque;

use serde::Serialize;

use crate::ensemble::BipartiteGraph;
use crate::error::{Error, Result};

/// A vertex of a bipartite graph, tagged with its side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Vertex {
    Left(usize),
    Right(usize),
}

/// Plain undirected simple graph, used for cycle counting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UndirectedGraph {
    adj: Vec<Vec<usize>>,
}

impl UndirectedGraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidParams(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(Error::InvalidParams(format!("self-loop at {a}")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
            let before = list.len();
            list.dedup();
            if list.len() != before {
                return Err(Error::InvalidParams("repeated edge".into()));
            }
        }
        Ok(UndirectedGraph { adj })
    }

    /// Left vertex `u` becomes `u`, right vertex `r` becomes `n_left + r`.
    pub fn from_bipartite(g: &BipartiteGraph) -> Self {
        let n = g.n_left();
        let mut adj = vec![Vec::new(); n + g.n_right()];
        for &(u, r) in g.edges() {
            adj[u].push(n + r);
            adj[n + r].push(u);
        }
        UndirectedGraph { adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    /// Cyclomatic number `|E| − |V| + 1` of the (connected) ball of the given
    /// radius around `v`, i.e. the number of independent cycles in it.
    pub fn ball_excess(&self, v: usize, radius: usize) -> usize {
        let mut dist = vec![usize::MAX; self.adj.len()];
        let mut order = vec![v];
        dist[v] = 0;
        let mut queue = VecDeque::from([v]);
        while let Some(a) = queue.pop_front() {
            if dist[a] == radius {
                continue;
            }
            for &b in &self.adj[a] {
                if dist[b] == usize::MAX {
                    dist[b] = dist[a] + 1;
                    order.push(b);
                    queue.push_back(b);
                }
            }
        }
        let twice_edges: usize = order
            .iter()
            .map(|&a| self.adj[a].iter().filter(|&&b| dist[b] != usize::MAX).count())
            .sum();
        twice_edges / 2 + 1 - order.len()
    }

    /// First vertex whose radius-`radius` ball holds two or more cycles.
    pub fn first_bicycle(&self, radius: usize) -> Option<(usize, usize)> {
        (0..self.adj.len())
            .map(|v| (v, self.ball_excess(v, radius)))
            .find(|&(_, ex)| ex >= 2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BicycleReport {
    pub bicycle_free: bool,
    pub radius: usize,
    /// Offending vertex and the number of independent cycles in its ball.
    pub witness: Option<(Vertex, usize)>,
}

/// Whether every ball of the given radius (around left and right vertices)
/// contains at most one cycle.
pub fn is_bicycle_free(g: &BipartiteGraph, radius: usize) -> BicycleReport {
    let u = UndirectedGraph::from_bipartite(g);
    let witness = u.first_bicycle(radius).map(|(v, ex)| {
        let vertex = if v < g.n_left() {
            Vertex::Left(v)
        } else {
            Vertex::Right(v - g.n_left())
        };
        (vertex, ex)
    });
    BicycleReport {
        bicycle_free: witness.is_none(),
        radius,
        witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tree::explicit_tree_graph;

    #[test]
    fn trees_are_bicycle_free() {
        let g = explicit_tree_graph(3, 4, 2).unwrap();
        for radius in [1, 3, 6] {
            assert!(is_bicycle_free(&g, radius).bicycle_free);
        }
    }

    #[test]
    fn bowtie_fails_at_shared_vertex() {
        // triangles 0-1-2 and 0-3-4 share vertex 0
        let g = UndirectedGraph::new(5, &[(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)]).unwrap();
        assert_eq!(g.first_bicycle(1), Some((0, 2)));
        assert_eq!(g.ball_excess(1, 1), 1);
    }

    #[test]
    fn complete_bipartite_has_many_cycles() {
        let edges = (0..4).flat_map(|u| (0..2).map(move |r| (u, r))).collect();
        let g = BipartiteGraph::new(4, 2, edges).unwrap();
        let rep = is_bicycle_free(&g, 3);
        assert!(!rep.bicycle_free);
        // 8 edges, 6 vertices: 3 independent cycles
        assert_eq!(rep.witness, Some((Vertex::Left(0), 3)));
    }

    #[test]
    fn single_cycle_is_allowed() {
        let g = BipartiteGraph::new(2, 2, vec![(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        assert!(is_bicycle_free(&g, 5).bicycle_free);
    }
}
