use std::collections::BTreeMap;

use serde::Serialize;

use crate::ensemble::BipartiteGraph;
use crate::error::{Error, Result};
use crate::graph::expansion::ExpansionCertificate;

/// Many-to-one matching of `N(S)` onto `S` built by peeling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PeelMatching {
    /// Matched edge ids.
    pub edges: Vec<usize>,
    /// Right vertex → the left vertex it is matched to.
    pub owner: BTreeMap<usize, usize>,
    /// Order in which `S` was peeled.
    pub order: Vec<usize>,
    /// `⌈t(1−μ)⌉`, the per-vertex requirement used.
    pub required: usize,
}

impl PeelMatching {
    /// Matched edges at left vertex `v`.
    pub fn degree(&self, v: usize) -> usize {
        self.owner.values().filter(|&&o| o == v).count()
    }
}

/// Peels `S`: repeatedly take the smallest unprocessed `v` with at least
/// `⌈t(1−μ)⌉` neighbours not shared with any other unprocessed vertex, and
/// match those neighbours to `v`.
pub fn peel_matching(g: &BipartiteGraph, set: &[usize], cert: &ExpansionCertificate) -> Result<PeelMatching> {
    let t = cert.t;
    if !g.is_left_regular(t) {
        return Err(Error::InvalidParams(format!("graph is not {t}-left-regular")));
    }
    let mut members: Vec<usize> = set.to_vec();
    members.sort_unstable();
    members.dedup();
    if members.len() != set.len() {
        return Err(Error::InvalidParams("set has repeated vertices".into()));
    }
    if let Some(&u) = members.iter().find(|&&u| u >= g.n_left()) {
        return Err(Error::InvalidParams(format!("vertex {u} is not a left vertex")));
    }
    if members.len() > cert.max_set_size_checked {
        return Err(Error::PreconditionFailed(format!(
            "|S| = {} exceeds the certified size {}",
            members.len(),
            cert.max_set_size_checked
        )));
    }
    let required = ((t as f64) * (1.0 - cert.mu) - 1e-9).ceil().max(0.0) as usize;
    let mut pending: BTreeMap<usize, u32> = BTreeMap::new();
    for &u in &members {
        for r in g.left_neighbors(u) {
            *pending.entry(r).or_insert(0) += 1;
        }
    }
    let mut remaining = members;
    let mut matching = PeelMatching {
        edges: Vec::new(),
        owner: BTreeMap::new(),
        order: Vec::new(),
        required,
    };
    while !remaining.is_empty() {
        let pick = remaining.iter().position(|&v| {
            g.left_neighbors(v).filter(|r| pending[r] == 1).count() >= required
        });
        let Some(i) = pick else {
            return Err(Error::PeelStuck { remaining, required });
        };
        let v = remaining.remove(i);
        for e in g.left_edges(v) {
            let r = g.edge(e).1;
            let c = pending.get_mut(&r).expect("neighbour counted");
            if *c == 1 {
                matching.edges.push(e);
                matching.owner.insert(r, v);
            }
            *c -= 1;
        }
        matching.order.push(v);
    }
    matching.edges.sort_unstable();
    Ok(matching)
}

/// Checks the two matching properties directly; returns a description of the
/// first failure.
pub fn check_matching(g: &BipartiteGraph, set: &[usize], m: &PeelMatching) -> std::result::Result<(), String> {
    let nbhd = g.neighborhood(set);
    let mut touch = BTreeMap::new();
    for &e in &m.edges {
        let (u, r) = g.edge(e);
        if !set.contains(&u) {
            return Err(format!("edge ({u}, {r}) leaves S"));
        }
        *touch.entry(r).or_insert(0usize) += 1;
    }
    for r in &nbhd {
        match touch.get(r) {
            Some(1) => {}
            other => return Err(format!("right vertex {r} touches {} matched edges", other.unwrap_or(&0))),
        }
    }
    if touch.len() != nbhd.len() {
        return Err("matched edge outside N(S)".into());
    }
    for &v in set {
        let d = m.edges.iter().filter(|&&e| g.edge(e).0 == v).count();
        if d < m.required {
            return Err(format!("left vertex {v} has {d} matched edges, needs {}", m.required));
        }
    }
    Ok(())
}
