use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::BipartiteGraph;
use crate::error::{Error, Result};
use crate::linalg::binomial;

/// Default constant in the predicted unique-expansion parameters of a random
/// biregular graph, `γ = cα²/t⁴`.
pub const DEFAULT_EXPANSION_C: f64 = 0.024_893_534_183_931_972; // 1/(2e³)

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionMode {
    /// Every set up to the size bound was checked.
    Exhaustive,
    /// Random sets only; an empirical lower estimate of the true `μ`.
    Sampled,
    /// Taken on trust from an external source.
    Asserted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionProperty {
    /// `|U(S)| ≥ t(1−μ)|S|`.
    Unique,
    /// `|N(S)| ≥ t(1−μ)|S|`.
    Vertex,
}

/// Result of a `(γ, μ)` expansion check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCertificate {
    pub gamma: f64,
    pub mu: f64,
    pub max_set_size_checked: usize,
    pub mode: ExpansionMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Vec<usize>>,
    pub property: ExpansionProperty,
    /// Largest `1 − |U(S)|/(t|S|)` (or with `N(S)`) over the sets checked.
    pub worst_mu: f64,
    /// A set attaining `worst_mu`.
    pub worst_set: Vec<usize>,
    pub sets_checked: u64,
    pub t: usize,
}

impl ExpansionCertificate {
    pub fn holds(&self) -> bool {
        self.counterexample.is_none()
    }

    /// Certificate taken on trust, e.g. for a graph from an explicit
    /// construction with published parameters.
    pub fn asserted(gamma: f64, mu: f64, n: usize, t: usize) -> Self {
        ExpansionCertificate {
            gamma,
            mu,
            max_set_size_checked: max_set_size(gamma, n),
            mode: ExpansionMode::Asserted,
            counterexample: None,
            property: ExpansionProperty::Unique,
            worst_mu: mu,
            worst_set: Vec::new(),
            sets_checked: 0,
            t,
        }
    }

    /// Re-evaluates the stored counterexample on `g`; true if it really
    /// violates the property.
    pub fn recheck_counterexample(&self, g: &BipartiteGraph) -> bool {
        match &self.counterexample {
            None => false,
            Some(set) => {
                let have = match self.property {
                    ExpansionProperty::Unique => g.unique_neighbors(set).len(),
                    ExpansionProperty::Vertex => g.neighborhood(set).len(),
                };
                violates(have, self.t, set.len(), self.mu)
            }
        }
    }
}

/// `⌊γn⌋`, tolerant of `γn` landing a hair below an integer.
pub fn max_set_size(gamma: f64, n: usize) -> usize {
    ((gamma * n as f64 + 1e-9).floor().max(0.0) as usize).min(n)
}

fn violates(have: usize, t: usize, size: usize, mu: f64) -> bool {
    let full = (t * size) as f64;
    (full - have as f64) > mu * full + 1e-12 * full
}

/// `(cα²/t⁴, 2/t)`: the unique-expansion parameters a random biregular graph
/// has with high probability.
pub fn predicted_unique_expansion(alpha: f64, t: usize, c: f64) -> (f64, f64) {
    let t = t as f64;
    (c * alpha * alpha / t.powi(4), 2.0 / t)
}

/// Incremental `|U(S)|` and `|N(S)|` under single-vertex insertions.
struct Counter<'a> {
    g: &'a BipartiteGraph,
    hits: Vec<u32>,
    unique: usize,
    covered: usize,
}

impl<'a> Counter<'a> {
    fn new(g: &'a BipartiteGraph) -> Self {
        Counter {
            g,
            hits: vec![0; g.n_right()],
            unique: 0,
            covered: 0,
        }
    }

    fn add(&mut self, u: usize) {
        for r in self.g.left_neighbors(u) {
            self.hits[r] += 1;
            match self.hits[r] {
                1 => {
                    self.unique += 1;
                    self.covered += 1;
                }
                2 => self.unique -= 1,
                _ => {}
            }
        }
    }

    fn remove(&mut self, u: usize) {
        for r in self.g.left_neighbors(u) {
            self.hits[r] -= 1;
            match self.hits[r] {
                0 => {
                    self.unique -= 1;
                    self.covered -= 1;
                }
                1 => self.unique += 1,
                _ => {}
            }
        }
    }

    fn count(&self, property: ExpansionProperty) -> usize {
        match property {
            ExpansionProperty::Unique => self.unique,
            ExpansionProperty::Vertex => self.covered,
        }
    }
}

struct Tracker {
    property: ExpansionProperty,
    t: usize,
    mu: f64,
    worst_mu: f64,
    worst_set: Vec<usize>,
    counterexample: Option<Vec<usize>>,
    checked: u64,
}

impl Tracker {
    fn observe(&mut self, set: &[usize], have: usize) {
        self.checked += 1;
        let full = (self.t * set.len()) as f64;
        let mu_s = 1.0 - have as f64 / full;
        if self.worst_set.is_empty() || mu_s > self.worst_mu {
            self.worst_mu = mu_s;
            self.worst_set = set.to_vec();
        }
        if self.counterexample.is_none() && violates(have, self.t, set.len(), self.mu) {
            self.counterexample = Some(set.to_vec());
        }
    }
}

fn check_left_regular(g: &BipartiteGraph, t: usize) -> Result<()> {
    if t == 0 || !g.is_left_regular(t) {
        return Err(Error::InvalidParams(format!("graph is not {t}-left-regular")));
    }
    Ok(())
}

fn dfs_sets(
    counter: &mut Counter<'_>,
    tracker: &mut Tracker,
    set: &mut Vec<usize>,
    start: usize,
    max_size: usize,
) {
    let n = counter.g.n_left();
    for u in start..n {
        counter.add(u);
        set.push(u);
        tracker.observe(set, counter.count(tracker.property));
        if set.len() < max_size {
            dfs_sets(counter, tracker, set, u + 1, max_size);
        }
        set.pop();
        counter.remove(u);
    }
}

/// Checks `(γ, μ)` expansion of the chosen kind.
///
/// Exhaustive mode visits every nonempty `S` with `|S| ≤ ⌊γn⌋` and fails with
/// `BudgetExceeded` if there are more than `budget` of them. Sampled mode
/// draws `budget` uniform sets of each size from `seed`.
pub fn verify_expansion(
    g: &BipartiteGraph,
    t: usize,
    gamma: f64,
    mu: f64,
    property: ExpansionProperty,
    mode: ExpansionMode,
    budget: u64,
    seed: u64,
) -> Result<ExpansionCertificate> {
    check_left_regular(g, t)?;
    if !(gamma > 0.0 && gamma <= 1.0) || !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidParams(format!(
            "need 0 < gamma <= 1 and 0 <= mu <= 1 (gamma={gamma}, mu={mu})"
        )));
    }
    let n = g.n_left();
    let max_size = max_set_size(gamma, n);
    let mut tracker = Tracker {
        property,
        t,
        mu,
        worst_mu: 0.0,
        worst_set: Vec::new(),
        counterexample: None,
        checked: 0,
    };
    let mut counter = Counter::new(g);
    match mode {
        ExpansionMode::Exhaustive => {
            let total: u128 = (1..=max_size).map(|k| binomial(n, k)).fold(0u128, u128::saturating_add);
            if total > u128::from(budget) {
                return Err(Error::BudgetExceeded {
                    what: "exhaustive expansion check (number of sets)",
                    needed: total,
                    budget: u128::from(budget),
                });
            }
            dfs_sets(&mut counter, &mut tracker, &mut Vec::new(), 0, max_size);
        }
        ExpansionMode::Sampled => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for k in 1..=max_size {
                for _ in 0..budget {
                    let mut set = index::sample(&mut rng, n, k).into_vec();
                    set.sort_unstable();
                    for &u in &set {
                        counter.add(u);
                    }
                    tracker.observe(&set, counter.count(property));
                    for &u in &set {
                        counter.remove(u);
                    }
                }
            }
        }
        ExpansionMode::Asserted => {
            return Err(Error::InvalidParams(
                "asserted certificates are built with ExpansionCertificate::asserted".into(),
            ))
        }
    }
    Ok(ExpansionCertificate {
        gamma,
        mu,
        max_set_size_checked: max_size,
        mode,
        counterexample: tracker.counterexample,
        property,
        worst_mu: tracker.worst_mu,
        worst_set: tracker.worst_set,
        sets_checked: tracker.checked,
        t,
    })
}

/// `(γ, μ)` unique-expansion check; sampled mode uses seed 0.
pub fn verify_unique_expansion(
    g: &BipartiteGraph,
    t: usize,
    gamma: f64,
    mu: f64,
    mode: ExpansionMode,
    budget: u64,
) -> Result<ExpansionCertificate> {
    verify_expansion(g, t, gamma, mu, ExpansionProperty::Unique, mode, budget, 0)
}

/// Worst unique-expansion deficit over all sets of size at most `max_size`.
pub fn worst_unique_deficit(g: &BipartiteGraph, t: usize, max_size: usize, budget: u64) -> Result<ExpansionCertificate> {
    let n = g.n_left().max(1);
    let gamma = (max_size as f64 / n as f64).min(1.0);
    verify_expansion(g, t, gamma, 1.0, ExpansionProperty::Unique, ExpansionMode::Exhaustive, budget, 0)
}
