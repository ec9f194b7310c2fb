use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ensemble::SignedMatrix;
use crate::error::{Error, Result};

/// `AAᵀ − sI` as an integer sparse symmetric matrix, one row per right
/// vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftedGram {
    pub s: usize,
    pub rows: Vec<Vec<(usize, i64)>>,
}

impl ShiftedGram {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|k| self.rows[i][k].1)
            .unwrap_or(0)
    }

    pub fn diagonal(&self) -> Vec<i64> {
        (0..self.dim()).map(|i| self.entry(i, i)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().all(|&(j, v)| self.entry(j, i) == v))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut d = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                d[(i, j)] = v as f64;
            }
        }
        d
    }
}

/// `M = AAᵀ − sI`. Requires every row to have exactly `s` nonzeros, which
/// makes the diagonal zero.
pub fn shifted_gram(a: &SignedMatrix) -> Result<ShiftedGram> {
    let g = a.graph();
    let s = g.right_degree(0);
    if (0..g.n_right()).any(|r| g.right_degree(r) != s) {
        return Err(Error::InvalidParams("rows do not all have the same number of nonzeros".into()));
    }
    let mut rows = Vec::with_capacity(g.n_right());
    for r in 0..g.n_right() {
        let mut acc: std::collections::BTreeMap<usize, i64> = Default::default();
        for &e in g.right_edges(r) {
            let u = g.edge(e).0;
            let se = i64::from(a.sign(e));
            for f in g.left_edges(u) {
                let r2 = g.edge(f).1;
                *acc.entry(r2).or_insert(0) += se * i64::from(a.sign(f));
            }
        }
        let d = acc.entry(r).or_insert(0);
        *d -= s as i64;
        assert_eq!(*d, 0, "row {r}: diagonal of AA^T - sI is nonzero");
        rows.push(acc.into_iter().filter(|&(_, v)| v != 0).collect());
    }
    Ok(ShiftedGram { s, rows })
}

/// A length-2 walk `u → v → w` through left vertex `v` between distinct
/// right vertices, stored by its two edge ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct NomadicPair {
    pub first: usize,
    pub second: usize,
}

/// Signed transfer matrix on nomadic pairs: `B[(u,v,w),(w,v′,x)]` is
/// `sign(v′,w)·sign(v′,x)` when `v′ ≠ v`, zero otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NomadicWalkMatrix {
    pub pairs: Vec<NomadicPair>,
    pub rows: Vec<Vec<(usize, i8)>>,
}

impl NomadicWalkMatrix {
    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    pub fn to_dense_i64(&self) -> Vec<Vec<i64>> {
        let n = self.dim();
        let mut d = vec![vec![0i64; n]; n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                d[i][j] = i64::from(v);
            }
        }
        d
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut d = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                d[(i, j)] = f64::from(v);
            }
        }
        d
    }

    /// `ρ(B)` from a dense real Schur decomposition.
    pub fn spectral_radius(&self) -> Result<f64> {
        if self.dim() == 0 {
            return Ok(0.0);
        }
        let d = self.to_dense();
        let max_iter = 1000 * self.dim();
        let schur = nalgebra::linalg::Schur::try_new(d, 1e-13, max_iter).ok_or(Error::NoConvergence {
            iterations: max_iter,
            residual: f64::NAN,
        })?;
        Ok(schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// Smallest `k ≤ dim` with `B^k = 0`, if any.
    pub fn nilpotency_index(&self) -> Option<usize> {
        let b = self.to_dense_i64();
        let n = self.dim();
        let mut pow = b.clone();
        for k in 1..=n.max(1) {
            if pow.iter().all(|r| r.iter().all(|&v| v == 0)) {
                return Some(k);
            }
            pow = int_matmul(&pow, &b);
        }
        None
    }
}

pub(crate) fn int_matmul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let n = a.len();
    let p = b.first().map_or(0, |r| r.len());
    let mut out = vec![vec![0i64; p]; n];
    for i in 0..n {
        for (k, &aik) in a[i].iter().enumerate() {
            if aik != 0 {
                for j in 0..p {
                    out[i][j] += aik * b[k][j];
                }
            }
        }
    }
    out
}

/// Enumerates the nomadic pairs and the transfer matrix; `budget` caps the
/// number of pairs.
pub fn nomadic_matrix(a: &SignedMatrix, budget: usize) -> Result<NomadicWalkMatrix> {
    let g = a.graph();
    let count: usize = (0..g.n_left()).map(|v| g.left_degree(v) * g.left_degree(v).saturating_sub(1)).sum();
    if count > budget {
        return Err(Error::BudgetExceeded {
            what: "nomadic pairs",
            needed: count as u128,
            budget: budget as u128,
        });
    }
    let mut pairs = Vec::with_capacity(count);
    for v in 0..g.n_left() {
        for e1 in g.left_edges(v) {
            for e2 in g.left_edges(v) {
                if e1 != e2 {
                    pairs.push(NomadicPair { first: e1, second: e2 });
                }
            }
        }
    }
    // pairs leaving right vertex w, i.e. whose first edge ends at w
    let mut from_right: Vec<Vec<usize>> = vec![Vec::new(); g.n_right()];
    for (i, p) in pairs.iter().enumerate() {
        from_right[g.edge(p.first).1].push(i);
    }
    let rows = pairs
        .iter()
        .map(|p| {
            let (v, w) = g.edge(p.second);
            let mut row: Vec<(usize, i8)> = from_right[w]
                .iter()
                .filter(|&&j| g.edge(pairs[j].first).0 != v)
                .map(|&j| (j, a.sign(pairs[j].first) * a.sign(pairs[j].second)))
                .collect();
            row.sort_unstable();
            row
        })
        .collect();
    Ok(NomadicWalkMatrix { pairs, rows })
}

/// `L(z) = I − zM + z(t−2)I + z²(s−1)(t−1)I`.
pub fn l_matrix(m: &ShiftedGram, t: usize, z: f64) -> DMatrix<f64> {
    let s = m.s as f64;
    let t = t as f64;
    let diag = 1.0 + z * (t - 2.0) + z * z * (s - 1.0) * (t - 1.0);
    DMatrix::identity(m.dim(), m.dim()) * diag - m.to_dense() * z
}

/// Both sides of the Ihara–Bass identity for the nomadic matrix at `z`:
/// `(1−z)^{n(t−1)−m}(1+(t−1)z)^{n−m} det L(z)` and `det(I − zB)`.
pub fn ihara_bass_sides(a: &SignedMatrix, m: &ShiftedGram, b: &NomadicWalkMatrix, t: usize, z: f64) -> (f64, f64) {
    let n = a.cols() as i32;
    let rows = a.rows() as i32;
    let t_i = t as i32;
    let lhs = (1.0 - z).powi(n * (t_i - 1) - rows)
        * (1.0 + (t as f64 - 1.0) * z).powi(n - rows)
        * l_matrix(m, t, z).determinant();
    let dim = b.dim();
    let rhs = (DMatrix::identity(dim, dim) - b.to_dense() * z).determinant();
    (lhs, rhs)
}

/// `count` points uniform in `(−r, r)` with `r = 1/(2√((s−1)(t−1)))`,
/// skipping the poles `1` and `−1/(t−1)`.
pub fn default_z_grid(s: usize, t: usize, count: usize, seed: u64) -> Vec<f64> {
    let r = 1.0 / (2.0 * (((s - 1) * (t - 1)) as f64).sqrt().max(1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poles = [1.0, -1.0 / (t as f64 - 1.0).max(1.0)];
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z = (rng.random::<f64>() * 2.0 - 1.0) * r;
        if poles.iter().all(|p| (z - p).abs() > 1e-6) {
            out.push(z);
        }
    }
    out
}

/// Maximum relative discrepancy of the Ihara–Bass identity over `zs`.
///
/// Needs a `t`-column-regular, `s`-row-regular matrix and at most
/// `pair_budget` nomadic pairs.
pub fn ihara_bass_check(a: &SignedMatrix, zs: &[f64], pair_budget: usize) -> Result<f64> {
    let g = a.graph();
    let t = g
        .left_regular_degree()
        .ok_or_else(|| Error::InvalidParams("matrix is not column-regular".into()))?;
    let m = shifted_gram(a)?;
    let b = nomadic_matrix(a, pair_budget)?;
    let mut worst = 0.0f64;
    for &z in zs {
        let (l, r) = ihara_bass_sides(a, &m, &b, t, z);
        let scale = l.abs().max(r.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max((l - r).abs() / scale);
    }
    Ok(worst)
}

/// Interval `t−2 ± (2+4ε²)√((s−1)(t−1))` containing `Spec(M)` when
/// `ρ(B) ≤ (1+ε)√((s−1)(t−1))`, `ε ≤ 1/2`.
pub fn spectral_radius_reduction(rho_b: f64, s: usize, t: usize, eps: f64) -> Result<(f64, f64)> {
    let root = (((s - 1) * (t - 1)) as f64).sqrt();
    if !(0.0..=0.5).contains(&eps) {
        return Err(Error::HypothesisViolated(format!("need 0 <= eps <= 1/2, got {eps}")));
    }
    if rho_b > (1.0 + eps) * root * (1.0 + 1e-12) {
        return Err(Error::HypothesisViolated(format!(
            "rho(B) = {rho_b} exceeds (1+eps)sqrt((s-1)(t-1)) = {}",
            (1.0 + eps) * root
        )));
    }
    let r = (2.0 + 4.0 * eps * eps) * root;
    let c = t as f64 - 2.0;
    Ok((c - r, c + r))
}

/// Smallest `ε ≥ 0` with `ρ(B) ≤ (1+ε)√((s−1)(t−1))`.
pub fn rho_excess(rho_b: f64, s: usize, t: usize) -> f64 {
    (rho_b / (((s - 1) * (t - 1)) as f64).sqrt() - 1.0).max(0.0)
}

/// `Bx` in floating point (used by power iteration in tests and callers).
pub fn nomadic_apply(b: &NomadicWalkMatrix, x: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        b.dim(),
        b.rows.iter().map(|row| row.iter().map(|&(j, v)| f64::from(v) * x[j]).sum()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{sample_biregular, BipartiteGraph, EnsembleParams};
    use crate::graph::tree::SignedTree;
    use crate::linalg::symmetric_eigenvalues;

    fn k42_signed(mask: u32) -> SignedMatrix {
        let edges = (0..4).flat_map(|u| (0..2).map(move |r| (u, r))).collect();
        let g = BipartiteGraph::new(4, 2, edges).unwrap();
        let signs = (0..8).map(|e| if mask >> e & 1 == 1 { -1 } else { 1 }).collect();
        SignedMatrix::new(g, signs).unwrap()
    }

    #[test]
    fn gram_diagonal_and_spectrum() {
        for seed in 0..5 {
            let a = sample_biregular(&EnsembleParams::new(32, 16, 6, 3, seed).unwrap()).unwrap();
            let m = shifted_gram(&a).unwrap();
            assert!(m.diagonal().iter().all(|&d| d == 0));
            assert!(m.is_symmetric());
            let ev = symmetric_eigenvalues(m.to_dense());
            let d = a.to_dense();
            let sv = symmetric_eigenvalues(&d * d.transpose());
            for (x, y) in ev.iter().zip(&sv) {
                assert!((x - (y - 6.0)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pair_count_and_row_structure() {
        let a = sample_biregular(&EnsembleParams::new(16, 8, 6, 3, 1).unwrap()).unwrap();
        let b = nomadic_matrix(&a, 10_000).unwrap();
        assert_eq!(b.dim(), 16 * 3 * 2);
        assert!(nomadic_matrix(&a, 10).is_err());
        // each row: (s−1) choices of v′ ≠ v at w, then (t−1) choices of x ≠ w
        assert!(b.rows.iter().all(|r| r.len() == 5 * 2));
    }

    #[test]
    fn rows_match_walk_enumeration() {
        // 12 edges: n = 6, t = 2, m = 4, s = 3
        let edges = vec![(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 3), (3, 3), (3, 0), (4, 0), (4, 2), (5, 1), (5, 3)];
        let g = BipartiteGraph::new(6, 4, edges).unwrap();
        let signs = (0..12).map(|e| if e % 3 == 0 { -1 } else { 1 }).collect();
        let a = SignedMatrix::new(g.clone(), signs).unwrap();
        let b = nomadic_matrix(&a, 1000).unwrap();
        // independent: walk u -v- w -v'- x as right/left/right/left/right vertices
        for (i, p) in b.pairs.iter().enumerate() {
            let (v, u) = g.edge(p.first);
            let (v2, w) = g.edge(p.second);
            assert_eq!(v, v2);
            assert_ne!(u, w);
            for (j, q) in b.pairs.iter().enumerate() {
                let (vp, w2) = g.edge(q.first);
                let (_, x) = g.edge(q.second);
                let walk_ok = w2 == w && vp != v;
                let want = if walk_ok { a.sign(q.first) * a.sign(q.second) } else { 0 };
                let got = b.rows[i].iter().find(|e| e.0 == j).map_or(0, |e| e.1);
                assert_eq!(got, want);
                let _ = x;
            }
        }
    }

    #[test]
    fn tree_is_nilpotent() {
        let a = SignedTree::random(2, 3, 2, 1).unwrap().to_signed_matrix().unwrap();
        let b = nomadic_matrix(&a, 10_000).unwrap();
        assert!(b.nilpotency_index().is_some());
        // a nilpotent block of index k perturbs eigenvalues by about eps^{1/k}
        assert!(b.spectral_radius().unwrap() < 1e-2);
    }

    #[test]
    fn ihara_bass_at_zero_and_on_k42() {
        let a = k42_signed(0b1011_0010);
        let m = shifted_gram(&a).unwrap();
        let b = nomadic_matrix(&a, 1000).unwrap();
        let (l, r) = ihara_bass_sides(&a, &m, &b, 2, 0.0);
        assert_eq!((l, r), (1.0, 1.0));
        let zs = default_z_grid(4, 2, 16, 3);
        assert!(ihara_bass_check(&a, &zs, 1000).unwrap() <= 1e-10);
    }

    #[test]
    fn ihara_bass_on_t3() {
        let a = sample_biregular(&EnsembleParams::new(12, 6, 6, 3, 2).unwrap()).unwrap();
        let zs = default_z_grid(6, 3, 16, 0);
        assert!(ihara_bass_check(&a, &zs, 1000).unwrap() <= 1e-8);
    }

    #[test]
    fn reduction_interval_contains_spectrum() {
        for seed in 0..4 {
            let a = sample_biregular(&EnsembleParams::new(12, 6, 6, 3, seed).unwrap()).unwrap();
            let b = nomadic_matrix(&a, 1000).unwrap();
            let rho = b.spectral_radius().unwrap();
            let eps = rho_excess(rho, 6, 3);
            if eps > 0.5 {
                continue;
            }
            let (lo, hi) = spectral_radius_reduction(rho, 6, 3, eps).unwrap();
            let ev = symmetric_eigenvalues(shifted_gram(&a).unwrap().to_dense());
            assert!(ev[0] >= lo - 1e-9 && ev[ev.len() - 1] <= hi + 1e-9);
        }
        let (lo, hi) = spectral_radius_reduction(0.0, 6, 3, 0.0).unwrap();
        assert!((lo - (1.0 - 2.0 * 10f64.sqrt())).abs() < 1e-12);
        assert!((hi - (1.0 + 2.0 * 10f64.sqrt())).abs() < 1e-12);
        assert!(spectral_radius_reduction(100.0, 6, 3, 0.1).is_err());
        assert!(spectral_radius_reduction(1.0, 6, 3, 0.6).is_err());
    }

    #[test]
    fn contrapositive_on_dense_instance() {
        // all-positive K_{4,2}: AAᵀ = 4J, so M has eigenvalues ±4
        let a = k42_signed(0);
        let ev = symmetric_eigenvalues(shifted_gram(&a).unwrap().to_dense());
        let b = nomadic_matrix(&a, 1000).unwrap();
        let rho = b.spectral_radius().unwrap();
        for eps in [0.0, 0.1, 0.25, 0.5] {
            let (lo, hi) = m_band(4, 2, eps);
            if ev[0] < lo || ev[ev.len() - 1] > hi {
                assert!(rho > (1.0 + eps) * 3f64.sqrt());
            }
        }
    }

    fn m_band(s: usize, t: usize, eps: f64) -> (f64, f64) {
        let r = (2.0 + 4.0 * eps * eps) * (((s - 1) * (t - 1)) as f64).sqrt();
        (t as f64 - 2.0 - r, t as f64 - 2.0 + r)
    }

    #[test]
    fn power_iteration_agrees_with_dense_radius() {
        let a = sample_biregular(&EnsembleParams::new(12, 6, 6, 3, 4).unwrap()).unwrap();
        let b = nomadic_matrix(&a, 1000).unwrap();
        let rho = b.spectral_radius().unwrap();
        // ‖B^k x‖^{1/k} → ρ(B)
        let mut x = DVector::from_element(b.dim(), 1.0);
        let mut log_growth = 0.0;
        let k = 400;
        for _ in 0..k {
            x = nomadic_apply(&b, &x);
            let nrm = x.norm();
            log_growth += nrm.ln();
            x /= nrm;
        }
        let est = (log_growth / k as f64).exp();
        assert!((est - rho).abs() < 0.05 * rho.max(1.0), "{est} vs {rho}");
    }
}
