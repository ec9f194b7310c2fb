//! Synthetic exact `(t,s)` trees of depth `2ℓ+1`.
//!
//! [`SignedTree`] keeps adjacency implicit (BFS numbering makes parents and
//! children arithmetic) and stores one sign per non-root vertex, the sign of
//! the edge to its parent. This lets the tree-vector identity be checked on
//! trees with tens of millions of edges. [`explicit_tree_graph`] and
//! [`SignedTree::to_signed_matrix`] give the same object as an ordinary graph
//! for cross-checks on small depths.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ensemble::{BipartiteGraph, SignedMatrix};
use crate::error::{Error, Result};
use crate::linalg::pairwise_sum;

/// Level sizes of the tree: `(left, right)` where `left[k]` counts left
/// vertices at depth `2k` and `right[k]` right vertices at depth `2k+1`.
pub fn level_sizes(t: usize, s: usize, ell: usize) -> (Vec<usize>, Vec<usize>) {
    let mut left = vec![1usize];
    let mut right = Vec::with_capacity(ell + 1);
    for k in 0..=ell {
        let fan = if k == 0 { t } else { t - 1 };
        right.push(left[k] * fan);
        if k < ell {
            left.push(right[k] * (s - 1));
        }
    }
    (left, right)
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut off = vec![0usize];
    for &z in sizes {
        off.push(off.last().unwrap() + z);
    }
    off
}

fn check_shape(t: usize, s: usize) -> Result<()> {
    if t < 2 || s < 2 {
        return Err(Error::InvalidParams(format!(
            "tree needs t >= 2 and s >= 2 (t={t}, s={s})"
        )));
    }
    Ok(())
}

/// The depth-`2ℓ+1` `(t,s)` tree as an explicit graph. Left vertices are
/// numbered level by level in BFS order (root is 0), right vertices likewise.
pub fn explicit_tree_graph(t: usize, s: usize, ell: usize) -> Result<BipartiteGraph> {
    check_shape(t, s)?;
    let (left, right) = level_sizes(t, s, ell);
    let lo = offsets(&left);
    let ro = offsets(&right);
    let mut edges = Vec::with_capacity(ro[ell + 1] * 2);
    for k in 0..=ell {
        let fan = if k == 0 { t } else { t - 1 };
        for i in 0..right[k] {
            let r = ro[k] + i;
            edges.push((lo[k] + i / fan, r));
            if k < ell {
                for j in 0..s - 1 {
                    edges.push((lo[k + 1] + i * (s - 1) + j, r));
                }
            }
        }
    }
    BipartiteGraph::new(lo[ell + 1], ro[ell + 1], edges)
}

/// A signed tree with implicit adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedTree {
    t: usize,
    s: usize,
    ell: usize,
    /// `right_signs[k]`, entry `i`: sign of the edge from right vertex `i`
    /// of level `k` to its parent.
    right_signs: Vec<Signs>,
    /// `left_signs[k]`: same for the left vertices of level `k` (level 0,
    /// the root, is empty).
    left_signs: Vec<Signs>,
}

/// Bit-packed signs, bit set meaning `+1`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Signs {
    words: Vec<u64>,
    len: usize,
}

impl Signs {
    fn random(rng: &mut ChaCha8Rng, len: usize) -> Self {
        Signs {
            words: (0..len.div_ceil(64)).map(|_| rng.next_u64()).collect(),
            len,
        }
    }

    fn ones(len: usize) -> Self {
        Signs {
            words: vec![u64::MAX; len.div_ceil(64)],
            len,
        }
    }

    fn len(&self) -> usize {
        self.len
    }

    #[inline]
    fn positive(&self, i: usize) -> bool {
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    fn get(&self, i: usize) -> i8 {
        if self.positive(i) {
            1
        } else {
            -1
        }
    }

    /// `v` times sign `i`.
    #[inline]
    fn apply(&self, i: usize, v: i64) -> i64 {
        // all ones for a minus sign, branch-free
        let neg = ((self.words[i >> 6] >> (i & 63)) & 1) as i64 - 1;
        (v ^ neg) - neg
    }
}

/// Streaming summary of `Ax` for a tree vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeImage {
    /// Largest `|(Ax)_r|` over internal right vertices, in scaled units.
    pub max_internal_scaled: i64,
    /// Number of leaf right vertices.
    pub leaves: usize,
    /// Distinct nonzero `|(Ax)_r|` values (scaled) with multiplicities.
    pub magnitudes: Vec<(u64, u64)>,
    /// The common scale `(s-1)^ℓ`.
    pub scale: i64,
}

impl TreeImage {
    /// `‖Ax‖_p^p` in true (unscaled) units.
    pub fn norm_pow(&self, p: f64) -> f64 {
        let scale = self.scale as f64;
        let terms: Vec<f64> = self
            .magnitudes
            .iter()
            .map(|&(mag, count)| count as f64 * (mag as f64 / scale).powf(p))
            .collect();
        pairwise_sum(&terms)
    }
}

fn tally(hist: &mut Vec<(u64, u64)>, mag: u64, count: u64) {
    if mag == 0 || count == 0 {
        return;
    }
    match hist.iter_mut().find(|(m, _)| *m == mag) {
        Some(entry) => entry.1 += count,
        None => hist.push((mag, count)),
    }
}

impl SignedTree {
    /// Signs drawn i.i.d. from a ChaCha8 stream, level by level (right level
    /// 0, left level 1, right level 1, …).
    pub fn random(t: usize, s: usize, ell: usize, seed: u64) -> Result<Self> {
        check_shape(t, s)?;
        let (left, right) = level_sizes(t, s, ell);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut right_signs = Vec::with_capacity(ell + 1);
        let mut left_signs = vec![Signs::ones(0)];
        for k in 0..=ell {
            right_signs.push(Signs::random(&mut rng, right[k]));
            if k < ell {
                left_signs.push(Signs::random(&mut rng, left[k + 1]));
            }
        }
        Ok(SignedTree {
            t,
            s,
            ell,
            right_signs,
            left_signs,
        })
    }

    pub fn all_positive(t: usize, s: usize, ell: usize) -> Result<Self> {
        check_shape(t, s)?;
        let (left, right) = level_sizes(t, s, ell);
        Ok(SignedTree {
            t,
            s,
            ell,
            right_signs: right.iter().map(|&z| Signs::ones(z)).collect(),
            left_signs: left
                .iter()
                .enumerate()
                .map(|(k, &z)| Signs::ones(if k == 0 { 0 } else { z }))
                .collect(),
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn edge_count(&self) -> usize {
        self.right_signs.iter().map(Signs::len).sum::<usize>()
            + self.left_signs.iter().map(Signs::len).sum::<usize>()
    }

    fn fan(&self, k: usize) -> usize {
        if k == 0 {
            self.t
        } else {
            self.t - 1
        }
    }

    /// `(s-1)^ℓ`, the factor that makes the tree vector integral.
    pub fn scale(&self) -> Result<i64> {
        i64::try_from(self.s - 1)
            .ok()
            .and_then(|b| b.checked_pow(self.ell as u32))
            .ok_or(Error::BudgetExceeded {
                what: "tree vector scale (s-1)^ell",
                needed: (self.s as u128 - 1).saturating_pow(self.ell as u32),
                budget: i64::MAX as u128,
            })
    }

    /// The tree vector times `(s-1)^ℓ`, per left level. The root gets
    /// `+(s-1)^ℓ`; a child `v` of right vertex `r` with parent `u` gets
    /// `-x_u·sign(u,r)·sign(v,r)/(s-1)`.
    pub fn tree_vector_scaled(&self) -> Result<Vec<Vec<i64>>> {
        let scale = self.scale()?;
        let d = (self.s - 1) as i64;
        let mut levels = vec![vec![scale]];
        for k in 0..self.ell {
            let parent = &levels[k];
            let rs = &self.right_signs[k];
            let ls = &self.left_signs[k + 1];
            let fan = self.fan(k);
            let w = self.s - 1;
            let mut next = vec![0i64; ls.len()];
            // entries are multiples of d, so dividing before the sign is exact
            let parents = parent.iter().flat_map(|&xp| std::iter::repeat_n(xp / d, fan));
            for ((i, xp), out) in parents.enumerate().zip(next.chunks_exact_mut(w)) {
                let through = -rs.apply(i, xp);
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot = ls.apply(i * w + j, through);
                }
            }
            levels.push(next);
        }
        Ok(levels)
    }

    fn check_vector(&self, x: &[Vec<i64>]) -> Result<()> {
        let (left, _) = level_sizes(self.t, self.s, self.ell);
        if x.len() != left.len() {
            return Err(Error::DimensionMismatch {
                expected: left.len(),
                got: x.len(),
            });
        }
        for (level, want) in x.iter().zip(&left) {
            if level.len() != *want {
                return Err(Error::DimensionMismatch {
                    expected: *want,
                    got: level.len(),
                });
            }
        }
        Ok(())
    }

    /// `(Ax)_r` for every right vertex `r` of level `k`, by the sparse row
    /// product over `r`'s parent and children.
    fn for_each_row(&self, x: &[Vec<i64>], k: usize, mut f: impl FnMut(i64)) {
        let fan = self.fan(k);
        let rs = &self.right_signs[k];
        let xk = &x[k];
        let parents = xk.iter().flat_map(|&xp| std::iter::repeat_n(xp, fan));
        if k == self.ell {
            for (i, xp) in parents.enumerate() {
                f(rs.apply(i, xp));
            }
            return;
        }
        let w = self.s - 1;
        let ls = &self.left_signs[k + 1];
        for ((i, xp), xv) in parents.enumerate().zip(x[k + 1].chunks_exact(w)) {
            let children: i64 = xv.iter().enumerate().map(|(j, &v)| ls.apply(i * w + j, v)).sum();
            f(rs.apply(i, xp) + children);
        }
    }

    /// Sparse product `Ax` for a vector given per left level; returns `Ax`
    /// per right level.
    pub fn apply_scaled(&self, x: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
        self.check_vector(x)?;
        Ok((0..=self.ell)
            .map(|k| {
                let mut out = Vec::with_capacity(self.right_signs[k].len());
                self.for_each_row(x, k, |v| out.push(v));
                out
            })
            .collect())
    }

    /// Same product as [`SignedTree::apply_scaled`], summarised on the fly
    /// instead of stored.
    pub fn image_summary(&self, x: &[Vec<i64>]) -> Result<TreeImage> {
        self.check_vector(x)?;
        let mut max_internal = 0i64;
        let mut hist = Vec::new();
        for k in 0..self.ell {
            self.for_each_row(x, k, |v| max_internal = max_internal.max(v.abs()));
        }
        // a leaf row holds one entry, so its magnitude is the parent's
        let fan = self.fan(self.ell) as u64;
        let (mut run_mag, mut run_len) = (0u64, 0u64);
        for &xp in &x[self.ell] {
            let mag = xp.unsigned_abs();
            if mag == run_mag {
                run_len += fan;
            } else {
                tally(&mut hist, run_mag, run_len);
                (run_mag, run_len) = (mag, fan);
            }
        }
        tally(&mut hist, run_mag, run_len);
        Ok(TreeImage {
            max_internal_scaled: max_internal,
            leaves: self.right_signs[self.ell].len(),
            magnitudes: hist,
            scale: self.scale()?,
        })
    }

    /// Explicit signed matrix on [`explicit_tree_graph`]'s numbering.
    pub fn to_signed_matrix(&self) -> Result<SignedMatrix> {
        let g = explicit_tree_graph(self.t, self.s, self.ell)?;
        let (left, right) = level_sizes(self.t, self.s, self.ell);
        let lo = offsets(&left);
        let ro = offsets(&right);
        let mut signs = vec![0i8; g.n_edges()];
        for k in 0..=self.ell {
            let fan = self.fan(k);
            for i in 0..right[k] {
                let r = ro[k] + i;
                let e = g.edge_id(lo[k] + i / fan, r).expect("parent edge");
                signs[e] = self.right_signs[k].get(i);
                if k < self.ell {
                    for j in 0..self.s - 1 {
                        let c = i * (self.s - 1) + j;
                        let e = g.edge_id(lo[k + 1] + c, r).expect("child edge");
                        signs[e] = self.left_signs[k + 1].get(c);
                    }
                }
            }
        }
        SignedMatrix::new(g, signs)
    }

    /// Flattens a per-level left vector into [`explicit_tree_graph`]'s
    /// numbering.
    pub fn flatten_left<T: Copy>(levels: &[Vec<T>]) -> Vec<T> {
        levels.iter().flatten().copied().collect()
    }
}

/// Closed form `t(t-1)^ℓ(s-1)^{(1-p)ℓ}` for `‖Ax‖_p^p` of the tree vector.
pub fn predicted_image_norm_pow(t: usize, s: usize, ell: usize, p: f64) -> f64 {
    let l = ell as f64;
    t as f64 * ((t - 1) as f64).powf(l) * ((s - 1) as f64).powf((1.0 - p) * l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_tree_shape() {
        let g = explicit_tree_graph(3, 4, 1).unwrap();
        // left: 1 + 3*3, right: 3 + 3*3*2
        assert_eq!(g.n_left(), 10);
        assert_eq!(g.n_right(), 21);
        assert_eq!(g.n_edges(), 3 + 9 + 18);
        assert_eq!(g.left_degree(0), 3);
        assert!((1..10).all(|u| g.left_degree(u) == 3));
        assert!((0..3).all(|r| g.right_degree(r) == 4));
        assert!((3..21).all(|r| g.right_degree(r) == 1));
    }

    #[test]
    fn implicit_and_explicit_products_agree() {
        for (t, s, ell, seed) in [(3, 4, 2, 1), (4, 6, 1, 2), (3, 6, 0, 3), (2, 3, 3, 4)] {
            let tree = SignedTree::random(t, s, ell, seed).unwrap();
            let a = tree.to_signed_matrix().unwrap();
            let x = tree.tree_vector_scaled().unwrap();
            let xf: Vec<f64> = SignedTree::flatten_left(&x).iter().map(|&v| v as f64).collect();
            let dense = a.apply(&xf).unwrap();
            let implicit = SignedTree::flatten_left(&tree.apply_scaled(&x).unwrap());
            assert_eq!(dense.len(), implicit.len());
            for (d, i) in dense.iter().zip(&implicit) {
                assert_eq!(*d, *i as f64);
            }
        }
    }

    #[test]
    fn internal_rows_cancel_and_norm_matches() {
        let tree = SignedTree::random(4, 7, 3, 9).unwrap();
        let x = tree.tree_vector_scaled().unwrap();
        let img = tree.image_summary(&x).unwrap();
        assert_eq!(img.max_internal_scaled, 0);
        assert_eq!(img.leaves, 4 * 27 * 216);
        for p in [1.0, 1.5, 2.0] {
            let want = predicted_image_norm_pow(4, 7, 3, p);
            assert!((img.norm_pow(p) - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn bad_shapes_rejected() {
        assert!(SignedTree::random(1, 4, 1, 0).is_err());
        let tree = SignedTree::all_positive(3, 4, 1).unwrap();
        assert!(tree.apply_scaled(&[vec![1]]).is_err());
    }
}
