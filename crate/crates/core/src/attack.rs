//! The ℓ2-compressibility attack: a signed tree vector on an acyclic ball has
//! a tiny image, so its orthogonal projection onto `ker(A)` stays close to a
//! sparse vector.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ensemble::{SignedMatrix, SparseVector};
use crate::error::{Error, Result};
use crate::graph::ball::{find_acyclic_ball, maximal_acyclic_roots, TreeBall};
use crate::linalg::{conjugate_gradient, lp_norm, lp_norm_pow, norm2, CgReport};
use crate::spread::{best_k_sparse_error, compressible_to_distortion_bound};

/// Above this many columns the projection uses CG instead of a dense QR.
pub const DENSE_PROJECTION_MAX_N: usize = 512;

/// The signed tree vector of a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeVector {
    pub x: SparseVector,
    pub ball: TreeBall,
    /// `x` times `(s-1)^ℓ`, exactly, in the order of `x`'s entries.
    pub scaled: Vec<i64>,
    pub scale: i64,
}

/// `(s-1)^ℓ` as an exact integer.
pub fn tree_scale(s: usize, ell: usize) -> Result<i64> {
    i64::try_from(s.saturating_sub(1))
        .ok()
        .and_then(|b| b.checked_pow(ell as u32))
        .ok_or(Error::BudgetExceeded {
            what: "tree vector scale (s-1)^ell",
            needed: (s as u128).saturating_sub(1).saturating_pow(ell as u32),
            budget: i64::MAX as u128,
        })
}

/// Closed form `‖x‖_p^p = 1 + Σ_{k=1}^{ℓ} t(t-1)^{k-1}(s-1)^{(1-p)k}`.
pub fn predicted_tree_norm_pow(t: usize, s: usize, ell: usize, p: f64) -> f64 {
    let mut total = 1.0;
    for k in 1..=ell {
        let k = k as i32;
        total += t as f64 * ((t - 1) as f64).powi(k - 1) * ((s - 1) as f64).powf((1.0 - p) * k as f64);
    }
    total
}

impl TreeVector {
    pub fn ell(&self) -> usize {
        self.ball.ell()
    }

    /// `t(t-1)^ℓ(s-1)^{(1-p)ℓ}`.
    pub fn predicted_image_norm_pow(&self, p: f64) -> f64 {
        crate::graph::tree::predicted_image_norm_pow(self.ball.t(), self.ball.s(), self.ell(), p)
    }

    pub fn predicted_norm_pow(&self, p: f64) -> f64 {
        predicted_tree_norm_pow(self.ball.t(), self.ball.s(), self.ell(), p)
    }

    /// `Ax` restricted to the ball's right vertices, in exact scaled integers:
    /// returns `(max |·| over internal right vertices, leaf values)`.
    pub fn scaled_image(&self, a: &SignedMatrix) -> (i64, Vec<i64>) {
        let g = a.graph();
        let value: HashMap<usize, i64> = self
            .x
            .entries()
            .iter()
            .zip(&self.scaled)
            .map(|(&(u, _), &v)| (u, v))
            .collect();
        let row = |r: usize| -> i64 {
            g.right_edges(r)
                .iter()
                .map(|&e| i64::from(a.sign(e)) * value.get(&g.edge(e).0).copied().unwrap_or(0))
                .sum()
        };
        let internal = self.ball.internal_right().map(|r| row(r).abs()).max().unwrap_or(0);
        let leaves = self.ball.leaf_right().iter().map(|&r| row(r)).collect();
        (internal, leaves)
    }
}

/// Tree vector on `ball`: `+1` at the root and
/// `x_v = Π sign(u_{i-1},r_i)·sign(u_i,r_i)·(−1)/(s−1)` along the root path.
pub fn build_tree_vector(a: &SignedMatrix, ball: &TreeBall) -> Result<TreeVector> {
    ball.validate(a.graph())?;
    let g = a.graph();
    let s = ball.s() as i64;
    let scale = tree_scale(ball.s(), ball.ell())?;
    let mut entries: Vec<(usize, i64)> = vec![(ball.root(), scale)];
    let mut level = vec![scale];
    for k in 0..ball.ell() {
        let d_right = 2 * k + 1;
        let d_left = 2 * k + 2;
        let mut next = Vec::with_capacity(ball.layer(d_left).len());
        for (i, &v) in ball.layer(d_left).iter().enumerate() {
            let ri = ball.parent_pos(d_left)[i];
            let ui = ball.parent_pos(d_right)[ri];
            let up = i64::from(a.sign(ball.parent_edge(d_right)[ri]));
            let down = i64::from(a.sign(ball.parent_edge(d_left)[i]));
            let val = -level[ui] * up * down / (s - 1);
            debug_assert_eq!(g.edge(ball.parent_edge(d_left)[i]).0, v);
            next.push(val);
            entries.push((v, val));
        }
        level = next;
    }
    entries.sort_unstable_by_key(|&(u, _)| u);
    let scaled: Vec<i64> = entries.iter().map(|&(_, v)| v).collect();
    let x = SparseVector::new(
        g.n_left(),
        entries.iter().map(|&(u, v)| (u, v as f64 / scale as f64)).collect(),
    )?;
    Ok(TreeVector {
        x,
        ball: ball.clone(),
        scaled,
        scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMethod {
    DenseQr,
    Cg,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub y: Vec<f64>,
    /// `‖x − y‖₂`.
    pub gap: f64,
    /// `‖Ay‖₂ / ‖y‖₂`.
    pub residual: f64,
    pub method: ProjectionMethod,
    pub cg: Option<CgReport>,
}

/// Orthogonal projection of `x` onto `ker(A)`:
/// `y = x − Aᵀ(AAᵀ)^{-1}Ax`.
///
/// Dense Householder QR of `Aᵀ` for `n ≤ 512`, conjugate gradients on `AAᵀ`
/// otherwise. The CG tolerance is tightened until `‖Ay‖₂ ≤ tol·‖y‖₂`.
pub fn project_to_kernel(a: &SignedMatrix, x: &[f64], tol: f64) -> Result<Projection> {
    let ax = a.apply(x)?;
    if a.cols() <= DENSE_PROJECTION_MAX_N {
        return project_dense(a, x);
    }
    let (m, n) = (a.rows(), a.cols());
    let scratch = std::cell::RefCell::new(vec![0.0; n]);
    let op = |z: &[f64], out: &mut [f64]| a.gram_apply(z, &mut scratch.borrow_mut(), out);
    let ax_norm = norm2(&ax);
    let mut cg_tol = tol;
    for _ in 0..4 {
        let (z, report) = conjugate_gradient(&op, &ax, cg_tol, 20 * m + 100)?;
        let atz = a.apply_transpose(&z)?;
        let y: Vec<f64> = x.iter().zip(&atz).map(|(xi, wi)| xi - wi).collect();
        let y_norm = norm2(&y);
        if y_norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        let residual = norm2(&a.apply(&y)?) / y_norm;
        if residual <= tol {
            let gap = norm2(&atz);
            return Ok(Projection {
                y,
                gap,
                residual,
                method: ProjectionMethod::Cg,
                cg: Some(report),
            });
        }
        // ‖Ay‖ tracks the CG residual, which is relative to ‖Ax‖
        cg_tol = (tol * y_norm / ax_norm).min(cg_tol / 10.0);
    }
    Err(Error::NoConvergence {
        iterations: 4,
        residual: f64::NAN,
    })
}

fn project_dense(a: &SignedMatrix, x: &[f64]) -> Result<Projection> {
    let at = a.to_dense().transpose();
    let (n, m) = at.shape();
    let qr = at.qr();
    let r = qr.r();
    let diag_max = (0..m).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if let Some(i) = (0..m).find(|&i| r[(i, i)].abs() <= 1e-10 * diag_max.max(1.0)) {
        return Err(Error::RankDeficient(format!(
            "R[{i},{i}] = {:e} in the QR factor of A^T",
            r[(i, i)]
        )));
    }
    let q = qr.q();
    let xv = DMatrix::from_column_slice(n, 1, x);
    let coeff = q.transpose() * &xv;
    let row_part = &q * coeff;
    let y: Vec<f64> = (0..n).map(|i| x[i] - row_part[(i, 0)]).collect();
    let y_norm = norm2(&y);
    let residual = if y_norm == 0.0 {
        0.0
    } else {
        norm2(&a.apply(&y)?) / y_norm
    };
    Ok(Projection {
        gap: row_part.norm(),
        y,
        residual,
        method: ProjectionMethod::DenseQr,
        cg: None,
    })
}

/// A kernel vector close to a sparse vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressibleWitness {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub t: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    pub ell: usize,
    pub root: usize,
    pub k: usize,
    /// `‖x−y‖₂ / (‖x‖₂ − ‖x−y‖₂)`; `y` is `(k, ε)`-ℓ2-compressible.
    pub epsilon: f64,
    pub p: f64,
    pub residual: f64,
    pub gap: f64,
    pub tree_norm: f64,
    pub tree_image_norm: f64,
    /// Lower bound on `Δ_{1,2}(y)`.
    pub distortion_lower_bound: f64,
    /// Support of the sparse approximant (the ball's left vertices).
    pub support: Vec<usize>,
    /// The kernel vector `y`, all `n` coordinates.
    pub values: Vec<f64>,
}

impl CompressibleWitness {
    /// Re-derives the witness claims from `values` alone: returns
    /// `(best k-term ℓ2 error, ok)`.
    pub fn recheck(&self) -> Result<(f64, bool)> {
        let err = best_k_sparse_error(&self.values, self.k, 2.0)?.error;
        Ok((err, err <= self.epsilon * (1.0 + 1e-12)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackOptions {
    /// Cap on `ℓ`.
    pub max_ell: usize,
    /// Kernel residual target.
    pub tol: f64,
    /// How many roots attaining the largest `ℓ` to try (best `ε` wins).
    pub candidates: usize,
}

impl Default for AttackOptions {
    fn default() -> Self {
        AttackOptions {
            max_ell: 8,
            tol: 1e-10,
            candidates: 1,
        }
    }
}

/// Witness from a given ball.
pub fn attack_ball(a: &SignedMatrix, ball: &TreeBall, tol: f64) -> Result<CompressibleWitness> {
    let tv = build_tree_vector(a, ball)?;
    let x = tv.x.to_dense();
    let proj = project_to_kernel(a, &x, tol)?;
    let x_norm = norm2(&x);
    if proj.gap >= x_norm {
        return Err(Error::AttackFailed(format!(
            "projection gap {} is not below |x| = {x_norm}",
            proj.gap
        )));
    }
    let n = a.cols();
    let k = tv.x.nnz();
    let epsilon = proj.gap / (x_norm - proj.gap);
    Ok(CompressibleWitness {
        n,
        m: a.rows(),
        s: ball.s(),
        t: ball.t(),
        seed: None,
        ell: ball.ell(),
        root: ball.root(),
        k,
        epsilon,
        p: 2.0,
        residual: proj.residual,
        gap: proj.gap,
        tree_norm: x_norm,
        tree_image_norm: norm2(&a.apply(&x)?),
        distortion_lower_bound: compressible_to_distortion_bound(k, n, epsilon, 1.0, 2.0),
        support: tv.x.support(),
        values: proj.y,
    })
}

/// Largest acyclic ball, its tree vector, and the kernel projection.
pub fn attack(a: &SignedMatrix, max_ell: usize, tol: f64) -> Result<CompressibleWitness> {
    attack_with(
        a,
        &AttackOptions {
            max_ell,
            tol,
            ..AttackOptions::default()
        },
    )
}

pub fn attack_with(a: &SignedMatrix, opts: &AttackOptions) -> Result<CompressibleWitness> {
    let g = a.graph();
    let t = g
        .left_regular_degree()
        .ok_or_else(|| Error::InvalidParams("matrix is not column-regular".into()))?;
    let s = g.max_right_degree();
    let as_failure = |e: Error| match e {
        Error::NotFound(msg) => Error::AttackFailed(format!("no acyclic ball: {msg}")),
        other => other,
    };
    let candidates = opts.candidates.max(1);
    if candidates == 1 {
        let ball = find_acyclic_ball(g, t, s, opts.max_ell).map_err(as_failure)?;
        return attack_ball(a, &ball, opts.tol);
    }
    let (ell, roots) = maximal_acyclic_roots(g, t, s, opts.max_ell).map_err(as_failure)?;
    let mut best: Option<CompressibleWitness> = None;
    for &root in roots.iter().take(candidates) {
        let ball = TreeBall::from_root(g, root, ell, t, s)?;
        let w = attack_ball(a, &ball, opts.tol)?;
        if best.as_ref().is_none_or(|b| w.epsilon < b.epsilon) {
            best = Some(w);
        }
    }
    best.ok_or_else(|| Error::AttackFailed("no candidate ball".into()))
}

/// Tree vector with its exact `‖Ax‖_p/‖x‖_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpRatioWitness {
    pub x: SparseVector,
    pub p: f64,
    pub ratio: f64,
    /// `t^{1/p}(α(s−1)^{2−p})^{ℓ/p}` with `α = t/s`.
    pub bound: f64,
    /// Whether `(s−1)^{2−p} ≤ 1/((1+ε)α)`, where the bound decays in `ℓ`.
    pub decaying: bool,
}

/// The tree vector as an `ℓ_p` witness, `1 ≤ p ≤ 2`.
pub fn lp_ratio_witness(a: &SignedMatrix, ball: &TreeBall, p: f64, eps: f64) -> Result<LpRatioWitness> {
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::InvalidParams(format!("p = {p} outside [1, 2]")));
    }
    let tv = build_tree_vector(a, ball)?;
    let x = tv.x.to_dense();
    let ax = a.apply(&x)?;
    let ratio = lp_norm(&ax, p) / lp_norm(&x, p);
    let (t, s, ell) = (ball.t() as f64, ball.s() as f64, ball.ell() as f64);
    let alpha = t / s;
    let base = alpha * (s - 1.0).powf(2.0 - p);
    Ok(LpRatioWitness {
        x: tv.x,
        p,
        ratio,
        bound: t.powf(1.0 / p) * base.powf(ell / p),
        decaying: (s - 1.0).powf(2.0 - p) <= 1.0 / ((1.0 + eps) * alpha),
    })
}

/// `(‖Ax‖_p^p, ‖x‖_p^p)` via the sparse product.
pub fn measured_norm_pows(a: &SignedMatrix, tv: &TreeVector, p: f64) -> Result<(f64, f64)> {
    let ax = a.apply_sparse(&tv.x)?;
    let vals: Vec<f64> = tv.x.entries().iter().map(|&(_, v)| v).collect();
    Ok((lp_norm_pow(&ax, p), lp_norm_pow(&vals, p)))
}
