//! Small numerical kernels shared by the attack and spectral modules.
//!
//! All reductions go through [`pairwise_sum_by`] so that results do not depend
//! on how work might later be split across threads.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise (cascade) summation of `f(lo..hi)`.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    if hi - lo <= PAIRWISE_BLOCK {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    pairwise_sum_by(lo, mid, f) + pairwise_sum_by(mid, hi, f)
}

pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise_sum_by(0, values.len(), &|i| values[i])
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    pairwise_sum_by(0, a.len(), &|i| a[i] * b[i])
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `|v|^p`, with cheap paths for the exponents used throughout.
#[inline]
pub fn abs_pow(v: f64, p: f64) -> f64 {
    let a = v.abs();
    if p == 1.0 {
        a
    } else if p == 2.0 {
        a * a
    } else if p == 1.5 {
        a * a.sqrt()
    } else {
        a.powf(p)
    }
}

/// `‖v‖_p^p` for finite `p`.
pub fn lp_norm_pow(v: &[f64], p: f64) -> f64 {
    pairwise_sum_by(0, v.len(), &|i| abs_pow(v[i], p))
}

/// `‖v‖_p`, `p = ∞` allowed.
pub fn lp_norm(v: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    } else if p == 2.0 {
        norm2(v)
    } else {
        lp_norm_pow(v, p).powf(1.0 / p)
    }
}

/// `1/p` with the convention `1/∞ = 0`.
#[inline]
pub fn inv_exponent(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradients for a symmetric positive (semi)definite operator.
///
/// Stops when `‖b − Kx‖ ≤ tol·‖b‖`. A non-positive curvature `pᵀKp` is
/// reported as [`Error::RankDeficient`].
pub fn conjugate_gradient<K>(
    op: K,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, CgReport)>
where
    K: Fn(&[f64], &mut [f64]),
{
    let dim = b.len();
    let mut x = vec![0.0; dim];
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok((
            x,
            CgReport {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut kp = vec![0.0; dim];
    let mut rr = dot(&r, &r);
    for iter in 0..max_iter {
        let rel = rr.sqrt() / b_norm;
        if rel <= tol {
            return Ok((
                x,
                CgReport {
                    iterations: iter,
                    relative_residual: rel,
                },
            ));
        }
        op(&p, &mut kp);
        let curvature = dot(&p, &kp);
        let pp = dot(&p, &p);
        if !(curvature > 1e-14 * pp) {
            return Err(Error::RankDeficient(format!(
                "CG curvature {curvature:e} at iteration {iter} (|p|^2 = {pp:e})"
            )));
        }
        let alpha = rr / curvature;
        for i in 0..dim {
            x[i] += alpha * p[i];
            r[i] -= alpha * kp[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..dim {
            p[i] = r[i] + beta * p[i];
        }
    }
    let rel = rr.sqrt() / b_norm;
    if rel <= tol {
        Ok((
            x,
            CgReport {
                iterations: max_iter,
                relative_residual: rel,
            },
        ))
    } else {
        Err(Error::NoConvergence {
            iterations: max_iter,
            residual: rel,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosExtremes {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    /// Residual bounds `β_j |s_j|` of the two extreme Ritz pairs.
    pub min_residual: f64,
    pub max_residual: f64,
}

/// Extreme eigenvalues of a symmetric operator by Lanczos with full
/// reorthogonalization.
///
/// Converges when each extreme Ritz residual is below `tol·|θ|` (or below
/// `tol·θ_max` for a near-zero minimum).
pub fn lanczos_extremes<K>(
    dim: usize,
    op: K,
    seed: u64,
    tol: f64,
    max_steps: usize,
) -> Result<LanczosExtremes>
where
    K: Fn(&[f64], &mut [f64]),
{
    if dim == 0 {
        return Err(Error::InvalidParams("empty operator".into()));
    }
    let max_steps = max_steps.min(dim).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    let n0 = norm2(&q);
    q.iter_mut().for_each(|v| *v /= n0);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_steps);
    let mut alphas: Vec<f64> = Vec::with_capacity(max_steps);
    let mut betas: Vec<f64> = Vec::with_capacity(max_steps);
    let mut w = vec![0.0; dim];
    let mut last = None;

    for j in 0..max_steps {
        op(&q, &mut w);
        let alpha = dot(&q, &w);
        for i in 0..dim {
            w[i] -= alpha * q[i];
        }
        if let Some(prev) = basis.last() {
            let b = *betas.last().unwrap();
            for i in 0..dim {
                w[i] -= b * prev[i];
            }
        }
        basis.push(std::mem::take(&mut q));
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                for i in 0..dim {
                    w[i] -= c * v[i];
                }
            }
        }
        alphas.push(alpha);
        let beta = norm2(&w);
        let steps = j + 1;
        let check = steps == max_steps || steps % 8 == 0 || beta <= 1e-13 * alpha.abs().max(1.0);
        if check {
            let ext = tridiagonal_extremes(&alphas, &betas, beta);
            let scale = ext.max.abs().max(ext.min.abs()).max(f64::MIN_POSITIVE);
            let min_ok = ext.min_residual <= tol * ext.min.abs().max(tol * scale);
            let max_ok = ext.max_residual <= tol * ext.max.abs().max(tol * scale);
            let ext = LanczosExtremes { steps, ..ext };
            if (min_ok && max_ok) || beta <= 1e-13 * scale || steps == dim {
                return Ok(ext);
            }
            last = Some(ext);
        }
        betas.push(beta);
        q = w.iter().map(|v| v / beta).collect();
    }
    let ext = last.expect("at least one Ritz check happens at max_steps");
    Err(Error::NoConvergence {
        iterations: ext.steps,
        residual: ext.min_residual.max(ext.max_residual),
    })
}

fn tridiagonal_extremes(alphas: &[f64], betas: &[f64], next_beta: f64) -> LanczosExtremes {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (mut imin, mut imax) = (0, 0);
    for i in 0..k {
        if eig.eigenvalues[i] < eig.eigenvalues[imin] {
            imin = i;
        }
        if eig.eigenvalues[i] > eig.eigenvalues[imax] {
            imax = i;
        }
    }
    LanczosExtremes {
        min: eig.eigenvalues[imin],
        max: eig.eigenvalues[imax],
        steps: k,
        min_residual: next_beta * eig.eigenvectors[(k - 1, imin)].abs(),
        max_residual: next_beta * eig.eigenvectors[(k - 1, imax)].abs(),
    }
}

/// Ascending eigenvalues of a dense symmetric matrix.
pub fn symmetric_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Binomial coefficient saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order; stops early
/// when `f` returns `false`.
pub fn for_each_subset<F: FnMut(&[usize]) -> bool>(n: usize, k: usize, mut f: F) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    'outer: loop {
        if !f(&idx) {
            return;
        }
        let mut i = k;
        while i > 0 {
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                continue 'outer;
            }
        }
        return;
    }
}
