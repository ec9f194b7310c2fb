//! Compressibility, spread and distortion of vectors, and the conversions
//! between spread, distortion and RIP parameters.
//!
//! `p = ∞` is the max-norm, with `1/p = 0` in every exponent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inv_exponent, lp_norm};

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("norm exponent must be >= 1, got {p}")))
    }
}

fn check_qp(q: f64, p: f64) -> Result<()> {
    check_p(q)?;
    if q < p {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("need 1 <= q < p, got q={q}, p={p}")))
    }
}

/// A `(k, ε)` question about `ℓ_p` compressibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadQuery {
    pub p: f64,
    pub k: usize,
    pub epsilon: f64,
}

impl SpreadQuery {
    pub fn new(p: f64, k: usize, epsilon: f64, n: usize) -> Result<Self> {
        check_p(p)?;
        if k == 0 || k > n {
            return Err(Error::InvalidParams(format!("need 1 <= k <= n (k={k}, n={n})")));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidParams(format!("epsilon {epsilon} not in [0, 1]")));
        }
        Ok(SpreadQuery { p, k, epsilon })
    }

    /// True if some `k`-sparse vector is within `ε‖x‖_p` of `x`.
    pub fn is_compressible(&self, x: &[f64]) -> Result<bool> {
        Ok(best_k_sparse_error(x, self.k, self.p)?.error <= self.epsilon)
    }
}

/// Best `k`-term approximation error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseApprox {
    /// `min ‖x−y‖_p / ‖x‖_p` over `k`-sparse `y`.
    pub error: f64,
    /// The kept coordinates, in increasing order.
    pub support: Vec<usize>,
}

/// Indices of the `k` largest magnitudes, ties to the smaller index, sorted.
pub fn top_k_support(x: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// Relative `ℓ_p` distance from `x` to the nearest `k`-sparse vector, which
/// keeps the `k` largest coordinates.
pub fn best_k_sparse_error(x: &[f64], k: usize, p: f64) -> Result<SparseApprox> {
    check_p(p)?;
    if k == 0 || k > x.len() {
        return Err(Error::InvalidParams(format!(
            "need 1 <= k <= n (k={k}, n={})",
            x.len()
        )));
    }
    let norm = lp_norm(x, p);
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let support = top_k_support(x, k);
    let mut tail = x.to_vec();
    for &i in &support {
        tail[i] = 0.0;
    }
    Ok(SparseApprox {
        error: lp_norm(&tail, p) / norm,
        support,
    })
}

/// `Δ_{q,p}(x)` with its exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionValue {
    pub q: f64,
    pub p: f64,
    pub value: f64,
}

/// `Δ_{q,p}(x) = ‖x‖_p n^{1/q−1/p} / ‖x‖_q`, always in `[1, n^{1/q−1/p}]`.
pub fn distortion(x: &[f64], q: f64, p: f64) -> Result<DistortionValue> {
    check_qp(q, p)?;
    let nq = lp_norm(x, q);
    if nq == 0.0 {
        return Err(Error::ZeroVector);
    }
    let expo = inv_exponent(q) - inv_exponent(p);
    let cap = (x.len() as f64).powf(expo);
    let value = lp_norm(x, p) * cap / nq;
    debug_assert!(
        value >= 1.0 - 1e-12 && value <= cap * (1.0 + 1e-12),
        "distortion {value} outside [1, {cap}]"
    );
    Ok(DistortionValue { q, p, value })
}

/// Lower bound `1/((k/n)^{1/q−1/p} + ε)` on `Δ_{q,p}(x)` for any
/// `(k, ε)`-`ℓ_p`-compressible `x`.
pub fn compressible_to_distortion_bound(k: usize, n: usize, eps: f64, q: f64, p: f64) -> f64 {
    let ratio = k as f64 / n as f64;
    1.0 / (ratio.powf(inv_exponent(q) - inv_exponent(p)) + eps)
}

/// `(n/k)^{1/q} / Δ_{q,p}(x)`: every `x` is `(k, ·)`-`ℓ_p`-compressible at
/// this level.
pub fn distortion_to_compressibility(x: &[f64], k: usize, q: f64, p: f64) -> Result<f64> {
    if k == 0 || k > x.len() {
        return Err(Error::InvalidParams(format!(
            "need 1 <= k <= n (k={k}, n={})",
            x.len()
        )));
    }
    let d = distortion(x, q, p)?;
    let ratio = x.len() as f64 / k as f64;
    Ok(ratio.powf(inv_exponent(q)) / d.value)
}

/// `ε′ = (1−ε)/(2 + ε(1 + (2n/k)^{1−1/p}))`: the kernel of a `(k, ε)`-`ℓ_p`-RIP
/// matrix is `(k, ε′)`-`ℓ_p`-spread.
pub fn rip_to_spread_params(k: usize, eps: f64, p: f64, n: usize) -> f64 {
    let growth = (2.0 * n as f64 / k as f64).powf(1.0 - inv_exponent(p));
    (1.0 - eps) / (2.0 + eps * (1.0 + growth))
}

/// `ε_q = ε²(k/n)^{1/q}`: a `(2k, ε)`-`ℓ_p`-spread subspace is
/// `(k, ε_q)`-`ℓ_q`-spread for `q < p`.
pub fn p_spread_to_q_spread(k: usize, eps: f64, p: f64, q: f64, n: usize) -> f64 {
    debug_assert!(q < p);
    eps * eps * (k as f64 / n as f64).powf(inv_exponent(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::for_each_subset;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_error(x: &[f64], k: usize, p: f64) -> f64 {
        let norm = lp_norm(x, p);
        let mut best = f64::INFINITY;
        for_each_subset(x.len(), k, |s| {
            let tail: Vec<f64> = (0..x.len()).map(|i| if s.contains(&i) { 0.0 } else { x[i] }).collect();
            best = best.min(lp_norm(&tail, p) / norm);
            true
        });
        best
    }

    #[test]
    fn basis_vector_is_exactly_sparse() {
        let x = [0.0, 1.0, 0.0, 0.0];
        let a = best_k_sparse_error(&x, 1, 2.0).unwrap();
        assert_eq!(a.error, 0.0);
        assert_eq!(a.support, vec![1]);
    }

    #[test]
    fn all_ones_one_term() {
        let a = best_k_sparse_error(&[1.0; 4], 1, 2.0).unwrap();
        assert!((a.error - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(a.support, vec![0]);
    }

    #[test]
    fn matches_support_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
            for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
                for k in 1..=4 {
                    let e = best_k_sparse_error(&x, k, p).unwrap().error;
                    assert!((e - brute_error(&x, k, p)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_and_bad_k() {
        assert!(matches!(best_k_sparse_error(&[0.0; 3], 1, 2.0), Err(Error::ZeroVector)));
        assert!(best_k_sparse_error(&[1.0; 3], 0, 2.0).is_err());
        assert!(best_k_sparse_error(&[1.0; 3], 4, 2.0).is_err());
        assert!(best_k_sparse_error(&[1.0; 3], 1, 0.5).is_err());
    }

    #[test]
    fn distortion_extremes() {
        assert!((distortion(&[3.0; 7], 1.0, 2.0).unwrap().value - 1.0).abs() < 1e-14);
        let mut e = vec![0.0; 16];
        e[0] = 1.0;
        assert!((distortion(&e, 1.0, 2.0).unwrap().value - 4.0).abs() < 1e-14);
        assert!((distortion(&e, 1.0, f64::INFINITY).unwrap().value - 16.0).abs() < 1e-12);
        assert!(distortion(&e, 2.0, 2.0).is_err());
    }

    #[test]
    fn conversion_formulas() {
        assert!((compressible_to_distortion_bound(8, 8, 0.3, 1.0, 2.0) - 1.0 / 1.3).abs() < 1e-15);
        assert!((compressible_to_distortion_bound(4, 64, 0.0, 1.0, 2.0) - 4.0).abs() < 1e-14);
        assert!((rip_to_spread_params(5, 1e-12, 2.0, 10) - 0.5).abs() < 1e-10);
        assert!((rip_to_spread_params(3, 0.2, 1.0, 10) - 0.8 / 2.4).abs() < 1e-15);
        assert!((rip_to_spread_params(8, 0.25, 2.0, 16) - 0.75 / 2.75).abs() < 1e-15);
        assert_eq!(p_spread_to_q_spread(16, 1.0, 2.0, 1.0, 16), 1.0);
        assert!((p_spread_to_q_spread(4, 0.5, 2.0, 1.0, 64) - 0.015625).abs() < 1e-17);
    }

    #[test]
    fn q_spread_monotone_in_inverse_q() {
        let mut prev = 0.0;
        for q in [1.0, 1.25, 1.5, 1.75, 1.99] {
            let v = p_spread_to_q_spread(3, 0.7, 2.0, q, 20);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn query_validation() {
        assert!(SpreadQuery::new(2.0, 0, 0.1, 5).is_err());
        assert!(SpreadQuery::new(2.0, 1, 1.5, 5).is_err());
        let q = SpreadQuery::new(2.0, 1, 0.5, 4).unwrap();
        assert!(!q.is_compressible(&[1.0; 4]).unwrap());
        assert!(q.is_compressible(&[1.0, 0.1, 0.0, 0.0]).unwrap());
    }
}
