use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ensemble::SignedMatrix;
use crate::error::{Error, Result};
use crate::linalg::{lanczos_extremes, symmetric_eigenvalues};

/// Largest `min(m, n)` for which the dense method is allowed.
pub const DENSE_MAX_DIM: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumMethod {
    Dense,
    Iterative,
}

/// Extreme singular values against the band `√(s−1) ± √(t−1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub method: SpectrumMethod,
    /// `√(s−1)`.
    pub band_center: f64,
    /// `√(t−1)`.
    pub band_radius_unit: f64,
    /// `max |σ − √(s−1)| / √(t−1)` over the two extremes.
    pub slack: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lanczos_steps: Option<usize>,
}

impl SpectrumReport {
    fn new(sigma_min: f64, sigma_max: f64, s: usize, t: usize, method: SpectrumMethod, steps: Option<usize>) -> Self {
        let c = ((s as f64) - 1.0).max(0.0).sqrt();
        let u = ((t as f64) - 1.0).max(0.0).sqrt();
        let dev = (sigma_min - c).abs().max((sigma_max - c).abs());
        SpectrumReport {
            sigma_min,
            sigma_max,
            method,
            band_center: c,
            band_radius_unit: u,
            slack: if u > 0.0 { dev / u } else { f64::INFINITY },
            lanczos_steps: steps,
        }
    }
}

/// Gram matrix on the smaller side: `AAᵀ` if `m ≤ n`, else `AᵀA`.
pub fn small_gram(a: &SignedMatrix) -> DMatrix<f64> {
    let d = a.to_dense();
    if a.rows() <= a.cols() {
        &d * d.transpose()
    } else {
        d.transpose() * &d
    }
}

/// All `min(m, n)` singular values, ascending.
pub fn singular_values_dense(a: &SignedMatrix) -> Vec<f64> {
    symmetric_eigenvalues(small_gram(a))
        .into_iter()
        .map(|l| l.max(0.0).sqrt())
        .collect()
}

/// Row and column degrees `(s, t)`; the maxima when not biregular.
fn degrees(a: &SignedMatrix) -> (usize, usize) {
    let g = a.graph();
    let t = (0..g.n_left()).map(|u| g.left_degree(u)).max().unwrap_or(0);
    (g.max_right_degree(), t)
}

/// Smallest and largest singular value (over the `min(m, n)` nontrivial
/// ones).
///
/// Dense: eigenvalues of the smaller Gram matrix. Iterative: Lanczos on the
/// same operator, each extreme to `tol` relative.
pub fn singular_extremes(a: &SignedMatrix, method: SpectrumMethod, tol: f64) -> Result<SpectrumReport> {
    let (s, t) = degrees(a);
    let (m, n) = (a.rows(), a.cols());
    let k = m.min(n);
    if k == 0 {
        return Err(Error::InvalidParams("empty matrix".into()));
    }
    match method {
        SpectrumMethod::Dense => {
            if k > DENSE_MAX_DIM {
                return Err(Error::BudgetExceeded {
                    what: "dense singular values (matrix side)",
                    needed: k as u128,
                    budget: DENSE_MAX_DIM as u128,
                });
            }
            let sv = singular_values_dense(a);
            Ok(SpectrumReport::new(sv[0], sv[k - 1], s, t, method, None))
        }
        SpectrumMethod::Iterative => {
            let rows_side = m <= n;
            let op = |z: &[f64], out: &mut [f64]| {
                if rows_side {
                    let mut tmp = vec![0.0; n];
                    a.apply_transpose_into(z, &mut tmp);
                    a.apply_into(&tmp, out);
                } else {
                    let mut tmp = vec![0.0; m];
                    a.apply_into(z, &mut tmp);
                    a.apply_transpose_into(&tmp, out);
                }
            };
            let ext = lanczos_extremes(k, op, 0x5eed, tol, k)?;
            Ok(SpectrumReport::new(
                ext.min.max(0.0).sqrt(),
                ext.max.max(0.0).sqrt(),
                s,
                t,
                method,
                Some(ext.steps),
            ))
        }
    }
}

/// Interval for `σ(A)` implied by `Spec(AAᵀ − sI) ⊆ [lo, hi]`, and the
/// resulting `ε′` in `σ(A) ⊆ √(s−1) ± (1+ε′)√(t−1)`.
pub fn sigma_band_from_m_interval(lo: f64, hi: f64, s: usize, t: usize) -> (f64, f64, f64) {
    let sf = s as f64;
    let sig_lo = (lo + sf).max(0.0).sqrt();
    let sig_hi = (hi + sf).max(0.0).sqrt();
    let c = (sf - 1.0).sqrt();
    let u = ((t as f64) - 1.0).sqrt();
    let eps = (c - sig_lo).max(sig_hi - c) / u - 1.0;
    (sig_lo, sig_hi, eps)
}

/// `t − 2 ± (2+ε)√((s−1)(t−1))`.
pub fn m_interval(s: usize, t: usize, eps: f64) -> (f64, f64) {
    let r = (2.0 + eps) * (((s - 1) * (t - 1)) as f64).sqrt();
    let c = t as f64 - 2.0;
    (c - r, c + r)
}
