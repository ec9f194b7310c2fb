//! ℓp restricted isometry from unique expansion, plus an empirical probe.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::{BipartiteGraph, SignedMatrix};
use crate::error::{Error, Result};
use crate::graph::degrees::bound_right_degrees;
use crate::graph::expansion::{
    max_set_size, verify_unique_expansion, ExpansionCertificate, ExpansionMode,
};
use crate::linalg::{binomial, for_each_subset, lp_norm, symmetric_eigenvalues};
use crate::spread::rip_to_spread_params;

/// Coefficients `(L, U)` with `L‖x‖_p^p ≤ ‖Ax‖_p^p ≤ U‖x‖_p^p` for every
/// `γn`-sparse `x`, given `(γ, μ)` unique expansion.
///
/// `L` can be zero or negative, in which case it says nothing.
pub fn rip_bounds_from_expansion(
    t: usize,
    s_max: usize,
    mu: f64,
    p: f64,
    delta1: f64,
    delta2: f64,
) -> Result<(f64, f64)> {
    if !(delta1 > 0.0) || !(delta2 > 0.0 && delta2 < 1.0) {
        return Err(Error::InvalidDelta(format!(
            "need delta1 > 0 and 0 < delta2 < 1 (delta1={delta1}, delta2={delta2})"
        )));
    }
    if p < 1.0 {
        return Err(Error::InvalidParams(format!("p = {p} < 1")));
    }
    let t = t as f64;
    if p == 1.0 {
        return Ok((t * (1.0 - 2.0 * mu), t * (1.0 + mu)));
    }
    let e = p - 1.0;
    let spill = mu * t * ((s_max as f64) - 1.0).max(0.0).powf(e);
    let lower = t * (1.0 - mu) / (1.0 + delta1).powf(e) - spill / delta1.powf(e);
    let upper = t / (1.0 - delta2).powf(e) + spill / delta2.powf(e);
    Ok((lower, upper))
}

/// Golden-section search for the `δ₁` maximizing the lower coefficient.
pub fn optimize_delta1(t: usize, s_max: usize, mu: f64, p: f64) -> Result<(f64, f64)> {
    golden(|d| rip_bounds_from_expansion(t, s_max, mu, p, d, 0.5).map(|b| b.0), 1e-9, 1e3, true)
}

/// Golden-section search for the `δ₂` minimizing the upper coefficient.
pub fn optimize_delta2(t: usize, s_max: usize, mu: f64, p: f64) -> Result<(f64, f64)> {
    golden(|d| rip_bounds_from_expansion(t, s_max, mu, p, 1.0, d).map(|b| b.1), 1e-9, 1.0 - 1e-9, false)
}

fn golden<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64, maximize: bool) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let key = |v: f64| if maximize { -v } else { v };
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (key(f(a)?), key(f(b)?));
    for _ in 0..200 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = key(f(a)?);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = key(f(b)?);
        }
    }
    let x = (lo + hi) / 2.0;
    Ok((x, f(x)?))
}

/// `(k, ε)`-ℓp-RIP with normalization `K`, derived from expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipCertificate {
    pub p: f64,
    pub k: usize,
    pub epsilon: f64,
    #[serde(rename = "K")]
    pub k_norm: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub s_max: usize,
    pub t: usize,
    /// Coefficients on `‖x‖_p^p` at the chosen `δ`s.
    pub lower_coeff: f64,
    pub upper_coeff: f64,
    pub source: ExpansionCertificate,
}

impl RipCertificate {
    /// `(K(1−ε), K(1+ε))`.
    pub fn ratio_bounds(&self) -> (f64, f64) {
        (self.k_norm * (1.0 - self.epsilon), self.k_norm * (1.0 + self.epsilon))
    }

    /// The `p`-th-root bounds implied directly by the coefficients, which
    /// are at least as tight as [`ratio_bounds`](Self::ratio_bounds).
    pub fn coefficient_ratio_bounds(&self) -> (f64, f64) {
        (
            self.lower_coeff.max(0.0).powf(1.0 / self.p),
            self.upper_coeff.powf(1.0 / self.p),
        )
    }
}

/// Certifies ℓp-RIP for `1 ≤ p < 2` with `δ₁ = δ₂ = ε/3` and `K = t^{1/p}`.
pub fn certify_rip(cert: &ExpansionCertificate, t: usize, s_max: usize, p: f64, eps: f64) -> Result<RipCertificate> {
    if !(1.0..2.0).contains(&p) {
        return Err(Error::InvalidParams(format!("p = {p} outside [1, 2)")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParams(format!("epsilon {eps} not in (0, 1]")));
    }
    if !cert.holds() {
        return Err(Error::PreconditionFailed(format!(
            "expansion certificate has counterexample {:?}",
            cert.counterexample.as_deref().unwrap_or(&[])
        )));
    }
    if cert.t != t {
        return Err(Error::InvalidParams(format!("certificate is for t = {}, not {t}", cert.t)));
    }
    if cert.mode == ExpansionMode::Sampled {
        return Err(Error::PreconditionFailed(
            "sampled expansion certificates are evidence only; verify exhaustively or assert".into(),
        ));
    }
    let need = 9.0 * cert.mu * (s_max as f64).powf(p - 1.0);
    if eps * eps < need {
        return Err(Error::PreconditionFailed(format!(
            "eps^2 >= 9 mu s_max^(p-1) fails: {} < 9*{}*{}^{} = {need}",
            eps * eps,
            cert.mu,
            s_max,
            p - 1.0
        )));
    }
    let d = eps / 3.0;
    let (lower_coeff, upper_coeff) = rip_bounds_from_expansion(t, s_max, cert.mu, p, d, d)?;
    let tf = t as f64;
    debug_assert!(lower_coeff >= (1.0 - eps) * tf * (1.0 - 1e-12));
    debug_assert!(upper_coeff <= (1.0 + eps) * tf * (1.0 + 1e-12));
    Ok(RipCertificate {
        p,
        k: cert.max_set_size_checked,
        epsilon: eps,
        k_norm: tf.powf(1.0 / p),
        delta1: d,
        delta2: d,
        s_max,
        t,
        lower_coeff,
        upper_coeff,
        source: cert.clone(),
    })
}

/// Smallest `ε` with `ε² ≥ 9μ s_max^{p−1}`, or `None` if it exceeds 1.
pub fn smallest_admissible_epsilon(mu: f64, s_max: usize, p: f64) -> Option<f64> {
    let need = 9.0 * mu * (s_max as f64).powf(p - 1.0);
    let mut e = need.sqrt();
    // the square must not round below `need`
    while e * e < need {
        e += e * f64::EPSILON;
    }
    (e <= 1.0).then_some(e.max(f64::MIN_POSITIVE))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeMode {
    ExhaustiveSupport,
    Sampled,
}

/// Empirical extremes of `‖Ax‖_p/‖x‖_p` over probed `k`-sparse `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipProbe {
    pub p: f64,
    pub k: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub mode: ProbeMode,
    pub supports_checked: u64,
    pub argmin_support: Vec<usize>,
    pub argmax_support: Vec<usize>,
    /// True when every support was solved exactly (`p = 2`, and `p = 1`
    /// with few enough rays).
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub mode: ProbeMode,
    /// Maximum number of supports (exhaustive) or number drawn (sampled).
    pub budget: u64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            mode: ProbeMode::ExhaustiveSupport,
            budget: 1 << 20,
            restarts: 64,
            seed: 0,
        }
    }
}

/// Column submatrix on a support, with rows equal up to sign merged into one
/// weighted row. `‖Bz‖_p^p` is unchanged for every `p`.
struct Compressed {
    k: usize,
    /// Row-major, `k` entries per row.
    rows: Vec<f64>,
    weights: Vec<f64>,
}

impl Compressed {
    fn apply(&self, z: &[f64]) -> Vec<f64> {
        self.rows
            .chunks_exact(self.k)
            .map(|r| r.iter().zip(z).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn norm_pow(&self, bz: &[f64], p: f64) -> f64 {
        bz.iter().zip(&self.weights).map(|(v, w)| w * v.abs().powf(p)).sum()
    }

    fn gram(&self) -> DMatrix<f64> {
        let k = self.k;
        let mut g = DMatrix::zeros(k, k);
        for (r, w) in self.rows.chunks_exact(k).zip(&self.weights) {
            for i in 0..k {
                for j in 0..k {
                    g[(i, j)] += w * r[i] * r[j];
                }
            }
        }
        g
    }
}

fn submatrix(a: &SignedMatrix, support: &[usize]) -> Compressed {
    let g = a.graph();
    let k = support.len();
    let mut by_row: std::collections::BTreeMap<usize, Vec<i8>> = std::collections::BTreeMap::new();
    for (j, &u) in support.iter().enumerate() {
        for e in g.left_edges(u) {
            by_row.entry(g.edge(e).1).or_insert_with(|| vec![0; k])[j] = a.sign(e);
        }
    }
    let mut merged: std::collections::BTreeMap<Vec<i8>, f64> = std::collections::BTreeMap::new();
    for mut row in by_row.into_values() {
        if row.iter().find(|&&v| v != 0).is_some_and(|&v| v < 0) {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        *merged.entry(row).or_insert(0.0) += 1.0;
    }
    let mut rows = Vec::with_capacity(merged.len() * k);
    let mut weights = Vec::with_capacity(merged.len());
    for (row, w) in merged {
        rows.extend(row.iter().map(|&v| f64::from(v)));
        weights.push(w);
    }
    Compressed { k, rows, weights }
}

fn ratio(b: &Compressed, z: &[f64], p: f64) -> f64 {
    let num: f64 = b
        .rows
        .chunks_exact(b.k)
        .zip(&b.weights)
        .map(|(r, w)| w * r.iter().zip(z).map(|(a, x)| a * x).sum::<f64>().abs().powf(p))
        .sum();
    (num / crate::linalg::lp_norm_pow(z, p)).powf(1.0 / p)
}

fn normalize(z: &mut [f64], p: f64) -> bool {
    let n = lp_norm(z, p);
    if n == 0.0 || !n.is_finite() {
        return false;
    }
    z.iter_mut().for_each(|v| *v /= n);
    true
}

/// Local descent on the ratio from `z` (`sign = 1` minimizes, `−1`
/// maximizes): gradient steps with backtracking, then compass moves along
/// `±e_i` and `±e_i ± e_j` with a shrinking step.
fn descend(b: &Compressed, mut z: Vec<f64>, p: f64, sign: f64) -> (f64, Vec<f64>) {
    let k = z.len();
    normalize(&mut z, p);
    let obj = |z: &[f64]| sign * ratio(b, z, p);
    let mut f = obj(&z);
    let mut step = 0.5;
    for _ in 0..400 {
        let bz = b.apply(&z);
        let num = b.norm_pow(&bz, p);
        let den = crate::linalg::lp_norm_pow(&z, p);
        let mut btw = vec![0.0; k];
        for ((r, v), wt) in b.rows.chunks_exact(k).zip(&bz).zip(&b.weights) {
            let w = wt * v.signum() * v.abs().powf(p - 1.0);
            btw.iter_mut().zip(r).for_each(|(acc, a)| *acc += a * w);
        }
        let grad: Vec<f64> = (0..k)
            .map(|i| sign * (btw[i] / num.max(1e-300) - z[i].signum() * z[i].abs().powf(p - 1.0) / den))
            .collect();
        let gn = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gn < 1e-14 {
            break;
        }
        let mut moved = false;
        while step > 1e-12 {
            let mut cand: Vec<f64> = z.iter().zip(&grad).map(|(zi, gi)| zi - step * gi / gn).collect();
            if normalize(&mut cand, p) {
                let fc = obj(&cand);
                if fc < f - 1e-15 {
                    z = cand;
                    moved = f - fc > 1e-13 * f.abs();
                    f = fc;
                    step *= 2.0;
                    break;
                }
            }
            step /= 2.0;
        }
        if !moved {
            break;
        }
    }
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..k {
        for si in [1.0, -1.0] {
            let mut d = vec![0.0; k];
            d[i] = si;
            dirs.push(d.clone());
            for j in i + 1..k {
                for sj in [1.0, -1.0] {
                    let mut dd = d.clone();
                    dd[j] = sj;
                    dirs.push(dd);
                }
            }
        }
    }
    let mut h = 0.25;
    let mut passes = 0;
    while h > 1e-10 && passes < 400 {
        passes += 1;
        let mut improved = false;
        for d in &dirs {
            let mut cand: Vec<f64> = z.iter().zip(d).map(|(zi, di)| zi + h * di).collect();
            if normalize(&mut cand, p) {
                let fc = obj(&cand);
                if fc < f - 1e-13 * f.abs() {
                    z = cand;
                    f = fc;
                    improved = true;
                }
            }
        }
        if !improved {
            h /= 2.0;
        }
    }
    (sign * f, z)
}

/// Largest number of candidate rays the exact `p = 1` path will visit.
const L1_RAY_CAP: u128 = 1 << 16;

/// Exact `p = 1` extremes. On each cell cut out by the hyperplanes `z_i = 0`
/// and `(Bz)_r = 0` the ratio is linear over linear, so both extremes sit on
/// a ray where `k − 1` independent hyperplanes meet. `None` when there are
/// too many candidate rays.
fn l1_extremes(b: &Compressed) -> Option<(f64, f64)> {
    let k = b.k;
    if k == 1 {
        let r = ratio(b, &[1.0], 1.0);
        return Some((r, r));
    }
    let mut normals: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut e = vec![0.0; k];
            e[i] = 1.0;
            e
        })
        .collect();
    normals.extend(
        b.rows
            .chunks_exact(k)
            .filter(|r| r.iter().filter(|v| **v != 0.0).count() > 1)
            .map(<[f64]>::to_vec),
    );
    if binomial(normals.len(), k - 1) > L1_RAY_CAP {
        return None;
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut minor = DMatrix::zeros(k - 1, k - 1);
    for_each_subset(normals.len(), k - 1, |pick| {
        // null vector of the picked rows by cofactor expansion
        let z: Vec<f64> = (0..k)
            .map(|drop| {
                for (i, &h) in pick.iter().enumerate() {
                    for (jj, j) in (0..k).filter(|&j| j != drop).enumerate() {
                        minor[(i, jj)] = normals[h][j];
                    }
                }
                let d = minor.clone().determinant().round();
                if drop % 2 == 0 {
                    d
                } else {
                    -d
                }
            })
            .collect();
        if z.iter().any(|v| *v != 0.0) {
            let r = ratio(b, &z, 1.0);
            lo = lo.min(r);
            hi = hi.max(r);
        }
        true
    });
    Some((lo, hi))
}

/// Extremes of the ratio on one support: `(min, max, exact)`.
fn support_extremes(
    a: &SignedMatrix,
    support: &[usize],
    p: f64,
    restarts: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, f64, bool) {
    let b = submatrix(a, support);
    if p == 2.0 {
        let ev = symmetric_eigenvalues(b.gram());
        return (ev[0].max(0.0).sqrt(), ev[ev.len() - 1].max(0.0).sqrt(), true);
    }
    if p == 1.0 {
        if let Some((lo, hi)) = l1_extremes(&b) {
            return (lo, hi, true);
        }
    }
    let k = support.len();
    let mut starts: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut e = vec![0.0; k];
            e[i] = 1.0;
            e
        })
        .collect();
    for _ in 0..restarts {
        starts.push((0..k).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect());
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for z in &starts {
        if z.iter().all(|v| *v == 0.0) {
            continue;
        }
        lo = lo.min(descend(&b, z.clone(), p, 1.0).0);
        hi = hi.max(descend(&b, z.clone(), p, -1.0).0);
    }
    (lo, hi, false)
}

/// Probes `‖Ax‖_p/‖x‖_p` over `k`-sparse `x`.
///
/// Supports of size exactly `min(k, n)` are enough: every smaller support
/// sits inside one. `p = 2` is exact via singular values and `p = 1` via
/// the rays of the sign arrangement (while there are at most 2^16 of them);
/// otherwise local descent runs from the coordinate vectors and `restarts`
/// random points.
pub fn probe_rip(a: &SignedMatrix, p: f64, k: usize, opts: &ProbeOptions) -> Result<RipProbe> {
    let n = a.cols();
    if k == 0 || k > n {
        return Err(Error::InvalidParams(format!("need 1 <= k <= n (k={k}, n={n})")));
    }
    if p < 1.0 {
        return Err(Error::InvalidParams(format!("p = {p} < 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut probe = RipProbe {
        p,
        k,
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        mode: opts.mode,
        supports_checked: 0,
        argmin_support: Vec::new(),
        argmax_support: Vec::new(),
        exact: p == 1.0 || p == 2.0,
    };
    let visit = |probe: &mut RipProbe, rng: &mut ChaCha8Rng, s: &[usize]| {
        let (lo, hi, exact) = support_extremes(a, s, p, opts.restarts, rng);
        probe.supports_checked += 1;
        probe.exact &= exact;
        if lo < probe.min_ratio {
            probe.min_ratio = lo;
            probe.argmin_support = s.to_vec();
        }
        if hi > probe.max_ratio {
            probe.max_ratio = hi;
            probe.argmax_support = s.to_vec();
        }
    };
    match opts.mode {
        ProbeMode::ExhaustiveSupport => {
            let total = binomial(n, k);
            if total > u128::from(opts.budget) {
                return Err(Error::BudgetExceeded {
                    what: "exhaustive RIP probe (number of supports)",
                    needed: total,
                    budget: u128::from(opts.budget),
                });
            }
            let mut inner = ChaCha8Rng::seed_from_u64(opts.seed);
            for_each_subset(n, k, |s| {
                visit(&mut probe, &mut inner, s);
                true
            });
        }
        ProbeMode::Sampled => {
            for _ in 0..opts.budget {
                let mut s = rand::seq::index::sample(&mut rng, n, k).into_vec();
                s.sort_unstable();
                let mut inner = ChaCha8Rng::seed_from_u64(rng.random());
                visit(&mut probe, &mut inner, &s);
            }
        }
    }
    Ok(probe)
}

/// Probe extremes outside the certified band `K(1±ε)`, with slack `tol`.
pub fn rip_violations(cert: &RipCertificate, probe: &RipProbe, tol: f64) -> Vec<String> {
    let (lo, hi) = cert.ratio_bounds();
    let mut out = Vec::new();
    if probe.min_ratio < lo - tol {
        out.push(format!(
            "min ratio {} below K(1-eps) = {lo} on support {:?}",
            probe.min_ratio, probe.argmin_support
        ));
    }
    if probe.max_ratio > hi + tol {
        out.push(format!(
            "max ratio {} above K(1+eps) = {hi} on support {:?}",
            probe.max_ratio, probe.argmax_support
        ));
    }
    out
}

/// Output of the explicit-expander pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    /// Unsigned adjacency matrix of the degree-bounded graph.
    #[serde(skip)]
    pub matrix: SignedMatrix,
    pub rows: usize,
    pub cols: usize,
    pub expansion: ExpansionCertificate,
    pub rip: RipCertificate,
    /// Kernel spread parameters `(k, ε′)` from the RIP-to-spread conversion.
    pub spread_k: usize,
    pub spread_epsilon: f64,
    /// `γ^{1−1/p}`, the headline spread scale.
    pub spread_scale: f64,
    /// `1/(γε′)` upper bound on the kernel's distortion.
    pub distortion_bound: f64,
}

/// Degree-bounds `g` (when it has no more right than left vertices), verifies the claimed `(γ, μ)` unique expansion
/// exhaustively within `budget` sets, and certifies ℓp-RIP of the 0/1
/// adjacency matrix.
///
/// With `alpha` given, the bounded graph must have at most `αn` right
/// vertices.
#[allow(clippy::too_many_arguments)]
pub fn explicit_pipeline(
    g: &BipartiteGraph,
    gamma: f64,
    mu: f64,
    alpha: Option<f64>,
    p: f64,
    eps: f64,
    budget: u64,
) -> Result<PipelineReport> {
    let t = g
        .left_regular_degree()
        .ok_or_else(|| Error::InvalidParams("expander is not left-regular".into()))?;
    // degree bounding needs |V_R| ≤ |V_L|; wider graphs are used as given
    let bounded = if g.n_right() <= g.n_left() {
        bound_right_degrees(g, t)?
    } else {
        g.clone()
    };
    let n = bounded.n_left();
    if let Some(alpha) = alpha {
        if bounded.n_right() as f64 > alpha * n as f64 + 1e-9 {
            return Err(Error::PreconditionFailed(format!(
                "{} rows after degree bounding exceeds alpha*n = {}",
                bounded.n_right(),
                alpha * n as f64
            )));
        }
    }
    let expansion = verify_unique_expansion(&bounded, t, gamma, mu, ExpansionMode::Exhaustive, budget)?;
    if let Some(set) = &expansion.counterexample {
        return Err(Error::PreconditionFailed(format!(
            "claimed ({gamma}, {mu}) unique expansion fails on {set:?}"
        )));
    }
    let s_max = bounded.max_right_degree();
    let rip = certify_rip(&expansion, t, s_max, p, eps)?;
    let spread_k = max_set_size(gamma, n).max(1);
    let spread_epsilon = rip_to_spread_params(spread_k, eps, p, n);
    Ok(PipelineReport {
        rows: bounded.n_right(),
        cols: n,
        matrix: SignedMatrix::all_positive(bounded),
        expansion,
        rip,
        spread_k,
        spread_epsilon,
        spread_scale: gamma.powf(1.0 - 1.0 / p),
        distortion_bound: 1.0 / (gamma * spread_epsilon),
    })
}

/// Constants of the weak ℓ2 lower bound for sparse vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakL2Constants {
    pub c1: f64,
    pub c2: f64,
    /// Exponent in the hypothesis `γn ≥ (1/μ)^c`.
    pub c_size: f64,
}

impl Default for WeakL2Constants {
    fn default() -> Self {
        WeakL2Constants {
            c1: 1.0 / (2.0 * std::f64::consts::SQRT_2),
            c2: 2.0,
            c_size: 1.0,
        }
    }
}

fn check_weak_hypotheses(gamma: f64, mu: f64, n: usize, c_size: f64) -> Result<()> {
    if !(mu > 0.0 && mu <= 2.0 / 9.0) {
        return Err(Error::HypothesisViolated(format!("need 0 < mu <= 2/9, got {mu}")));
    }
    if !(gamma > 0.0 && gamma <= 2.0 * mu) {
        return Err(Error::HypothesisViolated(format!("need 0 < gamma <= 2 mu, got gamma={gamma}, mu={mu}")));
    }
    let gn = gamma * n as f64;
    if gn < (1.0 / mu).powf(c_size) {
        return Err(Error::HypothesisViolated(format!(
            "need gamma*n >= (1/mu)^{c_size}, got {gn} < {}",
            (1.0 / mu).powf(c_size)
        )));
    }
    Ok(())
}

/// `c₁√t (√t/‖A‖₂)^{c₂ log(γn)/log(1/μ)}`.
pub fn weak_l2_bound(t: usize, gamma: f64, mu: f64, n: usize, a_opnorm: f64, consts: &WeakL2Constants) -> Result<f64> {
    check_weak_hypotheses(gamma, mu, n, consts.c_size)?;
    let st = (t as f64).sqrt();
    if a_opnorm < st * (1.0 - 1e-12) {
        return Err(Error::HypothesisViolated(format!(
            "operator norm {a_opnorm} is below sqrt(t) = {st}"
        )));
    }
    let expo = consts.c2 * (gamma * n as f64).ln() / (1.0 / mu).ln();
    Ok(consts.c1 * st * (st / a_opnorm).min(1.0).powf(expo))
}

/// The bound with every constant made explicit:
/// `β^{(M+1)/2}√t/(2√2)` with `β = t/(32‖A‖₂²)`, `b = ⌊1/(2μ)⌋` and `M` the
/// least integer with `γn ≤ b^M`.
pub fn weak_l2_bound_explicit(t: usize, gamma: f64, mu: f64, n: usize, a_opnorm: f64) -> Result<f64> {
    check_weak_hypotheses(gamma, mu, n, 0.0)?;
    let b = (1.0 / (2.0 * mu)).floor() as u64;
    let gn = (gamma * n as f64 + 1e-9).floor().max(1.0) as u64;
    let mut m_exp = 0u32;
    let mut pow = 1u64;
    while pow < gn {
        pow = pow.saturating_mul(b);
        m_exp += 1;
    }
    let tf = t as f64;
    let beta = tf / (32.0 * a_opnorm * a_opnorm);
    Ok(beta.powf((m_exp as f64 + 1.0) / 2.0) * tf.sqrt() / (2.0 * std::f64::consts::SQRT_2))
}

/// `T_i = U(S) ∩ N(S_i)` for disjoint `S_1, …, S_b`: every `r ∈ T_i` has one
/// neighbour in `S_i` and none in the other sets.
pub fn disjoint_unique_sets(g: &BipartiteGraph, sets: &[Vec<usize>]) -> Result<Vec<Vec<usize>>> {
    let mut owner = vec![usize::MAX; g.n_left()];
    for (i, s) in sets.iter().enumerate() {
        for &u in s {
            if u >= g.n_left() {
                return Err(Error::InvalidParams(format!("vertex {u} is not a left vertex")));
            }
            if owner[u] != usize::MAX {
                return Err(Error::InvalidParams(format!("vertex {u} is in two sets")));
            }
            owner[u] = i;
        }
    }
    let all: Vec<usize> = sets.iter().flatten().copied().collect();
    let mut out = vec![Vec::new(); sets.len()];
    for r in g.unique_neighbors(&all) {
        let u = g
            .right_neighbors(r)
            .find(|&u| owner[u] != usize::MAX)
            .expect("unique neighbour has a member");
        out[owner[u]].push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{sample_biregular, sample_left_regular, EnsembleParams};

    #[test]
    fn p1_coefficients() {
        let (lo, hi) = rip_bounds_from_expansion(5, 40, 0.1, 1.0, 0.3, 0.7).unwrap();
        assert!((lo - 4.0).abs() < 1e-12);
        assert!((hi - 5.5).abs() < 1e-12);
        assert!(rip_bounds_from_expansion(5, 40, 0.1, 1.0, 0.0, 0.5).is_err());
        assert!(rip_bounds_from_expansion(5, 40, 0.1, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn lower_is_trivial_from_p2() {
        for mu in [0.01, 0.1, 0.3] {
            for d in [0.1, 0.5, 2.0] {
                let (lo, _) = rip_bounds_from_expansion(8, 16, mu, 2.0, d, 0.5).unwrap();
                // (1−μ)/(1+δ) − 15μ/δ ≤ 0 whenever 15μ(1+δ) ≥ δ(1−μ)
                if 15.0 * mu * (1.0 + d) >= d * (1.0 - mu) {
                    assert!(lo <= 0.0);
                }
            }
        }
        let (lo, _) = rip_bounds_from_expansion(8, 16, 0.0, 1.5, 0.25, 0.5).unwrap();
        assert!((lo - 8.0 / 1.25f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn golden_section_improves_on_fixed_delta() {
        let (d1, lo) = optimize_delta1(16, 64, 0.002, 1.2).unwrap();
        let fixed = rip_bounds_from_expansion(16, 64, 0.002, 1.2, 0.1, 0.1).unwrap().0;
        assert!(lo >= fixed && d1 > 0.0);
        let (_, hi) = optimize_delta2(16, 64, 0.002, 1.2).unwrap();
        assert!(hi <= rip_bounds_from_expansion(16, 64, 0.002, 1.2, 0.1, 0.1).unwrap().1);
    }

    #[test]
    fn certify_precondition() {
        let c = ExpansionCertificate::asserted(0.1, 0.002, 100, 16);
        let need = 9.0 * 0.002 * 64f64.powf(0.2);
        let eps = need.sqrt();
        let cert = certify_rip(&c, 16, 64, 1.2, eps * (1.0 + 1e-12)).unwrap();
        assert_eq!(cert.k, 10);
        assert!((cert.k_norm - 16f64.powf(1.0 / 1.2)).abs() < 1e-12);
        assert!(matches!(certify_rip(&c, 16, 64, 1.2, eps * 0.99), Err(Error::PreconditionFailed(_))));
        let zero = ExpansionCertificate::asserted(0.1, 0.0, 100, 4);
        let cert = certify_rip(&zero, 4, 1000, 1.9, 1.0).unwrap();
        assert_eq!(cert.ratio_bounds(), (0.0, 2.0 * 4f64.powf(1.0 / 1.9)));
        assert!(certify_rip(&zero, 4, 10, 2.0, 0.5).is_err());
    }

    #[test]
    fn mu_two_over_t_matches_sparsity_threshold() {
        // ε² ≥ (18/t)s^{p−1} ⇔ s ≥ (18/(αε²))^{1/(2−p)} when t = αs
        let (alpha, p, eps) = (0.5, 1.5, 0.9);
        let s_min = (18.0f64 / (alpha * eps * eps)).powf(1.0 / (2.0 - p));
        for s in [(s_min.ceil() as usize + 1) & !1, 4096] {
            let t = s / 2;
            let c = ExpansionCertificate::asserted(0.01, 2.0 / t as f64, 10_000, t);
            assert!(certify_rip(&c, t, s, p, eps).is_ok(), "s = {s}");
        }
        let s = ((s_min.floor() as usize) - 2) & !1;
        let t = s / 2;
        let c = ExpansionCertificate::asserted(0.01, 2.0 / t as f64, 10_000, t);
        assert!(certify_rip(&c, t, s, p, eps).is_err());
    }

    #[test]
    fn sampled_certificates_are_refused() {
        let g = sample_left_regular(16, 64, 8, 3).unwrap();
        let c = crate::graph::verify_expansion(
            &g, 8, 0.125, 1.0, crate::graph::ExpansionProperty::Unique, ExpansionMode::Sampled, 50, 0,
        )
        .unwrap();
        assert!(matches!(certify_rip(&c, 8, g.max_right_degree(), 1.0, 1.0), Err(Error::PreconditionFailed(_))));
    }

    #[test]
    fn k1_probe_is_exact() {
        let a = sample_biregular(&EnsembleParams::new(16, 8, 6, 3, 2).unwrap()).unwrap();
        for p in [1.0, 1.5, 2.0] {
            let pr = probe_rip(&a, p, 1, &ProbeOptions::default()).unwrap();
            let want = 3f64.powf(1.0 / p);
            assert!((pr.min_ratio - want).abs() < 1e-12);
            assert!((pr.max_ratio - want).abs() < 1e-12);
            assert_eq!(pr.supports_checked, 16);
        }
    }

    #[test]
    fn p2_probe_matches_dense_submatrices() {
        let a = sample_biregular(&EnsembleParams::new(16, 8, 6, 3, 5).unwrap()).unwrap();
        let d = a.to_dense();
        let pr = probe_rip(&a, 2.0, 3, &ProbeOptions::default()).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for_each_subset(16, 3, |s| {
            let cols = d.select_columns(s);
            let sv = cols.singular_values();
            lo = lo.min(sv.min());
            hi = hi.max(sv.max());
            true
        });
        assert!((pr.min_ratio - lo).abs() < 1e-9);
        assert!((pr.max_ratio - hi).abs() < 1e-9);
    }

    #[test]
    fn p15_descent_matches_grid() {
        let a = sample_biregular(&EnsembleParams::new(12, 6, 6, 3, 9).unwrap()).unwrap();
        let pr = probe_rip(&a, 1.5, 2, &ProbeOptions { restarts: 8, ..Default::default() }).unwrap();
        let p = 1.5;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        let pts = 100_000;
        for_each_subset(12, 2, |s| {
            let b = submatrix(&a, s);
            for i in 0..pts {
                let th = std::f64::consts::TAU * i as f64 / pts as f64;
                let r = ratio(&b, &[th.cos(), th.sin()], p);
                lo = lo.min(r);
                hi = hi.max(r);
            }
            true
        });
        assert!((pr.min_ratio - lo).abs() < 1e-3, "{} vs {lo}", pr.min_ratio);
        assert!((pr.max_ratio - hi).abs() < 1e-3, "{} vs {hi}", pr.max_ratio);
    }

    #[test]
    fn p1_rays_match_grid_and_bound_descent() {
        let a = sample_biregular(&EnsembleParams::new(12, 6, 6, 3, 4).unwrap()).unwrap();
        let pr = probe_rip(&a, 1.0, 2, &ProbeOptions::default()).unwrap();
        assert!(pr.exact);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for_each_subset(12, 2, |s| {
            let b = submatrix(&a, s);
            for i in 0..20_000 {
                let th = std::f64::consts::TAU * i as f64 / 20_000.0;
                let r = ratio(&b, &[th.cos(), th.sin()], 1.0);
                lo = lo.min(r);
                hi = hi.max(r);
            }
            true
        });
        assert!(pr.min_ratio <= lo + 1e-12 && lo - pr.min_ratio < 1e-3, "{} vs {lo}", pr.min_ratio);
        assert!(pr.max_ratio >= hi - 1e-12 && pr.max_ratio - hi < 1e-3, "{} vs {hi}", pr.max_ratio);
        // descent can only land inside the exact extremes
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for_each_subset(12, 3, |s| {
            let b = submatrix(&a, s);
            let (elo, ehi) = l1_extremes(&b).unwrap();
            for _ in 0..4 {
                let z: Vec<f64> = (0..3).map(|_| rng.random::<f64>() - 0.5).collect();
                assert!(descend(&b, z.clone(), 1.0, 1.0).0 >= elo - 1e-9);
                assert!(descend(&b, z, 1.0, -1.0).0 <= ehi + 1e-9);
            }
            true
        });
    }

    #[test]
    fn budget_enforced() {
        let a = sample_biregular(&EnsembleParams::new(16, 8, 6, 3, 5).unwrap()).unwrap();
        let opts = ProbeOptions { budget: 100, ..Default::default() };
        assert!(matches!(probe_rip(&a, 2.0, 3, &opts), Err(Error::BudgetExceeded { .. })));
        let sampled = ProbeOptions { mode: ProbeMode::Sampled, budget: 5, ..Default::default() };
        assert_eq!(probe_rip(&a, 2.0, 3, &sampled).unwrap().supports_checked, 5);
    }

    fn stars(n: usize, t: usize) -> BipartiteGraph {
        // disjoint neighbourhoods: a perfect unique expander
        let edges = (0..n).flat_map(|u| (0..t).map(move |j| (u, u * t + j))).collect();
        BipartiteGraph::new(n, n * t, edges).unwrap()
    }

    #[test]
    fn pipeline_on_disjoint_stars() {
        let g = stars(8, 3);
        for eps in [0.05, 0.5, 1.0] {
            let rep = explicit_pipeline(&g, 0.5, 0.0, None, 1.5, eps, 1 << 16).unwrap();
            assert_eq!(rep.rip.k, 4);
            assert_eq!(rep.rows, 24);
            assert!(rep.expansion.holds());
        }
        assert!(explicit_pipeline(&g, 0.5, 0.0, Some(0.5), 1.5, 0.5, 1 << 16).is_err());
    }

    #[test]
    fn pipeline_composes_certify_and_probe() {
        let g = sample_left_regular(16, 96, 8, 3).unwrap();
        let cert = verify_unique_expansion(&g, 8, 2.0 / 16.0, 0.125, ExpansionMode::Exhaustive, 1 << 16).unwrap();
        if !cert.holds() {
            return;
        }
        let s_max = g.max_right_degree();
        let Some(eps) = smallest_admissible_epsilon(0.125, s_max, 1.0) else { return };
        let rep = explicit_pipeline(&g, 2.0 / 16.0, 0.125, None, 1.0, eps, 1 << 16).unwrap();
        let direct = certify_rip(&rep.expansion, 8, s_max, 1.0, eps).unwrap();
        assert_eq!(rep.rip, direct);
        let probe = probe_rip(&rep.matrix, 1.0, rep.rip.k, &ProbeOptions { restarts: 8, ..Default::default() }).unwrap();
        assert!(rip_violations(&rep.rip, &probe, 1e-9).is_empty());
    }

    #[test]
    fn weak_bound_behaviour() {
        let c = WeakL2Constants::default();
        let b = weak_l2_bound(9, 0.1, 0.2, 1000, 3.0, &c).unwrap();
        assert!((b - c.c1 * 3.0).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for norm in [3.0, 4.0, 6.0, 9.0] {
            let v = weak_l2_bound(9, 0.1, 0.2, 1000, norm, &c).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for n in [100, 1000, 10_000] {
            let v = weak_l2_bound(9, 0.1, 0.2, n, 5.0, &c).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        assert!(matches!(weak_l2_bound(9, 0.1, 0.3, 1000, 3.0, &c), Err(Error::HypothesisViolated(_))));
        assert!(weak_l2_bound(9, 0.5, 0.2, 1000, 3.0, &c).is_err());
        assert!(weak_l2_bound(9, 0.1, 0.2, 10, 3.0, &c).is_err());
    }

    #[test]
    fn explicit_weak_bound_below_measured_minimum() {
        let g = sample_left_regular(24, 1600, 12, 1).unwrap();
        let a = SignedMatrix::with_random_signs(g.clone(), 4);
        let (gamma, mu) = (5.0 / 24.0, 2.0 / 9.0);
        let cert = verify_unique_expansion(&g, 12, gamma, mu, ExpansionMode::Exhaustive, 1 << 17).unwrap();
        assert!(cert.holds());
        let opnorm = a.to_dense().singular_values().max();
        let bound = weak_l2_bound_explicit(12, gamma, mu, 24, opnorm).unwrap();
        let probe = probe_rip(&a, 2.0, 5, &ProbeOptions::default()).unwrap();
        assert!(bound > 0.0 && bound <= probe.min_ratio);
    }

    #[test]
    fn claim_sets_are_disjoint_and_unique() {
        let g = sample_left_regular(24, 1600, 12, 1).unwrap();
        let mu = 2.0 / 9.0;
        let cert = verify_unique_expansion(&g, 12, 4.0 / 24.0, mu, ExpansionMode::Exhaustive, 1 << 16).unwrap();
        assert!(cert.holds());
        let sets = vec![vec![0, 5], vec![7, 11]];
        let ts = disjoint_unique_sets(&g, &sets).unwrap();
        for (i, ti) in ts.iter().enumerate() {
            assert!(ti.len() as f64 >= (1.0 - mu * 2.0) * 24.0);
            for &r in ti {
                let nb: Vec<usize> = g.right_neighbors(r).collect();
                assert_eq!(sets[i].iter().filter(|u| nb.contains(u)).count(), 1);
                for (j, sj) in sets.iter().enumerate() {
                    if j != i {
                        assert!(sj.iter().all(|u| !nb.contains(u)));
                    }
                }
            }
            for tj in &ts[i + 1..] {
                assert!(ti.iter().all(|r| !tj.contains(r)));
            }
        }
        assert!(disjoint_unique_sets(&g, &[vec![1], vec![1]]).is_err());
    }
}
