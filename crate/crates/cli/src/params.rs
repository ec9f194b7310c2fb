//! Resolving ensemble flags (`--n/--m/--s/--t/--alpha/--sample`) to exact
//! biregular parameters.

use serde::Serialize;
use spreadlab::{EnsembleParams, Error, Result};

#[derive(Debug, Clone, Default, Serialize)]
pub struct EnsembleFlags {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub s: Option<usize>,
    pub t: Option<usize>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Parses `n,m,s,t,seed`.
pub fn parse_sample_spec(spec: &str) -> Result<EnsembleFlags> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 5 {
        return Err(Error::InvalidParams(format!("--sample wants n,m,s,t,seed, got {spec:?}")));
    }
    let num = |i: usize| -> Result<u64> {
        parts[i]
            .parse::<u64>()
            .map_err(|_| Error::InvalidParams(format!("--sample field {} is not an integer: {:?}", i + 1, parts[i])))
    };
    Ok(EnsembleFlags {
        n: Some(num(0)? as usize),
        m: Some(num(1)? as usize),
        s: Some(num(2)? as usize),
        t: Some(num(3)? as usize),
        alpha: None,
        seed: Some(num(4)?),
    })
}

/// Turns an `α` into exact `(m, t)` for given `n, s`, or explains the nearest
/// realizable choice.
pub fn resolve_alpha(n: usize, s: usize, alpha: f64) -> Result<(usize, usize)> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParams(format!("alpha must be in (0, 1], got {alpha}")));
    }
    let t_real = alpha * s as f64;
    let t = t_real.round() as usize;
    let m_real = alpha * n as f64;
    let m = m_real.round() as usize;
    let exact = (t_real - t as f64).abs() < 1e-9 && (m_real - m as f64).abs() < 1e-9 && t >= 1 && n * t == m * s;
    if exact {
        return Ok((m, t));
    }
    let t2 = t.clamp(1, s);
    // n·t2 must be divisible by s
    let step = s / gcd(s, t2);
    let n2 = (((n as f64) / step as f64).round() as usize).max(1) * step;
    Err(Error::InvalidParams(format!(
        "alpha={alpha} is not realizable with n={n}, s={s} (needs integer t = alpha*s and m = alpha*n); \
         nearest: --alpha {} (t={t2}) with --n {n2} (m={})",
        t2 as f64 / s as f64,
        n2 * t2 / s
    )))
}

impl EnsembleFlags {
    pub fn resolve(&self) -> Result<EnsembleParams> {
        let missing = |what: &str| Error::InvalidParams(format!("missing --{what}"));
        let n = self.n.ok_or_else(|| missing("n"))?;
        let s = self.s.ok_or_else(|| missing("s"))?;
        let seed = self.seed.unwrap_or(0);
        let (m, t) = match (self.m, self.t, self.alpha) {
            (Some(m), Some(t), None) => (m, t),
            (None, None, Some(alpha)) => resolve_alpha(n, s, alpha)?,
            (Some(m), None, None) => {
                if (m * s) % n != 0 {
                    return Err(Error::InvalidParams(format!("m*s = {} is not divisible by n = {n}", m * s)));
                }
                (m, m * s / n)
            }
            (None, Some(t), None) => {
                if (n * t) % s != 0 {
                    return Err(Error::InvalidParams(format!("n*t = {} is not divisible by s = {s}", n * t)));
                }
                (n * t / s, t)
            }
            (None, None, None) => return Err(Error::InvalidParams("give --alpha, or --m and/or --t".into())),
            _ => return Err(Error::InvalidParams("--alpha cannot be combined with --m or --t".into())),
        };
        EnsembleParams::new(n, m, s, t, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_resolution() {
        assert_eq!(resolve_alpha(4096, 6, 0.5).unwrap(), (2048, 3));
        assert_eq!(resolve_alpha(3000, 12, 1.0 / 3.0).unwrap(), (1000, 4));
        let err = resolve_alpha(4097, 6, 0.5).unwrap_err().to_string();
        assert!(err.contains("nearest"), "{err}");
        assert!(err.contains("--n 4096") || err.contains("--n 4098"), "{err}");
        assert!(resolve_alpha(100, 6, 0.4).is_err());
        assert!(resolve_alpha(100, 6, 1.5).is_err());
    }

    #[test]
    fn flag_combinations() {
        let f = EnsembleFlags { n: Some(16), m: Some(8), s: Some(6), t: Some(3), seed: Some(1), ..Default::default() };
        assert_eq!(f.resolve().unwrap(), EnsembleParams::new(16, 8, 6, 3, 1).unwrap());
        let f = EnsembleFlags { n: Some(16), s: Some(6), t: Some(3), ..Default::default() };
        assert_eq!(f.resolve().unwrap().m, 8);
        let f = EnsembleFlags { n: Some(16), s: Some(6), alpha: Some(0.5), m: Some(8), ..Default::default() };
        assert!(f.resolve().is_err());
        assert!(EnsembleFlags::default().resolve().is_err());
        let p = parse_sample_spec("16,8,6,3,7").unwrap().resolve().unwrap();
        assert_eq!((p.n, p.m, p.s, p.t, p.seed), (16, 8, 6, 3, 7));
        assert!(parse_sample_spec("16,8,6").is_err());
    }
}
