use std::collections::BTreeMap;
use std::fs;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use spreadlab::graph::{verify_unique_expansion, ExpansionCertificate, ExpansionMode};
use spreadlab::io::{read_bigraph, read_bireg, save_bireg};
use spreadlab::spread::compressible_to_distortion_bound;
use spreadlab::{
    attack_with, best_k_sparse_error, certify_rip, distortion, explicit_pipeline, probe_rip, rip_violations,
    sample_biregular, singular_extremes, AttackOptions, EnsembleParams, Error, ProbeMode, ProbeOptions, Result,
    SignedBiregularMatrix, SpectrumMethod,
};

use crate::params::resolve_alpha;
use crate::{
    AttackArgs, MatrixSource, MethodArg, ModeArg, RipArgs, SampleArgs, SpectrumArgs, SpreadArgs, SweepArgs, SweepKind,
};

#[derive(Serialize)]
struct Report<'a, C: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    argv: &'a [String],
    command: &'static str,
    config: C,
    result: R,
}

fn emit<C: Serialize, R: Serialize>(
    command: &'static str,
    argv: &[String],
    config: C,
    result: R,
    path: Option<&str>,
) -> Result<()> {
    let report = Report {
        tool: "spreadlab",
        version: spreadlab::VERSION,
        argv,
        command,
        config,
        result,
    };
    let text = serde_json::to_string_pretty(&report)?;
    match path {
        Some(p) => fs::write(p, text + "\n")?,
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}")?;
        }
    }
    Ok(())
}

/// The matrix plus the parameters it came from (`None` for files).
struct Loaded {
    matrix: SignedBiregularMatrix,
    params: Option<EnsembleParams>,
}

fn load(src: &MatrixSource) -> Result<Loaded> {
    if let Some(path) = &src.matrix {
        return Ok(Loaded {
            matrix: read_bireg(path)?,
            params: None,
        });
    }
    let params = src.flags()?.resolve()?;
    Ok(Loaded {
        matrix: sample_biregular(&params)?,
        params: Some(params),
    })
}

fn source_config(src: &MatrixSource, loaded: &Loaded) -> Value {
    let a = &loaded.matrix;
    json!({
        "source": src,
        "resolved": {
            "n": a.as_signed().cols(),
            "m": a.as_signed().rows(),
            "s": a.s(),
            "t": a.t(),
            "seed": loaded.params.map(|p| p.seed),
        }
    })
}

pub fn sample(args: &SampleArgs, argv: &[String]) -> Result<()> {
    let loaded = load(&args.src)?;
    save_bireg(&loaded.matrix, &args.out)?;
    let config = json!({ "matrix": source_config(&args.src, &loaded), "out": args.out });
    let result = json!({ "written": args.out, "edges": loaded.matrix.as_signed().graph().n_edges() });
    emit("sample", argv, config, result, args.report.as_deref())
}

fn attack_options(max_ell: usize, tol: f64, candidates: usize) -> AttackOptions {
    AttackOptions {
        max_ell,
        tol,
        candidates,
    }
}

pub fn attack(args: &AttackArgs, argv: &[String]) -> Result<()> {
    let loaded = load(&args.src)?;
    let opts = attack_options(args.max_ell, args.tol, args.candidates);
    let mut witness = attack_with(loaded.matrix.as_signed(), &opts)?;
    witness.seed = loaded.params.map(|p| p.seed);
    let (recheck_error, recheck_ok) = witness.recheck()?;
    let a = loaded.matrix.as_signed();
    let (n, m, s, t) = (a.cols(), a.rows(), loaded.matrix.s(), loaded.matrix.t());
    let in_regime = EnsembleParams::new(n, m, s, t, 0).is_ok_and(|p| p.in_attack_regime());
    let warning = (!in_regime)
        .then(|| format!("outside t >= 3, s >= t, m < n (n={n}, m={m}, s={s}, t={t}); trend claims do not apply"));
    let config = json!({ "matrix": source_config(&args.src, &loaded), "options": opts });
    let result = json!({
        "witness": witness,
        "recheck": { "best_k_sparse_error": recheck_error, "ok": recheck_ok },
        "regime_warning": warning,
    });
    emit("attack", argv, config, result, args.report.as_deref())
}

fn method(m: MethodArg) -> SpectrumMethod {
    match m {
        MethodArg::Dense => SpectrumMethod::Dense,
        MethodArg::Iterative => SpectrumMethod::Iterative,
    }
}

pub fn spectrum(args: &SpectrumArgs, argv: &[String]) -> Result<()> {
    let loaded = load(&args.src)?;
    let r = singular_extremes(loaded.matrix.as_signed(), method(args.method), args.tol)?;
    let config = json!({ "matrix": source_config(&args.src, &loaded), "method": args.method, "tol": args.tol });
    let result = json!({
        "sigma_min": r.sigma_min,
        "sigma_max": r.sigma_max,
        "slack": r.slack,
        "band": { "center": r.band_center, "unit": r.band_radius_unit },
        "method": r.method,
        "lanczos_steps": r.lanczos_steps,
    });
    emit("spectrum", argv, config, result, args.report.as_deref())
}

fn probe_options(args: &RipArgs) -> ProbeOptions {
    ProbeOptions {
        mode: match args.mode {
            ModeArg::Exhaustive => ProbeMode::ExhaustiveSupport,
            ModeArg::Sampled => ProbeMode::Sampled,
        },
        budget: args.budget,
        restarts: args.restarts,
        seed: args.probe_seed,
    }
}

pub fn rip_check(args: &RipArgs, argv: &[String]) -> Result<()> {
    let opts = probe_options(args);
    if let Some(path) = &args.graph {
        let g = read_bigraph(path)?;
        let (gamma, mu, eps) = match (args.gamma, args.mu, args.eps) {
            (Some(g), Some(m), Some(e)) => (g, m, e),
            _ => return Err(Error::InvalidParams("--graph needs --gamma, --mu and --eps".into())),
        };
        let report = explicit_pipeline(&g, gamma, mu, args.src.alpha, args.p, eps, args.budget)?;
        let k = args.k.unwrap_or(report.rip.k).max(1);
        let probe = probe_rip(&report.matrix, args.p, k, &opts)?;
        let violations = if k <= report.rip.k {
            rip_violations(&report.rip, &probe, 1e-9)
        } else {
            Vec::new()
        };
        let config = json!({ "graph": path, "args": args, "probe": opts });
        let result = json!({ "pipeline": report, "certificate": report.rip, "probe": probe, "violations": violations });
        return emit("rip-check", argv, config, result, args.report.as_deref());
    }

    let loaded = load(&args.src)?;
    let a = loaded.matrix.as_signed();
    let k = args.k.unwrap_or(2);
    let probe = probe_rip(a, args.p, k, &opts)?;
    let mut certificate = Value::Null;
    let mut certificate_error = Value::Null;
    let mut violations = Vec::new();
    if let Some(eps) = args.eps {
        let g = a.graph();
        let t = loaded.matrix.t();
        let expansion = if args.assume_random {
            let alpha = g.n_right() as f64 / g.n_left() as f64;
            let gamma = (args.expansion_c * alpha * alpha / (t as f64).powi(4)).min(1.0);
            ExpansionCertificate::asserted(gamma, 2.0 / t as f64, g.n_left(), t)
        } else {
            let gamma = k as f64 / g.n_left() as f64;
            // without a claimed μ, certify the measured one
            let measured = verify_unique_expansion(g, t, gamma, 1.0, ExpansionMode::Exhaustive, args.budget)?;
            let mu = args.mu.unwrap_or(measured.worst_mu);
            verify_unique_expansion(g, t, gamma, mu, ExpansionMode::Exhaustive, args.budget)?
        };
        // unique neighbours see a single entry, so signs do not matter here
        match certify_rip(&expansion, t, g.max_right_degree(), args.p, eps) {
            Ok(cert) => {
                if k <= cert.k {
                    violations = rip_violations(&cert, &probe, 1e-9);
                }
                certificate = serde_json::to_value(&cert)?;
            }
            Err(e @ Error::PreconditionFailed(_)) => certificate_error = json!(e.to_string()),
            Err(e) => return Err(e),
        }
    }
    let config = json!({ "matrix": source_config(&args.src, &loaded), "args": args, "probe": opts });
    let result = json!({
        "certificate": certificate,
        "certificate_error": certificate_error,
        "probe": probe,
        "violations": violations,
    });
    emit("rip-check", argv, config, result, args.report.as_deref())
}

fn read_vector(path: &str) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(&text)?;
        let values = v
            .pointer("/values")
            .or_else(|| v.pointer("/result/witness/values"))
            .and_then(Value::as_array)
            .ok_or_else(|| Error::InvalidParams(format!("{path}: no `values` array")))?;
        return values
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| Error::InvalidParams(format!("{path}: non-numeric value {x}"))))
            .collect();
    }
    text.split_whitespace()
        .enumerate()
        .map(|(i, w)| {
            w.parse::<f64>()
                .map_err(|_| Error::InvalidParams(format!("{path}: entry {} is not a number: {w:?}", i + 1)))
        })
        .collect()
}

pub fn spread_check(args: &SpreadArgs, argv: &[String]) -> Result<()> {
    let x = read_vector(&args.vector)?;
    let approx = best_k_sparse_error(&x, args.k, args.p)?;
    let dist = distortion(&x, args.q, args.p)?;
    let bound = compressible_to_distortion_bound(args.k, x.len(), approx.error, args.q, args.p);
    let result = json!({
        "n": x.len(),
        "best_k_sparse_error": approx.error,
        "support": approx.support,
        "distortion": dist.value,
        "distortion_lower_bound": bound,
    });
    emit("spread-check", argv, args, result, args.report.as_deref())
}

fn pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SPREADLAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParams(format!("SPREADLAB_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::InvalidParams("SPREADLAB_THREADS must be positive".into()));
        }
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| Error::InvalidParams(format!("thread pool: {e}")))
}

#[derive(Serialize)]
struct Failure {
    n: usize,
    seed: u64,
    kind: &'static str,
    message: String,
}

type Row = (EnsembleParams, &'static str, f64);

fn sweep_task(args: &SweepArgs, p: &EnsembleParams) -> Result<Vec<Row>> {
    let a = sample_biregular(p)?;
    match args.kind {
        SweepKind::Attack => {
            let w = attack_with(a.as_signed(), &attack_options(args.max_ell, args.tol, args.candidates))?;
            Ok(vec![
                (*p, "epsilon", w.epsilon),
                (*p, "k", w.k as f64),
                (*p, "ell", w.ell as f64),
                (*p, "residual", w.residual),
                (*p, "gap", w.gap),
                (*p, "distortion_lower_bound", w.distortion_lower_bound),
            ])
        }
        SweepKind::Spectrum => {
            let r = singular_extremes(a.as_signed(), method(args.method), 1e-8)?;
            Ok(vec![
                (*p, "sigma_min", r.sigma_min),
                (*p, "sigma_max", r.sigma_max),
                (*p, "slack", r.slack),
            ])
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn sweep(args: &SweepArgs, argv: &[String]) -> Result<()> {
    let mut params = Vec::new();
    for &n in &args.n {
        let (m, t) = match (args.alpha, args.t) {
            (Some(alpha), None) => resolve_alpha(n, args.s, alpha)?,
            (None, Some(t)) => {
                if (n * t) % args.s != 0 {
                    return Err(Error::InvalidParams(format!("n*t = {} is not divisible by s = {}", n * t, args.s)));
                }
                (n * t / args.s, t)
            }
            _ => return Err(Error::InvalidParams("sweep needs exactly one of --alpha or --t".into())),
        };
        for seed in 0..args.seeds {
            params.push(EnsembleParams::new(n, m, args.s, t, seed)?);
        }
    }
    let outcomes: Vec<Result<Vec<Row>>> = pool()?.install(|| params.par_iter().map(|p| sweep_task(args, p)).collect());

    let mut csv = String::from("n,m,s,t,seed,metric,value\n");
    let mut failures = Vec::new();
    let mut by_n: BTreeMap<usize, BTreeMap<&'static str, Vec<f64>>> = BTreeMap::new();
    for (p, out) in params.iter().zip(outcomes) {
        match out {
            Ok(rows) => {
                for (q, metric, value) in rows {
                    csv.push_str(&format!("{},{},{},{},{},{metric},{value:e}\n", q.n, q.m, q.s, q.t, q.seed));
                    by_n.entry(q.n).or_default().entry(metric).or_default().push(value);
                }
            }
            // budget failures abort the sweep; everything else is a data point
            Err(e @ Error::BudgetExceeded { .. }) => return Err(e),
            Err(e) => failures.push(Failure {
                n: p.n,
                seed: p.seed,
                kind: e.kind(),
                message: e.to_string(),
            }),
        }
    }
    match &args.out {
        Some(path) => fs::write(path, &csv)?,
        None => print!("{csv}"),
    }
    let medians: BTreeMap<usize, BTreeMap<&'static str, f64>> = by_n
        .into_iter()
        .map(|(n, metrics)| (n, metrics.into_iter().map(|(k, mut v)| (k, median(&mut v))).collect()))
        .collect();
    let result = json!({ "runs": params.len(), "failures": failures, "medians": medians, "csv": args.out });
    // CSV owns stdout when no --out is given, so the report then goes to stderr
    match (&args.report, &args.out) {
        (Some(path), _) => emit("sweep", argv, args, result, Some(path)),
        (None, Some(_)) => emit("sweep", argv, args, result, None),
        (None, None) => {
            let report = json!({
                "tool": "spreadlab",
                "version": spreadlab::VERSION,
                "argv": argv,
                "command": "sweep",
                "config": args,
                "result": result,
            });
            eprintln!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}
