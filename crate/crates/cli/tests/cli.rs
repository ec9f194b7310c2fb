use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spreadlab"))
        .args(args)
        .env("SPREADLAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn stderr_error(out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stderr).expect("error object is JSON");
    v["error"].clone()
}

#[test]
fn sample_writes_bireg() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.bireg");
    let p = path.to_str().unwrap();
    let out = run(&["sample", "--n", "16", "--m", "8", "--s", "6", "--t", "3", "--seed", "1", "--out", p]);
    let report = stdout_json(&out);
    assert_eq!(report["version"], spreadlab::VERSION);
    assert_eq!(report["config"]["matrix"]["resolved"]["m"], 8);
    let a = spreadlab::io::read_bireg(&path).unwrap();
    assert_eq!((a.as_signed().cols(), a.as_signed().rows(), a.s(), a.t()), (16, 8, 6, 3));
    assert!(fs::read_to_string(&path).unwrap().starts_with("BIREG 16 8 6 3"));
}

#[test]
fn attack_report_schema_and_reproducibility() {
    let args = ["attack", "--n", "4096", "--alpha", "0.5", "--s", "6", "--seed", "3"];
    let first = stdout_json(&run(&args));
    let w = &first["result"]["witness"];
    for key in ["n", "m", "s", "t", "seed", "ell", "k", "epsilon", "residual", "distortion_lower_bound", "support", "values"] {
        assert!(!w[key].is_null(), "missing {key}");
    }
    assert_eq!(w["seed"], 3);
    assert!(w["residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(first["result"]["recheck"]["ok"], true);
    let second = stdout_json(&run(&args));
    assert_eq!(first["result"], second["result"]);
}

#[test]
fn spectrum_report_has_band() {
    let out = run(&["spectrum", "--sample", "64,32,6,3,2", "--method", "dense"]);
    let r = &stdout_json(&out)["result"];
    let lo = r["sigma_min"].as_f64().unwrap();
    let hi = r["sigma_max"].as_f64().unwrap();
    assert!(0.0 <= lo && lo <= hi);
    assert!((r["band"]["center"].as_f64().unwrap() - 5f64.sqrt()).abs() < 1e-12);
    assert!((r["band"]["unit"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn rip_check_on_stars_certifies_without_violations() {
    let dir = tempfile::tempdir().unwrap();
    // 8 disjoint stars with t = 2: perfect unique expansion
    let g = spreadlab::BipartiteGraph::new(8, 16, (0..8).flat_map(|u| [(u, 2 * u), (u, 2 * u + 1)]).collect()).unwrap();
    let path = dir.path().join("stars.bigraph");
    spreadlab::io::save_bigraph(&g, &path).unwrap();
    let out = run(&[
        "rip-check", "--graph", path.to_str().unwrap(), "--gamma", "0.5", "--mu", "0", "--eps", "0.1", "--p", "1",
    ]);
    let r = &stdout_json(&out)["result"];
    assert_eq!(r["violations"].as_array().unwrap().len(), 0);
    assert_eq!(r["certificate"]["K"], 2.0);
}

#[test]
fn rip_check_measures_or_assumes_expansion() {
    let out = run(&["rip-check", "--sample", "24,12,6,3,1", "--k", "2", "--p", "1", "--eps", "1"]);
    let r = &stdout_json(&out)["result"];
    assert_eq!(r["probe"]["exact"], true);
    assert!(r["certificate"].is_object() || r["certificate_error"].is_string());
    // assumed mu = 2/t is far too large at t = 3
    let out = run(&["rip-check", "--sample", "24,12,6,3,1", "--k", "2", "--eps", "0.9", "--assume-random"]);
    let r = &stdout_json(&out)["result"];
    assert!(r["certificate_error"].as_str().unwrap().contains("precondition"));
    let out = run(&["rip-check", "--sample", "72,36,36,18,1", "--k", "2", "--eps", "1", "--assume-random"]);
    let r = &stdout_json(&out)["result"];
    assert_eq!(r["certificate"]["source"]["mode"], "asserted");
    // the default constant gives gamma*n < 1, so nothing is certified at k = 2
    assert_eq!(r["certificate"]["k"], 0);
    assert_eq!(r["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn spread_check_reads_plain_vectors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.txt");
    fs::write(&path, "3 0 4 0\n").unwrap();
    let out = run(&["spread-check", "--vector", path.to_str().unwrap(), "--k", "1", "--p", "2", "--q", "1"]);
    let r = &stdout_json(&out)["result"];
    assert!((r["best_k_sparse_error"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    assert_eq!(r["support"], serde_json::json!([2]));
}

#[test]
fn sweep_emits_csv_and_medians() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let rep = dir.path().join("s.json");
    let out = run(&[
        "sweep", "spectrum", "--n", "64,128", "--s", "6", "--t", "3", "--seeds", "3", "--method", "dense", "--out",
        csv.to_str().unwrap(), "--report", rep.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,m,s,t,seed,metric,value"));
    assert_eq!(lines.count(), 2 * 3 * 3);
    let report: Value = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    assert!(report["result"]["medians"]["64"]["slack"].is_f64());
}

#[test]
fn exit_codes() {
    let out = run(&["attack", "--n", "4097", "--alpha", "0.5", "--s", "6"]);
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_error(&out);
    assert_eq!(e["class"], "config");
    assert!(e["message"].as_str().unwrap().contains("nearest"));

    let out = run(&["rip-check", "--sample", "64,32,6,3,0", "--k", "6", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_error(&out)["kind"], "BudgetExceeded");

    let dir = tempfile::tempdir().unwrap();
    let zero = dir.path().join("z.txt");
    fs::write(&zero, "0 0 0").unwrap();
    let out = run(&["spread-check", "--vector", zero.to_str().unwrap(), "--k", "1"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_error(&out)["kind"], "ZeroVector");

    let out = run(&["nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}
