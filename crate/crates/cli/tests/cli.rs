use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mpmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpmd"))
        .args(args)
        .env_remove("MPMD_DP_CAP")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = mpmd(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

fn json(path: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_families() {
    let dir = tempfile::tempdir().unwrap();
    let u = path(dir.path(), "u.json");
    ok(&["gen", "--family", "uniform", "--pairs", "5", "--seed", "1", "--out", &u]);
    assert_eq!(json(&u)["requests"].as_array().unwrap().len(), 10);

    let s = ok(&[
        "gen",
        "--family",
        "simultaneous",
        "--pairs",
        "3",
        "--t0",
        "2.5",
        "--metric",
        "matrix",
    ]);
    let v: Value = serde_json::from_str(&s).unwrap();
    let reqs = v["requests"].as_array().unwrap();
    assert_eq!(reqs.len(), 6);
    assert!(reqs.iter().all(|r| r["time"] == 2.5));

    let a = ok(&["gen", "--family", "adversarial-line", "--level", "3"]);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["requests"].as_array().unwrap().len(), 16);
    assert_eq!(v["metric"]["kind"], "line");
}

#[test]
fn gen_is_deterministic() {
    let args = [
        "gen",
        "--family",
        "uniform",
        "--pairs",
        "4",
        "--seed",
        "7",
        "--metric",
        "euclidean:3",
    ];
    assert_eq!(ok(&args), ok(&args));
}

#[test]
fn run_single_pair() {
    let dir = tempfile::tempdir().unwrap();
    let inst = path(dir.path(), "pair.json");
    fs::write(
        &inst,
        r#"{"metric": {"kind": "line", "coords": [0.0, 4.0]},
            "requests": [{"id": 0, "point": 0, "time": 0.0}, {"id": 1, "point": 1, "time": 0.0}]}"#,
    )
    .unwrap();
    let trace = path(dir.path(), "trace.csv");
    let summary = path(dir.path(), "summary.json");
    ok(&["run", "--instance", &inst, "--out", &trace, "--summary", &summary]);
    let s = json(&summary);
    assert_eq!(s["alg_total"], 12.0);
    assert_eq!(s["m"], 1);
    assert_eq!(s["params"]["alpha"], 0.5);
    let csv = fs::read_to_string(&trace).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("seq,i,j,match_time"));
    assert!(lines.next().unwrap().starts_with("1,0,1,4,"));

    let first = (fs::read(&trace).unwrap(), fs::read(&summary).unwrap());
    ok(&["run", "--instance", &inst, "--out", &trace, "--summary", &summary]);
    assert_eq!(first, (fs::read(&trace).unwrap(), fs::read(&summary).unwrap()));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = path(dir.path(), "missing.json");
    assert_eq!(mpmd(&["run", "--instance", &missing]).status.code(), Some(2));
    let bad = path(dir.path(), "bad.json");
    fs::write(&bad, "{not json").unwrap();
    assert_eq!(mpmd(&["analyze", "--instance", &bad]).status.code(), Some(2));
    let inst = path(dir.path(), "i.json");
    ok(&["gen", "--family", "uniform", "--pairs", "2", "--out", &inst]);
    assert_eq!(
        mpmd(&["run", "--instance", &inst, "--alpha", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(
        mpmd(&["run", "--instance", &inst, "--beta", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        mpmd(&["gen", "--family", "adversarial-line", "--level", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn analyze_reports_zero_violations() {
    let dir = tempfile::tempdir().unwrap();
    for (seed, metric) in [(1, "line"), (2, "euclidean"), (3, "matrix")] {
        let inst = path(dir.path(), &format!("i{seed}.json"));
        let seed = seed.to_string();
        ok(&[
            "gen", "--family", "uniform", "--pairs", "6", "--seed", &seed, "--metric", metric, "--out", &inst,
        ]);
        let report = path(dir.path(), &format!("r{seed}.json"));
        ok(&["analyze", "--instance", &inst, "--out", &report]);
        let r = json(&report);
        assert_eq!(r["violations"], 0);
        assert_eq!(r["opt_method"], "exact");
        assert!(r["ratio"].as_f64().unwrap() >= 1.0 - 1e-7);
        assert!(r["ratio"].as_f64().unwrap() <= r["theorem_bound"].as_f64().unwrap());
        assert_eq!(r["constants"]["xi"], 9.0);
    }
}

#[test]
fn analyze_capacity_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let inst = path(dir.path(), "big.json");
    ok(&["gen", "--family", "uniform", "--pairs", "12", "--out", &inst]);
    let out = mpmd(&["analyze", "--instance", &inst]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("OPT unavailable"));

    let small = path(dir.path(), "small.json");
    ok(&["gen", "--family", "uniform", "--pairs", "4", "--out", &small]);
    let out = Command::new(env!("CARGO_BIN_EXE_mpmd"))
        .args(["analyze", "--instance", &small])
        .env("MPMD_DP_CAP", "6")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    // the line solver takes over above the cap
    let line = path(dir.path(), "adv.json");
    ok(&["gen", "--family", "adversarial-line", "--level", "4", "--out", &line]);
    let r: Value = serde_json::from_str(&ok(&["analyze", "--instance", &line])).unwrap();
    assert_eq!(r["opt_method"], "line");
    assert_eq!(r["violations"], 0);
}

#[test]
fn sweep_csv() {
    let out = ok(&["sweep", "--family", "adversarial-line", "--sizes", "1,2,3,4,5,6"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("m,seed,alg,opt,ratio,opt_method"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    let ratios: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(ratios.windows(2).all(|w| w[0] <= w[1]), "{ratios:?}");
    assert_eq!(rows[0][0], "2");
    assert_eq!(rows[5][0], "64");

    assert_eq!(
        ok(&["sweep", "--family", "uniform", "--sizes"]),
        "m,seed,alg,opt,ratio,opt_method\n"
    );

    let args = [
        "sweep", "--family", "uniform", "--sizes", "2,4,6", "--seeds", "3,1,2", "--metric", "matrix",
    ];
    let a = ok(&args);
    assert_eq!(a, ok(&args));
    let seeds: Vec<&str> = a.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(seeds, ["1", "2", "3", "1", "2", "3", "1", "2", "3"]);
    let bound = mpmd_core::analysis::AnalysisConstants::default().ratio_bound(6);
    for l in a.lines().skip(1) {
        let ratio: f64 = l.split(',').nth(4).unwrap().parse().unwrap();
        assert!(ratio >= 1.0 - 1e-9 && ratio <= bound);
    }
}
