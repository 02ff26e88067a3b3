use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_junctio"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// `(branch, x, value)` rows of a field CSV.
fn rows(path: &Path) -> Vec<(i32, f64, f64)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("branch,mode,x,value"));
    lines
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[0].parse().unwrap(), c[2].parse().unwrap(), c[3].parse().unwrap())
        })
        .collect()
}

fn write_scenario(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn symmetric_solve_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["solve", p(&scenario("symmetric.json")), "--epsilon", "0.1", "--out", p(dir.path())]);
    let r = rows(&dir.path().join("eps_0.1_0.1.csv"));
    assert!(!r.is_empty());
    assert!(r.iter().all(|(_, _, v)| (v - 3.0).abs() < 1e-8));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "solve");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn twofold_solve_value_at_junction() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["solve", p(&scenario("twofold.json")), "--epsilon", "0.1", "--out", p(dir.path())]);
    let r = rows(&dir.path().join("eps_0.1_0.1.csv"));
    let at0 = r.iter().find(|(b, x, _)| *b == -1 && x.abs() < 1e-12).unwrap();
    assert!((at0.2 - 1.0).abs() < 5e-3);
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("eps_0.1_0.1.json")).unwrap()).unwrap();
    assert_eq!(meta["kind"], "thermostatic");
}

#[test]
fn manifest_hash_matches_scenario_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("symmetric.json");
    ok(&["junction", p(&path), "--out", p(dir.path())]);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let expected = {
        use sha2::{Digest, Sha256};
        Sha256::digest(fs::read(&path).unwrap()).iter().map(|b| format!("{b:02x}")).collect::<String>()
    };
    assert_eq!(manifest["scenario"]["sha256"], expected.as_str());
    for entry in manifest["outputs"].as_array().unwrap() {
        assert!(Path::new(entry["path"].as_str().unwrap()).exists());
    }
}

#[test]
fn malformed_expression_exits_1_with_offset() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        "bad.json",
        r#"{"branches":[{"id":1,"dynamics":"a +* 2","cost":"1"},{"id":-1,"dynamics":"a","cost":"1"}],
            "controls":[-1,1],"lambda":1,"domain_radius":1,"grid_step":0.1}"#,
    );
    let out = run(&["solve", p(&s), "--epsilon", "0.1", "--out", p(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("byte 3"));
}

#[test]
fn negative_cost_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        "neg.json",
        r#"{"branches":[{"id":-1,"dynamics":"a","cost":"1 + x"},{"id":1,"dynamics":"a","cost":"1"}],
            "controls":[-1,1],"lambda":1,"domain_radius":3,"grid_step":0.1}"#,
    );
    let out = run(&["junction", p(&s)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("branch -1 cost is negative"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    let out = run(&["solve", p(&scenario("twofold.json")), "--out", "/nonexistent/never"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--epsilon"));
}

#[test]
fn junction_nonuniform_forced_cycle() {
    let out = ok(&["junction", p(&scenario("forced_cycle.json")), "--mode", "threefold_nonuniform"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["v_junction"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(v["argmin"][0]["tag"]["sigma"], "23");
}

#[test]
fn junction_equal_costs() {
    let out = ok(&["junction", p(&scenario("symmetric.json"))]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["v_junction"].as_f64().unwrap() - 3.0).abs() < 1e-9);
}

#[test]
fn junction_without_cycles_picks_state_constraint() {
    // at the junction branch 1 only moves out and branch -1 only moves in, so
    // there is no cycle and no rest; branch 1 settles at x = a inside the domain
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        "s.json",
        r#"{"branches":[{"id":-1,"dynamics":"a","cost":"1000"},{"id":1,"dynamics":"a - x","cost":"5"}],
            "controls":[1,2],"lambda":1,"domain_radius":3,"grid_step":0.01}"#,
    );
    let out = ok(&["junction", p(&s)]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: branch -1"));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["argmin"][0]["tag"]["kind"], "state_constraint");
    assert_eq!(v["argmin"][0]["tag"]["branch"], 1);
    assert!((v["v_junction"].as_f64().unwrap() - 5.0).abs() < 1e-6);
}

#[test]
fn converge_twofold_errors_decrease() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["converge", p(&scenario("twofold.json")), "--epsilons", "0.2,0.1,0.05", "--out", p(dir.path())]);
    let csv = fs::read_to_string(dir.path().join("study.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("epsilon,sup_error,junction_gap"));
    let errs: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(errs.len(), 3);
    assert!(errs.windows(2).all(|w| w[1] < w[0]));
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("study.json")).unwrap()).unwrap();
    assert!(summary["empirical_order"].as_f64().unwrap() > 0.5);
    assert_eq!(summary["verdicts"]["errors_decreasing"], true);
}

#[test]
fn simulate_cycle_switch_spacing() {
    let out = ok(&[
        "simulate",
        p(&scenario("twofold.json")),
        "--start",
        "1:0.1",
        "--policy",
        "per-mode:1=-1,-1=1",
        "--horizon",
        "2",
        "--epsilon",
        "0.1",
        "--dt",
        "0.05",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let switches: Vec<f64> = text
        .lines()
        .skip(1)
        .filter(|l| l.ends_with(",1"))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(switches.len() >= 5);
    // 2 eps / |f| between switches
    for w in switches.windows(2) {
        assert!((w[1] - w[0] - 0.2).abs() < 1e-9, "{switches:?}");
    }
}

#[test]
fn verify_accepts_limit_and_rejects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["junction", p(&scenario("twofold.json")), "--out", p(dir.path())]);
    let limit = dir.path().join("limit.csv");
    let out = ok(&["verify", p(&scenario("twofold.json")), "--field", p(&limit)]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], true);

    let text = fs::read_to_string(&limit).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cols: Vec<String> = lines[1000].split(',').map(String::from).collect();
    cols[3] = (cols[3].parse::<f64>().unwrap() + 0.5).to_string();
    lines[1000] = cols.join(",");
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let out = run(&["verify", p(&scenario("twofold.json")), "--field", p(&bad)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let s = scenario("forced_cycle.json");
    let args = |d: &Path| {
        vec!["solve".to_string(), p(&s).into(), "--epsilon".into(), "0.2".into(), "--out".into(), p(d).into()]
    };
    ok(&args(a.path()).iter().map(String::as_str).collect::<Vec<_>>());
    let out = bin().args(args(b.path())).env("JUNCTIO_THREADS", "1").output().unwrap();
    assert!(out.status.success());
    for name in ["eps_0.2_0.2_0.2.csv", "eps_0.2_0.2_0.2.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let out = bin().args(["junction", p(&scenario("symmetric.json"))]).env("JUNCTIO_THREADS", "many").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
