use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frac-lab")).args(args).output().expect("spawn frac-lab")
}

fn json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn constants_closed_form() {
    let v = json(&run(&["constants", "--n", "1", "--p", "2"]));
    let two_pi_sq = 2.0 * std::f64::consts::PI.powi(2);
    assert!((v["gamma"].as_f64().unwrap() - two_pi_sq).abs() < 1e-9);
    assert!((v["alpha_star"].as_f64().unwrap() - two_pi_sq).abs() < 1e-9);
    assert_eq!(v["omega"].as_f64().unwrap(), 2.0);
    for key in ["K", "terms_used", "tail_bound"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn constants_tail_bound() {
    let v = json(&run(&["constants", "--n", "2", "--p", "4"]));
    assert!(v["tail_bound"].as_f64().unwrap() < 1e-12);
    let v = json(&run(&["constants", "--n", "2", "--p", "4", "--s", "0.5"]));
    assert!(v["alpha_star"].as_f64().unwrap() > 0.0);
}

#[test]
fn constants_rejects_bad_parameters() {
    assert_eq!(run(&["constants", "--n", "1", "--p", "0.5"]).status.code(), Some(2));
    // the series diverges at p = n
    assert_eq!(run(&["constants", "--n", "2", "--p", "2"]).status.code(), Some(2));
    assert_eq!(run(&["constants", "--n", "2", "--p", "4", "--s", "0.3"]).status.code(), Some(2));
    assert_eq!(run(&["constants", "--n", "1"]).status.code(), Some(2));
}

#[test]
fn moser_csv() {
    let out = run(&["moser", "--n", "1", "--s", "0.5", "--eps", "0.1,0.01,0.001"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eps,seminorm_p,lp_norm_p,ratio"));
    let ratios: Vec<f64> = lines.map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(ratios.len(), 3);
    assert!(ratios.iter().all(|r| r.is_finite() && *r > 0.0));
    assert_eq!(run(&["moser", "--n", "1", "--s", "0.5", "--p", "3"]).status.code(), Some(2));
    assert_eq!(run(&["moser", "--eps", "0.01,0.1"]).status.code(), Some(2));
}

#[test]
fn seminorm_and_rearrange_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "u.csv", "x,value\n-1,0\n0,1\n0.5,0.2\n1,0\n");
    let a = json(&run(&["seminorm", "--input", &f, "--kind", "line", "--s", "0.5", "--p", "2"]));
    assert!(a["value"].as_f64().unwrap() > 0.0);

    let star = dir.path().join("star.csv");
    let out = run(&["rearrange", "--input", &f, "--out", star.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&star).unwrap();
    assert!(text.starts_with("r,value\n"));
    let b = json(&run(&["seminorm", "--input", star.to_str().unwrap(), "--s", "0.5", "--p", "2"]));
    assert!(b["value"].as_f64().unwrap() <= a["value"].as_f64().unwrap() * (1.0 + 1e-6));

    let bad = write(dir.path(), "bad.csv", "x,value\n0,1\nfoo,0\n");
    assert_eq!(run(&["seminorm", "--input", &bad, "--kind", "line", "--s", "0.5", "--p", "2"]).status.code(), Some(4));
}

#[test]
fn poincare_domain() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "d.json", r#"{"type":"intervals","intervals":[[0,1],[2,3],[4,5],[6,7]]}"#);
    let v = json(&run(&["poincare", "--domain", &d, "--grid-n", "64"]));
    assert_eq!(v["lower_bound"].as_f64(), Some(0.25));
    assert!(v["value"].as_f64().unwrap() >= 0.25);
    assert!(v["flags"].as_array().unwrap().is_empty());
    for key in ["iterations", "residual"] {
        assert!(v.get(key).is_some());
    }
    let aug = json(&run(&["poincare", "--domain", &d, "--grid-n", "64", "--ball", "-3,1", "--sigma", "1"]));
    assert!(aug["value"].as_f64().unwrap() > 0.0);

    let overlap = write(dir.path(), "o.json", r#"{"type":"intervals","intervals":[[0,2],[1,3]]}"#);
    assert_eq!(run(&["poincare", "--domain", &overlap]).status.code(), Some(2));
    let broken = write(dir.path(), "b.json", r#"{"type":"intervals","#);
    assert_eq!(run(&["poincare", "--domain", &broken]).status.code(), Some(4));
    let missing = dir.path().join("none.json");
    assert_eq!(run(&["poincare", "--domain", missing.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn ls_check_domains() {
    let dir = tempfile::tempdir().unwrap();
    let strips = write(dir.path(), "s.json", r#"{"type":"strips","intervals":[[0,1],[2,3],[4,5],[6,7]],"axis":1}"#);
    let v = json(&run(&["ls-check", "--domain", &strips, "--directions", "8", "--offsets", "-3:3:16"]));
    assert!(v["inf_bound"].as_f64().unwrap() > 0.0);
    assert_eq!(v["certified"], Value::Bool(true));
    assert_eq!(v["directions"].as_array().unwrap().len(), 8);

    let graphs = write(
        dir.path(),
        "g.json",
        r#"{"type":"between_graphs","lower":[[-5,0],[5,0]],"upper":[[-5,1],[0,2],[5,1]]}"#,
    );
    let v = json(&run(&["ls-check", "--domain", &graphs, "--directions", "4", "--offsets", "-1:1:5"]));
    assert!(v["inf_bound"].as_f64().unwrap() > 0.0);

    let crossing = write(dir.path(), "c.json", r#"{"type":"between_graphs","lower":[[0,1],[1,1]],"upper":[[0,0],[1,0]]}"#);
    assert_eq!(run(&["ls-check", "--domain", &crossing]).status.code(), Some(2));
}

#[test]
fn blowup_and_fa_scan() {
    let out = run(&["blowup", "--n", "1", "--s", "0.5", "--decades", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("eps,seminorm_p,lp_norm_p,value,inner_ball"));
    assert_eq!(text.lines().count(), 3);
    assert_eq!(run(&["blowup", "--weight", "cubic"]).status.code(), Some(2));

    let out = run(&["fa-scan", "--n", "1", "--decades", "2", "--alpha-frac", "0.5,1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 5);
}

#[test]
fn verify_subset() {
    let out = run(&["verify", "--suite", "1,2,7", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains("PASS")).count(), 3);
    assert!(text.ends_with("summary: 3/3 passed (seed 3)\n"));
    let v = json(&run(&["verify", "--suite", "1", "--format", "json"]));
    assert_eq!(v["passed"], Value::Bool(true));
    assert_eq!(run(&["verify", "--suite", "13"]).status.code(), Some(2));
}

#[test]
fn thread_cap_keeps_output() {
    let a = run(&["moser", "--n", "2", "--s", "0.5", "--decades", "2"]);
    let b = Command::new(env!("CARGO_BIN_EXE_frac-lab"))
        .args(["moser", "--n", "2", "--s", "0.5", "--decades", "2"])
        .env("FRAC_LAB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_frac-lab"))
        .args(["constants", "--n", "1", "--p", "2"])
        .env("FRAC_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
