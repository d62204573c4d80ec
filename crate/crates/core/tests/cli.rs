use std::path::Path;
use std::process::{Command, Output};

fn hbl(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hbl"))
        .args(args)
        .env_remove("HBL_OUT")
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn hbl")
}

fn scalar(report: &Path, key: &str) -> f64 {
    let text = std::fs::read_to_string(report).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["scalars"][key].as_f64().unwrap()
}

#[test]
fn bellman_values_and_infeasible_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = hbl(&["bellman", "--p", "2", "--f", "1", "--F", "1"], dir.path());
    assert!(out.status.success());
    let json = dir.path().join("bellman.json");
    assert_eq!(scalar(&json, "c"), 1.0);
    assert_eq!(scalar(&json, "B"), 1.0);

    let out = hbl(&["bellman", "--p", "2", "--f", "1", "--F", "2"], dir.path());
    assert!(out.status.success());
    assert!((scalar(&json, "B") - (3.0 + 2.0 * 2f64.sqrt())).abs() < 1e-14);

    let out = hbl(&["bellman", "--p", "2", "--f", "2", "--F", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible: f^p > F"));
}

#[test]
fn bad_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    for body in [r#"{"q": 1}"#, r#"{"seed": "x"}"#] {
        let cfg = dir.path().join("cfg.json");
        std::fs::write(&cfg, body).unwrap();
        let out = hbl(&["bellman", "--config", cfg.to_str().unwrap()], dir.path());
        assert_eq!(out.status.code(), Some(2), "{body}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
    }
    let out = hbl(&["simulate", "--a", "1.0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_subset_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = hbl(&["verify", "--only", "bellman"], dir.path());
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("verify.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn env_overrides_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_hbl"))
        .args(["bellman", "--out"])
        .arg(dir.path().join("from_flag"))
        .env("HBL_OUT", &env_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(env_dir.join("bellman.json").exists());
    assert!(!dir.path().join("from_flag").exists());
}

#[test]
fn optimize_is_deterministic_for_a_seed() {
    let args = ["optimize", "--cells", "64", "--max-iters", "40", "--seed", "3"];
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(hbl(&args, a.path()).status.success());
    assert!(hbl(&args, b.path()).status.success());
    for name in ["optimize_trace.csv", "optimize_final.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name}");
    }
}
