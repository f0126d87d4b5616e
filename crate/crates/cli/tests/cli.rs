use std::path::Path;
use std::process::{Command, Output};

use pinch_cli::common::load_config;
use pinch_cli::render::RenderConfig;
use pinch_cli::selftest::SelftestConfig;
use serde_json::Value;

fn pinch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pinch")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn unknown_top_level_key_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"resolutoin": 64}"#);
    let out = tmp.path().join("run");
    let o = pinch(&["render", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("resolutoin"));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn unknown_nested_key_is_an_error() {
    let err = load_config(&RenderConfig::default(), r#"{"render": {"budget": 10, "bogus": 1}}"#).unwrap_err();
    assert!(err.to_string().contains("bogus"));
}

#[test]
fn config_must_be_an_object() {
    assert!(load_config(&RenderConfig::default(), "[1, 2]").is_err());
    assert!(load_config(&RenderConfig::default(), "{").is_err());
}

#[test]
fn nested_objects_merge_key_by_key() {
    let cfg = load_config(&RenderConfig::default(), r#"{"render": {"budget": 77}}"#).unwrap();
    let d = RenderConfig::default();
    assert_eq!(cfg.render.budget, 77);
    assert_eq!(cfg.render.escape_radius, d.render.escape_radius);
    assert_eq!(cfg.resolution, d.resolution);
}

#[test]
fn empty_config_gives_defaults() {
    assert_eq!(load_config(&SelftestConfig::default(), "{}").unwrap(), SelftestConfig::default());
}

#[test]
fn manifest_echoes_resolved_config_and_seed_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"resolution": 64, "render": {"budget": 60}}"#);
    let out = tmp.path().join("run");
    let o = pinch(&["render", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "42", "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["schema"], "pinchdyn.manifest/1");
    assert_eq!(m["command"], "render");
    assert_eq!(m["seed"], 42);
    assert_eq!(m["threads"], 1);
    assert_eq!(m["config"]["seed"], 42);
    assert_eq!(m["config"]["resolution"], 64);
    assert_eq!(m["config"]["render"]["budget"], 60);
    assert_eq!(m["config"]["function"], "bergweiler");
    assert_eq!(m["config"]["membership"]["samples"], 50);
    assert_eq!(m["all_pass"], true);
    for f in m["outputs"].as_array().unwrap() {
        assert!(out.join(f.as_str().unwrap()).exists());
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn failed_audit_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "c.json",
        r#"{"resolution": 64, "expected_fixed_points": [{"location": [5.0, 5.0], "tol": 1e-6, "class": "repelling"}]}"#,
    );
    let out = tmp.path().join("run");
    let o = pinch(&["render", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL fixed-point"));
    assert_eq!(manifest(&out)["all_pass"], false);
}

#[test]
fn non_entire_function_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"function": "1/z", "resolution": 32}"#);
    let o = pinch(&["render", "--config", &cfg, "--out", tmp.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_config_file_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pinch(&["classify", "--config", tmp.path().join("none.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn moduli_selftest_writes_its_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = pinch(&["moduli-selftest", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("moduli.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "check,params,lhs,rhs,slack,pass");
    assert!(csv.lines().filter(|l| l.starts_with("separation-bound-random,")).count() == 200);
}

#[test]
fn classify_rejects_unknown_entry_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"entries": [{"function": "fatou", "kind": "x"}]}"#);
    let o = pinch(&["classify", "--config", &cfg, "--out", tmp.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn pinch_config_rejects_unknown_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"probes": {"disc_count": 3}}"#);
    let o = pinch(&["thmd-pinch", "--config", &cfg, "--out", tmp.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("disc_count"));
}
