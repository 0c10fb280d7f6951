use std::path::Path;
use std::process::{Command, Output};

fn hdemg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdemg")).current_dir(dir).args(args).output().expect("spawn hdemg")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = hdemg(dir, args);
    assert!(out.status.success(), "{}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr));
}

fn error_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("JSON error on stderr");
    serde_json::from_str(line).unwrap()
}

fn synth_and_preprocess(dir: &Path, extra: &[&str]) {
    ok(dir, &["synth", "--out", "s", "--seed", "4", "--duration-s", "24"]);
    let mut args = vec!["preprocess", "--data", "s", "--out", "p"];
    args.extend(extra);
    ok(dir, &args);
}

#[test]
fn evaluate_against_itself_is_perfect() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth_and_preprocess(dir, &[]);
    ok(dir, &["evaluate", "--actual", "p", "--predicted", "p/angles_norm.csv", "--out", "ev"]);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("ev/report.json")).unwrap()).unwrap();
    let run = &report["runs"][0];
    assert!((run["mpcc"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(run["md_mm"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn grid_selection_reduces_channels() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    synth_and_preprocess(dir, &["--grid", "16x2"]);
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("p/channel_stats.json")).unwrap()).unwrap();
    assert_eq!(stats["mean"].as_array().unwrap().len(), 32);
}

#[test]
fn exit_codes_follow_error_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    let out = hdemg(dir, &["synth", "--out", "s", "--config", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "config");

    std::fs::write(dir.join("bad.json"), "{\"duration_s\": -4}").unwrap();
    let out = hdemg(dir, &["synth", "--out", "s", "--config", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::create_dir(dir.join("empty")).unwrap();
    let out = hdemg(dir, &["preprocess", "--data", "empty", "--out", "p"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"]["exit_code"], 3);

    let out = hdemg(dir, &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spm_needs_three_subjects() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("spm.json"),
        r#"{"conditions": [{"name": "a", "subjects": [{"actual": "p", "predicted": "x.csv"}, {"actual": "p", "predicted": "x.csv"}]}]}"#,
    )
    .unwrap();
    let out = hdemg(dir, &["spm", "--config", "spm.json", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
}
