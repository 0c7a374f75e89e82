use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qlwe-lab"))
}

fn config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("cfg.json");
    fs::write(&path, body).unwrap();
    path
}

fn run(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .args(["run", "--config"])
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn list_names_every_experiment() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "sieve-recover",
        "center-sweep",
        "oblivious-tv",
        "edcp-verify",
        "phase-output-verify",
        "regev-sample-verify",
        "gaussian-distance",
        "tail-bounds",
    ] {
        assert!(text.contains(name), "{name} missing from list");
    }
}

#[test]
fn unknown_experiment_fails_with_names() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), r#"{"experiment": "no-such-thing"}"#);
    let out = run(&cfg, &tmp.path().join("out"), &[]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("no-such-thing"));
    assert!(err.contains("sieve-recover") && err.contains("tail-bounds"));
}

#[test]
fn unknown_config_field_is_an_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), r#"{"experiment": "tail-bounds", "sead": 3}"#);
    let out = run(&cfg, &tmp.path().join("out"), &[]);
    assert!(!out.status.success());
}

#[test]
fn result_json_is_byte_reproducible_across_jobs() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), r#"{"experiment": "phase-output-verify", "seed": 11}"#);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run(&cfg, &a, &["--jobs", "1"]).status.success());
    assert!(run(&cfg, &b, &["--jobs", "3"]).status.success());
    assert_eq!(files(&a), files(&b));
    for name in files(&a) {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name} differs");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), r#"{"experiment": "phase-output-verify", "seed": 1}"#);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run(&cfg, &a, &["--seed", "77"]).status.success());
    assert!(run(&cfg, &b, &[]).status.success());
    let read = |d: &Path| -> serde_json::Value {
        serde_json::from_slice(&fs::read(d.join("result.json")).unwrap()).unwrap()
    };
    let (ra, rb) = (read(&a), read(&b));
    assert_eq!(ra["seed"], 77);
    assert_eq!(rb["seed"], 1);
    assert_ne!(ra["metrics"]["a_chi2"], rb["metrics"]["a_chi2"]);
}

#[test]
fn hidden_records_need_emit_hidden() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), r#"{"experiment": "edcp-verify", "seed": 5}"#);
    let (plain, secret) = (tmp.path().join("plain"), tmp.path().join("secret"));
    assert!(run(&cfg, &plain, &[]).status.success());
    assert!(run(&cfg, &secret, &["--emit-hidden"]).status.success());

    let plain_files = files(&plain);
    assert!(plain_files.iter().all(|f| !f.contains("SECRET")), "{plain_files:?}");
    let secret_files = files(&secret);
    let hidden: Vec<&String> = secret_files.iter().filter(|f| f.ends_with(".SECRET.csv")).collect();
    assert!(!hidden.is_empty());
    let hidden_header = fs::read_to_string(secret.join(hidden[0])).unwrap();
    let hidden_header = hidden_header.lines().next().unwrap();
    for f in &plain_files {
        let text = fs::read_to_string(plain.join(f)).unwrap();
        assert!(!text.contains(hidden_header), "{f} carries hidden columns");
    }
    // The public files are identical either way.
    for f in &plain_files {
        assert_eq!(fs::read(plain.join(f)).unwrap(), fs::read(secret.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn failed_criterion_gives_nonzero_exit() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(
        tmp.path(),
        r#"{"experiment": "tail-bounds", "params": {"sigmas": [1.0], "points": 4}}"#,
    );
    let out = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("criterion 14: FAIL"));
    let record: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("out/result.json")).unwrap()).unwrap();
    assert_eq!(record["pass"]["criterion_14"], false);
}

#[test]
fn result_json_has_the_documented_keys() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), r#"{"experiment": "gaussian-distance"}"#);
    let out = tmp.path().join("out");
    assert!(run(&cfg, &out, &[]).status.success());
    let record: serde_json::Value = serde_json::from_slice(&fs::read(out.join("result.json")).unwrap()).unwrap();
    let keys: Vec<&str> = record.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["experiment", "metrics", "params", "pass", "seed"]);
    assert_eq!(record["params"]["q"], 97);
    assert_eq!(record["pass"]["criterion_13"], true);
}
