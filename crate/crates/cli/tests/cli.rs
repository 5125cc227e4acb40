use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperbounds"))
        .args(args)
        .arg("--cache-dir")
        .arg(dir.join("cache"))
        .arg("--plot-dir")
        .arg(dir.join("plots"))
        .env_remove("HYPERBOUNDS_CACHE")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn without_timing(out: &Output) -> String {
    let mut v = json(out);
    v.as_object_mut().unwrap().remove("timing");
    v.to_string()
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let ok = run(tmp.path(), &["verify-conjecture", "--n", "2..5", "--r", "9"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let v = json(&ok);
    assert_eq!(v["schema"], "1");
    assert_eq!(v["overall"], "pass");
    assert!(v["timing"]["elapsed_seconds"].is_number());

    assert_eq!(run(tmp.path(), &["verify-conjecture", "--n", "7", "--mode", "exact"]).status.code(), Some(2));
    assert_eq!(run(tmp.path(), &["verify-conjecture", "--r", "1"]).status.code(), Some(3));
    assert_eq!(run(tmp.path(), &["verify-conjecture", "--bogus"]).status.code(), Some(3));
    assert_eq!(run(tmp.path(), &["circle", "--rho", "0.5"]).status.code(), Some(3));
}

#[test]
fn circle_writes_plots() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["circle", "--samples", "2001"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<String> =
        fs::read_dir(tmp.path().join("plots")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names.len(), 6, "{names:?}");
    for name in &names {
        let text = fs::read_to_string(tmp.path().join("plots").join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("theta,value"));
        assert_eq!(lines.count(), 2001);
    }
}

#[test]
fn cache_lifecycle() {
    let tmp = TempDir::new().unwrap();
    let warm = run(tmp.path(), &["cache", "warm", "--n", "2..4"]);
    assert_eq!(warm.status.code(), Some(0), "{}", String::from_utf8_lossy(&warm.stderr));
    let inspect = json(&run(tmp.path(), &["cache", "inspect"]));
    let entries = inspect["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 6, "a table and its bucket sums per n");

    let again = run(tmp.path(), &["cache", "warm", "--n", "2..4"]);
    assert!(String::from_utf8_lossy(&again.stderr).contains("already cached"));

    let purge = run(tmp.path(), &["cache", "purge"]);
    assert_eq!(purge.status.code(), Some(0));
    let inspect = json(&run(tmp.path(), &["cache", "inspect"]));
    assert!(inspect["entries"].as_array().unwrap().is_empty());
}

#[test]
fn corrupt_cache_is_recomputed() {
    let tmp = TempDir::new().unwrap();
    let args = ["verify-conjecture", "--n", "2..4", "--r", "9,20"];
    let first = run(tmp.path(), &args);
    assert_eq!(first.status.code(), Some(0));
    let cache = tmp.path().join("cache");
    let files: Vec<_> = fs::read_dir(&cache).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(!files.is_empty());
    for f in &files {
        let mut bytes = fs::read(f).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0xff;
        fs::write(f, bytes).unwrap();
    }
    let second = run(tmp.path(), &args);
    assert_eq!(second.status.code(), Some(0), "{}", String::from_utf8_lossy(&second.stderr));
    assert_eq!(without_timing(&first), without_timing(&second));
}

#[test]
fn deterministic_output() {
    let tmp = TempDir::new().unwrap();
    let args = ["all", "--samples", "2001", "--n", "2..4"];
    let a = run(tmp.path(), &[&args[..], &["--workers", "1"]].concat());
    let b = run(tmp.path(), &[&args[..], &["--workers", "1"]].concat());
    let c = run(tmp.path(), &[&args[..], &["--workers", "4"]].concat());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(without_timing(&a), without_timing(&b));
    assert_eq!(without_timing(&a), without_timing(&c));
}

#[test]
fn out_flag_writes_file() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("report.json");
    let out = run(tmp.path(), &["estimates", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["overall"], "pass");
}
