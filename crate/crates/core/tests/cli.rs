//! Command-line behaviour: artifacts, determinism, exit codes.

use std::fs;
use std::path::Path;

use henon::cli::{run, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};

fn henon(args: &[&str]) -> i32 {
    run(std::iter::once("henon").chain(args.iter().copied()))
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn assert_versioned(files: &[(String, Vec<u8>)]) {
    for (name, bytes) in files {
        let text = String::from_utf8_lossy(bytes);
        if name.ends_with(".csv") {
            assert!(text.starts_with("# schema_version=1 kind="), "{name}");
        } else {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["schema_version"], 1, "{name}");
            assert!(v["kind"].is_string(), "{name}");
        }
    }
}

#[test]
fn solve_writes_profile_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = d.path().to_str().unwrap();
        assert_eq!(henon(&["solve", "--N", "3", "--alpha", "1", "--p", "2", "--out", out]), EXIT_OK);
    }
    let fa = read_all(a.path());
    assert_eq!(fa, read_all(b.path()));
    let names: Vec<&str> = fa.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(names, ["profile.csv", "profile.json"]);
    assert_versioned(&fa);
    let csv = String::from_utf8(fa[0].1.clone()).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "r,u,u_prime,w,z,g,one_minus_g");
}

#[test]
fn spectrum_and_scan_artifacts() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    assert_eq!(henon(&["spectrum", "--p", "3", "--k-max", "2", "--out", out]), EXIT_OK);
    let files = read_all(d.path());
    assert_versioned(&files);
    let morse: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("morse.json")).unwrap()).unwrap();
    assert_eq!(morse["morse_index"], 4);
    assert!(d.path().join("spectrum_k2.csv").exists());

    let s = tempfile::tempdir().unwrap();
    let out = s.path().to_str().unwrap();
    assert_eq!(henon(&["scan", "--grid", "11", "--out", out]), EXIT_OK);
    let files = read_all(s.path());
    assert_versioned(&files);
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(s.path().join("scan.csv")).unwrap();
    let morse: Vec<u64> = rdr.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert_eq!(morse.len(), 11);
    assert_eq!((morse[0], morse[10]), (1, 4));
    let deg = henon::io::read_degeneracies(&s.path().join("degeneracy.json")).unwrap();
    assert_eq!(deg.changing_count, 1);

    // continue from the scan output
    let c = tempfile::tempdir().unwrap();
    let from = s.path().join("degeneracy.json");
    let args = ["continue", "--from-degeneracy", from.to_str().unwrap(), "--steps", "3", "--radial-points", "201", "--modes", "6"];
    let out = c.path().to_str().unwrap();
    assert_eq!(henon(&[&args[..], &["--out", out]].concat()), EXIT_OK);
    let files = read_all(c.path());
    assert_versioned(&files);
    assert!(c.path().join("branch/point_0002.csv").exists());
    let branch: serde_json::Value = serde_json::from_slice(&fs::read(c.path().join("branch.json")).unwrap()).unwrap();
    assert_eq!(branch["points"].as_array().unwrap().len(), 3);
    assert_eq!(branch["termination"], "step-limit");
}

#[test]
fn asymptotics_summary() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    assert_eq!(henon(&["asymptotics", "--out", out]), EXIT_OK);
    let files = read_all(d.path());
    assert_versioned(&files);
    let s: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("asymptotics.json")).unwrap()).unwrap();
    assert_eq!(s["deviations_decrease"], true);
    assert_eq!(s["bound_holds"], true);
}

#[test]
fn usage_errors() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    assert_eq!(henon(&["solve", "--out", out]), EXIT_USAGE);
    assert_eq!(henon(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(henon(&["solve", "--p", "7.5", "--out", out]), EXIT_USAGE);
    assert_eq!(henon(&["solve", "--N", "2", "--p", "2", "--out", out]), EXIT_USAGE);
    assert_eq!(henon(&["--help"]), EXIT_OK);
}

#[test]
fn numerical_failure_writes_manifest() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    let missing = d.path().join("nope.json");
    assert_eq!(henon(&["continue", "--from-degeneracy", missing.to_str().unwrap(), "--out", out]), EXIT_NUMERICAL);
    let m: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("error.json")).unwrap()).unwrap();
    assert_eq!(m["kind"], "error");
    assert_eq!(m["command"], "continue");
}
