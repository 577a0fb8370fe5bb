use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn germflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_germflow"))
        .args(args)
        .env("GERMFLOW_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// The EX1a eigenvalues with the given jet terms.
fn ex1a_with_terms(dir: &Path, terms: &str) -> String {
    let text = format!(
        r#"{{
  "version": 1,
  "name": "variant",
  "eigenvalues": {{
    "unit": [
      {{"rho": "0", "sigma": "15/4"}},
      {{"rho": "0", "sigma": "-5/2"}},
      {{"rho": "0", "sigma": "1"}}
    ],
    "theta": 0.6180339887498949,
    "inner": []
  }},
  "jet": {{"order": 12, "coefficients": "relative", "terms": [{terms}]}}
}}"#
    );
    let path = dir.join("variant.json");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn malformed_json_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    fs::write(&path, "{\"version\": 1, \"name\": ").unwrap();
    let out = germflow(&["analyze", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error[parse-error]"), "{}", stderr(&out));
}

#[test]
fn missing_file_exits_with_2() {
    let out = germflow(&["analyze", "/nonexistent/germ.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_bundled_name_exits_with_2() {
    let out = germflow(&["analyze", "@nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("error[usage]"));
}

#[test]
fn petal_out_of_range_exits_with_2() {
    let out = germflow(&["simulate", "@ex1a", "--petal", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("error[petal-out-of-range]"));
}

#[test]
fn linear_germ_has_nothing_to_certify() {
    let dir = tempfile::tempdir().unwrap();
    let path = ex1a_with_terms(dir.path(), "");
    let out = germflow(&["certify", &path]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("nothing to certify"), "{}", stderr(&out));
}

#[test]
fn degenerate_eigenvalues_exit_with_3() {
    let out = germflow(&["analyze", "@degenerate"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn strict_mode_turns_a_failed_check_into_4() {
    let dir = tempfile::tempdir().unwrap();
    let path = ex1a_with_terms(dir.path(), "[1, [3, 3, 0], -1, 0], [2, [0, 3, 5], -1, 0]");
    let relaxed = germflow(&["certify", &path]);
    assert_eq!(relaxed.status.code(), Some(0));
    assert!(stderr(&relaxed).contains("check failed: parabolically attracting"));
    let strict = germflow(&["certify", &path, "--strict"]);
    assert_eq!(strict.status.code(), Some(4));
    let ok = germflow(&["certify", "@ex1a", "--strict"]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn reports_are_byte_stable() {
    for cmd in ["analyze", "certify"] {
        let a = germflow(&[cmd, "@ex1a"]);
        let b = germflow(&[cmd, "@ex1a"]);
        assert_eq!(a.status.code(), Some(0));
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
    let a = germflow(&["flower", "@ex0", "--samples", "300", "--seed", "7"]);
    let b = germflow(&["flower", "@ex0", "--samples", "300", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn analyze_report_is_json() {
    let out = germflow(&["analyze", "@ex1a"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.is_object());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("generators"));
}

#[test]
fn simulate_writes_orbits_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = germflow(&[
        "simulate",
        "@ex0",
        "--samples",
        "8",
        "--seed",
        "3",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = fs::read_to_string(out_dir.join("report.json")).unwrap();
    assert_eq!(report.as_bytes(), out.stdout.as_slice());
    let orbit = fs::read_to_string(out_dir.join("orbit_1.csv")).unwrap();
    let header = orbit.lines().next().unwrap();
    assert!(header.starts_with("iter,re_z1,im_z1,"), "{header}");
    assert!(header.ends_with(",re_U,im_U,direction_residual"));
    assert!(orbit.lines().count() > 2);
}
