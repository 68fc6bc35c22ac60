use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lsub(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsub"))
        .args(args)
        .output()
        .expect("run lsub")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stderr(o)))
}

fn worst(report: &Value, id: &str) -> f64 {
    report["suites"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|s| s["summaries"].as_array().unwrap())
        .find(|s| s["id"] == id)
        .unwrap_or_else(|| panic!("no summary for {id}"))["worst_residual"]
        .as_f64()
        .unwrap()
}

#[test]
fn list_prints_every_catalog_entry() {
    let o = lsub(&["list"]);
    assert!(o.status.success());
    let out = stdout(&o);
    for name in lsub_core::catalog::names() {
        assert!(out.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn model_family_structure_suite_exits_zero() {
    let o = lsub(&[
        "verify",
        "model-r2n1",
        "--n",
        "2",
        "--epsilon",
        "-1",
        "--suites",
        "structure",
        "--samples",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&o);
    assert_eq!(r["verdict"]["pass"], true);
    assert_eq!(r["suites"].as_array().unwrap().len(), 1);
    assert_eq!(r["model"]["dim"], 5);
}

#[test]
fn exported_model_verifies_like_catalog_entry() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("ls.json");
    let o = lsub(&["export", "ls-r5-r2", "--out", file.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let args = [
        "--suites",
        "structure,submersion,antiinv",
        "--samples",
        "4",
        "--seed",
        "7",
    ];
    let from_catalog = lsub(&[&["verify", "ls-r5-r2"][..], &args].concat());
    let from_file = lsub(&[&["verify", file.to_str().unwrap()][..], &args].concat());
    assert_eq!(from_catalog.status.code(), Some(0), "{}", stderr(&from_catalog));
    assert_eq!(from_file.status.code(), Some(0), "{}", stderr(&from_file));
    let (a, b) = (report(&from_catalog), report(&from_file));
    assert_eq!(a["suites"], b["suites"]);
    assert_eq!(a["sampling"], b["sampling"]);
}

#[test]
fn out_flag_writes_markdown_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("report.md");
    let o = lsub(&[
        "verify",
        "product-control",
        "--suites",
        "structure,submersion",
        "--samples",
        "3",
        "--format",
        "md",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert!(o.status.code().is_some_and(|c| c < 2), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let md = std::fs::read_to_string(&file).unwrap();
    assert!(md.starts_with("# "));
    assert!(md.contains("## structure"));
    assert!(md.contains("## submersion"));
    assert!(md.contains("| criterion |"));
}

#[test]
fn failing_run_exits_one_and_names_failures() {
    let o = lsub(&["verify", "lps-r5-r2", "--suites", "structure", "--samples", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(&o);
    assert_eq!(r["verdict"]["pass"], false);
    let failed = r["verdict"]["failed"].as_array().unwrap();
    assert!(!failed.is_empty());
    for id in failed {
        assert!(stderr(&o).contains(&format!("FAIL {}", id.as_str().unwrap())));
    }
}

#[test]
fn malformed_model_file_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    std::fs::write(&file, "{\"name\": \"x\",\n  \"coords\": [1, 2]\n").unwrap();
    let o = lsub(&["verify", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("error: "), "{err}");
    assert!(err.contains("line 2, column"), "{err}");
    assert_eq!(err.matches("line 2").count(), 1, "{err}");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["verify", "no-such-model"][..],
        &["verify", "ls-r5-r2", "--kappa", "2"],
        &["verify", "ls-r5-r2", "--suites", "bogus"],
        &["verify", "ls-r5-r2", "--n", "2"],
        &["verify", "model-r2n1", "--epsilon", "0.5"],
        &["export", "no-such-model", "--out", "/dev/null"],
    ] {
        let o = lsub(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn missing_file_is_an_error() {
    let o = lsub(&["verify", Path::new("/nonexistent").join("m.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_output_and_seed_changes_points() {
    let args = [
        "verify",
        "ls-r5-r2",
        "--suites",
        "antiinv",
        "--samples",
        "4",
        "--seed",
        "11",
    ];
    let (a, b) = (lsub(&args), lsub(&args));
    assert_eq!(a.stdout, b.stdout);
    let c = lsub(&[
        "verify",
        "ls-r5-r2",
        "--suites",
        "antiinv",
        "--samples",
        "4",
        "--seed",
        "12",
    ]);
    assert_ne!(report(&a)["sampling"]["points"], report(&c)["sampling"]["points"]);
}

#[test]
fn kappa_one_is_accepted_and_recorded() {
    let o = lsub(&[
        "verify",
        "ls-r5-r2",
        "--suites",
        "structure",
        "--samples",
        "3",
        "--kappa",
        "1",
    ]);
    assert!(o.status.code().is_some_and(|c| c < 2), "{}", stderr(&o));
    let r = report(&o);
    assert_eq!(r["config"]["kappa"], 1.0);
    assert!(worst(&r, "phi^2 X = eps X + eta(X) xi") <= 1e-9);
}
