use std::ffi::{CStr, CString};
use std::ptr;

use lsub::*;

fn take(s: *mut libc::c_char) -> String {
    assert!(!s.is_null(), "{:?}", last_error());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { lsub_string_free(s) };
    out
}

fn last_error() -> Option<String> {
    let p = lsub_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn options(suites: &CString, samples: u32) -> LsubOptions {
    LsubOptions {
        samples,
        suites: suites.as_ptr(),
        ..lsub_options_default()
    }
}

#[test]
fn catalog_names_and_export() {
    let names = take(lsub_catalog_names());
    assert!(names.lines().any(|l| l == "ls-r5-r2"));
    let name = CString::new("ls-r5-r2").unwrap();
    let doc = take(unsafe { lsub_catalog_export(name.as_ptr()) });
    assert!(doc.trim_start().starts_with('{') && doc.contains("\"coords\""));

    let bad = CString::new("no-such-model").unwrap();
    assert!(unsafe { lsub_catalog_export(bad.as_ptr()) }.is_null());
    assert!(last_error().unwrap().contains("no-such-model"));
}

#[test]
fn verify_structure_suite_passes() {
    let input = CString::new("ls-r5-r2").unwrap();
    let suites = CString::new("structure,submersion").unwrap();
    let opts = options(&suites, 4);
    let mut report = ptr::null_mut();
    let status = unsafe { lsub_verify(input.as_ptr(), &opts, &mut report) };
    assert_eq!(status, LsubStatus::Ok, "{:?}", last_error());
    assert_eq!(unsafe { lsub_report_pass(report) }, 1);
    assert_eq!(unsafe { lsub_report_failed_count(report) }, 0);
    let json = take(unsafe { lsub_report_json(report) });
    assert!(json.contains("\"suite\": \"structure\"") || json.contains("\"suite\":\"structure\""));
    let md = take(unsafe { lsub_report_markdown(report) });
    assert!(md.contains('|'));
    unsafe { lsub_report_free(report) };
}

#[test]
fn failing_run_reports_fail_status() {
    let input = CString::new("lps-r5-r2").unwrap();
    let suites = CString::new("structure").unwrap();
    let opts = options(&suites, 3);
    let mut report = ptr::null_mut();
    let status = unsafe { lsub_verify(input.as_ptr(), &opts, &mut report) };
    assert_eq!(status, LsubStatus::Fail);
    assert_eq!(unsafe { lsub_report_pass(report) }, 0);
    assert!(unsafe { lsub_report_failed_count(report) } > 0);
    unsafe { lsub_report_free(report) };
}

#[test]
fn errors_set_status_and_message() {
    let mut report = ptr::null_mut();
    assert_eq!(
        unsafe { lsub_verify(ptr::null(), ptr::null(), &mut report) },
        LsubStatus::NullArgument
    );
    assert!(report.is_null());
    assert!(last_error().unwrap().contains("input"));

    let missing = CString::new("/nonexistent/model.json").unwrap();
    assert_eq!(
        unsafe { lsub_verify(missing.as_ptr(), ptr::null(), &mut report) },
        LsubStatus::Error
    );
    assert!(report.is_null());
    assert!(last_error().is_some());

    let input = CString::new("ls-r5-r2").unwrap();
    let suites = CString::new("bogus").unwrap();
    let opts = options(&suites, 2);
    assert_eq!(
        unsafe { lsub_verify(input.as_ptr(), &opts, &mut report) },
        LsubStatus::InvalidArgument
    );
    assert!(last_error().unwrap().contains("bogus"));

    let opts = LsubOptions {
        kappa: 0.25,
        ..lsub_options_default()
    };
    assert_eq!(
        unsafe { lsub_verify(input.as_ptr(), &opts, &mut report) },
        LsubStatus::InvalidArgument
    );

    assert_eq!(
        unsafe { lsub_verify(input.as_ptr(), ptr::null(), ptr::null_mut()) },
        LsubStatus::NullArgument
    );
}

#[test]
fn null_handles_are_tolerated() {
    unsafe {
        assert_eq!(lsub_report_pass(ptr::null()), -1);
        assert_eq!(lsub_report_failed_count(ptr::null()), -1);
        assert!(lsub_report_json(ptr::null()).is_null());
        lsub_report_free(ptr::null_mut());
        lsub_string_free(ptr::null_mut());
    }
}

#[test]
fn model_family_parameters_pass_through() {
    let input = CString::new("model-r2n1").unwrap();
    let suites = CString::new("structure").unwrap();
    let opts = LsubOptions {
        n: 2,
        epsilon: -1.0,
        ..options(&suites, 3)
    };
    let mut report = ptr::null_mut();
    let status = unsafe { lsub_verify(input.as_ptr(), &opts, &mut report) };
    assert_eq!(status, LsubStatus::Ok, "{:?}", last_error());
    let json = take(unsafe { lsub_report_json(report) });
    assert!(json.contains("model-r2n1"));
    unsafe { lsub_report_free(report) };
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/lsub.h")).unwrap();
    for f in [
        "lsub_version",
        "lsub_options_default",
        "lsub_last_error",
        "lsub_verify",
        "lsub_report_pass",
        "lsub_report_failed_count",
        "lsub_report_json",
        "lsub_report_markdown",
        "lsub_report_free",
        "lsub_catalog_names",
        "lsub_catalog_export",
        "lsub_string_free",
        "LSUB_STATUS_OK",
        "LsubOptions",
    ] {
        assert!(header.contains(f), "missing {f}");
    }
}

#[test]
fn c_program_links_against_static_library() {
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let target = std::env::var_os("CARGO_TARGET_DIR")
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| manifest.join("../../target"));
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    let mut build = std::process::Command::new(env!("CARGO"));
    build.args(["build", "-p", "lsub-ffi", "--lib"]).current_dir(manifest);
    if profile == "release" {
        build.arg("--release");
    }
    assert!(build.status().expect("cargo").success());
    let lib = target.join(profile).join("liblsub.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let exe = tempfile::tempdir().unwrap();
    let bin = exe.path().join("smoke");
    let cc = std::process::Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("cc");
    assert!(cc.success());
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).trim_end().ends_with("ok"));
}
