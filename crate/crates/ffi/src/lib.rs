//! C ABI over `lsub_core`.
//!
//! Every entry point returns a status code or a nullable pointer. On failure the
//! message is available from `lsub_last_error` on the same thread. Strings
//! returned by this library are owned by the caller and released with
//! `lsub_string_free`; reports are released with `lsub_report_free`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::{c_char, c_double, c_int};
use lsub_core::catalog;
use lsub_core::cli::{self, Report, RunConfig, Suite};
use lsub_core::geometry::Kappa;

/// Status codes shared by all fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsubStatus {
    /// The run completed and every gating criterion passed.
    Ok = 0,
    /// The run completed and at least one gating criterion failed.
    Fail = 1,
    /// The input could not be loaded or evaluated.
    Error = 2,
    /// A required pointer argument was null.
    NullArgument = 3,
    /// A string argument was not valid UTF-8 or an option was out of range.
    InvalidArgument = 4,
    /// The library caught an internal panic.
    Panic = 5,
}

/// Run options. Obtain defaults from `lsub_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LsubOptions {
    pub samples: u32,
    pub seed: u64,
    pub tol: c_double,
    /// 0.5 or 1.
    pub kappa: c_double,
    /// Comma separated suite names, or null for all suites.
    pub suites: *const c_char,
    /// Half-dimension for `model-r2n1`; 0 keeps the default.
    pub n: u32,
    /// Structure sign for `model-r2n1`; 0 keeps the default.
    pub epsilon: c_double,
}

/// Opaque verification report.
pub struct LsubReport {
    inner: Report,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guarded<T>(fallback: T, f: impl FnOnce() -> T) -> T {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(_) => {
            set_error("internal panic");
            fallback
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, LsubStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        return Err(LsubStatus::NullArgument);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        LsubStatus::InvalidArgument
    })
}

fn into_c_string(s: String) -> *mut c_char {
    match CString::new(s) {
        Ok(c) => c.into_raw(),
        Err(_) => {
            set_error("output contains an interior NUL byte");
            ptr::null_mut()
        }
    }
}

fn parse_suites(list: &str) -> Result<Vec<Suite>, String> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if name == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        let s = Suite::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| format!("unknown suite `{name}`"))?;
        out.push(s);
    }
    if out.is_empty() {
        return Err("no suites selected".into());
    }
    Ok(out)
}

unsafe fn config(input: &str, opts: &LsubOptions) -> Result<RunConfig, LsubStatus> {
    let invalid = |msg: String| {
        set_error(msg);
        LsubStatus::InvalidArgument
    };
    let kappa = Kappa::from_factor(opts.kappa).ok_or_else(|| invalid("kappa must be 0.5 or 1".into()))?;
    let suites = if opts.suites.is_null() {
        Suite::ALL.to_vec()
    } else {
        parse_suites(str_arg(opts.suites, "suites")?).map_err(invalid)?
    };
    let mut c = RunConfig::new(input)
        .with_suites(&suites)
        .with_samples(opts.samples as usize)
        .with_seed(opts.seed);
    c.tol = opts.tol;
    c.kappa = kappa;
    c.n = (opts.n != 0).then_some(opts.n as usize);
    c.epsilon = (opts.epsilon != 0.0).then_some(opts.epsilon);
    Ok(c)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lsub_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default options: 25 samples, seed 42, tol 1e-9, kappa 0.5, all suites.
#[no_mangle]
pub extern "C" fn lsub_options_default() -> LsubOptions {
    let d = RunConfig::new("");
    LsubOptions {
        samples: d.samples as u32,
        seed: d.seed,
        tol: d.tol,
        kappa: 0.5,
        suites: ptr::null(),
        n: 0,
        epsilon: 0.0,
    }
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn lsub_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Verify a catalog entry or model file. `options` may be null for defaults.
/// On `Ok` or `Fail` a report is stored in `*out`; otherwise `*out` is null.
///
/// # Safety
/// `input` must be a NUL-terminated string, `options` null or valid, and `out`
/// a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn lsub_verify(
    input: *const c_char,
    options: *const LsubOptions,
    out: *mut *mut LsubReport,
) -> LsubStatus {
    guarded(LsubStatus::Panic, || {
        if out.is_null() {
            set_error("out is null");
            return LsubStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let input = match str_arg(input, "input") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let opts = if options.is_null() {
            lsub_options_default()
        } else {
            *options
        };
        let cfg = match config(input, &opts) {
            Ok(c) => c,
            Err(status) => return status,
        };
        match cli::run(&cfg) {
            Ok(report) => {
                let status = if report.verdict.pass {
                    LsubStatus::Ok
                } else {
                    LsubStatus::Fail
                };
                *out = Box::into_raw(Box::new(LsubReport { inner: report }));
                status
            }
            Err(e) => {
                set_error(e.to_string());
                LsubStatus::Error
            }
        }
    })
}

/// 1 when every gating criterion passed, 0 when not, -1 for a null report.
///
/// # Safety
/// `report` must be null or a pointer returned by `lsub_verify`.
#[no_mangle]
pub unsafe extern "C" fn lsub_report_pass(report: *const LsubReport) -> c_int {
    match report.as_ref() {
        Some(r) => c_int::from(r.inner.verdict.pass),
        None => -1,
    }
}

/// Number of failed gating criteria, or -1 for a null report.
///
/// # Safety
/// `report` must be null or a pointer returned by `lsub_verify`.
#[no_mangle]
pub unsafe extern "C" fn lsub_report_failed_count(report: *const LsubReport) -> c_int {
    match report.as_ref() {
        Some(r) => r.inner.verdict.failed.len() as c_int,
        None => -1,
    }
}

/// Report as JSON. Free with `lsub_string_free`.
///
/// # Safety
/// `report` must be null or a pointer returned by `lsub_verify`.
#[no_mangle]
pub unsafe extern "C" fn lsub_report_json(report: *const LsubReport) -> *mut c_char {
    guarded(ptr::null_mut(), || match report.as_ref() {
        Some(r) => into_c_string(r.inner.to_json()),
        None => {
            set_error("report is null");
            ptr::null_mut()
        }
    })
}

/// Report as Markdown tables. Free with `lsub_string_free`.
///
/// # Safety
/// `report` must be null or a pointer returned by `lsub_verify`.
#[no_mangle]
pub unsafe extern "C" fn lsub_report_markdown(report: *const LsubReport) -> *mut c_char {
    guarded(ptr::null_mut(), || match report.as_ref() {
        Some(r) => into_c_string(r.inner.to_markdown()),
        None => {
            set_error("report is null");
            ptr::null_mut()
        }
    })
}

/// Release a report. Null is ignored.
///
/// # Safety
/// `report` must be null or a pointer returned by `lsub_verify` that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn lsub_report_free(report: *mut LsubReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Catalog entry names, one per line. Free with `lsub_string_free`.
#[no_mangle]
pub extern "C" fn lsub_catalog_names() -> *mut c_char {
    guarded(ptr::null_mut(), || into_c_string(catalog::names().join("\n")))
}

/// Catalog entry as a model JSON document, or null for an unknown name.
/// Free with `lsub_string_free`.
///
/// # Safety
/// `name` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lsub_catalog_export(name: *const c_char) -> *mut c_char {
    guarded(ptr::null_mut(), || {
        let Ok(name) = str_arg(name, "name") else {
            return ptr::null_mut();
        };
        match catalog::document(name) {
            Ok(doc) => into_c_string(doc.to_json()),
            Err(e) => {
                set_error(e.to_string());
                ptr::null_mut()
            }
        }
    })
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string returned by this library that has not been
/// freed.
#[no_mangle]
pub unsafe extern "C" fn lsub_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
