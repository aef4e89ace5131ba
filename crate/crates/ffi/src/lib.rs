//! C ABI over the study workflow: load a configuration, sample scenarios,
//! assess reliability and accredit the configured addition.
//!
//! Every fallible call returns an [`AdqStatus`]. On failure the message is
//! available from [`adq_last_error`] on the same thread until the next
//! call. Strings handed out by the library are released with
//! [`adq_string_free`]; study handles with [`adq_study_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use adequacy::config::StudyConfig;
use adequacy::dispatch::Dispatcher;
use adequacy::elcc::{elcc_benchmark, Evaluator, StudyInputs};
use adequacy::scenario::{generate, ScenarioSet, TraceStore};
use adequacy::study::assess;

/// Outcome of a library call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdqStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or a call out of sequence.
    InvalidArgument = 1,
    /// Configuration or input validation failed.
    Validation = 2,
    /// Dispatch fault, bracketing failure or non-monotone metric.
    Numerical = 3,
    Io = 4,
    /// A panic was caught at the boundary.
    Internal = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdqDispatcher {
    Optimal = 0,
    Heuristic = 1,
}

impl From<AdqDispatcher> for Dispatcher {
    fn from(d: AdqDispatcher) -> Self {
        match d {
            AdqDispatcher::Optimal => Dispatcher::Optimal,
            AdqDispatcher::Heuristic => Dispatcher::Heuristic,
        }
    }
}

/// A loaded study: configuration, traces and, once sampled, scenarios.
pub struct AdqStudy {
    cfg: StudyConfig,
    traces: TraceStore,
    set: Option<ScenarioSet>,
    report: Option<String>,
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

fn status_of(e: &adequacy::Error) -> AdqStatus {
    match e.exit_code() {
        1 => AdqStatus::Validation,
        2 => AdqStatus::Numerical,
        _ => AdqStatus::Io,
    }
}

struct Fail(AdqStatus, String);

impl From<adequacy::Error> for Fail {
    fn from(e: adequacy::Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(AdqStatus::InvalidArgument, msg.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AdqStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AdqStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            AdqStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(invalid(&format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(&format!("{name} is not valid UTF-8")))
}

unsafe fn study_mut<'a>(p: *mut AdqStudy) -> Result<&'a mut AdqStudy, Fail> {
    p.as_mut().ok_or_else(|| invalid("study is null"))
}

fn open(cfg: StudyConfig) -> Result<Box<AdqStudy>, Fail> {
    let traces = cfg.load_traces()?;
    cfg.validate(&traces)?;
    Ok(Box::new(AdqStudy {
        cfg,
        traces,
        set: None,
        report: None,
    }))
}

/// Loads and validates a JSON configuration file. Relative paths in it are
/// resolved against the file's directory.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn adq_study_open(path: *const c_char, out: *mut *mut AdqStudy) -> AdqStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        *out = Box::into_raw(open(StudyConfig::from_path(Path::new(path))?)?);
        Ok(())
    })
}

/// Like [`adq_study_open`] with the configuration given as text and
/// relative paths resolved against `base_dir`.
///
/// # Safety
/// `json` and `base_dir` must be NUL-terminated strings and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn adq_study_from_json(
    json: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut AdqStudy,
) -> AdqStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = ptr::null_mut();
        let json = str_arg(json, "json")?;
        let dir = str_arg(base_dir, "base_dir")?;
        *out = Box::into_raw(open(StudyConfig::from_json(json, Path::new(dir))?)?);
        Ok(())
    })
}

/// Samples the configured scenario set, replacing any earlier one, and
/// writes its fingerprint (64 hex digits) to `fingerprint` if not null.
///
/// # Safety
/// `study` must come from this library; `fingerprint` must be null or
/// point to at least 65 bytes.
#[no_mangle]
pub unsafe extern "C" fn adq_study_generate(study: *mut AdqStudy, fingerprint: *mut c_char) -> AdqStatus {
    guard(|| {
        let s = study_mut(study)?;
        let c = &s.cfg;
        let set = generate(&c.system, &c.load, &s.traces, c.scenarios.count, c.scenarios.seed, &c.scenarios.options)?;
        if !fingerprint.is_null() {
            let fp = set.fingerprint().as_bytes();
            ptr::copy_nonoverlapping(fp.as_ptr().cast::<c_char>(), fingerprint, fp.len());
            *fingerprint.add(fp.len()) = 0;
        }
        s.set = Some(set);
        Ok(())
    })
}

/// Number of scenarios sampled so far, 0 before [`adq_study_generate`].
///
/// # Safety
/// `study` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn adq_study_scenario_count(study: *const AdqStudy) -> usize {
    study.as_ref().and_then(|s| s.set.as_ref()).map_or(0, |s| s.len())
}

fn sampled(s: &AdqStudy) -> Result<&ScenarioSet, Fail> {
    s.set.as_ref().ok_or_else(|| invalid("no scenarios; call adq_study_generate first"))
}

/// Expected unserved energy (MWh) and loss-of-load steps of the configured
/// fleet. Either output may be null.
///
/// # Safety
/// `study` must come from this library; outputs must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn adq_study_assess(
    study: *mut AdqStudy,
    dispatcher: AdqDispatcher,
    eue_mwh: *mut f64,
    lole_steps: *mut f64,
) -> AdqStatus {
    guard(|| {
        let s = study_mut(study)?;
        let c = &s.cfg;
        let a = assess(&c.system, &c.load, sampled(s)?, dispatcher.into(), &c.solver, &c.study.priority)?;
        if !eue_mwh.is_null() {
            *eue_mwh = a.eue_mwh;
        }
        if !lole_steps.is_null() {
            *lole_steps = a.lole_steps;
        }
        s.report = Some(serde_json::to_string(&a).map_err(adequacy::Error::from)?);
        Ok(())
    })
}

/// Accredits the configured addition; writes the credit in MW.
///
/// # Safety
/// `study` must come from this library; `delta_mw` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn adq_study_elcc(study: *mut AdqStudy, dispatcher: AdqDispatcher, delta_mw: *mut f64) -> AdqStatus {
    guard(|| {
        let s = study_mut(study)?;
        let c = &s.cfg;
        if c.study.addition.is_empty() {
            return Err(Fail(AdqStatus::Validation, "study.addition is empty".into()));
        }
        let study_req = c.study.elcc_study(c.study.addition.clone());
        let eval = Evaluator {
            dispatcher: dispatcher.into(),
            metric: c.study.metric,
            solver: &c.solver,
            rules: &c.study.priority,
        };
        let inputs = StudyInputs {
            resources: &c.system,
            load: &c.load,
            traces: &s.traces,
            scenarios: sampled(s)?,
        };
        let r = elcc_benchmark(inputs, &study_req, &eval)?;
        if !delta_mw.is_null() {
            *delta_mw = r.delta_mw;
        }
        s.report = Some(serde_json::to_string(&r).map_err(adequacy::Error::from)?);
        Ok(())
    })
}

/// Full JSON report of the last successful assess or ELCC call. The
/// string is owned by the caller and released with [`adq_string_free`].
///
/// # Safety
/// `study` must come from this library and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn adq_study_report_json(study: *const AdqStudy, out: *mut *mut c_char) -> AdqStatus {
    guard(|| {
        if out.is_null() {
            return Err(invalid("out is null"));
        }
        *out = ptr::null_mut();
        let s = study.as_ref().ok_or_else(|| invalid("study is null"))?;
        let text = s.report.as_ref().ok_or_else(|| invalid("no report yet"))?;
        *out = CString::new(text.as_str()).map_err(|_| invalid("report contains NUL"))?.into_raw();
        Ok(())
    })
}

/// Releases a study handle. Null is ignored.
///
/// # Safety
/// `study` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn adq_study_free(study: *mut AdqStudy) {
    if !study.is_null() {
        drop(Box::from_raw(study));
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn adq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next library call on the same thread.
#[no_mangle]
pub extern "C" fn adq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn adq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
