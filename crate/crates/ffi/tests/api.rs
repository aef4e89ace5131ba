use std::ffi::{CStr, CString};
use std::fs;
use std::path::Path;
use std::process::Command;
use std::ptr;

use adequacy::synthetic::{portfolio_resource, small_system, synthetic_traces, write_trace_csv};
use adequacy_ffi::*;

fn config_json(dir: &Path) -> String {
    let traces = dir.join("traces.csv");
    write_trace_csv(fs::File::create(&traces).unwrap(), &synthetic_traces(7, 1), 1.0).unwrap();
    let (system, mut load) = small_system(24);
    load.peak_mw = 75.0;
    serde_json::json!({
        "system": system,
        "load": load,
        "scenarios": { "count": 4, "seed": 3 },
        "study": {
            "addition": [portfolio_resource()],
            "delta_lo_mw": -2.0,
            "delta_hi_mw": 20.0,
            "delta_resolution_mw": 0.05
        },
        "paths": { "traces": ["traces.csv"], "output_dir": "out" }
    })
    .to_string()
}

fn last_error() -> String {
    let p = adq_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn full_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let json = CString::new(config_json(dir.path())).unwrap();
    let base = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut study = ptr::null_mut();
    unsafe {
        assert_eq!(adq_study_from_json(json.as_ptr(), base.as_ptr(), &mut study), AdqStatus::Ok);
        assert!(!study.is_null());
        assert_eq!(adq_study_scenario_count(study), 0);

        let (mut eue, mut lole) = (f64::NAN, f64::NAN);
        assert_eq!(
            adq_study_assess(study, AdqDispatcher::Optimal, &mut eue, &mut lole),
            AdqStatus::InvalidArgument
        );
        assert!(last_error().contains("adq_study_generate"));

        let mut fp = [0 as std::ffi::c_char; 65];
        assert_eq!(adq_study_generate(study, fp.as_mut_ptr()), AdqStatus::Ok);
        assert_eq!(CStr::from_ptr(fp.as_ptr()).to_bytes().len(), 64);
        assert_eq!(adq_study_scenario_count(study), 4);
        assert!(adq_last_error().is_null());

        assert_eq!(adq_study_assess(study, AdqDispatcher::Optimal, &mut eue, &mut lole), AdqStatus::Ok);
        let mut heuristic = f64::NAN;
        assert_eq!(
            adq_study_assess(study, AdqDispatcher::Heuristic, &mut heuristic, ptr::null_mut()),
            AdqStatus::Ok
        );
        assert!(eue >= 0.0 && eue <= heuristic + 1e-6);

        let mut delta = f64::NAN;
        assert_eq!(adq_study_elcc(study, AdqDispatcher::Optimal, &mut delta), AdqStatus::Ok);
        assert!(delta.is_finite());
        let mut report = ptr::null_mut();
        assert_eq!(adq_study_report_json(study, &mut report), AdqStatus::Ok);
        let parsed: serde_json::Value = serde_json::from_str(CStr::from_ptr(report).to_str().unwrap()).unwrap();
        assert_eq!(parsed["delta_mw"].as_f64(), Some(delta));
        adq_string_free(report);
        adq_study_free(study);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(adq_study_open(ptr::null(), &mut out), AdqStatus::InvalidArgument);
        assert!(out.is_null());

        let missing = CString::new(dir.path().join("none.json").to_str().unwrap()).unwrap();
        assert_eq!(adq_study_open(missing.as_ptr(), &mut out), AdqStatus::Io);
        assert!(!last_error().is_empty());

        let base = CString::new(dir.path().to_str().unwrap()).unwrap();
        let bad = CString::new("{\"system\": 1}").unwrap();
        assert_eq!(adq_study_from_json(bad.as_ptr(), base.as_ptr(), &mut out), AdqStatus::Validation);

        let mut cfg: serde_json::Value = serde_json::from_str(&config_json(dir.path())).unwrap();
        cfg["study"]["delta_lo_mw"] = serde_json::json!(15.0);
        let json = CString::new(cfg.to_string()).unwrap();
        assert_eq!(adq_study_from_json(json.as_ptr(), base.as_ptr(), &mut out), AdqStatus::Ok);
        assert_eq!(adq_study_generate(out, ptr::null_mut()), AdqStatus::Ok);
        assert_eq!(adq_study_elcc(out, AdqDispatcher::Heuristic, ptr::null_mut()), AdqStatus::Numerical);

        let mut report = ptr::null_mut();
        assert_eq!(adq_study_report_json(out, &mut report), AdqStatus::InvalidArgument);
        assert!(report.is_null());
        adq_study_free(out);

        adq_study_free(ptr::null_mut());
        adq_string_free(ptr::null_mut());
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(adq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/adequacy.h");
    let text = fs::read_to_string(&header).unwrap();
    for name in [
        "adq_study_open",
        "adq_study_from_json",
        "adq_study_generate",
        "adq_study_assess",
        "adq_study_elcc",
        "adq_study_report_json",
        "adq_study_free",
        "adq_string_free",
        "adq_last_error",
        "ADQ_STATUS_OK",
        "typedef struct AdqStudy AdqStudy",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    if let Ok(st) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"]).arg(&header).status() {
        assert!(st.success(), "header does not compile");
    }
}
