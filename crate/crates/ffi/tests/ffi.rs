use std::ffi::{CStr, CString};
use std::ptr;

use twinlog_ffi::*;

fn last_error() -> String {
    let p = twinlog_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn showcase_solve_and_run() {
    unsafe {
        let mut sc = ptr::null_mut();
        assert_eq!(twinlog_scenario_showcase(&mut sc), TwinlogStatus::Ok);
        let mut plan = ptr::null_mut();
        assert_eq!(
            twinlog_solve(sc, TwinlogMode::Collaborative as i32, TwinlogStrategy::Exact as i32, &mut plan),
            TwinlogStatus::Ok
        );
        let mut total = 0;
        assert_eq!(twinlog_plan_total_blocks(plan, &mut total), TwinlogStatus::Ok);
        assert_eq!(total, 24);

        let mut json = ptr::null_mut();
        assert_eq!(twinlog_plan_to_json(plan, &mut json), TwinlogStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(v["total_blocks"], 24);
        twinlog_string_free(json);
        twinlog_plan_free(plan);

        let mut report = ptr::null_mut();
        assert_eq!(twinlog_run(sc, 7, &mut report), TwinlogStatus::Ok);
        let v: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(report).to_str().unwrap()).unwrap();
        assert_eq!(v["post_total"], 24);
        assert_eq!(v["pre_total"], 32);
        twinlog_string_free(report);
        twinlog_scenario_free(sc);
    }
}

#[test]
fn route_length_on_default_grid() {
    let route: [u16; 7] = [24, 19, 14, 13, 18, 23, 24];
    let mut out = 0;
    unsafe {
        assert_eq!(
            twinlog_route_length(ptr::null(), route.as_ptr(), route.len(), &mut out),
            TwinlogStatus::Ok
        );
    }
    assert_eq!(out, 6);
    let bad: [u16; 2] = [0, 6];
    unsafe {
        assert_eq!(
            twinlog_route_length(ptr::null(), bad.as_ptr(), bad.len(), &mut out),
            TwinlogStatus::InvalidRoute
        );
    }
    assert!(!last_error().is_empty());
}

#[test]
fn synergy_and_errors() {
    let mut r = 0.0;
    unsafe {
        assert_eq!(twinlog_synergy(32, 24, &mut r), TwinlogStatus::Ok);
        assert_eq!(r, 0.25);
        assert_eq!(twinlog_synergy(0, 0, &mut r), TwinlogStatus::Undefined);
        assert_eq!(twinlog_synergy(1, 1, ptr::null_mut()), TwinlogStatus::NullArgument);
    }
    assert!(last_error().contains("out"));
}

#[test]
fn bad_inputs_are_reported() {
    unsafe {
        let mut sc = ptr::null_mut();
        let text = CString::new("{\"depots\": 3}").unwrap();
        assert_eq!(
            twinlog_scenario_from_json(text.as_ptr(), &mut sc),
            TwinlogStatus::InvalidScenario
        );
        assert!(sc.is_null());
        let path = CString::new("/definitely/missing.json").unwrap();
        assert_eq!(
            twinlog_scenario_from_path(path.as_ptr(), &mut sc),
            TwinlogStatus::InvalidScenario
        );
        assert!(last_error().contains("/definitely/missing.json"));
        assert_eq!(
            twinlog_scenario_from_json(ptr::null(), &mut sc),
            TwinlogStatus::NullArgument
        );

        let mut show = ptr::null_mut();
        twinlog_scenario_showcase(&mut show);
        let mut plan = ptr::null_mut();
        assert_eq!(twinlog_solve(show, 9, 0, &mut plan), TwinlogStatus::InvalidArgument);
        twinlog_scenario_free(show);
        // freeing NULL is a no-op
        twinlog_scenario_free(ptr::null_mut());
        twinlog_plan_free(ptr::null_mut());
        twinlog_string_free(ptr::null_mut());
    }
}

#[test]
fn header_is_generated_and_parses_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/twinlog.h");
    let text = std::fs::read_to_string(header).unwrap();
    for f in [
        "twinlog_scenario_from_json",
        "twinlog_solve",
        "twinlog_route_length",
        "twinlog_synergy",
        "twinlog_run",
        "twinlog_last_error",
        "TWINLOG_STATUS_OK",
    ] {
        assert!(text.contains(f), "{f} missing from header");
    }
    // syntax-check with the system C compiler when there is one
    if let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-x", "c", header])
        .output()
    {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
