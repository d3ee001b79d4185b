use std::ffi::{CStr, CString};
use std::ptr;

use opburgers_ffi::*;

fn last_error() -> String {
    let p = opb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn special_functions() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(opb_gamma(5.0, &mut v), OpbStatus::Ok);
        assert!((v - 24.0).abs() < 1e-12);
        assert_eq!(opb_ml(1.0, 1.0, &mut v), OpbStatus::Ok);
        assert!((v - std::f64::consts::E).abs() < 1e-13);
        assert_eq!(opb_hermite(3, 2.0, 1.0, &mut v), OpbStatus::Ok);
        assert_eq!(v, 20.0);
        assert_eq!(opb_kernel(1.0, 1.0, 1e-10, &mut v), OpbStatus::Ok);
        assert!((v - 0.260_696_797_421_273_92).abs() < 1e-9);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(opb_gamma(-2.0, &mut v), OpbStatus::Domain);
        assert!(last_error().contains("domain"));
        assert_eq!(opb_hermite(21, 1.0, 1.0, &mut v), OpbStatus::Parameter);
        assert_eq!(opb_kernel(-1.0, 1.0, 1e-10, &mut v), OpbStatus::Domain);
        assert_eq!(opb_ml(0.5, 1.0, ptr::null_mut()), OpbStatus::NullPointer);
        let id = CString::new("nope").unwrap();
        let mut h = ptr::null_mut();
        assert_eq!(opb_scenario_new(id.as_ptr(), &mut h), OpbStatus::UnknownScenario);
        assert!(h.is_null());
        assert!(last_error().contains("nope"));
        assert_eq!(opb_scenario_new(ptr::null(), &mut h), OpbStatus::NullPointer);
        let bad = [0xffu8, 0];
        assert_eq!(opb_scenario_new(bad.as_ptr().cast(), &mut h), OpbStatus::InvalidUtf8);
    }
}

#[test]
fn scenario_handle_lifecycle() {
    let id = CString::new("euclid-classic").unwrap();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(opb_scenario_new(id.as_ptr(), &mut h), OpbStatus::Ok);
        let mut n = 0usize;
        assert_eq!(opb_scenario_ndim(h, &mut n), OpbStatus::Ok);
        assert_eq!(n, 1);

        // b(t)(x + 1) with b = 0.1 (t + 1) / (1 - 0.2 (t + 1))
        let mut v = 0.0;
        assert_eq!(opb_scenario_eval(h, [0.5].as_ptr(), 1, 1.0, &mut v), OpbStatus::Ok);
        assert!((v - 0.2 / 0.6 * 1.5).abs() < 1e-14);
        assert_eq!(opb_scenario_eval(h, [0.5, 0.1].as_ptr(), 2, 1.0, &mut v), OpbStatus::Parameter);

        let (mut mx, mut l2) = (0.0, 0.0);
        assert_eq!(opb_scenario_residual(h, 16, 8, &mut mx, &mut l2), OpbStatus::Ok);
        assert!(mx < 1e-8 && l2 <= mx);
        assert_eq!(opb_scenario_residual(h, 2, 8, &mut mx, &mut l2), OpbStatus::Parameter);

        let mut s = ptr::null_mut();
        assert_eq!(opb_scenario_describe_json(h, &mut s), OpbStatus::Ok);
        let json = CStr::from_ptr(s).to_str().unwrap().to_owned();
        opb_string_free(s);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["id"], "euclid-classic");

        opb_scenario_free(h);
        opb_scenario_free(ptr::null_mut());
        assert_eq!(opb_scenario_ndim(ptr::null(), &mut n), OpbStatus::NullPointer);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(opb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/opburgers.h")).unwrap();
    for f in [
        "opb_last_error",
        "opb_version",
        "opb_gamma",
        "opb_ml",
        "opb_hermite",
        "opb_kernel",
        "opb_scenario_new",
        "opb_scenario_free",
        "opb_scenario_ndim",
        "opb_scenario_eval",
        "opb_scenario_residual",
        "opb_scenario_describe_json",
        "opb_string_free",
    ] {
        assert!(h.contains(&format!("{f}(")), "{f} missing from the header");
    }
    assert!(h.contains("typedef struct OpbScenario OpbScenario;"));
    assert!(h.contains("OPB_STATUS_UNKNOWN_SCENARIO = 3"));
}
