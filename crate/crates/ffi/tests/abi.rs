use std::ffi::{CStr, CString};
use std::ptr;

use submersion_ffi::*;

fn last_error() -> String {
    let p = sub_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { sub_string_free(p) };
    s
}

#[test]
fn catalog_round_trip() {
    let name = CString::new("gigseh").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { sub_catalog_load(name.as_ptr(), &mut cfg) }, SubStatus::Ok);

    let mut report = ptr::null_mut();
    assert_eq!(unsafe { sub_verify(cfg, -1, &mut report) }, SubStatus::Ok);
    assert_eq!(unsafe { sub_report_verdict(report) }, SUB_VERDICT_ALL_HOLD);
    let len = unsafe { sub_report_len(report) };
    assert_eq!(len, 6);

    for i in 0..len {
        let mut e = std::mem::MaybeUninit::<SubEntry>::uninit();
        assert_eq!(unsafe { sub_report_entry(report, i, e.as_mut_ptr()) }, SubStatus::Ok);
        let e = unsafe { e.assume_init() };
        assert!(e.has_result && e.holds && e.equality);
        assert!(e.gap.abs() < 1e-8);
        let id = unsafe { CStr::from_ptr(e.theorem) }.to_str().unwrap();
        assert!(["thm31", "thm32", "thm41"].contains(&id));
        assert!(unsafe { sub_report_entry_error(report, i) }.is_null());
    }

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { sub_report_json(report, &mut json) }, SubStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(v["metadata"]["config_name"], "gigseh");

    let mut csv = ptr::null_mut();
    assert_eq!(unsafe { sub_report_csv(report, &mut csv) }, SubStatus::Ok);
    let csv = take_string(csv);
    assert!(csv.starts_with("point_index,theorem,lhs,rhs,gap"));
    assert_eq!(csv.lines().count(), 7);

    let mut hash = ptr::null_mut();
    assert_eq!(unsafe { sub_config_hash(cfg, &mut hash) }, SubStatus::Ok);
    assert_eq!(take_string(hash).len(), 64);

    let mut e = std::mem::MaybeUninit::<SubEntry>::uninit();
    assert_eq!(
        unsafe { sub_report_entry(report, len, e.as_mut_ptr()) },
        SubStatus::InvalidArgument
    );
    assert!(last_error().contains("out of range"));

    unsafe {
        sub_report_free(report);
        sub_config_free(cfg);
    }
}

#[test]
fn single_point_selection() {
    let name = CString::new("gigseh").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { sub_catalog_load(name.as_ptr(), &mut cfg) }, SubStatus::Ok);
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { sub_verify(cfg, 1, &mut report) }, SubStatus::Ok);
    assert_eq!(unsafe { sub_report_len(report) }, 3);
    unsafe { sub_report_free(report) };
    assert_eq!(unsafe { sub_verify(cfg, 9, &mut report) }, SubStatus::InvalidArgument);
    unsafe { sub_config_free(cfg) };
}

#[test]
fn bad_inputs_map_to_status_codes() {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { sub_config_from_json(ptr::null(), &mut cfg) }, SubStatus::NullPointer);

    let json = CString::new(r#"{"name": "x", "n": 3}"#).unwrap();
    assert_eq!(unsafe { sub_config_from_json(json.as_ptr(), &mut cfg) }, SubStatus::Config);
    assert!(last_error().contains("missing field"));

    let name = CString::new("no_such_entry").unwrap();
    assert_eq!(unsafe { sub_catalog_load(name.as_ptr(), &mut cfg) }, SubStatus::InvalidArgument);

    let path = CString::new("/nonexistent/config.json").unwrap();
    assert_eq!(unsafe { sub_config_from_file(path.as_ptr(), &mut cfg) }, SubStatus::Io);

    assert_eq!(unsafe { sub_verify(ptr::null(), -1, ptr::null_mut()) }, SubStatus::NullPointer);
    assert_eq!(unsafe { sub_report_verdict(ptr::null()) }, -1);
    unsafe {
        sub_config_free(ptr::null_mut());
        sub_report_free(ptr::null_mut());
        sub_string_free(ptr::null_mut());
    }
}

#[test]
fn lemma_and_expressions() {
    let a = [1.0, 1.0, 2.0];
    let mut out = std::mem::MaybeUninit::<SubLemmaResult>::uninit();
    assert_eq!(unsafe { sub_lemma(a.as_ptr(), 3, out.as_mut_ptr()) }, SubStatus::Ok);
    let r = unsafe { out.assume_init() };
    // b = (sum a)^2 / 2 - sum a^2 = 8 - 6
    assert!((r.b - 2.0).abs() < 1e-12);
    assert!(r.gap.abs() < 1e-12);
    assert!(r.equality);

    assert_eq!(unsafe { sub_lemma(a.as_ptr(), 2, out.as_mut_ptr()) }, SubStatus::InvalidArgument);

    let text = CString::new("x1^2 + sin(x2)").unwrap();
    let x = [3.0, 0.0];
    let mut v = 0.0;
    assert_eq!(unsafe { sub_expr_eval(text.as_ptr(), x.as_ptr(), 2, &mut v) }, SubStatus::Ok);
    assert_eq!(v, 9.0);
    assert_eq!(
        unsafe { sub_expr_eval(text.as_ptr(), x.as_ptr(), 1, &mut v) },
        SubStatus::InvalidArgument
    );
    let bad = CString::new("x1 +").unwrap();
    assert_eq!(unsafe { sub_expr_eval(bad.as_ptr(), x.as_ptr(), 2, &mut v) }, SubStatus::Parse);
    let log = CString::new("log(x1)").unwrap();
    let neg = [-1.0];
    assert_eq!(unsafe { sub_expr_eval(log.as_ptr(), neg.as_ptr(), 1, &mut v) }, SubStatus::Domain);
}

#[test]
fn static_tables() {
    assert_eq!(sub_theorem_count(), 9);
    let first = unsafe { CStr::from_ptr(sub_theorem_name(0)) };
    assert_eq!(first.to_str().unwrap(), "thm31");
    assert!(sub_theorem_name(9).is_null());
    let version = unsafe { CStr::from_ptr(sub_version()) }.to_str().unwrap();
    assert_eq!(version, env!("CARGO_PKG_VERSION"));
    let names: Vec<String> = (0..sub_catalog_count()).map(|i| take_string(sub_catalog_name(i))).collect();
    assert!(names.iter().any(|n| n == "hopf_s7_s4"));
    assert!(sub_catalog_name(names.len()).is_null());
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/submersion.h");
    let src = include_str!("../src/lib.rs");
    let exported: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .filter_map(|rest| rest.split('(').next())
        .collect();
    assert!(exported.len() > 15);
    for f in exported {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
}
