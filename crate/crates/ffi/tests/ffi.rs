use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use qsv_ffi::*;

fn last_error() -> String {
    let p = qsv_last_error();
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { qsv_string_free(p) };
    s
}

fn ghz(n: usize) -> *mut QsvTarget {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { qsv_target_ghz(n, &mut t) }, QsvStatus::Ok);
    t
}

fn plan(n: usize, r: usize) -> *mut QsvPlan {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { qsv_plan_naive(n, r, &mut p) }, QsvStatus::Ok);
    p
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(qsv_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn ghz_dpso_gap_and_spectrum() {
    let t = ghz(3);
    let p = plan(3, 1);
    unsafe {
        assert_eq!(qsv_target_num_qubits(t), 3);
        let mut s = ptr::null_mut();
        assert_eq!(qsv_strategy_dpso(t, p, &mut s), QsvStatus::Ok);
        let mut nu = 0.0;
        assert_eq!(qsv_strategy_gap(s, &mut nu), QsvStatus::Ok);
        assert!((nu - 4.0 / 9.0).abs() < 1e-9, "{nu}");
        let count = qsv_strategy_eigenvalues(s, ptr::null_mut(), 0);
        assert_eq!(count, 8);
        let mut ev = vec![0.0; count];
        assert_eq!(qsv_strategy_eigenvalues(s, ev.as_mut_ptr(), ev.len()), 8);
        assert!((ev[0] - 1.0).abs() < 1e-9);
        assert!(ev.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        qsv_strategy_free(s);
        qsv_plan_free(p);
        qsv_target_free(t);
    }
}

#[test]
fn stabilizer_generators_match_ghz() {
    let gens = CString::new("+XXX, +ZZI +ZIZ").unwrap();
    let mut t = ptr::null_mut();
    let p = plan(3, 2);
    unsafe {
        assert_eq!(qsv_target_stabilizer(gens.as_ptr(), &mut t), QsvStatus::Ok);
        let g = ghz(3);
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(qsv_strategy_dpso(t, p, &mut a), QsvStatus::Ok);
        assert_eq!(qsv_strategy_dpso(g, p, &mut b), QsvStatus::Ok);
        let (mut na, mut nb) = (0.0, 0.0);
        qsv_strategy_gap(a, &mut na);
        qsv_strategy_gap(b, &mut nb);
        assert!((na - nb).abs() < 1e-9);
        assert!((na - 2.0 / 3.0).abs() < 1e-9, "{na}");
        for s in [a, b] {
            qsv_strategy_free(s);
        }
        qsv_target_free(g);
        qsv_target_free(t);
        qsv_plan_free(p);
    }
}

fn sop_gap(json: &str) -> f64 {
    let json = CString::new(json).unwrap();
    let mut t = ptr::null_mut();
    unsafe {
        let status = qsv_target_from_json(json.as_ptr(), &mut t);
        assert_eq!(status, QsvStatus::Ok, "{}", last_error());
        let mut s = ptr::null_mut();
        assert_eq!(qsv_strategy_sop(t, 1, &mut s), QsvStatus::Ok);
        let mut nu = -1.0;
        assert_eq!(qsv_strategy_gap(s, &mut nu), QsvStatus::Ok);
        qsv_strategy_free(s);
        qsv_target_free(t);
        nu
    }
}

#[test]
fn sop_gaps_from_json_targets() {
    // level 1 on a Bell pair also fixes |00⟩, so the top eigenvalue is degenerate
    let bell = sop_gap("[[0.7071067811865476,0],[0,0],[0,0],[0.7071067811865476,0]]");
    assert!(bell.abs() < 1e-9, "{bell}");
    let plus = sop_gap("[[0.5,0],[0.5,0],[0.5,0],[0.5,0]]");
    assert!((plus - 0.5).abs() < 1e-9, "{plus}");
}

#[test]
fn plan_json_round_trip() {
    let p = plan(4, 2);
    unsafe {
        let json = qsv_plan_to_json(p);
        assert!(!json.is_null());
        let mut q = ptr::null_mut();
        assert_eq!(qsv_plan_from_json(json, &mut q), QsvStatus::Ok);
        let again = qsv_plan_to_json(q);
        assert_eq!(CStr::from_ptr(json), CStr::from_ptr(again));
        qsv_string_free(json);
        qsv_string_free(again);
        qsv_plan_free(p);
        qsv_plan_free(q);
        assert!(qsv_plan_to_json(ptr::null()).is_null());
    }
}

#[test]
fn complexity_counts() {
    let mut n = 0u64;
    unsafe {
        assert_eq!(qsv_plm_sample_complexity(0.1, 0.05, 1.0, &mut n), QsvStatus::Ok);
        assert!(n > 0);
        let (mut sop, mut dpso) = (0u64, 0u64);
        assert_eq!(qsv_sop_sample_complexity(2, 0.1, 0.05, 0.5, &mut sop), QsvStatus::Ok);
        assert_eq!(qsv_dpso_sample_complexity(2, 0.1, 0.05, 0.5, &mut dpso), QsvStatus::Ok);
        assert!(sop > dpso);
        let ratio = sop as f64 / dpso as f64;
        assert!((ratio - 4.0).abs() < 0.01, "{ratio}");
        assert_eq!(qsv_plm_sample_complexity(0.1, 0.05, 0.0, &mut n), QsvStatus::ZeroGap);
        assert_eq!(qsv_plm_sample_complexity(1.5, 0.05, 1.0, &mut n), QsvStatus::InvalidArgument);
        assert!(!last_error().is_empty());
    }
}

#[test]
fn verify_accepts_exact_and_rejects_worst_case() {
    let t = ghz(3);
    let p = plan(3, 1);
    unsafe {
        let mut v = QsvVerdict::default();
        let status = qsv_dpso_verify(t, p, 0.1, 0.05, 0.0, 0, 7, &mut v);
        assert_eq!(status, QsvStatus::Ok, "{}", last_error());
        assert!(v.accepted);
        assert!((v.nu - 4.0 / 9.0).abs() < 1e-9);
        assert!(v.trials > 0);
        let mut w = QsvVerdict::default();
        assert_eq!(qsv_dpso_verify(t, p, 0.1, 0.05, 0.5, 0, 7, &mut w), QsvStatus::Ok);
        assert!(!w.accepted);
        assert!(w.mean < w.threshold);
        qsv_plan_free(p);
        qsv_target_free(t);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(qsv_target_ghz(3, ptr::null_mut()), QsvStatus::NullPointer);
        assert_eq!(qsv_target_ghz(0, &mut t), QsvStatus::InvalidArgument);
        assert!(t.is_null());
        assert_eq!(qsv_target_from_json(ptr::null(), &mut t), QsvStatus::NullPointer);
        assert!(last_error().contains("json"));
        let bad = CString::new("not json").unwrap();
        assert_eq!(qsv_target_from_json(bad.as_ptr(), &mut t), QsvStatus::Parse);
        let invalid_utf8 = [0xffu8, 0];
        assert_eq!(qsv_target_from_json(invalid_utf8.as_ptr().cast(), &mut t), QsvStatus::Utf8);
        let mut s = ptr::null_mut();
        assert_eq!(qsv_strategy_dpso(ptr::null(), ptr::null(), &mut s), QsvStatus::NullPointer);
        let mut nu = 0.0;
        assert_eq!(qsv_strategy_gap(ptr::null(), &mut nu), QsvStatus::NullPointer);
        assert_eq!(qsv_strategy_eigenvalues(ptr::null(), ptr::null_mut(), 0), 0);
        assert_eq!(qsv_target_num_qubits(ptr::null()), 0);
        // null frees are no-ops
        qsv_target_free(ptr::null_mut());
        qsv_plan_free(ptr::null_mut());
        qsv_strategy_free(ptr::null_mut());
        qsv_string_free(ptr::null_mut());
    }
}

#[test]
fn mismatched_plan_is_rejected() {
    let t = ghz(3);
    let p = plan(4, 1);
    unsafe {
        let mut s = ptr::null_mut();
        assert_ne!(qsv_strategy_dpso(t, p, &mut s), QsvStatus::Ok);
        assert!(s.is_null());
        qsv_plan_free(p);
        qsv_target_free(t);
    }
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include").join("qsv.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "#ifndef QSV_H",
        "typedef struct QsvTarget QsvTarget;",
        "typedef struct QsvPlan QsvPlan;",
        "typedef struct QsvStrategy QsvStrategy;",
        "QSV_STATUS_OK = 0",
        "QSV_STATUS_PANIC = 14",
        "typedef struct QsvVerdict",
        "qsv_version(void)",
        "qsv_last_error(void)",
        "qsv_dpso_verify(",
        "qsv_strategy_gap(",
        "qsv_target_stabilizer(",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"]).arg(header()).output() else {
        eprintln!("no C compiler available; skipping");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
