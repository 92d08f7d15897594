use std::ffi::{CStr, CString};
use std::ptr;

use formring_ffi::*;

fn ring(spec: &str, lambda: &str) -> *mut FrFormRing {
    let spec = CString::new(spec).unwrap();
    let lambda = CString::new(lambda).unwrap();
    let mut out = ptr::null_mut();
    let st = unsafe { fr_form_ring_new(spec.as_ptr(), lambda.as_ptr(), false, &mut out) };
    assert_eq!(st, FrStatus::Ok);
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(fr_last_error()).to_string_lossy().into_owned() }
}

#[test]
fn handles_and_membership() {
    let fr = ring("Zmod 6, trivial, lambda=-1", "max");
    unsafe {
        assert_eq!(fr_ring_size(fr), 6);
        let mut m = [0u16; 16];
        assert_eq!(fr_elementary(fr, 2, 0, 1, 2, 5, m.as_mut_ptr(), m.len()), FrStatus::Ok);
        let mut inside = false;
        assert_eq!(fr_is_in_gq(fr, 2, m.as_ptr(), m.len(), &mut inside), FrStatus::Ok);
        assert!(inside);
        m[1] = 1;
        m[2] = 1;
        assert_eq!(fr_is_in_gq(fr, 2, m.as_ptr(), m.len(), &mut inside), FrStatus::Ok);
        assert!(!inside);
        assert_eq!(fr_is_in_gq(fr, 2, m.as_ptr(), 15, &mut inside), FrStatus::DimensionMismatch);
        assert_eq!(fr_elementary(fr, 2, 1, 1, 3, 1, m.as_mut_ptr(), m.len()), FrStatus::BadIndex);
        assert!(last_error().contains("bad index"));
        fr_form_ring_free(fr);
    }
}

#[test]
fn groups_and_reports() {
    let fr = ring("GF 2, trivial, lambda=-1", "max");
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(fr_eq_closure(fr, 2, 4_000_000, &mut g), FrStatus::Ok);
        assert_eq!(fr_group_order(g), 720);
        assert!(fr_group_is_complete(g));
        let id: Vec<u16> = (0..16).map(|p| u16::from(p % 5 == 0)).collect();
        let mut has = false;
        assert_eq!(fr_group_contains(g, id.as_ptr(), id.len(), &mut has), FrStatus::Ok);
        assert!(has);
        fr_group_free(g);

        let mut s = ptr::null_mut();
        assert_eq!(fr_k1_json(fr, 2, &mut s), FrStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
        assert_eq!(v["coset_count"], 1);
        fr_string_free(s);
        fr_form_ring_free(fr);
    }
}

#[test]
fn errors_are_reported() {
    let spec = CString::new("Zmod 6, trivial, lambda=2").unwrap();
    let max = CString::new("max").unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        let st = fr_form_ring_new(spec.as_ptr(), max.as_ptr(), false, &mut out);
        assert_ne!(st, FrStatus::Ok);
        assert!(out.is_null());
        assert!(!fr_last_error().is_null());
        assert_eq!(fr_form_ring_new(ptr::null(), max.as_ptr(), false, &mut out), FrStatus::NullPointer);
        let ok = CString::new("Zmod 6, trivial, lambda=1").unwrap();
        let bad = CString::new("gens:[1]").unwrap();
        assert_eq!(fr_form_ring_new(ok.as_ptr(), bad.as_ptr(), false, &mut out), FrStatus::FormParam);
        assert_eq!(fr_ring_size(ptr::null()), 0);
        fr_form_ring_free(ptr::null_mut());
    }
}

#[test]
fn run_config_round_trip() {
    let cfg = CString::new("task = k1\n[ring]\nspec = GF 2, trivial, lambda=-1\n[params]\nn = 2\n").unwrap();
    let mut s = ptr::null_mut();
    let mut code = -1;
    unsafe {
        assert_eq!(fr_run_config(cfg.as_ptr(), &mut s, &mut code), FrStatus::Ok);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
        assert_eq!(v["result"]["coset_count"], 1);
        fr_string_free(s);
        let bad = CString::new("task = nope\n").unwrap();
        assert_eq!(fr_run_config(bad.as_ptr(), &mut s, &mut code), FrStatus::Config);
    }
}

#[test]
fn header_lists_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/formring.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> =
        src.lines().filter_map(|l| l.split("extern \"C\" fn ").nth(1)).map(|rest| rest.split('(').next().unwrap()).collect();
    assert!(exports.len() >= 12);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("FR_STATUS_CAP_EXCEEDED = 9"));
}

#[test]
fn header_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I", &format!("{dir}/include"), &format!("{dir}/examples/demo.c")])
        .status()
    else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    assert!(status.success());
}
