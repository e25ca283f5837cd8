use std::ffi::{c_char, CStr};
use std::ptr;

use tatekit_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        tk_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn curve(p: u64, a: i64, b: i64) -> *mut TkCurve {
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { tk_curve_new(p, a, b, &mut c) }, TkStatus::Ok);
    c
}

#[test]
fn curve_handles() {
    let c = curve(7, 1, 4);
    let (mut t, mut j) = (0i64, 0u64);
    unsafe {
        assert_eq!(tk_curve_trace(c, &mut t), TkStatus::Ok);
        assert_eq!(tk_curve_j_invariant(c, &mut j), TkStatus::Ok);
        tk_curve_free(c);
        tk_curve_free(ptr::null_mut());
    }
    assert_eq!((t, j), (-2, 5));
}

#[test]
fn singular_curve_is_rejected() {
    let mut c = ptr::null_mut();
    let s = unsafe { tk_curve_new(7, 0, 0, &mut c) };
    assert_eq!(s, TkStatus::InvalidArgument);
    assert!(c.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_pointers_are_reported() {
    let c = curve(11, 1, 7);
    unsafe {
        assert_eq!(tk_curve_trace(c, ptr::null_mut()), TkStatus::NullPointer);
        assert_eq!(tk_curve_trace(ptr::null(), &mut 0), TkStatus::NullPointer);
        assert_eq!(tk_curve_new(7, 1, 4, ptr::null_mut()), TkStatus::NullPointer);
        tk_curve_free(c);
    }
    assert!(last_error().contains("null"));
}

#[test]
fn last_error_truncates() {
    let mut c = ptr::null_mut();
    unsafe { tk_curve_new(7, 0, 0, &mut c) };
    let mut small = [1 as c_char; 4];
    let full = unsafe { tk_last_error(small.as_mut_ptr(), small.len()) };
    assert!(full > 3);
    assert_eq!(small[3], 0);
    assert_eq!(unsafe { tk_last_error(ptr::null_mut(), 0) }, full);
}

#[test]
fn frobenius_satisfies_its_characteristic_polynomial() {
    let c = curve(7, 1, 4);
    let mut m = [0u64; 4];
    unsafe {
        assert_eq!(tk_frobenius_matrix(c, 5, 128, m.as_mut_ptr()), TkStatus::Ok);
        tk_curve_free(c);
    }
    let n = 5i64;
    let [a, b, cc, d] = m.map(|x| x as i64);
    assert_eq!((a + d).rem_euclid(n), (-2i64).rem_euclid(n));
    assert_eq!((a * d - b * cc).rem_euclid(n), 7 % n);
}

#[test]
fn frobenius_above_the_cap() {
    // E[11] over F_13 needs a large extension, but 11 does not divide
    // t^2 - 4p, so the matrix is still determined
    let c = curve(13, 1, 1);
    let mut m = [0u64; 4];
    assert_eq!(unsafe { tk_frobenius_matrix(c, 11, 1, m.as_mut_ptr()) }, TkStatus::Ok);
    unsafe { tk_curve_free(c) };

    // t^2 - 4p = -24 is even and #E(F_7) = 10, so E[4] is out of reach
    let c = curve(7, 1, 4);
    let s = unsafe { tk_frobenius_matrix(c, 4, 1, m.as_mut_ptr()) };
    unsafe { tk_curve_free(c) };
    assert_eq!(s, TkStatus::CapExceeded);
}

#[test]
fn galois_modules() {
    let (e, e2) = (curve(7, 1, 4), curve(7, 3, 4));
    let mut iso = false;
    let mut w = [0u64; 4];
    unsafe {
        assert_eq!(tk_galois_isomorphic(e, e2, 4, 128, &mut iso, w.as_mut_ptr()), TkStatus::Ok);
        assert!(iso);
        assert_ne!((w[0] * w[3] + 4 - w[1] * w[2] % 4) % 4 % 2, 0);
        assert_eq!(tk_galois_isomorphic(e, e2, 3, 128, &mut iso, ptr::null_mut()), TkStatus::Ok);
        tk_curve_free(e);
        tk_curve_free(e2);
    }
}

#[test]
fn class_numbers_and_four_squares() {
    let mut h = 0usize;
    for (d, want) in [(-4, 1), (-15, 2), (-23, 3), (-47, 5)] {
        assert_eq!(unsafe { tk_class_number(d, &mut h) }, TkStatus::Ok);
        assert_eq!(h, want);
    }
    assert_eq!(unsafe { tk_class_number(-5, &mut h) }, TkStatus::InvalidArgument);

    let mut q = [0i64; 4];
    let mut s = 0u64;
    assert_eq!(unsafe { tk_four_square(10, q.as_mut_ptr(), &mut s) }, TkStatus::Ok);
    assert_eq!(q.iter().map(|x| x * x).sum::<i64>() as u64, s);
    assert_eq!((s + 1) % 10, 0);
}

#[test]
fn twin_certificate_round_trip() {
    let mut cert = ptr::null_mut();
    unsafe {
        assert_eq!(tk_twin_search(7, 32, 3, &mut cert), TkStatus::Ok);
        let mut p = 0;
        assert_eq!(tk_certificate_p(cert, &mut p), TkStatus::Ok);
        assert_eq!(p, 7);
        let mut passed = false;
        assert_eq!(tk_certificate_verify(cert, &mut passed), TkStatus::Ok);
        assert!(passed);
        let mut json = ptr::null_mut();
        assert_eq!(tk_certificate_json(cert, &mut json), TkStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        tk_string_free(json);
        tk_certificate_free(cert);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["p"], 7);
        assert_eq!(v["trace"], -2);
    }
}

#[test]
fn no_twins_over_five() {
    let mut cert = ptr::null_mut();
    let s = unsafe { tk_twin_search(5, 32, 3, &mut cert) };
    assert_eq!(s, TkStatus::NotFound);
    assert!(cert.is_null());
}

#[test]
fn header_declares_every_entry_point() {
    let header = include_str!("../include/tatekit.h");
    for name in [
        "tk_last_error",
        "tk_curve_new",
        "tk_curve_free",
        "tk_curve_trace",
        "tk_curve_j_invariant",
        "tk_frobenius_matrix",
        "tk_galois_isomorphic",
        "tk_class_number",
        "tk_four_square",
        "tk_twin_search",
        "tk_certificate_verify",
        "tk_certificate_p",
        "tk_certificate_json",
        "tk_certificate_free",
        "tk_string_free",
        "TK_STATUS_CAP_EXCEEDED",
        "typedef struct TkCurve TkCurve",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
