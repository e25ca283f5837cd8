//! C interface to tatekit.
//!
//! Objects cross the boundary as opaque handles that must be released with
//! the matching `*_free` function. Every call returns a [`TkStatus`]; after
//! a failure, [`tk_last_error`] copies a message describing it.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tatekit::classfield::class_group;
use tatekit::curve::Curve;
use tatekit::explorer::{twin_search, verify_certificate, TwinCertificate, TwinParams};
use tatekit::galois::{frobenius_matrix, galois_isomorphic};
use tatekit::pairing_model::four_square_neg_one;
use tatekit::Error;

/// Result of every call. The nonzero codes follow the command line tool's
/// exit codes where they overlap.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TkStatus {
    Ok = 0,
    Internal = 1,
    InvalidArgument = 2,
    CapExceeded = 3,
    NotFound = 4,
    NullPointer = 5,
    Panic = 6,
}

/// A curve `y^2 = x^3 + Ax + B` over `F_p`.
pub struct TkCurve(Curve);

/// A certified twin pair.
pub struct TkCertificate {
    cert: TwinCertificate,
    params: TwinParams,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> TkStatus {
    match err.exit_code() {
        3 => TkStatus::CapExceeded,
        4 => TkStatus::NotFound,
        2 => TkStatus::InvalidArgument,
        _ => TkStatus::Internal,
    }
}

/// Runs `f`, recording errors and turning panics into [`TkStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), TkStatus>) -> TkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TkStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside tatekit".into());
            TkStatus::Panic
        }
    }
}

fn fail(err: Error) -> TkStatus {
    let s = status_of(&err);
    set_error(err.to_string());
    s
}

fn nonnull<T>(p: *const T, what: &str) -> Result<(), TkStatus> {
    if p.is_null() {
        set_error(format!("{what} is null"));
        Err(TkStatus::NullPointer)
    } else {
        Ok(())
    }
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tk_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates a curve; fails on a singular curve or an unsupported `p`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn tk_curve_new(p: u64, a: i64, b: i64, out: *mut *mut TkCurve) -> TkStatus {
    guard(|| {
        nonnull(out, "out")?;
        let c = Curve::new(p, a, b).map_err(fail)?;
        *out = Box::into_raw(Box::new(TkCurve(c)));
        Ok(())
    })
}

/// # Safety
/// `curve` must be null or a handle from [`tk_curve_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tk_curve_free(curve: *mut TkCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Trace of Frobenius, `p + 1 - #E(F_p)`.
///
/// # Safety
/// `curve` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tk_curve_trace(curve: *const TkCurve, out: *mut i64) -> TkStatus {
    guard(|| {
        nonnull(curve, "curve")?;
        nonnull(out, "out")?;
        *out = (*curve).0.trace();
        Ok(())
    })
}

/// # Safety
/// `curve` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tk_curve_j_invariant(curve: *const TkCurve, out: *mut u64) -> TkStatus {
    guard(|| {
        nonnull(curve, "curve")?;
        nonnull(out, "out")?;
        *out = (*curve).0.j_invariant();
        Ok(())
    })
}

/// Frobenius on `E[n]` as a row-major 2x2 matrix over `Z/n`.
///
/// # Safety
/// `curve` must be a live handle and `out` must point to 4 writable values.
#[no_mangle]
pub unsafe extern "C" fn tk_frobenius_matrix(
    curve: *const TkCurve,
    n: u64,
    cap: usize,
    out: *mut u64,
) -> TkStatus {
    guard(|| {
        nonnull(curve, "curve")?;
        nonnull(out, "out")?;
        let f = frobenius_matrix(&(*curve).0, n, cap).map_err(fail)?;
        ptr::copy_nonoverlapping(f.matrix.entries().as_ptr(), out, 4);
        Ok(())
    })
}

/// Whether `E[n]` and `E'[n]` are isomorphic Galois modules; when they
/// are, `witness` (4 values, may be null) receives an intertwiner.
///
/// # Safety
/// Both handles must be live, `isomorphic` writable, and `witness` null or
/// 4 writable values.
#[no_mangle]
pub unsafe extern "C" fn tk_galois_isomorphic(
    curve1: *const TkCurve,
    curve2: *const TkCurve,
    n: u64,
    cap: usize,
    isomorphic: *mut bool,
    witness: *mut u64,
) -> TkStatus {
    guard(|| {
        nonnull(curve1, "curve1")?;
        nonnull(curve2, "curve2")?;
        nonnull(isomorphic, "isomorphic")?;
        let g = galois_isomorphic(&(*curve1).0, &(*curve2).0, n, cap).map_err(fail)?;
        *isomorphic = g.isomorphic;
        if let (Some(w), false) = (g.witness, witness.is_null()) {
            ptr::copy_nonoverlapping(w.entries().as_ptr(), witness, 4);
        }
        Ok(())
    })
}

/// Number of reduced primitive forms of discriminant `disc`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_class_number(disc: i64, out: *mut usize) -> TkStatus {
    guard(|| {
        nonnull(out, "out")?;
        *out = class_group(disc).map_err(fail)?.class_number;
        Ok(())
    })
}

/// `a^2 + b^2 + c^2 + d^2 = s` with `s ≡ -1 (mod n)` as small as possible.
///
/// # Safety
/// `quadruple` must point to 4 writable values and `s` be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_four_square(n: u64, quadruple: *mut i64, s: *mut u64) -> TkStatus {
    guard(|| {
        nonnull(quadruple, "quadruple")?;
        nonnull(s, "s")?;
        let q = four_square_neg_one(n).map_err(fail)?;
        ptr::copy_nonoverlapping([q.a, q.b, q.c, q.d].as_ptr(), quadruple, 4);
        *s = q.s();
        Ok(())
    })
}

/// Searches `F_p` for a certified twin pair. Returns
/// [`TkStatus::NotFound`] when every candidate pair is rejected.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_twin_search(
    p: u64,
    level_bound: u64,
    p_precision: u32,
    out: *mut *mut TkCertificate,
) -> TkStatus {
    guard(|| {
        nonnull(out, "out")?;
        let params = TwinParams {
            level_bound,
            p_precision,
            ..TwinParams::default()
        };
        let search = twin_search(p, &params).map_err(fail)?;
        let Some(cert) = search.certificate else {
            return Err(fail(Error::NotFound(format!("no certified pair over F_{p}"))));
        };
        *out = Box::into_raw(Box::new(TkCertificate { cert, params }));
        Ok(())
    })
}

/// Re-verifies a certificate from scratch.
///
/// # Safety
/// `cert` must be a live handle and `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn tk_certificate_verify(cert: *const TkCertificate, passed: *mut bool) -> TkStatus {
    guard(|| {
        nonnull(cert, "cert")?;
        nonnull(passed, "passed")?;
        let c = &*cert;
        let v = verify_certificate(&c.cert, &c.params).map_err(fail)?;
        if !v.passed() {
            set_error(v.failures.join("; "));
        }
        *passed = v.passed();
        Ok(())
    })
}

/// The characteristic of the certified pair.
///
/// # Safety
/// `cert` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tk_certificate_p(cert: *const TkCertificate, out: *mut u64) -> TkStatus {
    guard(|| {
        nonnull(cert, "cert")?;
        nonnull(out, "out")?;
        *out = (*cert).cert.p;
        Ok(())
    })
}

/// The certificate as JSON. Release the string with [`tk_string_free`].
///
/// # Safety
/// `cert` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tk_certificate_json(cert: *const TkCertificate, out: *mut *mut c_char) -> TkStatus {
    guard(|| {
        nonnull(cert, "cert")?;
        nonnull(out, "out")?;
        let s = CString::new((*cert).cert.to_json()).map_err(|_| {
            set_error("certificate JSON contains a NUL byte".into());
            TkStatus::Internal
        })?;
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `cert` must be null or a handle from [`tk_twin_search`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tk_certificate_free(cert: *mut TkCertificate) {
    if !cert.is_null() {
        drop(Box::from_raw(cert));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
