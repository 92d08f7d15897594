//! C ABI for `formring`.
//!
//! Objects cross the boundary as opaque handles created by `fr_*_new`
//! style constructors and released with the matching `*_free`. Every
//! fallible call returns an [`FrStatus`]; the message of the last error on
//! the calling thread is available from [`fr_last_error`]. Strings returned
//! through out-parameters are owned by the caller and released with
//! [`fr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;
use std::sync::Arc;

use formring::algebra::Mat;
use formring::config::{JobConfig, RawConfig};
use formring::error::Error;
use formring::form_param::parse_form_param;
use formring::k1::{eq_closure, k1_compute, GroupEnum, K1Options};
use formring::quad::{is_in_gq, Family, FormRing, GenMode};
use formring::ring::{Elem, RingCtx};

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum FrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    RingSpec = 3,
    BadLambda = 4,
    FormParam = 5,
    BadIndex = 6,
    DiagonalParameter = 7,
    DimensionMismatch = 8,
    CapExceeded = 9,
    TooLarge = 10,
    VerificationFailed = 11,
    Parse = 12,
    Config = 13,
    BufferTooSmall = 14,
    Other = 99,
}

impl From<&Error> for FrStatus {
    fn from(e: &Error) -> FrStatus {
        match e {
            Error::RingSpec(_) | Error::UnsupportedRing(_) | Error::NotAnInvolution(_) => FrStatus::RingSpec,
            Error::BadLambda { .. } => FrStatus::BadLambda,
            Error::GeneratorOutsideLambdaMax(_) => FrStatus::FormParam,
            Error::BadIndex { .. } => FrStatus::BadIndex,
            Error::DiagonalParameterNotInLambda(_) => FrStatus::DiagonalParameter,
            Error::DimensionMismatch(_) => FrStatus::DimensionMismatch,
            Error::CapExceeded { .. } => FrStatus::CapExceeded,
            Error::TooLarge(_) | Error::DegreeOverflow(_) => FrStatus::TooLarge,
            Error::VerificationFailed(_) | Error::UnresolvedRelation(_) => FrStatus::VerificationFailed,
            Error::Parse(_) => FrStatus::Parse,
            Error::Config(_) => FrStatus::Config,
            _ => FrStatus::Other,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: Error) -> FrStatus {
    let status = FrStatus::from(&e);
    set_error(e.to_string());
    status
}

fn null(what: &str) -> FrStatus {
    set_error(format!("null pointer: {what}"));
    FrStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, FrStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        FrStatus::InvalidUtf8
    })
}

fn out_string(s: String, out: *mut *mut c_char) -> FrStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            FrStatus::Ok
        }
        Err(_) => {
            set_error("output contains a nul byte".into());
            FrStatus::Other
        }
    }
}

/// A form ring `(R, Lambda)` with its generator mode.
pub struct FrFormRing {
    inner: Arc<FormRing>,
}

/// An enumerated finite matrix group.
pub struct FrGroup {
    inner: GroupEnum,
}

/// Message of the last error on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn fr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn fr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Build a form ring from a ring spec such as `"Zmod 6, trivial, lambda=-1"`
/// and a form parameter spec `"min"`, `"max"` or `"gens:[...]"`.
/// `hermitian_only` selects the relaxed diagonal generator mode.
///
/// # Safety
/// `spec` and `lambda` must be nul-terminated strings; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn fr_form_ring_new(
    spec: *const c_char,
    lambda: *const c_char,
    hermitian_only: bool,
    out: *mut *mut FrFormRing,
) -> FrStatus {
    if out.is_null() {
        return null("out");
    }
    let spec = match str_arg(spec, "spec") {
        Ok(s) => s,
        Err(st) => return st,
    };
    let lambda = match str_arg(lambda, "lambda") {
        Ok(s) => s,
        Err(st) => return st,
    };
    let built = RingCtx::parse(spec)
        .and_then(|r| parse_form_param(&r, lambda))
        .map(|l| FormRing::new(l, if hermitian_only { GenMode::HermitianOnly } else { GenMode::Strict }));
    match built {
        Ok(fr) => {
            *out = Box::into_raw(Box::new(FrFormRing { inner: fr }));
            FrStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `fr` must come from [`fr_form_ring_new`], or be null.
#[no_mangle]
pub unsafe extern "C" fn fr_form_ring_free(fr: *mut FrFormRing) {
    if !fr.is_null() {
        drop(Box::from_raw(fr));
    }
}

/// Number of elements of the base ring; 0 for a null handle.
///
/// # Safety
/// `fr` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fr_ring_size(fr: *const FrFormRing) -> usize {
    fr.as_ref().map_or(0, |f| f.inner.ring.size())
}

unsafe fn matrix_arg(f: &FormRing, n: usize, entries: *const u16, len: usize) -> Result<Mat<Elem>, FrStatus> {
    if entries.is_null() {
        return Err(null("entries"));
    }
    let dim = 2 * n;
    if len != dim * dim {
        return Err(fail(Error::DimensionMismatch(format!("{len} entries for a {dim}x{dim} matrix"))));
    }
    let raw = std::slice::from_raw_parts(entries, len);
    let size = f.ring.size();
    if let Some(bad) = raw.iter().find(|&&x| x as usize >= size) {
        return Err(fail(Error::Parse(format!("element index {bad} out of range for a ring of size {size}"))));
    }
    Ok(Mat { dim, entries: raw.iter().map(|&x| Elem(x)).collect() })
}

/// Membership of a `2n x 2n` row-major matrix of element indices in
/// `GQ_{2n}(R, Lambda)`.
///
/// # Safety
/// `entries` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fr_is_in_gq(fr: *const FrFormRing, n: usize, entries: *const u16, len: usize, out: *mut bool) -> FrStatus {
    let Some(f) = fr.as_ref() else { return null("fr") };
    if out.is_null() {
        return null("out");
    }
    match matrix_arg(&f.inner, n, entries, len) {
        Ok(m) => {
            *out = is_in_gq(&f.inner, &m);
            FrStatus::Ok
        }
        Err(st) => st,
    }
}

/// Write the elementary matrix of family `fam` (0 = eps, 1 = r, 2 = l)
/// with 1-based indices `i`, `j` and parameter index `a` into `out`
/// (row-major, `len = 4 n^2`).
///
/// # Safety
/// `out` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn fr_elementary(
    fr: *const FrFormRing,
    n: usize,
    fam: u32,
    i: usize,
    j: usize,
    a: u16,
    out: *mut u16,
    len: usize,
) -> FrStatus {
    let Some(f) = fr.as_ref() else { return null("fr") };
    if out.is_null() {
        return null("out");
    }
    let fam = match fam {
        0 => Family::Eps,
        1 => Family::R,
        2 => Family::L,
        _ => return fail(Error::Parse(format!("unknown family {fam}"))),
    };
    if (a as usize) >= f.inner.ring.size() {
        return fail(Error::Parse(format!("element index {a} out of range")));
    }
    if len != 4 * n * n {
        set_error(format!("buffer of {len} for {} entries", 4 * n * n));
        return FrStatus::BufferTooSmall;
    }
    match formring::quad::elem(&f.inner, n, fam, i, j, Elem(a)) {
        Ok(m) => {
            let dst = std::slice::from_raw_parts_mut(out, len);
            for (d, x) in dst.iter_mut().zip(&m.entries) {
                *d = x.0;
            }
            FrStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Enumerate `EQ_{2n}` by closure, stopping at `cap` elements. A capped
/// enumeration still yields a handle; see [`fr_group_is_complete`].
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fr_eq_closure(fr: *const FrFormRing, n: usize, cap: usize, out: *mut *mut FrGroup) -> FrStatus {
    let Some(f) = fr.as_ref() else { return null("fr") };
    if out.is_null() {
        return null("out");
    }
    match eq_closure(&f.inner, n, cap) {
        Ok(g) => {
            *out = Box::into_raw(Box::new(FrGroup { inner: g }));
            FrStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// # Safety
/// `g` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fr_group_order(g: *const FrGroup) -> usize {
    g.as_ref().map_or(0, |g| g.inner.order())
}

/// # Safety
/// `g` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn fr_group_is_complete(g: *const FrGroup) -> bool {
    g.as_ref().is_some_and(|g| g.inner.is_complete())
}

/// Membership of a row-major matrix in an enumerated group.
///
/// # Safety
/// `entries` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fr_group_contains(g: *const FrGroup, entries: *const u16, len: usize, out: *mut bool) -> FrStatus {
    let Some(g) = g.as_ref() else { return null("g") };
    if entries.is_null() {
        return null("entries");
    }
    if out.is_null() {
        return null("out");
    }
    let dim = g.inner.dim();
    if len != dim * dim {
        return fail(Error::DimensionMismatch(format!("{len} entries for a {dim}x{dim} matrix")));
    }
    let m = Mat { dim, entries: std::slice::from_raw_parts(entries, len).iter().map(|&x| Elem(x)).collect() };
    *out = g.inner.contains(&m);
    FrStatus::Ok
}

/// # Safety
/// `g` must come from [`fr_eq_closure`], or be null.
#[no_mangle]
pub unsafe extern "C" fn fr_group_free(g: *mut FrGroup) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// `K_{1,2n}` report as JSON, default options.
///
/// # Safety
/// `out` must be writable; release the string with [`fr_string_free`].
#[no_mangle]
pub unsafe extern "C" fn fr_k1_json(fr: *const FrFormRing, n: usize, out: *mut *mut c_char) -> FrStatus {
    let Some(f) = fr.as_ref() else { return null("fr") };
    if out.is_null() {
        return null("out");
    }
    match k1_compute(&f.inner, n, &K1Options::default()) {
        Ok(rep) => out_string(serde_json::to_string(&rep).expect("report serializes"), out),
        Err(e) => fail(e),
    }
}

/// Run a job given as config text (the format read by the command-line
/// tool). The JSON report goes to `out`, the tool's exit code to
/// `exit_code`. A config that cannot be parsed returns an error status.
///
/// # Safety
/// `config` must be a nul-terminated string; `out` and `exit_code` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn fr_run_config(config: *const c_char, out: *mut *mut c_char, exit_code: *mut i32) -> FrStatus {
    if out.is_null() || exit_code.is_null() {
        return null("out");
    }
    let text = match str_arg(config, "config") {
        Ok(s) => s,
        Err(st) => return st,
    };
    let job = match RawConfig::parse(text).and_then(|raw| JobConfig::from_raw(&raw)) {
        Ok(j) => j,
        Err(e) => return fail(e),
    };
    let outcome = formring::cli::run(&job);
    *exit_code = outcome.code;
    out_string(serde_json::to_string(&outcome.report).expect("report serializes"), out)
}
