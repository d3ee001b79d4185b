//! C ABI over the opburgers library.
//!
//! Every fallible function returns an [`OpbStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can
//! be read with [`opb_last_error`]. Scenarios are opaque handles owned by
//! the caller and released with [`opb_scenario_free`]; strings returned by
//! the library are released with [`opb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use opburgers::kernels::{hyperbolic_heat_density, KernelPoint};
use opburgers::residual::{evaluate, GridSpec};
use opburgers::scenarios::{find, Scenario};
use opburgers::specialfn::{gamma, hermite_gen, mittag_leffler, HermiteArgs, MLParams};
use opburgers::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    UnknownScenario = 3,
    Parameter = 4,
    Domain = 5,
    Numerical = 6,
    Panic = 7,
}

/// Opaque scenario handle.
pub struct OpbScenario {
    inner: Scenario,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> OpbStatus {
    match e {
        Error::UnknownScenario(_) => OpbStatus::UnknownScenario,
        Error::Parameter(_)
        | Error::Arity { .. }
        | Error::UnsupportedCheck(_)
        | Error::UnsupportedConstraint(_)
        | Error::HermiteCap { .. } => OpbStatus::Parameter,
        Error::Domain { .. }
        | Error::LogDomain { .. }
        | Error::SingularPath { .. }
        | Error::SingularMetric { .. }
        | Error::Pole { .. }
        | Error::Stencil { .. } => OpbStatus::Domain,
        Error::Convergence { .. } | Error::Accuracy { .. } | Error::NonFinite { .. } | Error::BlowUp { .. } | Error::Exclusions { .. } => {
            OpbStatus::Numerical
        }
    }
}

fn fail(status: OpbStatus, msg: &str) -> OpbStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> OpbStatus {
    fail(status_of(&e), &e.to_string())
}

/// Runs `f`, converting panics into [`OpbStatus::Panic`].
fn guard<F: FnOnce() -> OpbStatus>(f: F) -> OpbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(OpbStatus::Panic, &msg)
        }
    }
}

fn write_out(out: *mut f64, r: opburgers::Result<f64>) -> OpbStatus {
    if out.is_null() {
        return fail(OpbStatus::NullPointer, "output pointer is null");
    }
    match r {
        Ok(v) => {
            // SAFETY: checked non-null; the caller guarantees it is writable
            unsafe { *out = v };
            OpbStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn opb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn opb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Γ(x).
///
/// # Safety
/// `out` must be null or valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn opb_gamma(x: f64, out: *mut f64) -> OpbStatus {
    guard(|| write_out(out, gamma(x)))
}

/// E_β(z), the one-parameter Mittag-Leffler function.
///
/// # Safety
/// `out` must be null or valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn opb_ml(beta: f64, z: f64, out: *mut f64) -> OpbStatus {
    guard(|| write_out(out, mittag_leffler(MLParams { beta, arg: z })))
}

/// Heat polynomial H_n(f, h).
///
/// # Safety
/// `out` must be null or valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn opb_hermite(n: u32, f: f64, h: f64, out: *mut f64) -> OpbStatus {
    guard(|| write_out(out, hermite_gen(HermiteArgs { n, fval: f, hval: h })))
}

/// Radial hyperbolic heat kernel φ(η, t).
///
/// # Safety
/// `out` must be null or valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn opb_kernel(eta: f64, t: f64, rel_tol: f64, out: *mut f64) -> OpbStatus {
    guard(|| write_out(out, KernelPoint::new(eta, t).and_then(|p| hyperbolic_heat_density(p, rel_tol))))
}

/// Looks up a catalog scenario by id and stores a new handle in `out`.
///
/// # Safety
/// `id` must be null or a NUL-terminated string; `out` must be null or
/// valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn opb_scenario_new(id: *const c_char, out: *mut *mut OpbScenario) -> OpbStatus {
    guard(|| {
        if id.is_null() || out.is_null() {
            return fail(OpbStatus::NullPointer, "id or output pointer is null");
        }
        // SAFETY: non-null and NUL-terminated per the contract
        let id = match unsafe { CStr::from_ptr(id) }.to_str() {
            Ok(s) => s,
            Err(_) => return fail(OpbStatus::InvalidUtf8, "scenario id is not UTF-8"),
        };
        match find(id) {
            Ok(sc) => {
                // SAFETY: checked non-null
                unsafe { *out = Box::into_raw(Box::new(OpbScenario { inner: sc })) };
                OpbStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sc` must be null or a handle from [`opb_scenario_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn opb_scenario_free(sc: *mut OpbScenario) {
    if !sc.is_null() {
        // SAFETY: allocated by opb_scenario_new and not yet freed
        drop(unsafe { Box::from_raw(sc) });
    }
}

unsafe fn handle<'a>(sc: *const OpbScenario) -> Option<&'a Scenario> {
    // SAFETY: the caller passes null or a live handle
    unsafe { sc.as_ref() }.map(|h| &h.inner)
}

/// Number of spatial dimensions.
///
/// # Safety
/// `sc` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn opb_scenario_ndim(sc: *const OpbScenario, out: *mut usize) -> OpbStatus {
    guard(|| {
        // SAFETY: per the contract
        let Some(s) = (unsafe { handle(sc) }) else {
            return fail(OpbStatus::NullPointer, "scenario handle is null");
        };
        if out.is_null() {
            return fail(OpbStatus::NullPointer, "output pointer is null");
        }
        // SAFETY: checked non-null
        unsafe { *out = s.ndim() };
        OpbStatus::Ok
    })
}

/// The scenario's primary exact solution at (x, t).
///
/// # Safety
/// `sc` must be null or a live handle; `x` null or valid for `len`
/// doubles; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn opb_scenario_eval(sc: *const OpbScenario, x: *const f64, len: usize, t: f64, out: *mut f64) -> OpbStatus {
    guard(|| {
        // SAFETY: per the contract
        let Some(s) = (unsafe { handle(sc) }) else {
            return fail(OpbStatus::NullPointer, "scenario handle is null");
        };
        if x.is_null() {
            return fail(OpbStatus::NullPointer, "point is null");
        }
        if len != s.ndim() {
            return from_error(Error::Arity {
                expected: s.ndim(),
                got: len,
            });
        }
        // SAFETY: non-null and `len` readable per the contract
        let pt = unsafe { std::slice::from_raw_parts(x, len) };
        let v = s.exact().field.eval(pt, t);
        let r = if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { point: pt.to_vec(), t })
        };
        write_out(out, r)
    })
}

/// Residual of the primary exact solution on a grid with `nodes` per
/// spatial axis and `time_nodes` times. Writes the maximum and the RMS.
///
/// # Safety
/// `sc` must be null or a live handle; the outputs null or writable.
#[no_mangle]
pub unsafe extern "C" fn opb_scenario_residual(
    sc: *const OpbScenario,
    nodes: usize,
    time_nodes: usize,
    max_abs: *mut f64,
    l2: *mut f64,
) -> OpbStatus {
    guard(|| {
        // SAFETY: per the contract
        let Some(s) = (unsafe { handle(sc) }) else {
            return fail(OpbStatus::NullPointer, "scenario handle is null");
        };
        if max_abs.is_null() || l2.is_null() {
            return fail(OpbStatus::NullPointer, "output pointer is null");
        }
        let sol = s.exact();
        match evaluate(s, &sol.field, &GridSpec::for_solution(s, sol, nodes, time_nodes)) {
            Ok(r) => {
                // SAFETY: checked non-null
                unsafe {
                    *max_abs = r.max_abs;
                    *l2 = r.l2;
                }
                OpbStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// JSON descriptor of the scenario. Release with [`opb_string_free`].
///
/// # Safety
/// `sc` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn opb_scenario_describe_json(sc: *const OpbScenario, out: *mut *mut c_char) -> OpbStatus {
    guard(|| {
        // SAFETY: per the contract
        let Some(s) = (unsafe { handle(sc) }) else {
            return fail(OpbStatus::NullPointer, "scenario handle is null");
        };
        if out.is_null() {
            return fail(OpbStatus::NullPointer, "output pointer is null");
        }
        let json = match serde_json::to_string(&s.descriptor()) {
            Ok(j) => j,
            Err(e) => return fail(OpbStatus::Numerical, &e.to_string()),
        };
        let c = CString::new(json).unwrap_or_default();
        // SAFETY: checked non-null
        unsafe { *out = c.into_raw() };
        OpbStatus::Ok
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn opb_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by CString::into_raw in this library
        drop(unsafe { CString::from_raw(s) });
    }
}
