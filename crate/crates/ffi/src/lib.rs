//! C interface to `expfunc`.
//!
//! Models are opaque handles built from the JSON model format. Every function
//! returns an [`ExpfuncStatus`]; results go through out-pointers. On failure
//! [`expfunc_last_error_message`] describes the error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use expfunc::asymptotics::asymptotic_density_deriv;
use expfunc::bgamma::{log_mellin, t_phis};
use expfunc::config::ModelConfig;
use expfunc::inversion::{density_deriv, moment, tail};
use expfunc::phi_star::varphi_star;
use expfunc::{BernsteinSpec, ComplexPoint, Error};

/// Status codes returned by every function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpfuncStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    InvalidModel = 4,
    Domain = 5,
    Nonconvergent = 6,
    Truncation = 7,
    Budget = 8,
    Unverified = 9,
    Panic = 10,
}

/// Opaque model handle.
pub struct ExpfuncModel {
    spec: BernsteinSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> ExpfuncStatus {
    match e {
        Error::Domain(_) => ExpfuncStatus::Domain,
        Error::InvalidSpec(_) => ExpfuncStatus::InvalidModel,
        Error::Config(_) => ExpfuncStatus::Config,
        Error::NonconvergentQuadrature { .. } | Error::NonconvergentRootFind { .. } => ExpfuncStatus::Nonconvergent,
        Error::TruncationUnbounded { .. } => ExpfuncStatus::Truncation,
        Error::BudgetExceeded(_) => ExpfuncStatus::Budget,
        Error::InconclusiveDiagnostic { .. } | Error::PositiveIncreaseUnverified => ExpfuncStatus::Unverified,
    }
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (ExpfuncStatus, String)>) -> ExpfuncStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ExpfuncStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ExpfuncStatus::Panic
        }
    }
}

fn lib<T>(r: expfunc::Result<T>) -> Result<T, (ExpfuncStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (ExpfuncStatus, String) {
    (ExpfuncStatus::NullPointer, "null pointer argument".into())
}

unsafe fn handle<'a>(m: *const ExpfuncModel) -> Result<&'a BernsteinSpec, (ExpfuncStatus, String)> {
    m.as_ref().map(|m| &m.spec).ok_or_else(null)
}

unsafe fn put<T>(p: *mut T, v: T) -> Result<(), (ExpfuncStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    p.write(v);
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn expfunc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn expfunc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a model from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer. The
/// handle must be released with [`expfunc_model_free`].
#[no_mangle]
pub unsafe extern "C" fn expfunc_model_from_json(json: *const c_char, out: *mut *mut ExpfuncModel) -> ExpfuncStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return Err(null());
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| (ExpfuncStatus::InvalidUtf8, e.to_string()))?;
        let spec = lib(ModelConfig::from_json(text).and_then(|c| c.build()))?;
        out.write(Box::into_raw(Box::new(ExpfuncModel { spec })));
        Ok(())
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from [`expfunc_model_from_json`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn expfunc_model_free(model: *mut ExpfuncModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// φ⁽ᵒʳᵈᵉʳ⁾(re + i·im) for order 0..=3.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn expfunc_phi(
    model: *const ExpfuncModel,
    re: f64,
    im: f64,
    order: c_int,
    out_re: *mut f64,
    out_im: *mut f64,
) -> ExpfuncStatus {
    guard(|| {
        let spec = handle(model)?;
        if !(0..=3).contains(&order) {
            return Err((ExpfuncStatus::Domain, format!("order must lie in 0..=3, got {order}")));
        }
        let z = lib(ComplexPoint::new(re, im))?.value();
        let v = lib(spec.derivs(z, order as usize))?[order as usize];
        put(out_re, v.re)?;
        put(out_im, v.im)
    })
}

/// log M(z) = log E[I^{z−1}] on the principal branch.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn expfunc_log_mellin(
    model: *const ExpfuncModel,
    re: f64,
    im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> ExpfuncStatus {
    guard(|| {
        let spec = handle(model)?;
        let z = lib(ComplexPoint::new(re, im))?.value();
        let v = lib(log_mellin(spec, z))?;
        put(out_re, v.re)?;
        put(out_im, v.im)
    })
}

/// f⁽ⁿ⁾(x), the n-th derivative of the density of I, with an error estimate.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn expfunc_density_deriv(
    model: *const ExpfuncModel,
    x: f64,
    n: c_int,
    tol: f64,
    value: *mut f64,
    abs_err: *mut f64,
) -> ExpfuncStatus {
    guard(|| {
        let spec = handle(model)?;
        let n = usize::try_from(n).map_err(|_| (ExpfuncStatus::Domain, format!("n must be ≥ 0, got {n}")))?;
        let r = lib(density_deriv(spec, x, n, tol))?;
        put(value, r.value)?;
        put(abs_err, r.abs_err)
    })
}

/// P(I > x).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn expfunc_tail(
    model: *const ExpfuncModel,
    x: f64,
    tol: f64,
    value: *mut f64,
    abs_err: *mut f64,
) -> ExpfuncStatus {
    guard(|| {
        let spec = handle(model)?;
        let r = lib(tail(spec, x, tol))?;
        put(value, r.value)?;
        put(abs_err, r.abs_err)
    })
}

/// E[Iⁿ].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn expfunc_moment(model: *const ExpfuncModel, n: c_int, value: *mut f64) -> ExpfuncStatus {
    guard(|| {
        let spec = handle(model)?;
        let n = usize::try_from(n).map_err(|_| (ExpfuncStatus::Domain, format!("n must be ≥ 0, got {n}")))?;
        put(value, lib(moment(spec, n))?)
    })
}

/// Large-x asymptotic of f⁽ⁿ⁾(x). `log_abs` stays finite when `value`
/// underflows; `positive_increase` is 0 when the model's positive increase
/// could not be verified.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn expfunc_asymptotic(
    model: *const ExpfuncModel,
    x: f64,
    n: c_int,
    value: *mut f64,
    log_abs: *mut f64,
    positive_increase: *mut c_int,
) -> ExpfuncStatus {
    guard(|| {
        let spec = handle(model)?;
        let n = usize::try_from(n).map_err(|_| (ExpfuncStatus::Domain, format!("n must be ≥ 0, got {n}")))?;
        let a = lib(asymptotic_density_deriv(spec, x, n))?;
        put(value, a.value)?;
        put(log_abs, a.log_abs)?;
        put(positive_increase, c_int::from(a.positive_increase))
    })
}

/// The v > 0 with v/φ(v) = x.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn expfunc_varphi_star(model: *const ExpfuncModel, x: f64, value: *mut f64) -> ExpfuncStatus {
    guard(|| {
        let spec = handle(model)?;
        put(value, lib(varphi_star(spec, x))?)
    })
}

/// The constant T in the asymptotic prefactor e^{−T}.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn expfunc_t_phis(model: *const ExpfuncModel, value: *mut f64) -> ExpfuncStatus {
    guard(|| {
        let spec = handle(model)?;
        put(value, lib(t_phis(spec))?)
    })
}
