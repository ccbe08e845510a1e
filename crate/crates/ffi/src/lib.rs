//! C ABI over the trained-network evaluator and the analytical solution.
//!
//! Every function returns a [`PpStatus`]; on failure a message is kept per
//! thread and can be read with [`pp_last_error_message`]. Models are opaque
//! handles created by [`pp_model_load`] and released by [`pp_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use poro_pinn::network::{forward, forward_jet, NormalizationMaps, ParameterSet};
use poro_pinn::oracle::{solution_at, SeriesTruncation};
use poro_pinn::residual::{MassBalanceForm, NondimParams};
use poro_pinn::trainer::load_checkpoint;
use poro_pinn::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Numerical = 5,
    Panic = 6,
}

/// Trained network with its normalization maps.
pub struct PpModel {
    params: ParameterSet,
    maps: NormalizationMaps,
}

/// Nondimensional problem constants. `mass_balance` is 0 for the form the
/// analytical series satisfies and 1 for the opposite Laplacian sign.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PpProblem {
    pub eta: f64,
    pub beta: f64,
    pub omega: f64,
    pub x0: f64,
    pub z0: f64,
    pub a: f64,
    pub b: f64,
    pub mass_balance: i32,
}

impl From<NondimParams> for PpProblem {
    fn from(p: NondimParams) -> Self {
        PpProblem {
            eta: p.eta,
            beta: p.beta,
            omega: p.omega,
            x0: p.x0,
            z0: p.z0,
            a: p.a,
            b: p.b,
            mass_balance: match p.mass_balance {
                MassBalanceForm::Consistent => 0,
                MassBalanceForm::AsPrinted => 1,
            },
        }
    }
}

impl TryFrom<PpProblem> for NondimParams {
    type Error = Error;
    fn try_from(p: PpProblem) -> Result<Self, Error> {
        let mass_balance = match p.mass_balance {
            0 => MassBalanceForm::Consistent,
            1 => MassBalanceForm::AsPrinted,
            other => {
                return Err(Error::InvalidInput(format!(
                    "mass_balance must be 0 or 1, got {other}"
                )))
            }
        };
        let params = NondimParams {
            eta: p.eta,
            beta: p.beta,
            omega: p.omega,
            x0: p.x0,
            z0: p.z0,
            a: p.a,
            b: p.b,
            mass_balance,
        };
        params.validate()?;
        Ok(params)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    let c = CString::new(text).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PpStatus {
    match err {
        Error::Io { .. } => PpStatus::Io,
        Error::Parse { .. } => PpStatus::Parse,
        Error::NonFinite { .. } | Error::Diverged { .. } => PpStatus::Numerical,
        Error::InvalidInput(_) | Error::Config { .. } | Error::DegenerateReference(_) => {
            PpStatus::InvalidArgument
        }
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), PpStatus>) -> PpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PpStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            PpStatus::Panic
        }
    }
}

fn fail(err: Error) -> PpStatus {
    set_error(err.to_string());
    status_of(&err)
}

fn null(what: &str) -> PpStatus {
    set_error(format!("`{what}` is null"));
    PpStatus::NullPointer
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn pp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a checkpoint file. On success `*out` owns a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pp_model_load(path: *const c_char, out: *mut *mut PpModel) -> PpStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null; caller guarantees NUL termination.
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| fail(Error::InvalidInput("path is not UTF-8".into())))?;
        let ck = load_checkpoint(Path::new(path)).map_err(fail)?;
        let model = Box::new(PpModel {
            params: ck.params,
            maps: ck.maps,
        });
        // SAFETY: checked non-null.
        unsafe { *out = Box::into_raw(model) };
        Ok(())
    })
}

/// Releases a handle from [`pp_model_load`]. Null is ignored.
///
/// # Safety
/// `model` must come from [`pp_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pp_model_free(model: *mut PpModel) {
    if !model.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Number of trainable parameters, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pp_model_param_count(model: *const PpModel) -> usize {
    // SAFETY: caller guarantees the handle is live when non-null.
    unsafe { model.as_ref() }.map_or(0, |m| m.params.len())
}

/// Writes `(u, v, p)` at `(x, z, t)` to `out[0..3]`.
///
/// # Safety
/// `model` must be a live handle and `out` point to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pp_model_forward(
    model: *const PpModel,
    x: f64,
    z: f64,
    t: f64,
    out: *mut f64,
) -> PpStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle when non-null.
        let m = unsafe { model.as_ref() }.ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let y = forward(&m.params, &m.maps, [x, z, t]).map_err(fail)?;
        // SAFETY: caller guarantees room for 3 values.
        unsafe { ptr::copy_nonoverlapping(y.as_ptr(), out, 3) };
        Ok(())
    })
}

/// Writes 30 values: for u, v, p in turn the value, the derivatives in x,
/// z, t, and the second derivatives xx, zz, tt, xz, xt, zt.
///
/// # Safety
/// `model` must be a live handle and `out` point to 30 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pp_model_forward_jet(
    model: *const PpModel,
    x: f64,
    z: f64,
    t: f64,
    out: *mut f64,
) -> PpStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle when non-null.
        let m = unsafe { model.as_ref() }.ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let jet = forward_jet(&m.params, &m.maps, [x, z, t]).map_err(fail)?;
        let mut flat = [0.0; 30];
        for (f, j) in jet.fields().into_iter().enumerate() {
            flat[10 * f..10 * f + 10].copy_from_slice(&j.components());
        }
        // SAFETY: caller guarantees room for 30 values.
        unsafe { ptr::copy_nonoverlapping(flat.as_ptr(), out, 30) };
        Ok(())
    })
}

/// Fills `out` with the default problem constants.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pp_problem_default(out: *mut PpProblem) -> PpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null.
        unsafe { *out = NondimParams::default().into() };
        Ok(())
    })
}

/// Analytical `(u, v, p)` at `(x, z, t)` from the double series truncated
/// at `n_max × q_max` modes. A null `problem` selects the defaults.
///
/// # Safety
/// `problem` must be null or valid; `out` must point to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pp_analytical_solution(
    problem: *const PpProblem,
    n_max: usize,
    q_max: usize,
    x: f64,
    z: f64,
    t: f64,
    out: *mut f64,
) -> PpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: caller guarantees validity when non-null.
        let params = match unsafe { problem.as_ref() } {
            Some(p) => NondimParams::try_from(*p).map_err(fail)?,
            None => NondimParams::default(),
        };
        let trunc = SeriesTruncation { n_max, q_max };
        trunc.validate().map_err(fail)?;
        if ![x, z, t].iter().all(|v| v.is_finite()) {
            return Err(fail(Error::InvalidInput(
                "coordinates must be finite".into(),
            )));
        }
        let y = solution_at(x, z, t, &params, trunc);
        // SAFETY: caller guarantees room for 3 values.
        unsafe { ptr::copy_nonoverlapping(y.as_ptr(), out, 3) };
        Ok(())
    })
}
