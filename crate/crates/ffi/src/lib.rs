//! C ABI for `sinai-lab`.
//!
//! Objects are opaque handles created by `*_new`/`*_sample` functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`SinaiStatus`]; on failure a message for the calling thread is available
//! from [`sinai_last_error`]. Strings returned by the library are freed with
//! [`sinai_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sinai_lab::environment::{DistributionSpec, Environment, Window};
use sinai_lab::landscape::{potential, stable_landscape, StableLandscape, TimeScale};
use sinai_lab::oracle::ruin_probability;
use sinai_lab::walker::{advance, WalkState};
use sinai_lab::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinaiStatus {
    Ok = 0,
    InvalidArgument = 1,
    InvalidDistribution = 2,
    WindowExhausted = 3,
    NotApplicable = 4,
    Parse = 5,
    Io = 6,
    Internal = 7,
    NullPointer = 8,
    Panic = 9,
}

/// Site law of an environment.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinaiFamily {
    /// Rates `(e^{-c/2}, e^{c/2})` or the swap, with probability 1/2 each.
    TwoPoint = 0,
    /// `log ω⁻`, `log ω⁺` i.i.d. uniform on `[-c/2, c/2]`.
    LogUniform = 1,
}

/// Opaque environment handle.
pub struct SinaiEnvironment(Environment);

/// Opaque stable-landscape handle.
pub struct SinaiLandscape(StableLandscape);

/// The landmarks around the origin, as positions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinaiLandmarks {
    pub m_minus: f64,
    pub h_minus: f64,
    pub m_minus_minus: f64,
    pub h_minus_minus: f64,
    pub m_plus: f64,
    pub h_plus: f64,
    pub m_plus_plus: f64,
    pub h_plus_plus: f64,
    pub m_t: f64,
    /// `f(h⁻) = f(h⁺)`; `m_t` was resolved to `m⁻`.
    pub tie: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SinaiStatus {
    match e {
        Error::InvalidArgument(_) | Error::UnsupportedCoupling(_) => SinaiStatus::InvalidArgument,
        Error::InvalidDistribution(_) => SinaiStatus::InvalidDistribution,
        Error::WindowExhausted(_) => SinaiStatus::WindowExhausted,
        Error::NotApplicable(_) => SinaiStatus::NotApplicable,
        Error::Parse(_) => SinaiStatus::Parse,
        Error::Io(_) => SinaiStatus::Io,
        Error::Consistency(_) => SinaiStatus::Internal,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SinaiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SinaiStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SinaiStatus::NullPointer
        }
        Err(_) => {
            set_error("panic inside sinai-lab".into());
            SinaiStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sinai_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sinai_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Free a string returned by the library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sinai_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Sample an environment on `[lo, hi]`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sinai_env_sample(
    family: SinaiFamily,
    c: f64,
    seed: u64,
    lo: i64,
    hi: i64,
    out_env: *mut *mut SinaiEnvironment,
) -> SinaiStatus {
    guard(|| {
        let slot = out(out_env, "out_env")?;
        let spec = match family {
            SinaiFamily::TwoPoint => DistributionSpec::two_point(c)?,
            SinaiFamily::LogUniform => DistributionSpec::log_uniform(c)?,
        };
        let env = Environment::sample(&spec, seed, Window::new(lo, hi)?);
        *slot = Box::into_raw(Box::new(SinaiEnvironment(env)));
        Ok(())
    })
}

/// Read an environment from its JSON file format.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out_env` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sinai_env_from_json(json: *const c_char, out_env: *mut *mut SinaiEnvironment) -> SinaiStatus {
    guard(|| {
        let slot = out(out_env, "out_env")?;
        let text = deref(json, "json")?;
        let text = CStr::from_ptr(text).to_str().map_err(|e| Error::Parse(e.to_string()))?;
        *slot = Box::into_raw(Box::new(SinaiEnvironment(Environment::from_json(text)?)));
        Ok(())
    })
}

/// Write an environment as JSON; free the result with [`sinai_string_free`].
///
/// # Safety
/// `env` must be a live handle and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sinai_env_to_json(env: *const SinaiEnvironment, out_json: *mut *mut c_char) -> SinaiStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        let s = deref(env, "env")?.0.to_json()?;
        *slot = CString::new(s).map_err(|e| Error::Parse(e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Release an environment. NULL is ignored.
///
/// # Safety
/// `env` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sinai_env_free(env: *mut SinaiEnvironment) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Window `[lo, hi]` of an environment.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sinai_env_window(env: *const SinaiEnvironment, lo: *mut i64, hi: *mut i64) -> SinaiStatus {
    guard(|| {
        let w = deref(env, "env")?.0.window();
        *out(lo, "lo")? = w.lo;
        *out(hi, "hi")? = w.hi;
        Ok(())
    })
}

/// Jump rates of site `x`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sinai_env_rates(
    env: *const SinaiEnvironment,
    x: i64,
    minus: *mut f64,
    plus: *mut f64,
) -> SinaiStatus {
    guard(|| {
        let e = &deref(env, "env")?.0;
        let r = e
            .rates(x)
            .ok_or_else(|| Error::WindowExhausted(format!("site {x} outside {:?}", e.window())))?;
        *out(minus, "minus")? = r.minus;
        *out(plus, "plus")? = r.plus;
        Ok(())
    })
}

/// `P_z(τ_a < τ_b)` in closed form.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sinai_ruin_probability(
    env: *const SinaiEnvironment,
    a: i64,
    z: i64,
    b: i64,
    out_p: *mut f64,
) -> SinaiStatus {
    guard(|| {
        let p = ruin_probability(&deref(env, "env")?.0, a, z, b)?;
        *out(out_p, "out_p")? = p;
        Ok(())
    })
}

/// Run walk number `trial` of stream `seed` from `start` until `horizon`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sinai_simulate(
    env: *const SinaiEnvironment,
    start: i64,
    horizon: f64,
    seed: u64,
    trial: u64,
    out_position: *mut i64,
) -> SinaiStatus {
    guard(|| {
        let e = &deref(env, "env")?.0;
        let slot = out(out_position, "out_position")?;
        if !(horizon >= 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be non-negative, got {horizon}")).into());
        }
        let mut state = WalkState::for_trial(seed, trial, start);
        advance(e, &mut state, horizon, |_, _| false)?;
        *slot = state.position;
        Ok(())
    })
}

/// Stable landscape of the environment's potential at `log t`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sinai_landscape_new(
    env: *const SinaiEnvironment,
    log_t: f64,
    out_landscape: *mut *mut SinaiLandscape,
) -> SinaiStatus {
    guard(|| {
        let slot = out(out_landscape, "out_landscape")?;
        let ls = stable_landscape(&potential(&deref(env, "env")?.0), TimeScale::from_log(log_t)?)?;
        *slot = Box::into_raw(Box::new(SinaiLandscape(ls)));
        Ok(())
    })
}

/// Release a landscape. NULL is ignored.
///
/// # Safety
/// `ls` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sinai_landscape_free(ls: *mut SinaiLandscape) {
    if !ls.is_null() {
        drop(Box::from_raw(ls));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sinai_landscape_landmarks(ls: *const SinaiLandscape, out_marks: *mut SinaiLandmarks) -> SinaiStatus {
    guard(|| {
        let l = &deref(ls, "landscape")?.0;
        let m = &l.landmarks;
        *out(out_marks, "out_marks")? = SinaiLandmarks {
            m_minus: m.m_minus,
            h_minus: m.h_minus,
            m_minus_minus: m.m_minus_minus,
            h_minus_minus: m.h_minus_minus,
            m_plus: m.m_plus,
            h_plus: m.h_plus,
            m_plus_plus: m.m_plus_plus,
            h_plus_plus: m.h_plus_plus,
            m_t: l.m_t,
            tie: l.tie,
        };
        Ok(())
    })
}

/// Copy up to `cap` stable points into `buf`; `count` receives the total.
/// Pass `buf = NULL` to query the count only.
///
/// # Safety
/// `buf` must hold `cap` doubles when non-NULL.
#[no_mangle]
pub unsafe extern "C" fn sinai_landscape_stable_points(
    ls: *const SinaiLandscape,
    buf: *mut f64,
    cap: usize,
    count: *mut usize,
) -> SinaiStatus {
    guard(|| {
        let pts = &deref(ls, "landscape")?.0.stable_points;
        *out(count, "count")? = pts.len();
        if !buf.is_null() {
            let n = pts.len().min(cap);
            ptr::copy_nonoverlapping(pts.as_ptr(), buf, n);
        }
        Ok(())
    })
}
