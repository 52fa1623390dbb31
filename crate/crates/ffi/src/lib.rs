//! C interface to `elswap`.
//!
//! Models are created from the same JSON document the CLI reads and handed out
//! as opaque [`ElswapModel`] pointers. Every function returns an
//! [`ElswapStatus`]; on failure a description is available from
//! [`elswap_last_error`] on the calling thread. Panics never cross the
//! boundary.
//!
//! The header `include/elswap.h` is regenerated by the build script.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use elswap::averaging::{d1_d2, market_price_factor, swap_vol_factor};
use elswap::conditions::ConditionReport;
use elswap::config::RunConfig;
use elswap::pricer::{price_fourier, price_mc, PriceResult, ValuationState};
use elswap::simulate::{GridSpec, Measure};
use elswap::{Error, OptionSpec, SwapModel};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElswapStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// An argument or the model configuration is out of range.
    InvalidArgument = 3,
    /// A numerical method failed (quadrature, Riccati solver, simulation).
    Numerical = 4,
    /// An internal panic was caught.
    Panic = 5,
}

/// Option price and exercise probabilities.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ElswapPrice {
    pub call: f64,
    pub put: f64,
    pub q1: f64,
    pub q2: f64,
    /// Monte-Carlo standard error of the call; zero for the Fourier method.
    pub std_error: f64,
}

/// Feller and Novikov diagnostics; an unbounded `novikov_lhs` is reported as infinity.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ElswapConditions {
    pub feller_ok: bool,
    pub feller_lhs: f64,
    pub feller_rhs: f64,
    pub novikov_ok: bool,
    pub novikov_lhs: f64,
    pub novikov_rhs: f64,
}

/// Opaque model handle.
pub struct ElswapModel {
    config: RunConfig,
    model: SwapModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> ElswapStatus {
    if e.is_validation() {
        ElswapStatus::InvalidArgument
    } else {
        ElswapStatus::Numerical
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), ElswapStatus>) -> ElswapStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ElswapStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            ElswapStatus::Panic
        }
    }
}

fn fail(e: Error) -> ElswapStatus {
    set_last_error(e.to_string());
    status_of(&e)
}

fn null_error(name: &str) -> ElswapStatus {
    set_last_error(format!("`{name}` must not be null"));
    ElswapStatus::NullPointer
}

unsafe fn model_ref<'a>(model: *const ElswapModel) -> Result<&'a ElswapModel, ElswapStatus> {
    // SAFETY: the caller passes null or a live handle from `elswap_model_from_json`.
    unsafe { model.as_ref() }.ok_or_else(|| null_error("model"))
}

unsafe fn write_out<T>(out: *mut T, name: &str, value: T) -> Result<(), ElswapStatus> {
    if out.is_null() {
        return Err(null_error(name));
    }
    // SAFETY: non-null and, per the caller contract, valid for writes of `T`.
    unsafe { out.write(value) };
    Ok(())
}

fn to_price(r: &PriceResult) -> ElswapPrice {
    ElswapPrice {
        call: r.call,
        put: r.put,
        q1: r.q1,
        q2: r.q2,
        std_error: r.stderr.unwrap_or(0.0),
    }
}

/// Builds a model from a JSON run configuration; `"{}"` gives the reference model.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for one pointer write.
/// The handle written to `out` must be released with [`elswap_model_free`].
#[no_mangle]
pub unsafe extern "C" fn elswap_model_from_json(json: *const c_char, out: *mut *mut ElswapModel) -> ElswapStatus {
    guard(|| {
        if json.is_null() {
            return Err(null_error("json"));
        }
        if out.is_null() {
            return Err(null_error("out"));
        }
        // SAFETY: non-null and NUL-terminated per the caller contract.
        let text = unsafe { CStr::from_ptr(json) }.to_str().map_err(|e| {
            set_last_error(format!("configuration is not UTF-8: {e}"));
            ElswapStatus::InvalidUtf8
        })?;
        let config = RunConfig::from_json(text).map_err(fail)?;
        let model = config.swap_model().map_err(fail)?;
        let handle = Box::into_raw(Box::new(ElswapModel { config, model }));
        // SAFETY: `out` checked non-null above.
        unsafe { out.write(handle) };
        Ok(())
    })
}

/// Releases a model handle; null is ignored.
///
/// # Safety
/// `model` must be null or a handle from [`elswap_model_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn elswap_model_free(model: *mut ElswapModel) {
    if !model.is_null() {
        // SAFETY: ownership returns to Rust exactly once per the caller contract.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Last error message of the calling thread, or null after a successful call.
///
/// The string stays valid until the next `elswap_*` call on the same thread.
#[no_mangle]
pub extern "C" fn elswap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Swap volatility factor `S(t)` of the model.
///
/// # Safety
/// `model` must be a live handle and `out` valid for one `double` write.
#[no_mangle]
pub unsafe extern "C" fn elswap_swap_vol_factor(model: *const ElswapModel, t: f64, out: *mut f64) -> ElswapStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        let v = swap_vol_factor(m.model.vol(), m.model.weight(), m.model.delivery(), t).map_err(fail)?;
        unsafe { write_out(out, "out", v) }
    })
}

/// Market price of delivery risk factor `xi(t)` of the model.
///
/// # Safety
/// `model` must be a live handle and `out` valid for one `double` write.
#[no_mangle]
pub unsafe extern "C" fn elswap_market_price_factor(model: *const ElswapModel, t: f64, out: *mut f64) -> ElswapStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        let v = market_price_factor(m.model.vol(), m.model.weight(), m.model.delivery(), t).map_err(fail)?;
        unsafe { write_out(out, "out", v) }
    })
}

/// Feller and Novikov conditions, with Feller checked up to the start of delivery.
///
/// # Safety
/// `model` must be a live handle and `out` valid for one struct write.
#[no_mangle]
pub unsafe extern "C" fn elswap_check(model: *const ElswapModel, out: *mut ElswapConditions) -> ElswapStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        let r = ConditionReport::evaluate(&m.model, m.model.delivery().tau1()).map_err(fail)?;
        let value = ElswapConditions {
            feller_ok: r.feller_ok,
            feller_lhs: r.feller_lhs,
            feller_rhs: r.feller_rhs,
            novikov_ok: r.novikov_ok,
            novikov_lhs: r.novikov_lhs,
            novikov_rhs: r.novikov_rhs,
        };
        unsafe { write_out(out, "out", value) }
    })
}

/// Semi-analytic call and put at `t = 0` from the model's initial state.
///
/// # Safety
/// `model` must be a live handle and `out` valid for one struct write.
#[no_mangle]
pub unsafe extern "C" fn elswap_price_fourier(
    model: *const ElswapModel,
    strike: f64,
    exercise: f64,
    out: *mut ElswapPrice,
) -> ElswapStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        let opt = OptionSpec::new(strike, exercise, m.model.delivery()).map_err(fail)?;
        let state = ValuationState::initial(&m.model);
        let r = price_fourier(&m.model, &opt, state, &m.config.fourier).map_err(fail)?;
        unsafe { write_out(out, "out", to_price(&r)) }
    })
}

/// Monte-Carlo call and put under the swap measure on `steps` steps to `exercise`.
///
/// # Safety
/// `model` must be a live handle and `out` valid for one struct write.
#[no_mangle]
pub unsafe extern "C" fn elswap_price_mc(
    model: *const ElswapModel,
    strike: f64,
    exercise: f64,
    seed: u64,
    paths: usize,
    steps: usize,
    out: *mut ElswapPrice,
) -> ElswapStatus {
    guard(|| {
        let m = unsafe { model_ref(model) }?;
        let opt = OptionSpec::new(strike, exercise, m.model.delivery()).map_err(fail)?;
        let grid = GridSpec::new(0.0, exercise, steps, seed, paths).map_err(fail)?;
        let r = price_mc(&m.model, &opt, &grid, Measure::QTilde).map_err(fail)?;
        unsafe { write_out(out, "out", to_price(&r)) }
    })
}

/// Samuelson averaging factors for decay `lambda` over a delivery period of length `x`.
///
/// # Safety
/// `d1` and `d2` must be valid for one `double` write each.
#[no_mangle]
pub unsafe extern "C" fn elswap_samuelson_factors(lambda: f64, x: f64, d1: *mut f64, d2: *mut f64) -> ElswapStatus {
    guard(|| {
        if d1.is_null() {
            return Err(null_error("d1"));
        }
        if d2.is_null() {
            return Err(null_error("d2"));
        }
        let (a, b) = d1_d2(lambda, x).map_err(fail)?;
        unsafe {
            write_out(d1, "d1", a)?;
            write_out(d2, "d2", b)
        }
    })
}
