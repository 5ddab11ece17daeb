//! C ABI for the `femtopc` simulator.
//!
//! Configurations and drop results are opaque handles created and freed by
//! this library. Every fallible function returns an [`FpStatus`]; on failure
//! a human-readable message for the calling thread is available from
//! [`fp_last_error_message`]. Output values are written through pointers
//! only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use femtopc::engine::UserClass;
use femtopc::metrics;
use femtopc::{DropResult, ScenarioConfig, Scheme};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    Simulation = 4,
    OutOfRange = 5,
    Domain = 6,
    Panic = 7,
}

/// Femtocell maximum-power policy.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpScheme {
    NoFemto = 0,
    FixedCap = 1,
    OpenLoop = 2,
    ClosedLoop = 3,
}

impl From<FpScheme> for Scheme {
    fn from(s: FpScheme) -> Self {
        match s {
            FpScheme::NoFemto => Scheme::NoFemto,
            FpScheme::FixedCap => Scheme::FixedCap,
            FpScheme::OpenLoop => Scheme::OpenLoop,
            FpScheme::ClosedLoop => Scheme::ClosedLoop,
        }
    }
}

/// User class as reported by [`fp_result_user_class`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpUserClass {
    Macro = 0,
    Femto = 1,
}

/// Opaque scenario configuration.
pub struct FpConfig {
    inner: ScenarioConfig,
}

/// Opaque result of one simulated drop.
pub struct FpDropResult {
    inner: DropResult,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: FpStatus, msg: impl Into<String>) -> FpStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> FpStatus) -> FpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(FpStatus::Panic, "internal panic"),
    }
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len - 1` bytes). Returns the full message
/// length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn fp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates a configuration with every key at its default.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn fp_config_default(out: *mut *mut FpConfig) -> FpStatus {
    if out.is_null() {
        return fail(FpStatus::NullPointer, "out is null");
    }
    *out = Box::into_raw(Box::new(FpConfig {
        inner: ScenarioConfig::default(),
    }));
    FpStatus::Ok
}

/// Parses a TOML scenario (flat keys, unknown keys rejected) and validates it.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn fp_config_from_toml(
    text: *const c_char,
    out: *mut *mut FpConfig,
) -> FpStatus {
    if text.is_null() || out.is_null() {
        return fail(FpStatus::NullPointer, "text or out is null");
    }
    guard(|| {
        let Ok(s) = CStr::from_ptr(text).to_str() else {
            return fail(FpStatus::InvalidUtf8, "config text is not UTF-8");
        };
        match ScenarioConfig::from_toml_str(s) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(FpConfig { inner }));
                FpStatus::Ok
            }
            Err(e) => fail(FpStatus::InvalidConfig, e.to_string()),
        }
    })
}

/// Sets the power-control scheme of a configuration.
///
/// # Safety
/// `cfg` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn fp_config_set_scheme(cfg: *mut FpConfig, scheme: FpScheme) -> FpStatus {
    let Some(cfg) = cfg.as_mut() else {
        return fail(FpStatus::NullPointer, "cfg is null");
    };
    cfg.inner.scheme = scheme.into();
    FpStatus::Ok
}

/// Releases a configuration. Null is ignored.
///
/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fp_config_free(cfg: *mut FpConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Simulates one drop of the configured scheme.
///
/// # Safety
/// `cfg` must be a live handle; `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn fp_run_drop(
    cfg: *const FpConfig,
    seed: u64,
    out: *mut *mut FpDropResult,
) -> FpStatus {
    let (Some(cfg), false) = (cfg.as_ref(), out.is_null()) else {
        return fail(FpStatus::NullPointer, "cfg or out is null");
    };
    guard(|| match femtopc::run_drop(&cfg.inner, seed) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(FpDropResult { inner }));
            FpStatus::Ok
        }
        Err(femtopc::Error::Config { field, reason }) => {
            fail(FpStatus::InvalidConfig, format!("`{field}`: {reason}"))
        }
        Err(e) => fail(FpStatus::Simulation, e.to_string()),
    })
}

/// Releases a drop result. Null is ignored.
///
/// # Safety
/// `res` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fp_result_free(res: *mut FpDropResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

unsafe fn with_result<T>(
    res: *const FpDropResult,
    out: *mut T,
    f: impl FnOnce(&DropResult) -> Result<T, FpStatus>,
) -> FpStatus {
    let (Some(res), false) = (res.as_ref(), out.is_null()) else {
        return fail(FpStatus::NullPointer, "result or out is null");
    };
    match f(&res.inner) {
        Ok(v) => {
            *out = v;
            FpStatus::Ok
        }
        Err(s) => s,
    }
}

/// Uplink throughput of the centre macrocell (bit/s).
///
/// # Safety
/// `res` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fp_result_macro_throughput(
    res: *const FpDropResult,
    out: *mut f64,
) -> FpStatus {
    with_result(res, out, |r| Ok(r.macro_cell_throughput_bps))
}

/// Average throughput of the measured femtocells (bit/s); `OUT_OF_RANGE`
/// when the drop has no femtocell in the centre cell.
///
/// # Safety
/// `res` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fp_result_femto_throughput(
    res: *const FpDropResult,
    out: *mut f64,
) -> FpStatus {
    with_result(res, out, |r| {
        r.femto_avg_throughput_bps()
            .ok_or_else(|| fail(FpStatus::OutOfRange, "no measured femtocell in this drop"))
    })
}

/// Number of users in the drop.
///
/// # Safety
/// `res` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fp_result_user_count(
    res: *const FpDropResult,
    out: *mut usize,
) -> FpStatus {
    with_result(res, out, |r| Ok(r.users.len()))
}

fn user(r: &DropResult, index: usize) -> Result<&femtopc::engine::UserRecord, FpStatus> {
    r.users.get(index).ok_or_else(|| {
        fail(
            FpStatus::OutOfRange,
            format!("user index {index} out of range"),
        )
    })
}

/// Long-run throughput of user `index` (bit/s).
///
/// # Safety
/// `res` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fp_result_user_throughput(
    res: *const FpDropResult,
    index: usize,
    out: *mut f64,
) -> FpStatus {
    with_result(res, out, |r| Ok(user(r, index)?.throughput_bps))
}

/// Class of user `index`.
///
/// # Safety
/// `res` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fp_result_user_class(
    res: *const FpDropResult,
    index: usize,
    out: *mut FpUserClass,
) -> FpStatus {
    with_result(res, out, |r| {
        Ok(match user(r, index)?.class {
            UserClass::Macro => FpUserClass::Macro,
            UserClass::Femto => FpUserClass::Femto,
        })
    })
}

/// Frames in which an open-loop femto user exceeded its interference budget.
///
/// # Safety
/// `res` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fp_result_open_loop_violations(
    res: *const FpDropResult,
    out: *mut u64,
) -> FpStatus {
    with_result(res, out, |r| Ok(r.audit.open_loop_violations))
}

/// Transmissions above the device power limit.
///
/// # Safety
/// `res` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fp_result_power_violations(
    res: *const FpDropResult,
    out: *mut u64,
) -> FpStatus {
    with_result(res, out, |r| Ok(r.audit.power_violations))
}

/// `10^(db / 10)`.
#[no_mangle]
pub extern "C" fn fp_db_to_linear(db: f64) -> f64 {
    femtopc::db_to_linear(femtopc::Decibel(db)).0
}

/// `10 log10(x)`; `DOMAIN` for non-positive input.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fp_linear_to_db(x: f64, out: *mut f64) -> FpStatus {
    if out.is_null() {
        return fail(FpStatus::NullPointer, "out is null");
    }
    match femtopc::linear_to_db(femtopc::PowerLinear(x)) {
        Ok(d) => {
            *out = d.0;
            FpStatus::Ok
        }
        Err(e) => fail(FpStatus::Domain, e.to_string()),
    }
}

/// `(t_m0 - t_m) / t_m0`; `DOMAIN` when `t_m0 <= 0`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fp_drmt(t_m0: f64, t_m: f64, out: *mut f64) -> FpStatus {
    if out.is_null() {
        return fail(FpStatus::NullPointer, "out is null");
    }
    match metrics::drmt(t_m0, t_m) {
        Ok(v) => {
            *out = v;
            FpStatus::Ok
        }
        Err(e) => fail(FpStatus::Domain, e.to_string()),
    }
}

/// `t_f / t_f0`; `DOMAIN` when `t_f0 <= 0`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fp_arft(t_f: f64, t_f0: f64, out: *mut f64) -> FpStatus {
    if out.is_null() {
        return fail(FpStatus::NullPointer, "out is null");
    }
    match metrics::arft(t_f, t_f0) {
        Ok(v) => {
            *out = v;
            FpStatus::Ok
        }
        Err(e) => fail(FpStatus::Domain, e.to_string()),
    }
}
