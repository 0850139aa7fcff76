//! C ABI over a trained parametric model archive.
//!
//! A model is loaded into an opaque [`OpinfModel`] handle, queried for its
//! dimensions, and evaluated into caller-owned buffers. Every fallible call
//! returns an [`OpinfStatus`]; the message of the most recent failure on the
//! calling thread is available from [`opinf_last_error_message`].
//!
//! Matrices are written column-major: the stacked operator [ĉ Â Ĥ B̂] as
//! r × d(r, m), reduced trajectories as r × K and full trajectories as N × K.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use opinf_core::{load_model, Error, ParametricRom};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpinfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    OutsideHull = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Opaque handle to a loaded model.
pub struct OpinfModel {
    rom: ParametricRom,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> OpinfStatus {
    match err {
        Error::OutsideHull(_) => OpinfStatus::OutsideHull,
        Error::DimensionMismatch(_) => OpinfStatus::InvalidArgument,
        other => match other.exit_code() {
            2 => OpinfStatus::InvalidArgument,
            3 => OpinfStatus::Numerical,
            _ => OpinfStatus::Io,
        },
    }
}

fn fail(status: OpinfStatus, msg: impl Into<String>) -> OpinfStatus {
    set_error(msg);
    status
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guarded(f: impl FnOnce() -> Result<(), OpinfStatus>) -> OpinfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OpinfStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(OpinfStatus::Panic, "internal panic"),
    }
}

unsafe fn model_ref<'a>(model: *const OpinfModel) -> Result<&'a OpinfModel, OpinfStatus> {
    model
        .as_ref()
        .ok_or_else(|| fail(OpinfStatus::NullPointer, "model handle is null"))
}

unsafe fn param_slice<'a>(mu: *const f64, mu_len: usize) -> Result<&'a [f64], OpinfStatus> {
    if mu.is_null() {
        return Err(fail(OpinfStatus::NullPointer, "parameter pointer is null"));
    }
    Ok(std::slice::from_raw_parts(mu, mu_len))
}

unsafe fn out_slice<'a>(
    out: *mut f64,
    out_len: usize,
    needed: usize,
) -> Result<&'a mut [f64], OpinfStatus> {
    if out.is_null() {
        return Err(fail(OpinfStatus::NullPointer, "output buffer is null"));
    }
    if out_len < needed {
        return Err(fail(
            OpinfStatus::BufferTooSmall,
            format!("output buffer holds {out_len} values, {needed} required"),
        ));
    }
    Ok(std::slice::from_raw_parts_mut(out, needed))
}

/// Loads a model archive. On success `*out` owns a handle that must be
/// released with [`opinf_model_free`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn opinf_model_load(
    path: *const c_char,
    out: *mut *mut OpinfModel,
) -> OpinfStatus {
    guarded(|| {
        if path.is_null() || out.is_null() {
            return Err(fail(
                OpinfStatus::NullPointer,
                "path or output pointer is null",
            ));
        }
        *out = ptr::null_mut();
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(OpinfStatus::InvalidArgument, "path is not valid UTF-8"))?;
        let rom = load_model(Path::new(path)).map_err(|e| fail(status_of(&e), e.to_string()))?;
        *out = Box::into_raw(Box::new(OpinfModel { rom }));
        Ok(())
    })
}

/// Releases a handle from [`opinf_model_load`]. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn opinf_model_free(model: *mut OpinfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Reduced dimension r, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn opinf_model_rank(model: *const OpinfModel) -> usize {
    model.as_ref().map_or(0, |m| m.rom.rank())
}

/// Number of inputs m, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn opinf_model_num_inputs(model: *const OpinfModel) -> usize {
    model.as_ref().map_or(0, |m| m.rom.num_inputs())
}

/// Full state dimension N, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn opinf_model_state_dim(model: *const OpinfModel) -> usize {
    model.as_ref().map_or(0, |m| m.rom.layout.state_dim())
}

/// Number of output times K, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn opinf_model_num_times(model: *const OpinfModel) -> usize {
    model.as_ref().map_or(0, |m| m.rom.time_grid.k)
}

/// Parameter dimension d_p, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn opinf_model_parameter_dim(model: *const OpinfModel) -> usize {
    model
        .as_ref()
        .map_or(0, |m| m.rom.interpolant.parameter_dim())
}

/// Column count d(r, m) of the stacked operator, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn opinf_model_operator_cols(model: *const OpinfModel) -> usize {
    model
        .as_ref()
        .map_or(0, |m| m.rom.interpolant.operator_sets()[0].dims().total())
}

/// Writes the interpolated stacked operator at `mu` (r × d(r, m),
/// column-major) into `out`.
///
/// # Safety
/// `mu` must point to `mu_len` values and `out` to `out_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn opinf_model_interpolate(
    model: *const OpinfModel,
    mu: *const f64,
    mu_len: usize,
    out: *mut f64,
    out_len: usize,
) -> OpinfStatus {
    guarded(|| {
        let model = model_ref(model)?;
        let mu = param_slice(mu, mu_len)?;
        let ops = model
            .rom
            .interpolate_operators(mu)
            .map_err(|e| fail(status_of(&e), e.to_string()))?;
        let stacked = ops.stacked();
        out_slice(out, out_len, stacked.len())?.copy_from_slice(stacked.as_slice());
        Ok(())
    })
}

/// Predicts the reduced trajectory at `mu` (r × K, column-major) with the
/// stored input ramp and reference initial state. The online wall time in
/// seconds goes to `online_seconds` when it is non-null.
///
/// # Safety
/// `mu` must point to `mu_len` values, `out` to `out_len` writable values,
/// and `online_seconds` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn opinf_model_predict(
    model: *const OpinfModel,
    mu: *const f64,
    mu_len: usize,
    out: *mut f64,
    out_len: usize,
    online_seconds: *mut f64,
) -> OpinfStatus {
    guarded(|| {
        let model = model_ref(model)?;
        let mu = param_slice(mu, mu_len)?;
        let needed = model.rom.rank() * model.rom.time_grid.k;
        let dest = out_slice(out, out_len, needed)?;
        let prediction = model
            .rom
            .predict(mu, None, None)
            .map_err(|e| fail(status_of(&e), e.to_string()))?;
        dest.copy_from_slice(prediction.solution.reduced_states.as_slice());
        if !online_seconds.is_null() {
            *online_seconds = prediction.online_seconds;
        }
        Ok(())
    })
}

/// Predicts at `mu` and writes the reconstructed physical trajectory
/// (N × K, column-major).
///
/// # Safety
/// `mu` must point to `mu_len` values and `out` to `out_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn opinf_model_predict_full(
    model: *const OpinfModel,
    mu: *const f64,
    mu_len: usize,
    out: *mut f64,
    out_len: usize,
) -> OpinfStatus {
    guarded(|| {
        let model = model_ref(model)?;
        let mu = param_slice(mu, mu_len)?;
        let needed = model.rom.layout.state_dim() * model.rom.time_grid.k;
        let dest = out_slice(out, out_len, needed)?;
        let full = model
            .rom
            .predict(mu, None, None)
            .and_then(|p| model.rom.reconstruct(&p.solution))
            .map_err(|e| fail(status_of(&e), e.to_string()))?;
        dest.copy_from_slice(full.as_slice());
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len` bytes. Returns the buffer
/// size needed for the full message, including the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn opinf_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Version string of this library, NUL-terminated and statically owned.
#[no_mangle]
pub extern "C" fn opinf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
