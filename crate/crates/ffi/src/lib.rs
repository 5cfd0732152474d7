//! C ABI over the qrvdp engine.
//!
//! Every function returns a [`QrvdpStatus`]; results go through out-pointers.
//! Objects are opaque handles released with the matching `_free` function.
//! On failure the message is available from [`qrvdp_last_error`] on the same
//! thread until the next call.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qrvdp::classical::{limit_cycle_amplitude, ClassicalParams};
use qrvdp::evolution::{evolve, steady_state_undriven, EvolutionSettings, SteadyStateStrategy, Trajectory};
use qrvdp::observables::{expectations, s_q};
use qrvdp::wigner::{wigner_max_radius_polar, PolarGrid};
use qrvdp::{DensityMatrix, DriveModel, Error, Frame, SystemParams, C64};

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QrvdpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Truncation = 3,
    Convergence = 4,
    Unsupported = 5,
    Io = 6,
    Internal = 7,
    Panic = 8,
}

/// Oscillator rates and drive.
pub struct QrvdpParams(SystemParams);

/// Density matrix in a truncated Fock basis.
pub struct QrvdpDensityMatrix(DensityMatrix);

/// Recorded time evolution.
pub struct QrvdpTrajectory(Trajectory);

/// One recorded sample of a trajectory.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct QrvdpRecord {
    pub t: f64,
    pub trace: f64,
    pub number: f64,
    pub a_re: f64,
    pub a_im: f64,
    pub s_q: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn status_of(e: &Error) -> QrvdpStatus {
    match e {
        Error::InvalidDimension(_)
        | Error::Shape { .. }
        | Error::InvalidParameter(_)
        | Error::Config(_)
        | Error::Json(_) => QrvdpStatus::InvalidArgument,
        Error::Truncation { .. } => QrvdpStatus::Truncation,
        Error::TraceDrift { .. }
        | Error::Integration { .. }
        | Error::Convergence(_)
        | Error::NotStationary { .. }
        | Error::Conditioning { .. }
        | Error::NoLimitCycle => QrvdpStatus::Convergence,
        Error::UnsupportedFrame(_) | Error::UnsupportedConfiguration(_) => QrvdpStatus::Unsupported,
        Error::Io(_) => QrvdpStatus::Io,
        _ => QrvdpStatus::Internal,
    }
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), QrvdpFailure>) -> QrvdpStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => QrvdpStatus::Ok,
        Ok(Err(QrvdpFailure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("panic inside qrvdp".into());
            QrvdpStatus::Panic
        }
    }
}

struct QrvdpFailure(QrvdpStatus, String);

impl From<Error> for QrvdpFailure {
    fn from(e: Error) -> Self {
        QrvdpFailure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> QrvdpFailure {
    QrvdpFailure(QrvdpStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> QrvdpFailure {
    QrvdpFailure(QrvdpStatus::InvalidArgument, message.into())
}

unsafe fn deref<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, QrvdpFailure> {
    // SAFETY: caller passes either null or a live handle created by this library.
    unsafe { ptr.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn write_out<T>(ptr: *mut T, value: T, what: &str) -> Result<(), QrvdpFailure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null out-pointer supplied by the caller for a value of type T.
    unsafe { ptr.write(value) };
    Ok(())
}

/// Boxes `value` into a new handle only once `out` is known to be writable.
unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), QrvdpFailure> {
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: non-null out-pointer supplied by the caller.
    unsafe { out.write(Box::into_raw(Box::new(value))) };
    Ok(())
}

fn drive_model(code: i32) -> Result<DriveModel, QrvdpFailure> {
    match code {
        0 => Ok(DriveModel::Rwa),
        1 => Ok(DriveModel::Full),
        _ => Err(invalid(format!("drive model must be 0 (RWA) or 1 (full), got {code}"))),
    }
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn qrvdp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn qrvdp_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Creates a parameter set. `omega_drive` is the drive strength, `omega_d` its angular frequency.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_params_new(
    gamma1_plus: f64,
    gamma1_minus: f64,
    alpha: f64,
    beta: f64,
    delta: f64,
    omega_drive: f64,
    omega_d: f64,
    out: *mut *mut QrvdpParams,
) -> QrvdpStatus {
    guard(|| {
        let p = SystemParams { gamma1_plus, gamma1_minus, alpha, beta, delta, omega_drive, omega_d };
        p.validate()?;
        unsafe { emit(out, QrvdpParams(p)) }
    })
}

/// Parameters and Fock dimension of a named preset.
///
/// # Safety
/// `name` must be a nul-terminated string; `out` and `dim` valid out-pointers.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_params_preset(
    name: *const c_char,
    out: *mut *mut QrvdpParams,
    dim: *mut usize,
) -> QrvdpStatus {
    guard(|| {
        if name.is_null() {
            return Err(null("name"));
        }
        // SAFETY: non-null and nul-terminated per the contract.
        let name = unsafe { CStr::from_ptr(name) }.to_str().map_err(|_| invalid("name is not UTF-8"))?;
        let cfg = qrvdp::config::preset(name)?;
        if out.is_null() || dim.is_null() {
            return Err(null("out"));
        }
        unsafe {
            write_out(dim, cfg.dim, "dim")?;
            emit(out, QrvdpParams(cfg.params))
        }
    })
}

/// # Safety
/// `params` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_params_free(params: *mut QrvdpParams) {
    if !params.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(params) });
    }
}

/// Classical limit-cycle amplitude of the undriven scaled equation.
///
/// # Safety
/// `params` must be a live handle; `amplitude` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_limit_cycle_amplitude(params: *const QrvdpParams, amplitude: *mut f64) -> QrvdpStatus {
    guard(|| {
        let p = unsafe { deref(params, "params") }?;
        let cp = ClassicalParams::from_system(&p.0)?.undriven();
        unsafe { write_out(amplitude, limit_cycle_amplitude(&cp)?, "amplitude") }
    })
}

/// Undriven laboratory-frame steady state at Fock dimension `dim`.
///
/// # Safety
/// `params` must be a live handle; `out` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_steady_state(
    params: *const QrvdpParams,
    dim: usize,
    out: *mut *mut QrvdpDensityMatrix,
) -> QrvdpStatus {
    guard(|| {
        let p = unsafe { deref(params, "params") }?;
        let rho = steady_state_undriven(&p.0, Frame::Laboratory, dim, &SteadyStateStrategy::Nullspace)?;
        unsafe { emit(out, QrvdpDensityMatrix(rho)) }
    })
}

/// Coherent state |α⟩ truncated to `dim`; fails if the discarded weight exceeds `leakage_threshold`.
///
/// # Safety
/// `out` must be a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_density_coherent(
    alpha_re: f64,
    alpha_im: f64,
    dim: usize,
    leakage_threshold: f64,
    out: *mut *mut QrvdpDensityMatrix,
) -> QrvdpStatus {
    guard(|| {
        let (rho, _) = DensityMatrix::coherent(C64::new(alpha_re, alpha_im), dim, leakage_threshold)?;
        unsafe { emit(out, QrvdpDensityMatrix(rho)) }
    })
}

/// # Safety
/// `rho` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_density_free(rho: *mut QrvdpDensityMatrix) {
    if !rho.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(rho) });
    }
}

/// # Safety
/// `rho` must be a live handle; `dim` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_density_dim(rho: *const QrvdpDensityMatrix, dim: *mut usize) -> QrvdpStatus {
    guard(|| {
        let r = unsafe { deref(rho, "rho") }?;
        unsafe { write_out(dim, r.0.dim(), "dim") }
    })
}

/// Copies ρ in column-major order into `re` and `im`, each of length `len >= dim * dim`.
///
/// # Safety
/// `re` and `im` must point to at least `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_density_elements(
    rho: *const QrvdpDensityMatrix,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> QrvdpStatus {
    guard(|| {
        let r = unsafe { deref(rho, "rho") }?;
        let values = r.0.as_slice();
        if len < values.len() {
            return Err(invalid(format!("buffer length {len} is below {}", values.len())));
        }
        if re.is_null() || im.is_null() {
            return Err(null("buffer"));
        }
        // SAFETY: both buffers hold at least `len >= values.len()` doubles.
        let (re, im) = unsafe { (std::slice::from_raw_parts_mut(re, len), std::slice::from_raw_parts_mut(im, len)) };
        for (i, z) in values.iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        Ok(())
    })
}

/// Phase-localization measure S_q.
///
/// # Safety
/// `rho` must be a live handle; `value` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_s_q(rho: *const QrvdpDensityMatrix, value: *mut f64) -> QrvdpStatus {
    guard(|| {
        let r = unsafe { deref(rho, "rho") }?;
        unsafe { write_out(value, s_q(&r.0), "value") }
    })
}

/// Mean excitation number ⟨a†a⟩.
///
/// # Safety
/// `rho` must be a live handle; `value` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_mean_number(rho: *const QrvdpDensityMatrix, value: *mut f64) -> QrvdpStatus {
    guard(|| {
        let r = unsafe { deref(rho, "rho") }?;
        unsafe { write_out(value, expectations(&r.0).number, "value") }
    })
}

/// Radius and angle of the Wigner maximum on a polar grid of `n_r` radii up to `r_max` and `n_phi` angles.
///
/// # Safety
/// `rho` must be a live handle; `radius` and `phi` valid out-pointers.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_wigner_max_radius(
    rho: *const QrvdpDensityMatrix,
    r_max: f64,
    n_r: usize,
    n_phi: usize,
    radius: *mut f64,
    phi: *mut f64,
) -> QrvdpStatus {
    guard(|| {
        let r = unsafe { deref(rho, "rho") }?;
        if !(r_max > 0.0) || n_r < 2 || n_phi < 1 {
            return Err(invalid("polar grid needs r_max > 0, n_r >= 2 and n_phi >= 1"));
        }
        let max = wigner_max_radius_polar(&r.0, &PolarGrid { r_max, n_r, n_phi });
        unsafe {
            write_out(radius, max.radius, "radius")?;
            write_out(phi, max.phi, "phi")
        }
    })
}

/// Integrates the master equation in the laboratory frame from `rho0` up to
/// `t_final`, recording every `record_interval`. `drive_model` is 0 for RWA, 1 for the full drive.
///
/// # Safety
/// `params` and `rho0` must be live handles; `out` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_evolve(
    params: *const QrvdpParams,
    rho0: *const QrvdpDensityMatrix,
    drive_model: i32,
    t_final: f64,
    record_interval: f64,
    out: *mut *mut QrvdpTrajectory,
) -> QrvdpStatus {
    guard(|| {
        let p = unsafe { deref(params, "params") }?;
        let r = unsafe { deref(rho0, "rho0") }?;
        let drive = self::drive_model(drive_model)?;
        if !(t_final > 0.0 && record_interval > 0.0) {
            return Err(invalid("t_final and record_interval must be positive"));
        }
        let settings =
            EvolutionSettings { t_final, record_interval, snapshot_times: Vec::new(), accuracy: Default::default() };
        let traj = evolve(&r.0, &p.0, drive, Frame::Laboratory, &settings)?;
        unsafe { emit(out, QrvdpTrajectory(traj)) }
    })
}

/// # Safety
/// `traj` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_trajectory_free(traj: *mut QrvdpTrajectory) {
    if !traj.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(traj) });
    }
}

/// # Safety
/// `traj` must be a live handle; `len` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_trajectory_len(traj: *const QrvdpTrajectory, len: *mut usize) -> QrvdpStatus {
    guard(|| {
        let t = unsafe { deref(traj, "traj") }?;
        unsafe { write_out(len, t.0.records.len(), "len") }
    })
}

/// # Safety
/// `traj` must be a live handle; `record` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_trajectory_record(
    traj: *const QrvdpTrajectory,
    index: usize,
    record: *mut QrvdpRecord,
) -> QrvdpStatus {
    guard(|| {
        let t = unsafe { deref(traj, "traj") }?;
        let r = t.0.records.get(index).ok_or_else(|| invalid(format!("index {index} out of {}", t.0.records.len())))?;
        let value = QrvdpRecord { t: r.t, trace: r.trace, number: r.number, a_re: r.a.re, a_im: r.a.im, s_q: r.s_q };
        unsafe { write_out(record, value, "record") }
    })
}

/// Copy of the state at the final time as a new handle.
///
/// # Safety
/// `traj` must be a live handle; `out` a valid out-pointer.
#[no_mangle]
pub unsafe extern "C" fn qrvdp_trajectory_final_state(
    traj: *const QrvdpTrajectory,
    out: *mut *mut QrvdpDensityMatrix,
) -> QrvdpStatus {
    guard(|| {
        let t = unsafe { deref(traj, "traj") }?;
        unsafe { emit(out, QrvdpDensityMatrix(t.0.final_state.clone())) }
    })
}
