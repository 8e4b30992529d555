//! C ABI over `omc-core`.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Every fallible call returns an [`OmcStatus`]
//! and writes results through out-pointers only on success. The message of
//! the last failure on the calling thread is available from
//! [`omc_last_error_message`].
//!
//! All frequencies crossing this boundary are cyclic (Hz).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use omc_core::consts::{angular, cyclic};
use omc_core::dynamics::{
    effective_linewidth_full, intracavity_photons, lasing_threshold, omit_reflection, single_photon_cooperativity,
    CavityParams, DriveCondition,
};
use omc_core::fields::FieldsDocument;
use omc_core::phasematch::suppression_factor;
use omc_core::window::{saw_cutoff_frequency_hz, OperatingPoint, SubstrateModel};
use omc_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmcStatus {
    Ok = 0,
    InvalidInput = 1,
    Numerical = 2,
    Parse = 3,
    Io = 4,
    NullPointer = 5,
    Utf8 = 6,
    Panic = 7,
}

/// Cavity parameters.
pub struct OmcCavity(CavityParams);

/// Sampled optical and mechanical fields with boundary patches.
pub struct OmcFields(FieldsDocument);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> OmcStatus {
    match e {
        Error::InvalidInput(_) => OmcStatus::InvalidInput,
        Error::Numerical(_) => OmcStatus::Numerical,
        Error::Parse(_) => OmcStatus::Parse,
        Error::Io(_) => OmcStatus::Io,
    }
}

struct Fail(OmcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(OmcStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> OmcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            OmcStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            OmcStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(OmcStatus::Utf8, format!("{what}: {e}")))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn cavity<'a>(c: *const OmcCavity) -> Result<&'a CavityParams, Fail> {
    c.as_ref().map(|c| &c.0).ok_or_else(|| null("cavity handle"))
}

/// Message of the last failed call on this thread, or null after a
/// success. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn omc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn omc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn omc_cavity_new(
    omega_o_hz: f64,
    omega_m_hz: f64,
    kappa_hz: f64,
    kappa_e_hz: f64,
    gamma_hz: f64,
    g0_hz: f64,
    out: *mut *mut OmcCavity,
) -> OmcStatus {
    guard(|| {
        let c = CavityParams::from_hz(omega_o_hz, omega_m_hz, kappa_hz, kappa_e_hz, gamma_hz, g0_hz)?;
        write(out, Box::into_raw(Box::new(OmcCavity(c))), "out")
    })
}

/// Parses a cavity JSON document (keys `omega_o_hz`, `omega_m_hz`,
/// `kappa_hz`, `kappa_e_hz`, `gamma_hz`, `g0_hz`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn omc_cavity_from_json(json: *const c_char, out: *mut *mut OmcCavity) -> OmcStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let c: CavityParams = serde_json::from_str(text).map_err(Error::from)?;
        write(out, Box::into_raw(Box::new(OmcCavity(c))), "out")
    })
}

/// # Safety
/// `c` must be null or a handle from `omc_cavity_new`/`omc_cavity_from_json`
/// that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn omc_cavity_free(c: *mut OmcCavity) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// `C0 = 4 g0² / (κ γ)`.
///
/// # Safety
/// `c` must be a live handle; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn omc_cavity_cooperativity(c: *const OmcCavity, out: *mut f64) -> OmcStatus {
    guard(|| {
        let c = cavity(c)?;
        write(out, single_photon_cooperativity(c), "out")
    })
}

fn drive(p_in_w: f64, delta_hz: f64, lambda0_m: f64) -> Result<DriveCondition, Fail> {
    Ok(DriveCondition::new(p_in_w, angular(delta_hz), lambda0_m)?)
}

/// Intracavity photon number for an on-chip pump.
///
/// # Safety
/// `c` must be a live handle; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn omc_cavity_photons(
    c: *const OmcCavity,
    p_in_w: f64,
    delta_hz: f64,
    lambda0_m: f64,
    out: *mut f64,
) -> OmcStatus {
    guard(|| {
        let c = cavity(c)?;
        write(out, intracavity_photons(c, &drive(p_in_w, delta_hz, lambda0_m)?), "out")
    })
}

/// Effective mechanical linewidth (Hz) with both sideband terms. Negative
/// values mean the drive is past the lasing threshold.
///
/// # Safety
/// `c` must be a live handle; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn omc_cavity_effective_linewidth(
    c: *const OmcCavity,
    p_in_w: f64,
    delta_hz: f64,
    lambda0_m: f64,
    out_gamma_eff_hz: *mut f64,
) -> OmcStatus {
    guard(|| {
        let c = cavity(c)?;
        let d = drive(p_in_w, delta_hz, lambda0_m)?;
        let lw = effective_linewidth_full(c, intracavity_photons(c, &d), d.delta)?;
        write(out_gamma_eff_hz, cyclic(lw.gamma_eff), "out_gamma_eff_hz")
    })
}

/// Photon number and blue-sideband pump power (W) at unit cooperativity.
///
/// # Safety
/// `c` must be a live handle; both outputs valid for writing.
#[no_mangle]
pub unsafe extern "C" fn omc_cavity_lasing_threshold(
    c: *const OmcCavity,
    lambda0_m: f64,
    out_photons: *mut f64,
    out_power_w: *mut f64,
) -> OmcStatus {
    guard(|| {
        let c = cavity(c)?;
        if out_photons.is_null() || out_power_w.is_null() {
            return Err(null("output"));
        }
        let t = lasing_threshold(c, lambda0_m)?;
        write(out_photons, t.n_threshold, "out_photons")?;
        write(out_power_w, t.p_threshold, "out_power_w")
    })
}

/// Probe reflection `r(Ω)` at `n` probe offsets (Hz) under the given pump.
///
/// # Safety
/// `probe_hz`, `out_re` and `out_im` must each point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn omc_cavity_omit(
    c: *const OmcCavity,
    p_in_w: f64,
    delta_hz: f64,
    lambda0_m: f64,
    probe_hz: *const f64,
    n: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> OmcStatus {
    guard(|| {
        let c = cavity(c)?;
        if n == 0 {
            return Ok(());
        }
        if probe_hz.is_null() || out_re.is_null() || out_im.is_null() {
            return Err(null("array argument"));
        }
        let d = drive(p_in_w, delta_hz, lambda0_m)?;
        let photons = intracavity_photons(c, &d);
        let probe = slice::from_raw_parts(probe_hz, n);
        let re = slice::from_raw_parts_mut(out_re, n);
        let im = slice::from_raw_parts_mut(out_im, n);
        for (i, f) in probe.iter().enumerate() {
            let r = omit_reflection(c, d.delta, photons, angular(*f));
            re[i] = r.re;
            im[i] = r.im;
        }
        Ok(())
    })
}

/// Parses a field document (the `omc g0 --fields` format).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn omc_fields_from_json(json: *const c_char, out: *mut *mut OmcFields) -> OmcStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let doc: FieldsDocument = serde_json::from_str(text).map_err(Error::from)?;
        write(out, Box::into_raw(Box::new(OmcFields(doc))), "out")
    })
}

/// # Safety
/// `f` must be null or a live handle from `omc_fields_from_json`.
#[no_mangle]
pub unsafe extern "C" fn omc_fields_free(f: *mut OmcFields) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Moving-boundary zero-point coupling, signed, Hz.
///
/// # Safety
/// `f` must be a live handle; `out_g0_hz` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn omc_fields_g0(f: *const OmcFields, out_g0_hz: *mut f64) -> OmcStatus {
    guard(|| {
        let f = f.as_ref().ok_or_else(|| null("fields handle"))?;
        let r = f.0.g0()?;
        write(out_g0_hz, cyclic(r.signed), "out_g0_hz")
    })
}

/// `f_SAW = 2 n_eff v_SAW / λ₀`, Hz.
///
/// # Safety
/// `out_hz` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn omc_saw_cutoff_hz(n_eff: f64, lambda0_m: f64, v_saw: f64, out_hz: *mut f64) -> OmcStatus {
    guard(|| {
        // a does not enter the closed form; any positive period validates
        let p = OperatingPoint::new(n_eff, 1.0, lambda0_m)?;
        let s = SubstrateModel::new(v_saw, 1.0)?;
        write(out_hz, saw_cutoff_frequency_hz(&p, &s), "out_hz")
    })
}

/// `|sin(ΔkL)/(ΔkL)|`.
#[no_mangle]
pub extern "C" fn omc_suppression_factor(delta_k: f64, length_m: f64) -> f64 {
    suppression_factor(delta_k, length_m)
}
