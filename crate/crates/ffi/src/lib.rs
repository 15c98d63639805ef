//! C ABI over `ionlink`.
//!
//! Every fallible call returns an [`IonlinkStatus`]; on failure a message is
//! available from [`ionlink_last_error`] on the same thread. Objects are opaque
//! handles created by `*_new`/`*_calibrate`/`ionlink_scan_crossing` and
//! released with the matching `*_free`. Species are named (`"Ca40"`, `"Be9"`,
//! `"Mg24"`); a null name selects Ca40.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ionlink::coupling;
use ionlink::dynamics::ExchangeModel;
use ionlink::equilibrium::{solve_equilibrium, IonConfiguration};
use ionlink::modes::{self, CrossingScan};
use ionlink::potential::{calibrate_symmetric, AxialPotential, IonSpecies};
use ionlink::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IonlinkStatus {
    Ok = 0,
    InvalidParameter = 1,
    NotDoubleWell = 2,
    SingularConfiguration = 3,
    NotConverged = 4,
    BasinEscape = 5,
    Unstable = 6,
    CutoffTooSmall = 7,
    FitFailed = 8,
    ParseError = 9,
    IoError = 10,
    NullPointer = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

impl From<&Error> for IonlinkStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParameter(_) => Self::InvalidParameter,
            Error::NotDoubleWell { .. } => Self::NotDoubleWell,
            Error::SingularConfiguration { .. } => Self::SingularConfiguration,
            Error::NotConverged { .. } => Self::NotConverged,
            Error::BasinEscape(_) => Self::BasinEscape,
            Error::Unstable { .. } => Self::Unstable,
            Error::CutoffTooSmall { .. } => Self::CutoffTooSmall,
            Error::Fit(_) => Self::FitFailed,
            Error::Parse(_) => Self::ParseError,
            Error::Io(_) => Self::IoError,
        }
    }
}

/// Opaque quartic potential.
pub struct IonlinkPotential(AxialPotential);

/// Opaque result of a voltage scan across an avoided crossing.
pub struct IonlinkScan(CrossingScan);

/// Geometry of the two wells at one control voltage. Lengths in m,
/// frequencies in Hz, energy in J.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct IonlinkWells {
    pub left_min: f64,
    pub right_min: f64,
    pub barrier_z: f64,
    pub separation_r: f64,
    pub freq_left: f64,
    pub freq_right: f64,
    pub barrier_height: f64,
}

/// One scan voltage: the two lowest mode frequencies in Hz.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct IonlinkScanPoint {
    pub u_ax: f64,
    pub nu_low: f64,
    pub nu_high: f64,
    pub stable: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(IonlinkStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail((&e).into(), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(IonlinkStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> IonlinkStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IonlinkStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            IonlinkStatus::Panic
        }
    }
}

unsafe fn species(name: *const c_char) -> Result<IonSpecies, Fail> {
    if name.is_null() {
        return Ok(IonSpecies::ca40());
    }
    let s = CStr::from_ptr(name)
        .to_str()
        .map_err(|_| Fail(IonlinkStatus::InvalidParameter, "species name is not UTF-8".into()))?;
    Ok(IonSpecies::by_name(s)?)
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn fill(out: *mut f64, capacity: usize, values: &[f64]) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if capacity < values.len() {
        return Err(Fail(
            IonlinkStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, {} needed", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn ionlink_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, nul-terminated version string.
#[no_mangle]
pub extern "C" fn ionlink_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn ionlink_potential_new(
    alpha1: f64,
    alpha2: f64,
    alpha4: f64,
    tune1: f64,
    tune2: f64,
    out: *mut *mut IonlinkPotential,
) -> IonlinkStatus {
    guard(|| {
        let p = AxialPotential::new(alpha1, alpha2, alpha4, tune1, tune2)?;
        write(out, Box::into_raw(Box::new(IonlinkPotential(p))), "out")
    })
}

/// Symmetric double well with minima `separation_m` apart and local
/// frequency `freq_hz`, plus linear voltage tuning.
///
/// # Safety
/// `species_name` is null or a nul-terminated string; `out` is a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn ionlink_potential_calibrate(
    separation_m: f64,
    freq_hz: f64,
    species_name: *const c_char,
    tune1: f64,
    tune2: f64,
    out: *mut *mut IonlinkPotential,
) -> IonlinkStatus {
    guard(|| {
        let s = species(species_name)?;
        let p = calibrate_symmetric(separation_m, freq_hz, &s)?.with_tuning(tune1, tune2);
        write(out, Box::into_raw(Box::new(IonlinkPotential(p))), "out")
    })
}

/// # Safety
/// `p` is null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ionlink_potential_free(p: *mut IonlinkPotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Coefficients `[alpha1, alpha2, alpha4, tune1, tune2]`.
///
/// # Safety
/// `p` is a live handle; `out` points to 5 doubles.
#[no_mangle]
pub unsafe extern "C" fn ionlink_potential_coefficients(p: *const IonlinkPotential, out: *mut f64) -> IonlinkStatus {
    guard(|| {
        let p = &deref(p, "potential")?.0;
        fill(out, 5, &[p.alpha1, p.alpha2, p.alpha4, p.tune1, p.tune2])
    })
}

/// Potential energy in J at position `z` (m) and control voltage `u_ax` (V).
///
/// # Safety
/// `p` is a live handle; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ionlink_potential_eval(
    p: *const IonlinkPotential,
    u_ax: f64,
    z: f64,
    out: *mut f64,
) -> IonlinkStatus {
    guard(|| {
        let p = &deref(p, "potential")?.0;
        write(out, p.eval(u_ax, z), "out")
    })
}

/// # Safety
/// `p` is a live handle; `species_name` as above; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ionlink_find_wells(
    p: *const IonlinkPotential,
    u_ax: f64,
    species_name: *const c_char,
    out: *mut IonlinkWells,
) -> IonlinkStatus {
    guard(|| {
        let p = &deref(p, "potential")?.0;
        let w = p.find_wells(u_ax, &species(species_name)?)?;
        write(
            out,
            IonlinkWells {
                left_min: w.left_min,
                right_min: w.right_min,
                barrier_z: w.barrier_z,
                separation_r: w.separation_r,
                freq_left: w.freq_left,
                freq_right: w.freq_right,
                barrier_height: w.barrier_height,
            },
            "out",
        )
    })
}

/// Equilibrium positions (m, ascending) of `n_left + n_right` ions.
///
/// # Safety
/// `p` is a live handle; `out` holds at least `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn ionlink_equilibrium(
    p: *const IonlinkPotential,
    u_ax: f64,
    species_name: *const c_char,
    n_left: usize,
    n_right: usize,
    out: *mut f64,
    capacity: usize,
) -> IonlinkStatus {
    guard(|| {
        let p = &deref(p, "potential")?.0;
        let cfg = IonConfiguration::new(species(species_name)?, n_left, n_right)?;
        let eq = solve_equilibrium(p, u_ax, &cfg, None)?.into_valid()?;
        fill(out, capacity, &eq.positions)
    })
}

/// Normal-mode frequencies in Hz, ascending.
///
/// # Safety
/// As for [`ionlink_equilibrium`].
#[no_mangle]
pub unsafe extern "C" fn ionlink_mode_frequencies(
    p: *const IonlinkPotential,
    u_ax: f64,
    species_name: *const c_char,
    n_left: usize,
    n_right: usize,
    out: *mut f64,
    capacity: usize,
) -> IonlinkStatus {
    guard(|| {
        let p = &deref(p, "potential")?.0;
        let cfg = IonConfiguration::new(species(species_name)?, n_left, n_right)?;
        fill(out, capacity, &modes::mode_frequencies(p, u_ax, &cfg)?.frequencies)
    })
}

/// Scan the control voltage over `steps` points. Passing NaN for both
/// `u_min` and `u_max` centres the range on the estimated resonance.
///
/// # Safety
/// `p` is a live handle; `out` is a valid handle slot.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ionlink_scan_crossing(
    p: *const IonlinkPotential,
    species_name: *const c_char,
    n_left: usize,
    n_right: usize,
    u_min: f64,
    u_max: f64,
    steps: usize,
    out: *mut *mut IonlinkScan,
) -> IonlinkStatus {
    guard(|| {
        let p = &deref(p, "potential")?.0;
        let cfg = IonConfiguration::new(species(species_name)?, n_left, n_right)?;
        let (lo, hi) = if u_min.is_nan() && u_max.is_nan() { modes::auto_range(p, &cfg)? } else { (u_min, u_max) };
        let scan = modes::scan_crossing(p, &cfg, lo, hi, steps)?;
        write(out, Box::into_raw(Box::new(IonlinkScan(scan))), "out")
    })
}

/// # Safety
/// `s` is null or a live scan handle.
#[no_mangle]
pub unsafe extern "C" fn ionlink_scan_free(s: *mut IonlinkScan) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of scan points; 0 for a null handle.
///
/// # Safety
/// `s` is null or a live scan handle.
#[no_mangle]
pub unsafe extern "C" fn ionlink_scan_len(s: *const IonlinkScan) -> usize {
    s.as_ref().map_or(0, |s| s.0.points.len())
}

/// # Safety
/// `s` is a live scan handle; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ionlink_scan_point(
    s: *const IonlinkScan,
    index: usize,
    out: *mut IonlinkScanPoint,
) -> IonlinkStatus {
    guard(|| {
        let s = &deref(s, "scan")?.0;
        let pt = s.points.get(index).ok_or_else(|| {
            Fail(IonlinkStatus::InvalidParameter, format!("index {index} out of range ({} points)", s.points.len()))
        })?;
        write(out, IonlinkScanPoint { u_ax: pt.u_ax, nu_low: pt.nu_low, nu_high: pt.nu_high, stable: pt.stable }, "out")
    })
}

/// Minimal splitting in Hz and the voltage where it occurs.
///
/// # Safety
/// `s` is a live scan handle; outputs are valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ionlink_scan_result(
    s: *const IonlinkScan,
    splitting_hz: *mut f64,
    resonance_voltage: *mut f64,
) -> IonlinkStatus {
    guard(|| {
        let s = &deref(s, "scan")?.0;
        write(splitting_hz, s.splitting, "splitting_hz")?;
        write(resonance_voltage, s.resonance_voltage, "resonance_voltage")
    })
}

/// Dipole coupling rate in rad/s between two single ions at distance
/// `r_m`, oscillating at `f1_hz` and `f2_hz`.
///
/// # Safety
/// Species names as above; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ionlink_coupling_rate(
    species1: *const c_char,
    species2: *const c_char,
    f1_hz: f64,
    f2_hz: f64,
    r_m: f64,
    out: *mut f64,
) -> IonlinkStatus {
    guard(|| {
        let rate = coupling::coupling_rate(&species(species1)?, &species(species2)?, f1_hz, f2_hz, r_m)?;
        write(out, rate, "out")
    })
}

/// # Safety
/// `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ionlink_swap_time(omega_c: f64, out: *mut f64) -> IonlinkStatus {
    guard(|| write(out, coupling::swap_time(omega_c)?, "out"))
}

/// # Safety
/// `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ionlink_gate_time(omega_c: f64, out: *mut f64) -> IonlinkStatus {
    guard(|| write(out, coupling::gate_time(omega_c)?, "out"))
}

/// Relative strength of the coupling for dipoles tilted by `theta` (rad)
/// from the inter-ion axis.
#[no_mangle]
pub extern "C" fn ionlink_angular_factor(theta: f64) -> f64 {
    coupling::angular_factor(theta)
}

/// Mean phonon number of ion 1 at each of `len` delays.
///
/// # Safety
/// `taus` and `out` each point to `len` doubles.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ionlink_exchange_trace(
    n1_0: f64,
    n2_0: f64,
    omega_c: f64,
    tau_damp: f64,
    gamma_h: f64,
    taus: *const f64,
    len: usize,
    out: *mut f64,
) -> IonlinkStatus {
    guard(|| {
        if taus.is_null() {
            return Err(null("taus"));
        }
        let m = ExchangeModel::new(n1_0, n2_0, omega_c, tau_damp, gamma_h)?;
        let taus = std::slice::from_raw_parts(taus, len);
        fill(out, len, &ionlink::dynamics::exchange_trace(&m, taus)?)
    })
}
