//! C ABI over the `cmc` library.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! style functions and released with the matching `*_free`. Structured data
//! (plans, distributions, stores) travels as UTF-8 JSON strings. Every
//! fallible call returns a [`CmcStatus`]; on failure the message is available
//! from [`cmc_last_error`] on the same thread until the next failing call.
//! Strings handed out by the library must be released with [`cmc_string_free`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cmc::bench::{CalibrationStore, StorePlan};
use cmc::calibration::Distribution;
use cmc::noise::{Device, Mode, NoiseSpec, Phase};
use cmc::strategies::calibrate_patches;
use cmc::topology::{greedy_patch_plan, Architecture, CouplingMap};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    Numerical = 5,
    Internal = 6,
}

/// Opaque coupling map.
pub struct CmcCouplingMap(CouplingMap);

/// Opaque calibration store.
pub struct CmcCalibrationStore(CalibrationStore);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CmcStatus, String);

impl From<cmc::Error> for Failure {
    fn from(e: cmc::Error) -> Self {
        use cmc::Error as E;
        let status = match &e {
            E::Io(_) => CmcStatus::Io,
            E::Json(_) | E::Csv(_) | E::SchemaVersion { .. } => CmcStatus::Parse,
            E::Singular { .. } | E::MatrixPower(_) => CmcStatus::Numerical,
            _ => CmcStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(CmcStatus::Parse, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Run `f`, turning errors and panics into a status plus the thread-local message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CmcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CmcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CmcStatus::Internal
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CmcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CmcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    let c = CString::new(s).map_err(|_| Failure(CmcStatus::Internal, "string contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn cmc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn cmc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Build a coupling map from a short architecture string such as `grid:4x4`
/// or a preset name such as `tokyo`.
///
/// # Safety
/// `arch` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmc_coupling_map_from_arch(arch: *const c_char, out: *mut *mut CmcCouplingMap) -> CmcStatus {
    guard(|| {
        let a: Architecture = read_str(arch, "arch")?.parse()?;
        write_out(out, CmcCouplingMap(a.generate()?))
    })
}

/// Parse a coupling map from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmc_coupling_map_from_json(json: *const c_char, out: *mut *mut CmcCouplingMap) -> CmcStatus {
    guard(|| {
        let map: CouplingMap = serde_json::from_str(read_str(json, "json")?)?;
        write_out(out, CmcCouplingMap(map))
    })
}

/// # Safety
/// `map` must be a live handle; `num_qubits` and `num_edges` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cmc_coupling_map_size(
    map: *const CmcCouplingMap,
    num_qubits: *mut usize,
    num_edges: *mut usize,
) -> CmcStatus {
    guard(|| {
        let m = &handle(map, "map")?.0;
        if num_qubits.is_null() || num_edges.is_null() {
            return Err(null("output pointer"));
        }
        *num_qubits = m.num_qubits();
        *num_edges = m.num_edges();
        Ok(())
    })
}

/// JSON form of a coupling map. Free the result with [`cmc_string_free`].
///
/// # Safety
/// `map` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmc_coupling_map_to_json(map: *const CmcCouplingMap, out: *mut *mut c_char) -> CmcStatus {
    guard(|| {
        let m = &handle(map, "map")?.0;
        write_string(out, serde_json::to_string(m)?)
    })
}

/// Patch plan with minimum patch separation `k`, as JSON.
///
/// # Safety
/// `map` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmc_patch_plan(map: *const CmcCouplingMap, k: usize, out: *mut *mut c_char) -> CmcStatus {
    guard(|| {
        let m = &handle(map, "map")?.0;
        write_string(out, serde_json::to_string(&greedy_patch_plan(m, k)?)?)
    })
}

/// # Safety
/// `map` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cmc_coupling_map_free(map: *mut CmcCouplingMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Calibrate every patch of `map` on a simulated device and build a store.
/// `noise_json` is a noise spec; null means a noiseless device. `shots` is the
/// total calibration budget, split evenly over the plan's circuits.
///
/// # Safety
/// `map` must be a live handle, `device` and `timestamp` NUL-terminated
/// strings, `noise_json` null or NUL-terminated, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmc_store_calibrate_simulated(
    map: *const CmcCouplingMap,
    noise_json: *const c_char,
    k: usize,
    shots: u64,
    seed: u64,
    device: *const c_char,
    timestamp: *const c_char,
    out: *mut *mut CmcCalibrationStore,
) -> CmcStatus {
    guard(|| {
        let m = &handle(map, "map")?.0;
        let spec: NoiseSpec = if noise_json.is_null() {
            NoiseSpec::noiseless()
        } else {
            serde_json::from_str(read_str(noise_json, "noise_json")?)?
        };
        let plan = greedy_patch_plan(m, k)?;
        let per = shots / plan.num_circuits().max(1) as u64;
        if per == 0 {
            return Err(Failure(CmcStatus::InvalidArgument, format!("{shots} shots cannot cover the plan")));
        }
        let mut dev = Device::new(m.num_qubits(), &spec, Mode::Sampled, seed)?;
        let cal = calibrate_patches(&mut dev, &plan, per, Phase::Calibration)?;
        let store = CalibrationStore::new(
            read_str(device, "device")?,
            read_str(timestamp, "timestamp")?,
            m.num_qubits(),
            StorePlan::CouplingMap { plan },
            cal,
        )?;
        write_out(out, CmcCalibrationStore(store))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmc_store_load(path: *const c_char, out: *mut *mut CmcCalibrationStore) -> CmcStatus {
    guard(|| {
        let store = CalibrationStore::load(Path::new(read_str(path, "path")?))?;
        write_out(out, CmcCalibrationStore(store))
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmc_store_from_json(json: *const c_char, out: *mut *mut CmcCalibrationStore) -> CmcStatus {
    guard(|| {
        let store = CalibrationStore::from_json(read_str(json, "json")?)?;
        write_out(out, CmcCalibrationStore(store))
    })
}

/// # Safety
/// `store` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cmc_store_save(store: *const CmcCalibrationStore, path: *const c_char) -> CmcStatus {
    guard(|| {
        let s = &handle(store, "store")?.0;
        Ok(s.save(Path::new(read_str(path, "path")?))?)
    })
}

/// # Safety
/// `store` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmc_store_to_json(store: *const CmcCalibrationStore, out: *mut *mut c_char) -> CmcStatus {
    guard(|| {
        let s = &handle(store, "store")?.0;
        write_string(out, s.to_json()?)
    })
}

/// Mitigate raw counts. `counts_json` maps bitstrings over the measured
/// qubits to counts; `measured` lists those qubits (most significant bit
/// first) and may be null with `num_measured == 0` to mean every store qubit.
/// The result is a JSON object of bitstring to probability.
///
/// # Safety
/// `store` must be a live handle, `counts_json` NUL-terminated, `measured`
/// valid for `num_measured` reads when non-null, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmc_store_mitigate(
    store: *const CmcCalibrationStore,
    counts_json: *const c_char,
    measured: *const usize,
    num_measured: usize,
    out: *mut *mut c_char,
) -> CmcStatus {
    guard(|| {
        let s = &handle(store, "store")?.0;
        let counts: BTreeMap<String, u64> = serde_json::from_str(read_str(counts_json, "counts_json")?)?;
        let raw = Distribution::from_bitstring_counts(&counts)?;
        let qubits: Vec<usize> = if measured.is_null() {
            if num_measured != 0 {
                return Err(null("measured"));
            }
            (0..s.num_qubits).collect()
        } else {
            std::slice::from_raw_parts(measured, num_measured).to_vec()
        };
        if qubits.len() != raw.num_qubits() {
            return Err(Failure(
                CmcStatus::InvalidArgument,
                format!("{} measured qubits but {}-bit counts", qubits.len(), raw.num_qubits()),
            ));
        }
        let d = s.mitigate(&raw, &qubits)?;
        write_string(out, serde_json::to_string(&d.to_bitstring_map())?)
    })
}

/// # Safety
/// `store` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cmc_store_free(store: *mut CmcCalibrationStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}
