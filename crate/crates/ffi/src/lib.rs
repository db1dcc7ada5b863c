//! C interface to the simulation engine.
//!
//! Objects are opaque handles created by `iegs_*_load` or `iegs_simulate`
//! and released with the matching `iegs_*_free`. Every fallible call
//! returns an [`IegsStatus`]; on failure [`iegs_last_error`] returns a
//! message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use iegs_core::io::{load_network, load_scenario, run_method, write_result, MethodSpec};
use iegs_core::scenario::Scenario;
use iegs_core::system::IegsSystem as CoreSystem;
use iegs_core::trajectory::Trajectory;
use iegs_core::Error;

/// Status codes; the nonzero ones match the exit codes of the `iegs`
/// binary where a counterpart exists.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IegsStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or an index out of range.
    InvalidArgument = 1,
    /// Parse, validation, structural or range error in the inputs.
    InvalidInput = 2,
    /// Newton divergence, singular matrix, domain error or step underflow.
    SolverFailure = 3,
    Io = 4,
    /// A panic was caught at the boundary.
    Internal = 5,
}

/// Validated network.
pub struct IegsSystem {
    inner: CoreSystem,
}

/// Scenario bound to the network it was loaded against.
pub struct IegsScenario {
    inner: Scenario,
}

/// Sampled solver output.
pub struct IegsTrajectory {
    inner: Trajectory,
    names: Vec<CString>,
    method: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(CString::new(msg).expect("nul bytes removed")));
}

fn status_of(e: &Error) -> IegsStatus {
    match e.exit_code() {
        2 => IegsStatus::InvalidInput,
        3 => IegsStatus::SolverFailure,
        4 => IegsStatus::Io,
        _ => IegsStatus::Internal,
    }
}

/// Runs `f`, recording any error or panic as the last error.
fn guard(f: impl FnOnce() -> Result<(), (IegsStatus, String)>) -> IegsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IegsStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            IegsStatus::Internal
        }
    }
}

fn core(e: Error) -> (IegsStatus, String) {
    (status_of(&e), e.to_string())
}

fn arg(msg: &str) -> (IegsStatus, String) {
    (IegsStatus::InvalidArgument, msg.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (IegsStatus, String)> {
    if p.is_null() {
        return Err(arg(&format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| arg(&format!("{what} is not UTF-8")))
}

unsafe fn out_arg<T>(out: *mut *mut T) -> Result<(), (IegsStatus, String)> {
    if out.is_null() {
        return Err(arg("output pointer is null"));
    }
    *out = ptr::null_mut();
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn iegs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn iegs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads and validates a network file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn iegs_system_load(path: *const c_char, out: *mut *mut IegsSystem) -> IegsStatus {
    guard(|| {
        out_arg(out)?;
        let path = str_arg(path, "path")?;
        let inner = load_network(Path::new(path)).map_err(core)?;
        *out = Box::into_raw(Box::new(IegsSystem { inner }));
        Ok(())
    })
}

/// # Safety
/// `system` must be null or a handle from [`iegs_system_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn iegs_system_free(system: *mut IegsSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Number of gas nodes, pipelines and buses.
///
/// # Safety
/// `system` must be a live handle; the count pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn iegs_system_counts(
    system: *const IegsSystem,
    nodes: *mut usize,
    pipelines: *mut usize,
    buses: *mut usize,
) -> IegsStatus {
    guard(|| {
        let s = system.as_ref().ok_or_else(|| arg("system is null"))?;
        for (p, v) in [
            (nodes, s.inner.node_count()),
            (pipelines, s.inner.pipe_count()),
            (buses, s.inner.bus_count()),
        ] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Loads a scenario file and binds it against `system`.
///
/// # Safety
/// `system` must be a live handle, `path` a nul-terminated string and `out`
/// a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn iegs_scenario_load(
    system: *const IegsSystem,
    path: *const c_char,
    out: *mut *mut IegsScenario,
) -> IegsStatus {
    guard(|| {
        out_arg(out)?;
        let s = system.as_ref().ok_or_else(|| arg("system is null"))?;
        let path = str_arg(path, "path")?;
        let inner = load_scenario(Path::new(path), &s.inner).map_err(core)?;
        *out = Box::into_raw(Box::new(IegsScenario { inner }));
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a handle from [`iegs_scenario_load`] not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn iegs_scenario_free(scenario: *mut IegsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs one method, given as `method:key=value,...` (for example
/// `dt:order=5,dx=1000` or `ieuler:dt=180,dx=1000`).
///
/// # Safety
/// `system` and `scenario` must be live handles, the scenario loaded
/// against that system; `method` must be a nul-terminated string and `out`
/// a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn iegs_simulate(
    system: *const IegsSystem,
    scenario: *const IegsScenario,
    method: *const c_char,
    out: *mut *mut IegsTrajectory,
) -> IegsStatus {
    guard(|| {
        out_arg(out)?;
        let s = system.as_ref().ok_or_else(|| arg("system is null"))?;
        let sc = scenario.as_ref().ok_or_else(|| arg("scenario is null"))?;
        let spec: MethodSpec = str_arg(method, "method")?.parse().map_err(core)?;
        let inner = run_method(&s.inner, &sc.inner, &spec).map_err(core)?;
        let names = inner
            .names
            .iter()
            .map(|n| CString::new(n.as_str()).expect("identifiers have no nul bytes"))
            .collect();
        let method = CString::new(inner.provenance.method.as_str()).expect("method name");
        *out = Box::into_raw(Box::new(IegsTrajectory { inner, names, method }));
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a handle from [`iegs_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn iegs_trajectory_free(traj: *mut IegsTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of sample times; 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iegs_trajectory_samples(traj: *const IegsTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.times.len())
}

/// Number of variables (columns excluding time); 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iegs_trajectory_variables(traj: *const IegsTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.names.len())
}

/// Name of variable `col`, or null when out of range. Owned by the handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iegs_trajectory_name(traj: *const IegsTrajectory, col: usize) -> *const c_char {
    traj.as_ref()
        .and_then(|t| t.names.get(col))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Column index of a variable, or -1 when absent.
///
/// # Safety
/// `traj` must be null or a live handle and `name` null or nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn iegs_trajectory_find(traj: *const IegsTrajectory, name: *const c_char) -> isize {
    let (Some(t), false) = (traj.as_ref(), name.is_null()) else {
        return -1;
    };
    let Ok(name) = CStr::from_ptr(name).to_str() else {
        return -1;
    };
    t.inner.column_index(name).map_or(-1, |c| c as isize)
}

/// Sample time `row` in seconds.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iegs_trajectory_time(traj: *const IegsTrajectory, row: usize, out: *mut f64) -> IegsStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| arg("trajectory is null"))?;
        let v = *t.inner.times.get(row).ok_or_else(|| arg("row out of range"))?;
        *out.as_mut().ok_or_else(|| arg("output pointer is null"))? = v;
        Ok(())
    })
}

/// Value of variable `col` at sample `row`.
///
/// # Safety
/// `traj` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn iegs_trajectory_value(
    traj: *const IegsTrajectory,
    row: usize,
    col: usize,
    out: *mut f64,
) -> IegsStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| arg("trajectory is null"))?;
        let v = *t
            .inner
            .values
            .get(row)
            .and_then(|r| r.get(col))
            .ok_or_else(|| arg("row or column out of range"))?;
        *out.as_mut().ok_or_else(|| arg("output pointer is null"))? = v;
        Ok(())
    })
}

/// Copies one column (`samples` values) into `buf` of length `len`.
///
/// # Safety
/// `traj` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn iegs_trajectory_column(
    traj: *const IegsTrajectory,
    col: usize,
    buf: *mut f64,
    len: usize,
) -> IegsStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| arg("trajectory is null"))?;
        if col >= t.inner.names.len() {
            return Err(arg("column out of range"));
        }
        if buf.is_null() || len < t.inner.times.len() {
            return Err(arg("buffer is null or too short"));
        }
        let out = std::slice::from_raw_parts_mut(buf, t.inner.times.len());
        for (o, r) in out.iter_mut().zip(&t.inner.values) {
            *o = r[col];
        }
        Ok(())
    })
}

/// Method name, step count and wall-clock seconds from the provenance.
/// Any output pointer may be null.
///
/// # Safety
/// `traj` must be a live handle. The method string is owned by the handle.
#[no_mangle]
pub unsafe extern "C" fn iegs_trajectory_provenance(
    traj: *const IegsTrajectory,
    method: *mut *const c_char,
    steps: *mut usize,
    wall_clock_s: *mut f64,
) -> IegsStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| arg("trajectory is null"))?;
        if !method.is_null() {
            *method = t.method.as_ptr();
        }
        if !steps.is_null() {
            *steps = t.inner.provenance.steps;
        }
        if !wall_clock_s.is_null() {
            *wall_clock_s = t.inner.provenance.wall_clock_s;
        }
        Ok(())
    })
}

/// Writes the result file and its provenance sidecar.
///
/// # Safety
/// `traj` must be a live handle and `path` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn iegs_trajectory_write(traj: *const IegsTrajectory, path: *const c_char) -> IegsStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| arg("trajectory is null"))?;
        let path = str_arg(path, "path")?;
        write_result(Path::new(path), &t.inner).map_err(core)
    })
}
