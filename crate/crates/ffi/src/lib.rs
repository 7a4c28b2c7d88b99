//! C ABI over `mcs-core`.
//!
//! Every function returns an [`McsStatus`]; on failure a message for the
//! calling thread is available from [`mcs_last_error_message`]. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mcs_core::runner::{self, RunOutput};
use mcs_core::{metrics, signal_model, Error, ScenarioConfig};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidParameter = 3,
    Config = 4,
    SchemaMismatch = 5,
    Io = 6,
    FitFailed = 7,
    Numerical = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Scenario configuration handle.
pub struct McsScenario(ScenarioConfig);

/// Simulation and analysis output handle.
pub struct McsResult(RunOutput);

/// Scalar summary of a run. Missing values are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct McsSummary {
    pub f_u_oracle_hz: f64,
    pub f_u_hz: f64,
    pub fwhm_hz: f64,
    pub tau_decay_s: f64,
    pub tau_memory_expected_s: f64,
    pub sensitivity_t_per_sqrt_hz: f64,
    pub wall_time_per_run_s: f64,
    pub wall_time_total_s: f64,
    pub fit_error_count: u32,
    pub resonant: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> McsStatus {
    match e {
        Error::InvalidParameter { .. } | Error::OffResonance { .. } | Error::NonUniformSampling { .. } => {
            McsStatus::InvalidParameter
        }
        Error::Config(_) => McsStatus::Config,
        Error::SchemaMismatch { .. } => McsStatus::SchemaMismatch,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => McsStatus::Io,
        Error::FitFailed(_) | Error::Degenerate(_) => McsStatus::FitFailed,
        Error::InvalidState(_) | Error::NotUnitary(_) => McsStatus::Numerical,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (McsStatus, String)>) -> McsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => McsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            McsStatus::Panic
        }
    }
}

fn core_err(e: Error) -> (McsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (McsStatus, String) {
    (McsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (McsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (McsStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (McsStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, (McsStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mcs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn mcs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a TOML scenario.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcs_scenario_from_toml(toml: *const c_char, out: *mut *mut McsScenario) -> McsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(toml, "toml")?;
        let cfg = ScenarioConfig::from_toml_str(text).map_err(core_err)?;
        *out = Box::into_raw(Box::new(McsScenario(cfg)));
        Ok(())
    })
}

/// Loads a TOML scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcs_scenario_load(path: *const c_char, out: *mut *mut McsScenario) -> McsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let cfg = ScenarioConfig::load(Path::new(path)).map_err(core_err)?;
        *out = Box::into_raw(Box::new(McsScenario(cfg)));
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mcs_scenario_free(scenario: *mut McsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcs_scenario_set_seed(scenario: *mut McsScenario, seed: u64) -> McsStatus {
    guard(|| {
        out_arg(scenario, "scenario")?.0.master_seed = seed;
        Ok(())
    })
}

/// Worker threads, 0 for all cores.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcs_scenario_set_workers(scenario: *mut McsScenario, workers: u32) -> McsStatus {
    guard(|| {
        out_arg(scenario, "scenario")?.0.workers = workers as usize;
        Ok(())
    })
}

/// Number of runs; rejected (and left unchanged) when invalid.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcs_scenario_set_runs(scenario: *mut McsScenario, n_runs: u64) -> McsStatus {
    guard(|| {
        let s = out_arg(scenario, "scenario")?;
        let mut cfg = s.0.clone();
        cfg.protocol.n_runs = n_runs as usize;
        cfg.validate().map_err(core_err)?;
        s.0 = cfg;
        Ok(())
    })
}

/// Simulates and analyzes the scenario.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcs_run(scenario: *const McsScenario, out: *mut *mut McsResult) -> McsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let s = ref_arg(scenario, "scenario")?;
        let res = runner::run_scenario(&s.0).map_err(core_err)?;
        *out = Box::into_raw(Box::new(McsResult(res)));
        Ok(())
    })
}

/// # Safety
/// `result` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mcs_result_free(result: *mut McsResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of acquisitions in the trace; 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcs_result_trace_len(result: *const McsResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.trace.len())
}

/// Copies the summed counts into `buf`, which must hold `mcs_result_trace_len` values.
///
/// # Safety
/// `buf` must point to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mcs_result_trace_counts(result: *const McsResult, buf: *mut f64, capacity: usize) -> McsStatus {
    guard(|| {
        let r = ref_arg(result, "result")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let counts = &r.0.trace.counts;
        if capacity < counts.len() {
            return Err((
                McsStatus::BufferTooSmall,
                format!("buffer holds {capacity} values, trace has {}", counts.len()),
            ));
        }
        ptr::copy_nonoverlapping(counts.as_ptr(), buf, counts.len());
        Ok(())
    })
}

/// # Safety
/// `result` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcs_result_summary(result: *const McsResult, out: *mut McsSummary) -> McsStatus {
    guard(|| {
        let r = ref_arg(result, "result")?;
        let out = out_arg(out, "out")?;
        let s = &r.0.analysis.summary;
        let nan = |v: Option<f64>| v.unwrap_or(f64::NAN);
        *out = McsSummary {
            f_u_oracle_hz: s.f_u_oracle_hz,
            f_u_hz: nan(s.f_u_hz),
            fwhm_hz: nan(s.fwhm_hz),
            tau_decay_s: nan(s.tau_decay_s),
            tau_memory_expected_s: nan(s.tau_memory_expected_s),
            sensitivity_t_per_sqrt_hz: nan(s.sensitivity_t_per_sqrt_hz),
            wall_time_per_run_s: s.wall_time.per_run_s,
            wall_time_total_s: s.wall_time.total_s,
            fit_error_count: s.fit_errors.len() as u32,
            resonant: s.resonant,
        };
        Ok(())
    })
}

/// Full summary as JSON; release with [`mcs_string_free`].
///
/// # Safety
/// `result` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcs_result_summary_json(result: *const McsResult, out: *mut *mut c_char) -> McsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let r = ref_arg(result, "result")?;
        let json = serde_json::to_string(&r.0.analysis.summary).map_err(|e| core_err(e.into()))?;
        *out = CString::new(json).map_err(|e| (McsStatus::Io, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn mcs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Writes trace, spectrum, fits and summary files into `dir`.
///
/// # Safety
/// `result` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mcs_result_write_bundle(result: *const McsResult, dir: *const c_char) -> McsStatus {
    guard(|| {
        let r = ref_arg(result, "result")?;
        let dir = str_arg(dir, "dir")?;
        runner::write_bundle(&r.0.trace, &r.0.analysis, Path::new(dir)).map_err(core_err)
    })
}

/// Alias of `nu_s_hz` sampled every `t_s` seconds.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcs_undersampled_frequency(nu_s_hz: f64, t_s: f64, out: *mut f64) -> McsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = signal_model::undersampled_frequency(nu_s_hz, t_s).map_err(core_err)?;
        Ok(())
    })
}

/// SNR advantage factor of MCS over CS and the ratio of their total times.
///
/// # Safety
/// `f_t` and `time_ratio` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mcs_f_t(m: u64, t_s: f64, t_init_s: f64, f_t: *mut f64, time_ratio: *mut f64) -> McsStatus {
    guard(|| {
        let f_t = out_arg(f_t, "f_t")?;
        let time_ratio = out_arg(time_ratio, "time_ratio")?;
        let r = metrics::f_t(m as usize, t_s, t_init_s).map_err(core_err)?;
        *f_t = r.f_t;
        *time_ratio = r.time_ratio;
        Ok(())
    })
}

/// Memory lifetime from free relaxation and `m_limit` readouts of period `t_s`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcs_effective_memory_lifetime(t1_nuc_s: f64, m_limit: f64, t_s: f64, out: *mut f64) -> McsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = metrics::effective_memory_lifetime(t1_nuc_s, m_limit, t_s).map_err(core_err)?;
        Ok(())
    })
}
