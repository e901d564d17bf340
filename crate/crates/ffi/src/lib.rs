//! C ABI for `mctsurv`.
//!
//! Samples and reports are opaque handles owned by the caller and released
//! with the matching `*_free` function. Every fallible call returns an
//! [`MctStatus`]; on failure the message is available from
//! [`mct_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::{c_char, size_t};
use mctsurv::design::{parse_weights, ContrastSpec};
use mctsurv::numerics::Sidedness;
use mctsurv::procedures::{run_method, Method, MethodSettings, TestReport};
use mctsurv::survdata::{parse_csv, ColumnSpec, Observation, SurvivalSample};
use mctsurv::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MctStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidData = 3,
    Io = 4,
    OutOfRange = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MctMethod {
    LogRank = 0,
    Mdir = 1,
    MaxWeightedLr = 2,
    CasanovaRademacher = 3,
    CasanovaPoisson = 4,
}

impl From<MctMethod> for Method {
    fn from(m: MctMethod) -> Self {
        match m {
            MctMethod::LogRank => Method::LogRank,
            MctMethod::Mdir => Method::Mdir,
            MctMethod::MaxWeightedLr => Method::MaxWeightedLr,
            MctMethod::CasanovaRademacher => Method::CasanovaRademacher,
            MctMethod::CasanovaPoisson => Method::CasanovaPoisson,
        }
    }
}

/// Test settings. Obtain defaults from [`mct_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MctConfig {
    pub alpha: f64,
    pub iterations: size_t,
    pub mc_samples: size_t,
    pub seed: u64,
    /// One-sided maxwlr test.
    pub upper: bool,
}

/// One local test. `first` and `second` are 1-based group numbers.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MctContrastResult {
    pub first: size_t,
    pub second: size_t,
    pub statistic: f64,
    pub p_adjusted: f64,
    pub rejected: bool,
    pub degenerate: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MctGlobalResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub rejected: bool,
}

/// Opaque survival sample.
pub struct MctSample(SurvivalSample);

/// Opaque test report.
pub struct MctReport(TestReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> MctStatus {
    match e {
        Error::Io(_) => MctStatus::Io,
        Error::InvalidArgument(_) | Error::InvalidWeight(_) | Error::InvalidContrast(_) => MctStatus::InvalidArgument,
        _ => MctStatus::InvalidData,
    }
}

fn fail(status: MctStatus, msg: impl Into<String>) -> MctStatus {
    set_error(msg);
    status
}

fn guard<F: FnOnce() -> Result<(), (MctStatus, String)>>(f: F) -> MctStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MctStatus::Ok,
        Ok(Err((s, m))) => fail(s, m),
        Err(_) => fail(MctStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> (MctStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (MctStatus, String) {
    (MctStatus::NullPointer, format!("{what} is null"))
}

unsafe fn opt_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, (MctStatus, String)> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| (MctStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mct_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn mct_config_default() -> MctConfig {
    let d = MethodSettings::default();
    MctConfig { alpha: 0.05, iterations: d.iterations, mc_samples: d.mc_samples, seed: 0, upper: false }
}

/// Builds a sample from parallel arrays. `status` is 1 for an event and 0
/// for a censoring. Group codes are arbitrary and numbered by first
/// appearance.
///
/// # Safety
/// Each array must hold `len` readable elements and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mct_sample_new(
    times: *const f64,
    status: *const i32,
    groups: *const u32,
    len: size_t,
    out: *mut *mut MctSample,
) -> MctStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if len > 0 && (times.is_null() || status.is_null() || groups.is_null()) {
            return Err(null("input array"));
        }
        let (t, s, g) = if len == 0 {
            (&[][..], &[][..], &[][..])
        } else {
            (
                std::slice::from_raw_parts(times, len),
                std::slice::from_raw_parts(status, len),
                std::slice::from_raw_parts(groups, len),
            )
        };
        let mut codes: Vec<u32> = Vec::new();
        let mut obs = Vec::with_capacity(len);
        for i in 0..len {
            let event = match s[i] {
                0 => false,
                1 => true,
                v => return Err((MctStatus::InvalidData, format!("status {v} at index {i} must be 0 or 1"))),
            };
            let group = match codes.iter().position(|&c| c == g[i]) {
                Some(p) => p,
                None => {
                    codes.push(g[i]);
                    codes.len() - 1
                }
            };
            obs.push(Observation { time: t[i], event, group });
        }
        let labels = codes.iter().map(u32::to_string).collect();
        let sample = SurvivalSample::new(obs, labels).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(MctSample(sample)));
        Ok(())
    })
}

/// Reads a CSV file. Null column names select `time`, `status` and `group`.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mct_sample_from_csv(
    path: *const c_char,
    time_col: *const c_char,
    status_col: *const c_char,
    group_col: *const c_char,
    out: *mut *mut MctSample,
) -> MctStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = opt_str(path, "path")?.ok_or_else(|| null("path"))?;
        let mut cols = ColumnSpec::default();
        if let Some(c) = opt_str(time_col, "time column")? {
            cols.time = c.to_string();
        }
        if let Some(c) = opt_str(status_col, "status column")? {
            cols.status = c.to_string();
        }
        if let Some(c) = opt_str(group_col, "group column")? {
            cols.group = c.to_string();
        }
        let file = File::open(path).map_err(|e| (MctStatus::Io, format!("cannot open {path}: {e}")))?;
        let sample = parse_csv(BufReader::new(file), &cols).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(MctSample(sample)));
        Ok(())
    })
}

/// Number of groups, 0 for a null handle.
///
/// # Safety
/// `sample` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mct_sample_num_groups(sample: *const MctSample) -> size_t {
    sample.as_ref().map_or(0, |s| s.0.num_groups())
}

/// Number of subjects, 0 for a null handle.
///
/// # Safety
/// `sample` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mct_sample_len(sample: *const MctSample) -> size_t {
    sample.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `sample` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mct_sample_free(sample: *mut MctSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Runs one procedure. `contrast` is `dunnett`, `tukey` or
/// `pairs:1-2,1-3`; `weights` is a comma-separated list such as
/// `fh:0:0,cross`. Null strings select `dunnett` and `fh:0:0,cross`.
///
/// # Safety
/// `sample` must be a live handle, strings null or NUL-terminated, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mct_run_test(
    sample: *const MctSample,
    method: MctMethod,
    contrast: *const c_char,
    weights: *const c_char,
    config: MctConfig,
    out: *mut *mut MctReport,
) -> MctStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let sample = sample.as_ref().ok_or_else(|| null("sample"))?;
        let spec: ContrastSpec = opt_str(contrast, "contrast")?.unwrap_or("dunnett").parse().map_err(lib_err)?;
        let weights = parse_weights(opt_str(weights, "weights")?.unwrap_or("fh:0:0,cross")).map_err(lib_err)?;
        let contrasts = spec.build(sample.0.num_groups()).map_err(lib_err)?;
        let settings = MethodSettings {
            mc_samples: config.mc_samples,
            iterations: config.iterations,
            seed: config.seed,
            sidedness: if config.upper { Sidedness::Upper } else { Sidedness::TwoSided },
        };
        let report =
            run_method(method.into(), &sample.0, &contrasts, &weights, config.alpha, &settings).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(MctReport(report)));
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mct_report_num_contrasts(report: *const MctReport) -> size_t {
    report.as_ref().map_or(0, |r| r.0.contrasts.len())
}

/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mct_report_contrast(
    report: *const MctReport,
    index: size_t,
    out: *mut MctContrastResult,
) -> MctStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = report.0.contrasts.get(index).ok_or_else(|| {
            (MctStatus::OutOfRange, format!("contrast {index} of {}", report.0.contrasts.len()))
        })?;
        *out = MctContrastResult {
            first: c.first,
            second: c.second,
            statistic: c.statistic,
            p_adjusted: c.p_adjusted,
            rejected: c.rejected,
            degenerate: c.degenerate,
        };
        Ok(())
    })
}

/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mct_report_global(report: *const MctReport, out: *mut MctGlobalResult) -> MctStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let g = &report.0.global;
        *out = MctGlobalResult {
            statistic: g.statistic,
            critical_value: g.critical_value,
            p_value: g.p_value,
            rejected: g.rejected,
        };
        Ok(())
    })
}

/// Report as a JSON string owned by the caller, or null on failure.
/// Release with [`mct_string_free`].
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mct_report_to_json(report: *const MctReport) -> *mut c_char {
    let mut result = ptr::null_mut();
    let status = guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        let json = report.0.to_json().map_err(lib_err)?;
        result = CString::new(json).map_err(|e| (MctStatus::InvalidData, e.to_string()))?.into_raw();
        Ok(())
    });
    if status == MctStatus::Ok {
        result
    } else {
        ptr::null_mut()
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mct_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mct_report_free(report: *mut MctReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
