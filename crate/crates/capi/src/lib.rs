//! C ABI for the leverage diagnostics pipeline.
//!
//! Callers hand over CSV text and a formula, get back an opaque report
//! handle, and read per-observation arrays out of it. Every function
//! returns a status code mirroring the CLI exit codes; the message for the
//! most recent failure on the current thread is available from
//! [`roblev_last_error_message`].

use roblev::mcd::McdConfig;
use roblev::pipeline::{run_csv, RunConfig, RunOutput};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoblevStatus {
    Ok = 0,
    /// Null pointer, invalid UTF-8, or an out-of-range option.
    InvalidArgument = 1,
    /// CSV ingestion failed.
    Data = 3,
    /// Formula parse failed or referenced an unknown column.
    Formula = 4,
    /// Design matrix rank deficient or otherwise unusable.
    RankDeficient = 5,
    /// MCD exact fit or singularity.
    Mcd = 6,
    /// Modified design singular.
    ModifiedSingular = 7,
    /// Unexpected internal failure.
    Internal = 8,
}

/// Estimator options. Initialize with [`roblev_options_init`] and override
/// fields as needed; integer booleans use 0 = false, nonzero = true.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RoblevOptions {
    pub alpha: f64,
    pub n_trials: u64,
    pub reweight_prob: f64,
    pub seed: u64,
    pub small_sample_correction: i32,
    pub has_c_override: i32,
    pub c_override: f64,
    pub has_flag_cutoff: i32,
    pub flag_cutoff: f64,
}

impl RoblevOptions {
    fn defaults() -> Self {
        let mcd = McdConfig::default();
        RoblevOptions {
            alpha: mcd.alpha,
            n_trials: mcd.n_trials as u64,
            reweight_prob: mcd.reweight_prob,
            seed: mcd.seed,
            small_sample_correction: 1,
            has_c_override: 0,
            c_override: 0.0,
            has_flag_cutoff: 0,
            flag_cutoff: 0.0,
        }
    }
}

/// Run-level metadata filled in by [`roblev_report_meta`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RoblevMeta {
    pub n: u64,
    pub p: u64,
    pub p1: u64,
    pub p2: u64,
    pub p3: u64,
    pub h: u64,
    pub sum_w: u64,
    pub c: f64,
    pub flag_cutoff: f64,
    pub seed: u64,
}

/// Opaque report handle.
pub struct RoblevReport {
    output: RunOutput,
    robust_hat: Vec<f64>,
    robust_rd: Vec<f64>,
    classical_hat: Vec<f64>,
    classical_md: Vec<f64>,
    weights: Vec<i32>,
    flags: Vec<i32>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("nul bytes stripped");
    });
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn roblev_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn roblev_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Fill `options` with the default estimator settings.
#[no_mangle]
pub extern "C" fn roblev_options_init(options: *mut RoblevOptions) {
    if let Some(options) = unsafe { options.as_mut() } {
        *options = RoblevOptions::defaults();
    }
}

fn status_of(err: &roblev::Error) -> RoblevStatus {
    match err.exit_code() {
        3 => RoblevStatus::Data,
        4 => RoblevStatus::Formula,
        5 => RoblevStatus::RankDeficient,
        6 => RoblevStatus::Mcd,
        7 => RoblevStatus::ModifiedSingular,
        _ => RoblevStatus::Internal,
    }
}

unsafe fn utf8_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, RoblevStatus> {
    if ptr.is_null() {
        set_last_error(&format!("{what} pointer is null"));
        return Err(RoblevStatus::InvalidArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last_error(&format!("{what} is not valid UTF-8"));
        RoblevStatus::InvalidArgument
    })
}

/// Run the pipeline over CSV text.
///
/// `categorical` may be null when `n_categorical` is 0; `options` may be
/// null for defaults. On success `*out` owns the report and must be freed
/// with [`roblev_report_free`].
///
/// # Safety
/// `csv_text` and `formula` must be NUL-terminated strings; `categorical`
/// must point to `n_categorical` NUL-terminated strings; `out` must be a
/// valid, writable pointer.
#[no_mangle]
pub unsafe extern "C" fn roblev_run_csv(
    csv_text: *const c_char,
    formula: *const c_char,
    categorical: *const *const c_char,
    n_categorical: usize,
    options: *const RoblevOptions,
    out: *mut *mut RoblevReport,
) -> RoblevStatus {
    if out.is_null() {
        set_last_error("out pointer is null");
        return RoblevStatus::InvalidArgument;
    }
    *out = ptr::null_mut();

    let csv_text = match utf8_arg(csv_text, "csv_text") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let formula = match utf8_arg(formula, "formula") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let mut overrides = Vec::with_capacity(n_categorical);
    if n_categorical > 0 {
        if categorical.is_null() {
            set_last_error("categorical pointer is null but n_categorical > 0");
            return RoblevStatus::InvalidArgument;
        }
        for k in 0..n_categorical {
            match utf8_arg(*categorical.add(k), "categorical name") {
                Ok(s) => overrides.push(s.to_string()),
                Err(status) => return status,
            }
        }
    }
    let opts = options.as_ref().copied().unwrap_or_else(RoblevOptions::defaults);

    let result = catch_unwind(AssertUnwindSafe(|| {
        let cfg = RunConfig {
            formula: formula.to_string(),
            mcd: McdConfig {
                alpha: opts.alpha,
                n_trials: opts.n_trials as usize,
                reweight_prob: opts.reweight_prob,
                seed: opts.seed,
                small_sample_correction: opts.small_sample_correction != 0,
                c_override: (opts.has_c_override != 0).then_some(opts.c_override),
                ..McdConfig::default()
            },
            flag_cutoff: (opts.has_flag_cutoff != 0).then_some(opts.flag_cutoff),
        };
        run_csv(&cfg, csv_text, &overrides)
    }));

    match result {
        Ok(Ok(output)) => {
            let rows = &output.report.observations;
            let report = Box::new(RoblevReport {
                robust_hat: rows.iter().map(|r| r.robust_hat).collect(),
                robust_rd: rows.iter().map(|r| r.robust_rd).collect(),
                classical_hat: rows.iter().map(|r| r.classical_hat).collect(),
                classical_md: rows.iter().map(|r| r.classical_md).collect(),
                weights: rows.iter().map(|r| i32::from(r.mcd_weight)).collect(),
                flags: rows.iter().map(|r| i32::from(r.flagged)).collect(),
                output,
            });
            *out = Box::into_raw(report);
            RoblevStatus::Ok
        }
        Ok(Err(e)) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic");
            RoblevStatus::Internal
        }
    }
}

/// Number of observations in the report.
///
/// # Safety
/// `report` must be a live handle from [`roblev_run_csv`].
#[no_mangle]
pub unsafe extern "C" fn roblev_report_len(report: *const RoblevReport) -> usize {
    report.as_ref().map_or(0, |r| r.robust_hat.len())
}

/// Fill `meta` with run-level metadata.
///
/// # Safety
/// `report` must be a live handle; `meta` must be writable.
#[no_mangle]
pub unsafe extern "C" fn roblev_report_meta(report: *const RoblevReport, meta: *mut RoblevMeta) {
    let (Some(report), Some(meta)) = (report.as_ref(), meta.as_mut()) else {
        return;
    };
    let r = &report.output.report;
    *meta = RoblevMeta {
        n: r.n as u64,
        p: r.p as u64,
        p1: r.p1 as u64,
        p2: r.p2 as u64,
        p3: r.p3 as u64,
        h: report.output.h as u64,
        sum_w: r.sum_w as u64,
        c: r.c,
        flag_cutoff: r.flag_cutoff,
        seed: report.output.seed,
    };
}

macro_rules! column_getter {
    ($(#[$doc:meta])* $name:ident, $field:ident, $ty:ty) => {
        $(#[$doc])*
        /// Pointer to one value per observation, valid while the report
        /// handle lives.
        ///
        /// # Safety
        /// `report` must be a live handle from [`roblev_run_csv`].
        #[no_mangle]
        pub unsafe extern "C" fn $name(report: *const RoblevReport) -> *const $ty {
            report.as_ref().map_or(ptr::null(), |r| r.$field.as_ptr())
        }
    };
}

column_getter!(
    /// Robust hat values (original rows against the modified Gram matrix).
    roblev_report_robust_hat, robust_hat, f64);
column_getter!(
    /// Robust distances.
    roblev_report_robust_distance, robust_rd, f64);
column_getter!(
    /// Classical hat values.
    roblev_report_classical_hat, classical_hat, f64);
column_getter!(
    /// Classical Mahalanobis distances.
    roblev_report_classical_md, classical_md, f64);
column_getter!(
    /// MCD reweighting weights (0 or 1).
    roblev_report_weights, weights, i32);
column_getter!(
    /// High-leverage flags (0 or 1).
    roblev_report_flags, flags, i32);

/// Free a report handle. Null is a no-op.
///
/// # Safety
/// `report` must be null or a handle from [`roblev_run_csv`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn roblev_report_free(report: *mut RoblevReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
