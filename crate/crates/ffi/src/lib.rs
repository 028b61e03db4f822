//! C ABI over the `ccffs` library.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns a
//! [`CcffsStatus`]; on failure [`ccffs_last_error`] describes the problem
//! for the calling thread. Matrices are passed row-major, one row per
//! instance.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ccffs::dataset::{load_csv, EncodedDataset, LoadOptions};
use ccffs::matrix::DataMatrix;
use ccffs::nalgebra::DMatrix;
use ccffs::{iris, selector, Error, Mode, SelectionReport};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcffsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Malformed, missing or non-numeric input data.
    Data = 3,
    /// A block that must have full column rank does not.
    Degenerate = 4,
    NoInformativeCandidate = 5,
    EngineDisagreement = 6,
    Io = 7,
    /// A verification ran but at least one check failed.
    VerifyFailed = 8,
    /// Internal error; the library caught a panic.
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcffsMode {
    /// Coordinate engine when N > n + m, otherwise the data-space engine.
    Auto = 0,
    Definition = 1,
    H = 2,
    Theta = 3,
}

impl CcffsMode {
    fn to_mode(self) -> Option<Mode> {
        match self {
            CcffsMode::Auto => None,
            CcffsMode::Definition => Some(Mode::Definition),
            CcffsMode::H => Some(Mode::HCorrelation),
            CcffsMode::Theta => Some(Mode::ThetaAngle),
        }
    }

    fn from_mode(mode: Mode) -> Self {
        match mode {
            Mode::Definition => CcffsMode::Definition,
            Mode::HCorrelation => CcffsMode::H,
            Mode::ThetaAngle => CcffsMode::Theta,
        }
    }
}

/// Encoded dataset: numeric features and responses.
pub struct CcffsDataset {
    inner: EncodedDataset,
}

/// Outcome of a selection run.
pub struct CcffsReport {
    inner: SelectionReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> CcffsStatus {
    match e {
        Error::Degenerate { .. } | Error::ZeroVariance(_) => CcffsStatus::Degenerate,
        Error::NoInformativeCandidate { .. } => CcffsStatus::NoInformativeCandidate,
        Error::EngineDisagreement { .. } => CcffsStatus::EngineDisagreement,
        Error::Io(_) => CcffsStatus::Io,
        Error::InvalidArgument(_) | Error::TooManyFeatures { .. } | Error::Dimension(_) => {
            CcffsStatus::InvalidArgument
        }
        _ => CcffsStatus::Data,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (CcffsStatus, String)>) -> CcffsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CcffsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error (panic)");
            CcffsStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (CcffsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (CcffsStatus, String) {
    (CcffsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CcffsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        (
            CcffsStatus::InvalidArgument,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn matrix_arg(
    p: *const f64,
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<DMatrix<f64>, (CcffsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    if rows == 0 || cols == 0 {
        return Err((
            CcffsStatus::InvalidArgument,
            format!("{what} has a zero dimension"),
        ));
    }
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| (CcffsStatus::InvalidArgument, format!("{what} is too large")))?;
    let data = std::slice::from_raw_parts(p, len);
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

/// Message for the most recent failure on this thread, or null if the last
/// call succeeded. Valid until the next call into the library on the same
/// thread.
#[no_mangle]
pub extern "C" fn ccffs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ccffs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a CSV file. `targets` is a comma-separated list of response
/// column names; every other column is a feature.
///
/// # Safety
/// `path` and `targets` must be NUL-terminated strings and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn ccffs_dataset_from_csv(
    path: *const c_char,
    targets: *const c_char,
    zscore: bool,
    out: *mut *mut CcffsDataset,
) -> CcffsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let targets: Vec<String> = str_arg(targets, "targets")?
            .split(',')
            .map(|s| s.trim().to_owned())
            .filter(|s| !s.is_empty())
            .collect();
        let options = LoadOptions {
            zscore_features: zscore,
        };
        let inner = load_csv(path, &targets, &options).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CcffsDataset { inner }));
        Ok(())
    })
}

/// Builds a dataset from row-major `x` (`n_instances x n_features`) and
/// `y` (`n_instances x n_responses`). The arrays are copied.
///
/// # Safety
/// `x` and `y` must point to at least the stated number of values and
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ccffs_dataset_from_arrays(
    x: *const f64,
    n_instances: usize,
    n_features: usize,
    y: *const f64,
    n_responses: usize,
    out: *mut *mut CcffsDataset,
) -> CcffsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let x = matrix_arg(x, n_instances, n_features, "x")?;
        let y = matrix_arg(y, n_instances, n_responses, "y")?;
        let x = DataMatrix::with_prefix(x, "x").map_err(lib_err)?;
        let y = DataMatrix::with_prefix(y, "y").map_err(lib_err)?;
        let inner = EncodedDataset::from_matrices(x, y).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CcffsDataset { inner }));
        Ok(())
    })
}

/// Writes the dataset shape. Any output pointer may be null.
///
/// # Safety
/// `dataset` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ccffs_dataset_shape(
    dataset: *const CcffsDataset,
    n_instances: *mut usize,
    n_features: *mut usize,
    n_responses: *mut usize,
) -> CcffsStatus {
    guard(|| {
        let d = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        if let Some(p) = n_instances.as_mut() {
            *p = d.inner.n_instances();
        }
        if let Some(p) = n_features.as_mut() {
            *p = d.inner.n_features();
        }
        if let Some(p) = n_responses.as_mut() {
            *p = d.inner.n_responses();
        }
        Ok(())
    })
}

/// # Safety
/// `dataset` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ccffs_dataset_free(dataset: *mut CcffsDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Greedily selects `t` features.
///
/// # Safety
/// `dataset` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ccffs_select(
    dataset: *const CcffsDataset,
    t: usize,
    mode: CcffsMode,
    out: *mut *mut CcffsReport,
) -> CcffsStatus {
    guard(|| {
        let d = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if t == 0 {
            return Err((CcffsStatus::InvalidArgument, "t must be at least 1".into()));
        }
        let inner = selector::run(&d.inner, t, mode.to_mode()).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(CcffsReport { inner }));
        Ok(())
    })
}

/// Number of selected features, or 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ccffs_report_len(report: *const CcffsReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.selections.len())
}

/// Engine that produced the report; `Auto` for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ccffs_report_mode(report: *const CcffsReport) -> CcffsMode {
    report
        .as_ref()
        .map_or(CcffsMode::Auto, |r| CcffsMode::from_mode(r.inner.mode))
}

unsafe fn copy_out<T: Copy>(
    report: *const CcffsReport,
    buf: *mut T,
    len: usize,
    f: impl Fn(&SelectionReport) -> Vec<T>,
) -> CcffsStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        let values = f(&r.inner);
        if len < values.len() {
            return Err((
                CcffsStatus::InvalidArgument,
                format!("buffer holds {len} values, {} needed", values.len()),
            ));
        }
        if values.is_empty() {
            return Ok(());
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// Copies the selected 0-based feature indices in selection order.
///
/// # Safety
/// `buf` must have room for `len` values and `len >= ccffs_report_len`.
#[no_mangle]
pub unsafe extern "C" fn ccffs_report_indices(
    report: *const CcffsReport,
    buf: *mut usize,
    len: usize,
) -> CcffsStatus {
    copy_out(report, buf, len, SelectionReport::indices)
}

/// Copies the per-iteration criterion gains.
///
/// # Safety
/// As for [`ccffs_report_indices`].
#[no_mangle]
pub unsafe extern "C" fn ccffs_report_increments(
    report: *const CcffsReport,
    buf: *mut f64,
    len: usize,
) -> CcffsStatus {
    copy_out(report, buf, len, SelectionReport::increments)
}

/// Copies the running criterion value after each iteration.
///
/// # Safety
/// As for [`ccffs_report_indices`].
#[no_mangle]
pub unsafe extern "C" fn ccffs_report_cumulative(
    report: *const CcffsReport,
    buf: *mut f64,
    len: usize,
) -> CcffsStatus {
    copy_out(report, buf, len, SelectionReport::cumulative)
}

/// Copies cumulative wall-clock seconds after each iteration.
///
/// # Safety
/// As for [`ccffs_report_indices`].
#[no_mangle]
pub unsafe extern "C" fn ccffs_report_seconds(
    report: *const CcffsReport,
    buf: *mut f64,
    len: usize,
) -> CcffsStatus {
    copy_out(report, buf, len, SelectionReport::cumulative_seconds)
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ccffs_report_free(report: *mut CcffsReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Sum of squared canonical correlations between row-major `x`
/// (`n_instances x n_x`) and `y` (`n_instances x n_y`).
///
/// # Safety
/// `x` and `y` must point to at least the stated number of values and
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ccffs_ssc(
    x: *const f64,
    n_instances: usize,
    n_x: usize,
    y: *const f64,
    n_y: usize,
    out: *mut f64,
) -> CcffsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let x = matrix_arg(x, n_instances, n_x, "x")?;
        let y = matrix_arg(y, n_instances, n_y, "y")?;
        *out = ccffs::correlation::ssc_values(&x, &y).map_err(lib_err)?;
        Ok(())
    })
}

/// Replays the bundled seven-instance iris walkthrough. Returns
/// `VerifyFailed` if any value is off by more than `tolerance`.
#[no_mangle]
pub extern "C" fn ccffs_verify_iris(mode: CcffsMode, tolerance: f64) -> CcffsStatus {
    guard(|| {
        let checks = iris::verify(mode.to_mode(), tolerance).map_err(lib_err)?;
        let failed: Vec<String> = checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} (expected {}, actual {})", c.label, c.expected, c.actual))
            .collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err((CcffsStatus::VerifyFailed, failed.join("; ")))
        }
    })
}
