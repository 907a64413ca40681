//! C interface to `cwrm`.
//!
//! Datasets and fits are opaque heap handles created by `cwrm_*_new` style
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`CwrmStatus`]; on failure, `cwrm_last_error_message` gives a
//! description valid until the next failing call on the same thread.
//! Array results are copied into caller-owned buffers whose length must
//! match exactly.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cwrm::cli::{fit_report, Method, RunReport};
use cwrm::{datagen, Dataset, Error, FitConfig};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwrmStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad argument: wrong buffer length, invalid UTF-8, unknown preset.
    InvalidArgument = 2,
    /// Data or settings rejected by validation.
    Validation = 3,
    /// Every random start failed.
    AllStartsFailed = 4,
    /// The requested quantity does not exist for this fit.
    Unavailable = 5,
    /// Internal panic; the handle involved should be treated as unusable.
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwrmMethod {
    /// Trimmed cluster weighted model.
    Cwrm = 0,
    /// Trimmed mixture of linear regressions.
    Mixreg = 1,
}

/// Fit settings; obtain defaults from `cwrm_config_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwrmConfig {
    pub groups: usize,
    pub alpha: f64,
    pub c_x: f64,
    pub c_eps: f64,
    pub n_starts: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl From<&CwrmConfig> for FitConfig {
    fn from(c: &CwrmConfig) -> Self {
        FitConfig::new(c.groups, c.alpha, c.c_x, c.c_eps)
            .with_starts(c.n_starts)
            .with_max_iter(c.max_iter)
            .with_rel_tol(c.rel_tol)
            .with_seed(c.seed)
    }
}

/// Opaque dataset handle.
pub struct CwrmDataset(Dataset);

/// Opaque fit handle.
pub struct CwrmFit(RunReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: CwrmStatus, msg: &str) -> CwrmStatus {
    set_error(msg);
    status
}

fn from_error(e: &Error) -> CwrmStatus {
    let status = match e {
        Error::AllStartsFailed { .. } => CwrmStatus::AllStartsFailed,
        Error::UnknownPreset(_) => CwrmStatus::InvalidArgument,
        _ => CwrmStatus::Validation,
    };
    fail(status, &e.to_string())
}

fn guard(f: impl FnOnce() -> CwrmStatus) -> CwrmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(CwrmStatus::Panic, &format!("internal error: {msg}"))
        }
    }
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cwrm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Default settings: 2 groups, no trimming, `c_x = c_eps = 20`, 64 starts.
#[no_mangle]
pub extern "C" fn cwrm_config_default() -> CwrmConfig {
    let d = FitConfig::default();
    CwrmConfig {
        groups: d.groups,
        alpha: d.alpha,
        c_x: d.c_x,
        c_eps: d.c_eps,
        n_starts: d.n_starts,
        max_iter: d.max_iter,
        rel_tol: d.rel_tol,
        seed: d.seed,
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, len))
    }
}

/// Builds a dataset from `n * d` row-major covariates and `n` responses.
///
/// # Safety
/// `x` and `y` must point to `n * d` and `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cwrm_dataset_new(
    n: usize,
    d: usize,
    x: *const f64,
    y: *const f64,
    out: *mut *mut CwrmDataset,
) -> CwrmStatus {
    guard(|| {
        if out.is_null() {
            return fail(CwrmStatus::NullPointer, "output pointer is null");
        }
        let Some(len) = n.checked_mul(d) else {
            return fail(CwrmStatus::InvalidArgument, "n * d overflows");
        };
        let (Some(xs), Some(ys)) = (slice(x, len), slice(y, n)) else {
            return fail(CwrmStatus::NullPointer, "data pointer is null");
        };
        match Dataset::from_row_major(d, xs.to_vec(), ys.to_vec(), None) {
            Ok(ds) => {
                *out = Box::into_raw(Box::new(CwrmDataset(ds)));
                CwrmStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Draws a dataset from a named preset, with ground-truth labels.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cwrm_dataset_simulate(name: *const c_char, seed: u64, out: *mut *mut CwrmDataset) -> CwrmStatus {
    guard(|| {
        if name.is_null() || out.is_null() {
            return fail(CwrmStatus::NullPointer, "null argument");
        }
        let Ok(name) = CStr::from_ptr(name).to_str() else {
            return fail(CwrmStatus::InvalidArgument, "preset name is not UTF-8");
        };
        match datagen::preset(name).and_then(|s| datagen::generate(&s.with_seed(seed))) {
            Ok(ds) => {
                *out = Box::into_raw(Box::new(CwrmDataset(ds)));
                CwrmStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Releases a dataset; null is ignored.
///
/// # Safety
/// `ds` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cwrm_dataset_free(ds: *mut CwrmDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of observations, 0 for null.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cwrm_dataset_n(ds: *const CwrmDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.n())
}

/// Covariate dimension, 0 for null.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cwrm_dataset_d(ds: *const CwrmDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.d())
}

unsafe fn copy_out<T: Copy>(src: &[T], out: *mut T, len: usize) -> CwrmStatus {
    if len != src.len() {
        return fail(
            CwrmStatus::InvalidArgument,
            &format!("buffer holds {len} elements, {} required", src.len()),
        );
    }
    if len > 0 {
        if out.is_null() {
            return fail(CwrmStatus::NullPointer, "output buffer is null");
        }
        ptr::copy_nonoverlapping(src.as_ptr(), out, len);
    }
    CwrmStatus::Ok
}

/// Copies covariates (`n * d`, row-major).
///
/// # Safety
/// `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cwrm_dataset_covariates(ds: *const CwrmDataset, out: *mut f64, len: usize) -> CwrmStatus {
    guard(|| match ds.as_ref() {
        Some(d) => copy_out(d.0.covariates(), out, len),
        None => fail(CwrmStatus::NullPointer, "dataset is null"),
    })
}

/// Copies responses (`n`).
///
/// # Safety
/// `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cwrm_dataset_responses(ds: *const CwrmDataset, out: *mut f64, len: usize) -> CwrmStatus {
    guard(|| match ds.as_ref() {
        Some(d) => copy_out(d.0.responses(), out, len),
        None => fail(CwrmStatus::NullPointer, "dataset is null"),
    })
}

/// Copies ground-truth labels (`n`; 0 marks contamination).
///
/// # Safety
/// `out` must hold `len` writable `size_t`.
#[no_mangle]
pub unsafe extern "C" fn cwrm_dataset_true_labels(ds: *const CwrmDataset, out: *mut usize, len: usize) -> CwrmStatus {
    guard(|| match ds.as_ref() {
        Some(d) => match d.0.true_labels() {
            Some(l) => copy_out(l, out, len),
            None => fail(CwrmStatus::Unavailable, "dataset has no labels"),
        },
        None => fail(CwrmStatus::NullPointer, "dataset is null"),
    })
}

/// Fits a model.
///
/// # Safety
/// `ds` and `config` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit(
    ds: *const CwrmDataset,
    config: *const CwrmConfig,
    method: CwrmMethod,
    out: *mut *mut CwrmFit,
) -> CwrmStatus {
    guard(|| {
        let (Some(ds), Some(cfg)) = (ds.as_ref(), config.as_ref()) else {
            return fail(CwrmStatus::NullPointer, "null argument");
        };
        if out.is_null() {
            return fail(CwrmStatus::NullPointer, "output pointer is null");
        }
        let method = match method {
            CwrmMethod::Cwrm => Method::Cwrm,
            CwrmMethod::Mixreg => Method::Mixreg,
        };
        match fit_report(&ds.0, &FitConfig::from(cfg), method) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(CwrmFit(r)));
                CwrmStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Releases a fit; null is ignored.
///
/// # Safety
/// `fit` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit_free(fit: *mut CwrmFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Number of components, 0 for null.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit_groups(fit: *const CwrmFit) -> usize {
    fit.as_ref().map_or(0, |f| f.0.params.weights.len())
}

/// Number of observations, 0 for null.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit_n(fit: *const CwrmFit) -> usize {
    fit.as_ref().map_or(0, |f| f.0.n)
}

/// Covariate dimension, 0 for null.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit_dim(fit: *const CwrmFit) -> usize {
    fit.as_ref().map_or(0, |f| f.0.d)
}

/// Number of retained observations, 0 for null.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit_retained(fit: *const CwrmFit) -> usize {
    fit.as_ref().map_or(0, |f| f.0.retained)
}

/// Trimmed log-likelihood, NaN for null.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit_objective(fit: *const CwrmFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.0.objective)
}

/// Whether the best start met the tolerance.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit_converged(fit: *const CwrmFit) -> bool {
    fit.as_ref().is_some_and(|f| f.0.converged)
}

unsafe fn with_fit(fit: *const CwrmFit, f: impl FnOnce(&RunReport) -> CwrmStatus) -> CwrmStatus {
    guard(|| match fit.as_ref() {
        Some(h) => f(&h.0),
        None => fail(CwrmStatus::NullPointer, "fit is null"),
    })
}

/// Copies labels (`n`; 0 for trimmed rows, else the 1-based component).
///
/// # Safety
/// `out` must hold `len` writable `size_t`.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit_labels(fit: *const CwrmFit, out: *mut usize, len: usize) -> CwrmStatus {
    with_fit(fit, |r| copy_out(&r.labels, out, len))
}

/// Copies the retention mask (`n`; 1 retained, 0 trimmed).
///
/// # Safety
/// `out` must hold `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit_retained_mask(fit: *const CwrmFit, out: *mut u8, len: usize) -> CwrmStatus {
    with_fit(fit, |r| {
        let mask: Vec<u8> = r.z.iter().map(|&k| u8::from(k)).collect();
        copy_out(&mask, out, len)
    })
}

/// Copies mixing weights (`G`).
///
/// # Safety
/// `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit_weights(fit: *const CwrmFit, out: *mut f64, len: usize) -> CwrmStatus {
    with_fit(fit, |r| copy_out(&r.params.weights, out, len))
}

/// Copies regression intercepts (`G`).
///
/// # Safety
/// `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit_intercepts(fit: *const CwrmFit, out: *mut f64, len: usize) -> CwrmStatus {
    with_fit(fit, |r| copy_out(&r.params.intercepts, out, len))
}

/// Copies regression slopes (`G * d`, component-major).
///
/// # Safety
/// `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit_slopes(fit: *const CwrmFit, out: *mut f64, len: usize) -> CwrmStatus {
    with_fit(fit, |r| copy_out(&r.params.slopes.concat(), out, len))
}

/// Copies error variances (`G`).
///
/// # Safety
/// `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit_noise_vars(fit: *const CwrmFit, out: *mut f64, len: usize) -> CwrmStatus {
    with_fit(fit, |r| copy_out(&r.params.noise_vars, out, len))
}

/// Copies covariate means (`G * d`); `CWRM_STATUS_UNAVAILABLE` for mixreg fits.
///
/// # Safety
/// `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit_means(fit: *const CwrmFit, out: *mut f64, len: usize) -> CwrmStatus {
    with_fit(fit, |r| match &r.params.means {
        Some(m) => copy_out(&m.concat(), out, len),
        None => fail(CwrmStatus::Unavailable, "regression mixtures have no covariate means"),
    })
}

/// Copies covariate scatters (`G * d * d`, each row-major);
/// `CWRM_STATUS_UNAVAILABLE` for mixreg fits.
///
/// # Safety
/// `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit_scatters(fit: *const CwrmFit, out: *mut f64, len: usize) -> CwrmStatus {
    with_fit(fit, |r| match &r.params.scatters {
        Some(s) => copy_out(&s.concat().concat(), out, len),
        None => fail(CwrmStatus::Unavailable, "regression mixtures have no covariate scatters"),
    })
}

/// Full JSON report. Free the string with `cwrm_string_free`; null on failure.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cwrm_fit_report_json(fit: *const CwrmFit) -> *mut c_char {
    let mut result = ptr::null_mut();
    let status = with_fit(fit, |r| match CString::new(r.to_json()) {
        Ok(s) => {
            result = s.into_raw();
            CwrmStatus::Ok
        }
        Err(_) => fail(CwrmStatus::Panic, "report contains NUL"),
    });
    if status == CwrmStatus::Ok {
        result
    } else {
        ptr::null_mut()
    }
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cwrm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
