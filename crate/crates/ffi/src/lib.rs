//! C interface to `ped-core`.
//!
//! Every function returns a [`PedStatus`]; on failure a description is kept
//! per thread and can be read with [`ped_last_error_message`]. Objects are
//! handed out as opaque pointers and released with their `_free` function.
//! Output arrays are caller-allocated: query the length, then copy.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use ped_core::io::read_feature_pack;
use ped_core::{
    kendall_tau_w, ped_run as core_ped_run, score_with_ped, Error, FeatureMatrix, GroundTruthTable, LabelVector,
    Metric, MetricParams, NormSource, NormStats, PedConfig, PedResult,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PedStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Numerical = 4,
    NotFound = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PedNormSource {
    SelfStats = 0,
    None = 1,
    ExternalStats = 2,
}

/// Refinement settings. Fill with [`ped_config_default`] and adjust.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PedConfigC {
    pub lambda: f64,
    pub k: f64,
    pub dt: f64,
    pub max_steps: u32,
    pub epsilon: f64,
    pub norm_source: PedNormSource,
}

impl From<&PedConfigC> for PedConfig {
    fn from(c: &PedConfigC) -> Self {
        PedConfig {
            lambda: c.lambda,
            k: c.k,
            dt: c.dt,
            max_steps: c.max_steps as usize,
            epsilon: c.epsilon,
            norm_source: match c.norm_source {
                PedNormSource::SelfStats => NormSource::SelfStats,
                PedNormSource::None => NormSource::None,
                PedNormSource::ExternalStats => NormSource::ExternalStats,
            },
        }
    }
}

/// Features and labels of one model on one dataset.
pub struct PedDataset {
    features: FeatureMatrix,
    labels: LabelVector,
}

/// Outcome of one refinement run.
pub struct PedRunResult {
    inner: PedResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let text = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(err: &Error) -> PedStatus {
    match err {
        Error::Numerical(_) => PedStatus::Numerical,
        Error::Io { .. } | Error::Json { .. } | Error::Csv { .. } | Error::Manifest(_) => PedStatus::Io,
        _ => PedStatus::InvalidArgument,
    }
}

fn fail(status: PedStatus, msg: impl Into<String>) -> PedStatus {
    set_error(msg.into());
    status
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), PedStatus>) -> PedStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PedStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(PedStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, PedStatus>;
}

impl<T> OrStatus<T> for ped_core::Result<T> {
    fn or_status(self) -> Result<T, PedStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, PedStatus> {
    // SAFETY: callers pass either null or a pointer obtained from this library.
    unsafe { p.as_ref() }.ok_or_else(|| fail(PedStatus::NullPointer, format!("{what} is null")))
}

fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, PedStatus> {
    // SAFETY: callers pass either null or a writable location.
    unsafe { p.as_mut() }.ok_or_else(|| fail(PedStatus::NullPointer, format!("{what} is null")))
}

fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, PedStatus> {
    if p.is_null() {
        return Err(fail(PedStatus::NullPointer, format!("{what} is null")));
    }
    // SAFETY: non-null and nul-terminated per the API contract.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| fail(PedStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn array<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], PedStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(PedStatus::NullPointer, format!("{what} is null")));
    }
    // SAFETY: the caller guarantees `len` readable elements.
    Ok(unsafe { slice::from_raw_parts(p, len) })
}

fn copy_out(src: &[f64], buf: *mut f64, capacity: usize, what: &str) -> Result<(), PedStatus> {
    if capacity < src.len() {
        return Err(fail(
            PedStatus::BufferTooSmall,
            format!("{what}: need {} values, buffer holds {capacity}", src.len()),
        ));
    }
    if src.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return Err(fail(PedStatus::NullPointer, format!("{what} buffer is null")));
    }
    // SAFETY: `buf` holds at least `capacity >= src.len()` writable values.
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len()) };
    Ok(())
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ped_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ped_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn ped_config_default(out: *mut PedConfigC) -> PedStatus {
    guard(|| {
        let d = PedConfig::default();
        *out_ptr(out, "out")? = PedConfigC {
            lambda: d.lambda,
            k: d.k,
            dt: d.dt,
            max_steps: d.max_steps as u32,
            epsilon: d.epsilon,
            norm_source: PedNormSource::SelfStats,
        };
        Ok(())
    })
}

/// Copies `n * d` row-major features and `n` labels into a new dataset.
/// Labels may be any `u32` values; they are remapped to `0..C` in sorted
/// order.
///
/// # Safety
/// `features` must hold `n * d` values and `labels` `n` values.
#[no_mangle]
pub unsafe extern "C" fn ped_dataset_new(
    features: *const f64,
    n: usize,
    d: usize,
    labels: *const u32,
    out: *mut *mut PedDataset,
) -> PedStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let len = n
            .checked_mul(d)
            .ok_or_else(|| fail(PedStatus::InvalidArgument, "n * d overflows"))?;
        let data = array(features, len, "features")?.to_vec();
        let raw = array(labels, n, "labels")?;
        let features = FeatureMatrix::new(n, d, data).or_status()?;
        let (labels, _) = LabelVector::from_raw(raw).or_status()?;
        *out = Box::into_raw(Box::new(PedDataset { features, labels }));
        Ok(())
    })
}

/// Loads a feature pack directory.
///
/// # Safety
/// `path` must be a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ped_dataset_read_pack(path: *const c_char, out: *mut *mut PedDataset) -> PedStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let pack = read_feature_pack(Path::new(c_str(path, "path")?)).or_status()?;
        *out = Box::into_raw(Box::new(PedDataset {
            features: pack.features,
            labels: pack.labels,
        }));
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a pointer from `ped_dataset_new`/`ped_dataset_read_pack`.
#[no_mangle]
pub unsafe extern "C" fn ped_dataset_free(ds: *mut PedDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Writes rows, columns and class count of `ds`.
///
/// # Safety
/// `ds` must be a live dataset; outputs may be null to skip them.
#[no_mangle]
pub unsafe extern "C" fn ped_dataset_shape(
    ds: *const PedDataset,
    rows: *mut usize,
    cols: *mut usize,
    classes: *mut usize,
) -> PedStatus {
    guard(|| {
        let ds = non_null(ds, "dataset")?;
        for (p, v) in [(rows, ds.features.rows()), (cols, ds.features.cols()), (classes, ds.labels.num_classes())] {
            if let Some(slot) = p.as_mut() {
                *slot = v;
            }
        }
        Ok(())
    })
}

fn stats_from(mean: *const f64, std: *const f64, d: usize) -> Result<Option<NormStats>, PedStatus> {
    if mean.is_null() && std.is_null() {
        return Ok(None);
    }
    let mean = array(mean, d, "stats mean")?.to_vec();
    let std = array(std, d, "stats std")?.to_vec();
    Ok(Some(NormStats::new(mean, std).or_status()?.0))
}

/// Refines the features of `ds`. `stats_mean`/`stats_std` (length `d`)
/// are only read when the config asks for external statistics; pass null
/// otherwise.
///
/// # Safety
/// Pointers must be valid as described above.
#[no_mangle]
pub unsafe extern "C" fn ped_run(
    ds: *const PedDataset,
    config: *const PedConfigC,
    stats_mean: *const f64,
    stats_std: *const f64,
    out: *mut *mut PedRunResult,
) -> PedStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let ds = non_null(ds, "dataset")?;
        let config = PedConfig::from(non_null(config, "config")?);
        let stats = stats_from(stats_mean, stats_std, ds.features.cols())?;
        let inner = core_ped_run(&ds.features, &ds.labels, &config, stats.as_ref()).or_status()?;
        *out = Box::into_raw(Box::new(PedRunResult { inner }));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a pointer from `ped_run`.
#[no_mangle]
pub unsafe extern "C" fn ped_result_free(r: *mut PedRunResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live result.
#[no_mangle]
pub unsafe extern "C" fn ped_result_steps_taken(r: *const PedRunResult, out: *mut usize) -> PedStatus {
    guard(|| {
        *out_ptr(out, "out")? = non_null(r, "result")?.inner.steps_taken;
        Ok(())
    })
}

/// Copies the energy of every visited state (`steps_taken + 1` values).
/// Passing a null buffer with capacity 0 just reports the length in `len`.
///
/// # Safety
/// `buf` must hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn ped_result_energy_trace(
    r: *const PedRunResult,
    buf: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> PedStatus {
    trace_out(r, buf, capacity, len, |r| r.energy_trace.clone(), "energy trace")
}

/// Copies the termination statistic of every executed step.
///
/// # Safety
/// `buf` must hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn ped_result_omega_trace(
    r: *const PedRunResult,
    buf: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> PedStatus {
    trace_out(r, buf, capacity, len, |r| r.omega_trace.clone(), "omega trace")
}

/// Copies the refined `n * d` row-major features.
///
/// # Safety
/// `buf` must hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn ped_result_refined(
    r: *const PedRunResult,
    buf: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> PedStatus {
    trace_out(r, buf, capacity, len, |r| r.refined.as_slice().to_vec(), "refined features")
}

fn trace_out(
    r: *const PedRunResult,
    buf: *mut f64,
    capacity: usize,
    len: *mut usize,
    get: impl FnOnce(&PedResult) -> Vec<f64>,
    what: &str,
) -> PedStatus {
    guard(|| {
        let values = get(&non_null(r, "result")?.inner);
        // SAFETY: null or writable per the API contract.
        if let Some(slot) = unsafe { len.as_mut() } {
            *slot = values.len();
        }
        if buf.is_null() && capacity == 0 {
            return Ok(());
        }
        copy_out(&values, buf, capacity, what)
    })
}

/// Scores `ds` with `metric` ("logme", "gbc" or "sfda"), refining first
/// when `config` is non-null. Uses the default sfda shrinkage.
///
/// # Safety
/// `metric` must be nul-terminated; `config` null or valid.
#[no_mangle]
pub unsafe extern "C" fn ped_score(
    ds: *const PedDataset,
    metric: *const c_char,
    config: *const PedConfigC,
    out: *mut f64,
) -> PedStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let ds = non_null(ds, "dataset")?;
        let metric: Metric = c_str(metric, "metric")?.parse().or_status()?;
        let config = config.as_ref().map(PedConfig::from);
        let score = score_with_ped(
            &ds.features,
            &ds.labels,
            metric,
            config.as_ref(),
            None,
            &MetricParams::default(),
        )
        .or_status()?;
        *out = score.value;
        Ok(())
    })
}

/// Rank correlation between ground truth `g` and predictions `p`.
///
/// # Safety
/// `g` and `p` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn ped_kendall_tau(g: *const f64, p: *const f64, n: usize, out: *mut f64) -> PedStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = kendall_tau_w(array(g, n, "g")?, array(p, n, "p")?).or_status()?;
        Ok(())
    })
}

/// Fine-tuned accuracy of `model` on `dataset` from the built-in table.
/// Returns `NotFound` when the table has no such cell.
///
/// # Safety
/// Both strings must be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn ped_ground_truth(model: *const c_char, dataset: *const c_char, out: *mut f64) -> PedStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let (m, d) = (c_str(model, "model")?, c_str(dataset, "dataset")?);
        match GroundTruthTable::embedded().get(m, d) {
            Some(v) => {
                *out = v;
                Ok(())
            }
            None => Err(fail(PedStatus::NotFound, format!("no ground truth for {m} on {d}"))),
        }
    })
}
