//! C ABI for the kasba clustering library.
//!
//! Datasets and fitted models cross the boundary as opaque handles that must
//! be released with the matching `*_free` function. Every fallible call
//! returns a [`KasbaStatus`]; on failure a description is available from
//! [`kasba_last_error_message`] on the same thread. Arrays are caller-owned
//! and passed as pointer plus length; series are stored row-major.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kasba::clustering::{fit_kasba, ClusterModel, KasbaConfig};
use kasba::metrics::Scores;
use kasba::tsdata::{load_tsv, Dataset, Split, TimeSeries};
use kasba::{DistanceKind, Error};
use libc::c_char;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KasbaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Format = 4,
    Io = 5,
    Config = 6,
    Convergence = 7,
    EmptyCluster = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KasbaDistance {
    Euclidean = 0,
    Dtw = 1,
    Msm = 2,
}

/// Options for [`kasba_fit`]. Obtain defaults from [`kasba_fit_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KasbaFitOptions {
    pub k: usize,
    pub seed: u64,
    pub distance: KasbaDistance,
    /// MSM split/merge cost, ignored for other distances.
    pub msm_c: f64,
    pub max_its: usize,
    pub use_pruning: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KasbaScores {
    pub clacc: f64,
    pub ari: f64,
    pub nmi: f64,
    pub ami: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KasbaCallCounts {
    pub init: u64,
    pub update: u64,
    pub assign: u64,
}

/// Opaque dataset handle.
pub struct KasbaDataset {
    inner: Dataset,
}

/// Opaque fitted-model handle.
pub struct KasbaModel {
    inner: ClusterModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> KasbaStatus {
    match err {
        Error::Format { .. } | Error::Parse { .. } | Error::EmptyDataset(_) => KasbaStatus::Format,
        Error::Shape(_) => KasbaStatus::Shape,
        Error::Config(_) => KasbaStatus::Config,
        Error::EmptyCluster(_) => KasbaStatus::EmptyCluster,
        Error::Convergence(_) => KasbaStatus::Convergence,
        Error::InvalidValue(_) => KasbaStatus::InvalidArgument,
        Error::Io(_) => KasbaStatus::Io,
    }
}

/// Runs `body`, converting errors and panics into status codes.
fn guard<F>(body: F) -> KasbaStatus
where
    F: FnOnce() -> Result<(), (KasbaStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => KasbaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            KasbaStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (KasbaStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (KasbaStatus, String) {
    (KasbaStatus::NullPointer, format!("{name} is null"))
}

fn distance_kind(kind: KasbaDistance, msm_c: f64) -> Result<DistanceKind, (KasbaStatus, String)> {
    match kind {
        KasbaDistance::Euclidean => Ok(DistanceKind::Euclidean),
        KasbaDistance::Dtw => Ok(DistanceKind::Dtw),
        KasbaDistance::Msm => DistanceKind::msm(msm_c).map_err(lib_err),
    }
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kasba_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kasba_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a dataset from `n` series of length `m` stored row-major in
/// `values`. `labels` may be NULL; otherwise it holds `n` class ids.
///
/// # Safety
/// `values` must point to `n * m` readable doubles; `labels`, when non-null,
/// to `n` readable `size_t`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kasba_dataset_new(
    values: *const f64,
    n: usize,
    m: usize,
    labels: *const usize,
    out: *mut *mut KasbaDataset,
) -> KasbaStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        if n == 0 || m == 0 {
            return Err((KasbaStatus::Shape, "n and m must be positive".into()));
        }
        let len = n.checked_mul(m).ok_or((KasbaStatus::Shape, "n * m overflows".into()))?;
        let flat = std::slice::from_raw_parts(values, len);
        let series = flat
            .chunks_exact(m)
            .map(|row| TimeSeries::new(row.to_vec()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(lib_err)?;
        let labels = (!labels.is_null()).then(|| std::slice::from_raw_parts(labels, n).to_vec());
        let inner = Dataset::new("ffi", series, labels, Split::Train).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(KasbaDataset { inner }));
        Ok(())
    })
}

/// Loads a tab-separated dataset file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kasba_dataset_load_tsv(
    path: *const c_char,
    has_label: bool,
    out: *mut *mut KasbaDataset,
) -> KasbaStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (KasbaStatus::InvalidArgument, "path is not UTF-8".to_string()))?;
        let inner = load_tsv(path, has_label).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(KasbaDataset { inner }));
        Ok(())
    })
}

/// Z-normalises every series of `dataset` in place.
///
/// # Safety
/// `dataset` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn kasba_dataset_z_normalise(dataset: *mut KasbaDataset) -> KasbaStatus {
    guard(|| {
        let ds = dataset.as_mut().ok_or_else(|| null("dataset"))?;
        ds.inner = ds.inner.z_normalise();
        Ok(())
    })
}

/// Writes the number of series and their length.
///
/// # Safety
/// `dataset` must be a live handle; `n` and `m` writable.
#[no_mangle]
pub unsafe extern "C" fn kasba_dataset_shape(
    dataset: *const KasbaDataset,
    n: *mut usize,
    m: *mut usize,
) -> KasbaStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        if n.is_null() || m.is_null() {
            return Err(null("n/m"));
        }
        *n = ds.inner.len();
        *m = ds.inner.series_len();
        Ok(())
    })
}

/// Copies the dataset labels into `buf` (`len >= n`). Fails with
/// `INVALID_ARGUMENT` for unlabelled data.
///
/// # Safety
/// `dataset` must be a live handle and `buf` writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn kasba_dataset_labels(
    dataset: *const KasbaDataset,
    buf: *mut usize,
    len: usize,
) -> KasbaStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        let labels = ds
            .inner
            .labels()
            .ok_or((KasbaStatus::InvalidArgument, "dataset has no labels".to_string()))?;
        copy_out(labels, buf, len)
    })
}

/// # Safety
/// `dataset` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kasba_dataset_free(dataset: *mut KasbaDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Distance between two series of length `m`.
///
/// # Safety
/// `a` and `b` must each point to `m` readable doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kasba_distance(
    kind: KasbaDistance,
    msm_c: f64,
    a: *const f64,
    b: *const f64,
    m: usize,
    out: *mut f64,
) -> KasbaStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return Err(null("a/b/out"));
        }
        let kind = distance_kind(kind, msm_c)?;
        let a = std::slice::from_raw_parts(a, m);
        let b = std::slice::from_raw_parts(b, m);
        *out = kind.distance(a, b).map_err(lib_err)?;
        Ok(())
    })
}

/// Default options: MSM with c = 1, 300 iterations, pruning on, seed 0.
#[no_mangle]
pub extern "C" fn kasba_fit_options_default(k: usize) -> KasbaFitOptions {
    let cfg = KasbaConfig::new(k);
    KasbaFitOptions {
        k,
        seed: cfg.seed,
        distance: KasbaDistance::Msm,
        msm_c: 1.0,
        max_its: cfg.max_its,
        use_pruning: cfg.use_triangle_pruning,
    }
}

/// Fits KASBA to `dataset`.
///
/// # Safety
/// `dataset` must be a live handle, `options` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kasba_fit(
    dataset: *const KasbaDataset,
    options: *const KasbaFitOptions,
    out: *mut *mut KasbaModel,
) -> KasbaStatus {
    guard(|| {
        let ds = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        let opts = options.as_ref().ok_or_else(|| null("options"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut cfg = KasbaConfig::new(opts.k)
            .with_seed(opts.seed)
            .with_distance(distance_kind(opts.distance, opts.msm_c)?)
            .with_pruning(opts.use_pruning);
        cfg.max_its = opts.max_its;
        let inner = fit_kasba(ds.inner.series(), &cfg).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(KasbaModel { inner }));
        Ok(())
    })
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, len: usize) -> Result<(), (KasbaStatus, String)> {
    if buf.is_null() {
        return Err(null("buf"));
    }
    if len < src.len() {
        return Err((
            KasbaStatus::BufferTooSmall,
            format!("buffer holds {len} elements, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Number of clusters of a fitted model.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kasba_model_k(model: *const KasbaModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.k())
}

/// Rounds of update and assignment the fit performed.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn kasba_model_iterations(model: *const KasbaModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.iterations_run)
}

/// Copies the per-series cluster labels into `buf` (`len >= n`).
///
/// # Safety
/// `model` must be a live handle and `buf` writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn kasba_model_labels(model: *const KasbaModel, buf: *mut usize, len: usize) -> KasbaStatus {
    guard(|| copy_out(&model.as_ref().ok_or_else(|| null("model"))?.inner.labels, buf, len))
}

/// Copies each series' distance to its centroid into `buf` (`len >= n`).
///
/// # Safety
/// `model` must be a live handle and `buf` writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn kasba_model_distances(model: *const KasbaModel, buf: *mut f64, len: usize) -> KasbaStatus {
    guard(|| copy_out(&model.as_ref().ok_or_else(|| null("model"))?.inner.distances, buf, len))
}

/// Copies the centroids row-major into `buf` (`len >= k * m`).
///
/// # Safety
/// `model` must be a live handle and `buf` writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn kasba_model_centroids(model: *const KasbaModel, buf: *mut f64, len: usize) -> KasbaStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let flat: Vec<f64> = model.inner.centroids.iter().flat_map(|c| c.iter().copied()).collect();
        copy_out(&flat, buf, len)
    })
}

/// Distance calls per stage recorded during the fit.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kasba_model_call_counts(model: *const KasbaModel, out: *mut KasbaCallCounts) -> KasbaStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let c = model.inner.calls;
        *out = KasbaCallCounts {
            init: c.init,
            update: c.update,
            assign: c.assign,
        };
        Ok(())
    })
}

/// Labels every series of `dataset` with its nearest centroid.
///
/// # Safety
/// `model` and `dataset` must be live handles and `buf` writable for `len` elements.
#[no_mangle]
pub unsafe extern "C" fn kasba_model_predict(
    model: *const KasbaModel,
    dataset: *const KasbaDataset,
    buf: *mut usize,
    len: usize,
) -> KasbaStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let ds = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        let (labels, _) = model.inner.predict(ds.inner.series()).map_err(lib_err)?;
        copy_out(&labels, buf, len)
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kasba_model_free(model: *mut KasbaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Clustering accuracy, ARI, NMI and AMI of `y_pred` against `y_true`.
///
/// # Safety
/// `y_true` and `y_pred` must point to `n` readable `size_t`; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kasba_scores(
    y_true: *const usize,
    y_pred: *const usize,
    n: usize,
    out: *mut KasbaScores,
) -> KasbaStatus {
    guard(|| {
        if y_true.is_null() || y_pred.is_null() {
            return Err(null("y_true/y_pred"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = Scores::compute(
            std::slice::from_raw_parts(y_true, n),
            std::slice::from_raw_parts(y_pred, n),
        )
        .map_err(lib_err)?;
        *out = KasbaScores {
            clacc: s.clacc,
            ari: s.ari,
            nmi: s.nmi,
            ami: s.ami,
        };
        Ok(())
    })
}
