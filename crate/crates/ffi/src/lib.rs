// SPDX-License-Identifier: MIT OR Apache-2.0

//! C ABI over `correctness-probe`.
//!
//! Objects cross the boundary as opaque handles (`CpMatrix`, `CpDataset`,
//! `CpDirection`) created by `cp_*_read` / `cp_*_load` / `cp_*_fit` and
//! released with the matching `cp_*_free`. Every fallible call returns a
//! [`CpStatus`]; on failure `cp_last_error_message` describes the error on
//! the calling thread. Panics never unwind into C: they surface as
//! `CP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use correctness_probe::probe::{load_direction, save_direction};
use correctness_probe::store::{read_meta, ActivationMatrix, LabeledDataset};
use correctness_probe::{
    analytic_auc, auroc, fit_direction, read_matrix, score, score_batch, write_matrix,
};
use correctness_probe::{Direction, ProbeError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Format = 4,
    NonFinite = 5,
    DimensionMismatch = 6,
    EmptyClass = 7,
    DegenerateDirection = 8,
    SingleClass = 9,
    InvalidArgument = 10,
    Schema = 11,
    Metadata = 12,
    Panic = 98,
    Other = 99,
}

impl From<&ProbeError> for CpStatus {
    fn from(e: &ProbeError) -> Self {
        use ProbeError::*;
        match e {
            Io { .. } => CpStatus::Io,
            BadMagic { .. }
            | UnsupportedVersion(_)
            | UnsupportedDtype(_)
            | MalformedHeader(_)
            | Truncated { .. }
            | TrailingBytes { .. }
            | SizeOverflow { .. } => CpStatus::Format,
            NonFinite { .. } | NanScore(_) => CpStatus::NonFinite,
            DimensionMismatch { .. } => CpStatus::DimensionMismatch,
            EmptyClass { .. } => CpStatus::EmptyClass,
            DegenerateDirection { .. } => CpStatus::DegenerateDirection,
            SingleClass { .. } => CpStatus::SingleClass,
            InvalidArgument(_) | InvalidSpec(_) | ClassTooSmall { .. } | Subsample { .. } => {
                CpStatus::InvalidArgument
            }
            Schema(_) | Json(_) => CpStatus::Schema,
            CountMismatch { .. }
            | DuplicateSampleId(_)
            | MalformedRecord { .. }
            | CategoryContradiction { .. }
            | InvalidRecord { .. } => CpStatus::Metadata,
            _ => CpStatus::Other,
        }
    }
}

/// Opaque activation matrix.
pub struct CpMatrix(ActivationMatrix);

/// Opaque activations joined with their metadata.
pub struct CpDataset(LabeledDataset);

/// Opaque fitted correctness direction.
pub struct CpDirection(Direction);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(CpStatus, String);

impl From<ProbeError> for Failure {
    fn from(e: ProbeError) -> Self {
        Failure(CpStatus::from(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CpStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside correctness-probe".into());
            CpStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CpStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| Failure(CpStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next `cp_*` call on the same thread.
#[no_mangle]
pub extern "C" fn cp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Read and validate an ACTV1 file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_matrix_read(path: *const c_char, out: *mut *mut CpMatrix) -> CpStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        emit(out, CpMatrix(read_matrix(path)?))
    })
}

/// Copy `n·d` row-major floats into a new matrix.
///
/// # Safety
/// `data` must point to `n * d` readable floats; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_matrix_from_f32(
    data: *const f32,
    n: usize,
    d: usize,
    layer: u32,
    out: *mut *mut CpMatrix,
) -> CpStatus {
    guard(|| {
        let len = n
            .checked_mul(d)
            .ok_or_else(|| Failure(CpStatus::InvalidArgument, "n * d overflows".into()))?;
        if data.is_null() && len > 0 {
            return Err(null("data"));
        }
        let values = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(data, len).to_vec()
        };
        emit(
            out,
            CpMatrix(ActivationMatrix::from_flat(layer, d, values)?),
        )
    })
}

/// # Safety
/// `matrix` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cp_matrix_write(matrix: *const CpMatrix, path: *const c_char) -> CpStatus {
    guard(|| {
        let m = handle(matrix, "matrix")?;
        let path = path_arg(path, "path")?;
        write_matrix(&m.0, path)?;
        Ok(())
    })
}

/// Rows in the matrix, 0 for NULL.
///
/// # Safety
/// `matrix` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_matrix_n(matrix: *const CpMatrix) -> usize {
    matrix.as_ref().map_or(0, |m| m.0.n())
}

/// Hidden width, 0 for NULL.
///
/// # Safety
/// `matrix` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_matrix_d(matrix: *const CpMatrix) -> usize {
    matrix.as_ref().map_or(0, |m| m.0.d())
}

/// # Safety
/// `matrix` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_matrix_layer(matrix: *const CpMatrix) -> u32 {
    matrix.as_ref().map_or(0, |m| m.0.layer)
}

/// # Safety
/// `matrix` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cp_matrix_free(matrix: *mut CpMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// Load an ACTV1 file and its JSONL sidecar.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_dataset_load(
    activations_path: *const c_char,
    meta_path: *const c_char,
    out: *mut *mut CpDataset,
) -> CpStatus {
    guard(|| {
        let actv = path_arg(activations_path, "activations_path")?;
        let meta = path_arg(meta_path, "meta_path")?;
        let ds = LabeledDataset::new(read_matrix(actv)?, read_meta(meta)?)?;
        emit(out, CpDataset(ds))
    })
}

/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_dataset_n(dataset: *const CpDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.n())
}

/// Number of correct samples.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_dataset_n_true(dataset: *const CpDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.counts().n_true)
}

/// Copy the 0/1 correctness labels into `labels` (length `len` = n).
///
/// # Safety
/// `labels` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cp_dataset_labels(
    dataset: *const CpDataset,
    labels: *mut u8,
    len: usize,
) -> CpStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        if labels.is_null() {
            return Err(null("labels"));
        }
        if len != ds.0.n() {
            return Err(ProbeError::DimensionMismatch {
                expected: ds.0.n(),
                found: len,
            }
            .into());
        }
        let out = std::slice::from_raw_parts_mut(labels, len);
        for (o, m) in out.iter_mut().zip(&ds.0.meta) {
            *o = m.correct;
        }
        Ok(())
    })
}

/// # Safety
/// `dataset` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cp_dataset_free(dataset: *mut CpDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Fit the centroid-difference direction on every row of `dataset`.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_direction_fit(
    dataset: *const CpDataset,
    out: *mut *mut CpDirection,
) -> CpStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        emit(out, CpDirection(fit_direction(&ds.0)?))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_direction_load(
    path: *const c_char,
    out: *mut *mut CpDirection,
) -> CpStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        emit(out, CpDirection(load_direction(path)?))
    })
}

/// # Safety
/// `direction` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cp_direction_save(
    direction: *const CpDirection,
    path: *const c_char,
) -> CpStatus {
    guard(|| {
        let dir = handle(direction, "direction")?;
        let path = path_arg(path, "path")?;
        save_direction(&dir.0, path)?;
        Ok(())
    })
}

/// # Safety
/// `direction` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_direction_d(direction: *const CpDirection) -> usize {
    direction.as_ref().map_or(0, |d| d.0.d())
}

/// `‖w‖`, or 0 for NULL.
///
/// # Safety
/// `direction` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_direction_w_norm(direction: *const CpDirection) -> f64 {
    direction.as_ref().map_or(0.0, |d| d.0.w_norm())
}

/// Copy `w` (if non-NULL) and `mu` (if non-NULL), each of length `len` = d.
///
/// # Safety
/// Non-NULL outputs must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cp_direction_vectors(
    direction: *const CpDirection,
    w: *mut f64,
    mu: *mut f64,
    len: usize,
) -> CpStatus {
    guard(|| {
        let dir = handle(direction, "direction")?;
        if len != dir.0.d() {
            return Err(ProbeError::DimensionMismatch {
                expected: dir.0.d(),
                found: len,
            }
            .into());
        }
        if !w.is_null() {
            std::slice::from_raw_parts_mut(w, len).copy_from_slice(dir.0.w());
        }
        if !mu.is_null() {
            std::slice::from_raw_parts_mut(mu, len).copy_from_slice(dir.0.mu());
        }
        Ok(())
    })
}

/// `(h − μ)·w / ‖w‖` for one activation vector of length `len`.
///
/// # Safety
/// `h` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_direction_score(
    direction: *const CpDirection,
    h: *const f64,
    len: usize,
    out: *mut f64,
) -> CpStatus {
    guard(|| {
        let dir = handle(direction, "direction")?;
        if h.is_null() {
            return Err(null("h"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = score(&dir.0, std::slice::from_raw_parts(h, len))?;
        Ok(())
    })
}

/// Score every row of `matrix` into `out` (length `len` = n).
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cp_direction_score_batch(
    direction: *const CpDirection,
    matrix: *const CpMatrix,
    out: *mut f64,
    len: usize,
) -> CpStatus {
    guard(|| {
        let dir = handle(direction, "direction")?;
        let m = handle(matrix, "matrix")?;
        if len != m.0.n() {
            return Err(ProbeError::DimensionMismatch {
                expected: m.0.n(),
                found: len,
            }
            .into());
        }
        let scores = score_batch(&dir.0, &m.0)?;
        if len > 0 {
            if out.is_null() {
                return Err(null("out"));
            }
            std::slice::from_raw_parts_mut(out, len).copy_from_slice(&scores);
        }
        Ok(())
    })
}

/// Score every row of `dataset` into `out` (length `len` = n).
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cp_direction_score_dataset(
    direction: *const CpDirection,
    dataset: *const CpDataset,
    out: *mut f64,
    len: usize,
) -> CpStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        let dir = handle(direction, "direction")?;
        if len != ds.0.n() {
            return Err(ProbeError::DimensionMismatch {
                expected: ds.0.n(),
                found: len,
            }
            .into());
        }
        let scores = score_batch(&dir.0, &ds.0.matrix)?;
        if len > 0 {
            if out.is_null() {
                return Err(null("out"));
            }
            std::slice::from_raw_parts_mut(out, len).copy_from_slice(&scores);
        }
        Ok(())
    })
}

/// # Safety
/// `direction` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cp_direction_free(direction: *mut CpDirection) {
    if !direction.is_null() {
        drop(Box::from_raw(direction));
    }
}

/// Rank-based AUROC of `scores` against 0/1 `labels`, both of length `n`.
///
/// # Safety
/// `scores` and `labels` must point to `n` readable elements; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cp_auroc(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut f64,
) -> CpStatus {
    guard(|| {
        if scores.is_null() || labels.is_null() {
            return Err(null("scores/labels"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let s = std::slice::from_raw_parts(scores, n);
        let l = std::slice::from_raw_parts(labels, n);
        *out = auroc(s, l)?;
        Ok(())
    })
}

/// Closed-form AUROC of two Gaussians separated by `delta`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_analytic_auc(
    delta: f64,
    sigma_true: f64,
    sigma_false: f64,
    out: *mut f64,
) -> CpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = analytic_auc(delta, sigma_true, sigma_false)?;
        Ok(())
    })
}
