//! C ABI over the `eeg-emotion` library.
//!
//! Every fallible function returns an [`EegStatus`]; on failure a message is
//! available from [`eeg_last_error`] on the same thread. Objects are opaque
//! handles created by `*_new`/`*_load` and released by the matching
//! `*_free`. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use eeg_emotion::classifier::{ModelFile, MulticlassModel};
use eeg_emotion::features::{FeatureConfig, FeatureExtractor};
use eeg_emotion::preprocess::{preprocess_recording, savgol_coefficients, PreprocessConfig, SavGolSpec};
use eeg_emotion::{EmotionLabel, Error, Recording, CHANNEL_COUNT, FEATURE_COUNT};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EegStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    Format = 5,
    Numeric = 6,
    Training = 7,
    BufferTooSmall = 8,
    Panic = 99,
}

impl From<&Error> for EegStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse { .. } => EegStatus::Parse,
            Error::Io { .. } => EegStatus::Io,
            Error::Format(_) | Error::Json(_) => EegStatus::Format,
            Error::Imputation(_) | Error::UndefinedCorrelation(_) | Error::Division(_) => EegStatus::Numeric,
            Error::Training(_) => EegStatus::Training,
            Error::Fold { source, .. } => EegStatus::from(source.as_ref()),
            Error::Range(_) | Error::Config(_) | Error::Length(_) | Error::Dimension { .. } | Error::Dataset(_) => {
                EegStatus::InvalidArgument
            }
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: EegStatus, msg: impl Into<String>) -> EegStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), EegStatus>) -> EegStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EegStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(EegStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> EegStatus {
    fail(EegStatus::from(&e), e.to_string())
}

fn null(what: &str) -> EegStatus {
    fail(EegStatus::NullPointer, format!("{what} is null"))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn eeg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Length of a feature vector (34).
#[no_mangle]
pub extern "C" fn eeg_feature_count() -> usize {
    FEATURE_COUNT
}

/// Static, NUL-terminated label name for quadrant 1..4, or null.
#[no_mangle]
pub extern "C" fn eeg_label_name(quadrant: i32) -> *const c_char {
    let name: &'static CStr = match quadrant {
        1 => c"happy",
        2 => c"angry",
        3 => c"sad",
        4 => c"relaxed",
        _ => return ptr::null(),
    };
    name.as_ptr()
}

/// Writes the `window_len` smoothing weights for the window center into
/// `out`, which must hold at least `window_len` values.
///
/// # Safety
/// `out` must be valid for `out_len` writes.
#[no_mangle]
pub unsafe extern "C" fn eeg_savgol_coefficients(
    window_len: usize,
    poly_order: usize,
    out: *mut f64,
    out_len: usize,
) -> EegStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let w = savgol_coefficients(&SavGolSpec { window_len, poly_order }).map_err(lib_err)?;
        if out_len < w.len() {
            return Err(fail(EegStatus::BufferTooSmall, format!("need {} values, got {out_len}", w.len())));
        }
        // SAFETY: caller guarantees `out` is valid for `out_len >= w.len()` writes.
        unsafe { ptr::copy_nonoverlapping(w.as_ptr(), out, w.len()) };
        Ok(())
    })
}

/// Preprocessing plus feature extraction for one sample rate.
pub struct EegExtractor {
    pre: PreprocessConfig,
    extractor: FeatureExtractor,
}

/// Creates an extractor. `sg_window`/`sg_order` of 0 select the defaults
/// (11 and 3).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn eeg_extractor_new(
    sample_rate_hz: f64,
    sg_window: usize,
    sg_order: usize,
    out: *mut *mut EegExtractor,
) -> EegStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let defaults = SavGolSpec::default();
        let savgol = SavGolSpec {
            window_len: if sg_window == 0 { defaults.window_len } else { sg_window },
            poly_order: if sg_window == 0 && sg_order == 0 { defaults.poly_order } else { sg_order },
        };
        savgol.validate().map_err(lib_err)?;
        let pre = PreprocessConfig { savgol, ..PreprocessConfig::default() };
        let extractor = FeatureExtractor::new(FeatureConfig::default(), sample_rate_hz).map_err(lib_err)?;
        let handle = Box::new(EegExtractor { pre, extractor });
        // SAFETY: checked non-null above; caller guarantees validity.
        unsafe { *out = Box::into_raw(handle) };
        Ok(())
    })
}

/// Imputes, smooths and extracts the 34 features of one trial.
///
/// `samples` is row-major `n_samples x 4` in channel order TP9, AF7, AF8,
/// TP10; NaN marks a missing sample. `out` receives 34 values.
///
/// # Safety
/// `extractor` must come from [`eeg_extractor_new`]; `samples` must be valid
/// for `4 * n_samples` reads and `out` for 34 writes.
#[no_mangle]
pub unsafe extern "C" fn eeg_extractor_run(
    extractor: *const EegExtractor,
    samples: *const f64,
    n_samples: usize,
    out: *mut f64,
) -> EegStatus {
    guard(|| {
        if extractor.is_null() {
            return Err(null("extractor"));
        }
        if samples.is_null() {
            return Err(null("samples"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: non-null, caller guarantees a live handle and buffer sizes.
        let ex = unsafe { &*extractor };
        let data = unsafe { std::slice::from_raw_parts(samples, n_samples * CHANNEL_COUNT) };
        let mut rec = Recording::from_rows(
            "ffi",
            ex.extractor.sample_rate_hz(),
            data.chunks_exact(CHANNEL_COUNT).map(|r| [r[0], r[1], r[2], r[3]]).collect(),
        );
        for (row, mask) in rec.samples.iter_mut().zip(rec.missing.iter_mut()) {
            for (v, m) in row.iter_mut().zip(mask.iter_mut()) {
                if !v.is_finite() {
                    *m = true;
                    *v = 0.0;
                }
            }
        }
        let clean = preprocess_recording(&rec, &ex.pre).map_err(lib_err)?;
        let v = ex.extractor.extract_recording(&clean).map_err(lib_err)?;
        // SAFETY: caller guarantees `out` holds FEATURE_COUNT values.
        unsafe { ptr::copy_nonoverlapping(v.0.as_ptr(), out, FEATURE_COUNT) };
        Ok(())
    })
}

/// Releases an extractor. Null is ignored.
///
/// # Safety
/// `extractor` must come from [`eeg_extractor_new`] and not be used after.
#[no_mangle]
pub unsafe extern "C" fn eeg_extractor_free(extractor: *mut EegExtractor) {
    if !extractor.is_null() {
        // SAFETY: pointer came from Box::into_raw in eeg_extractor_new.
        drop(unsafe { Box::from_raw(extractor) });
    }
}

/// A trained four-class model.
pub struct EegModel {
    model: MulticlassModel,
}

fn store_model(file: ModelFile, out: *mut *mut EegModel) {
    let handle = Box::new(EegModel { model: file.model });
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(handle) };
}

/// Loads a model file written by the `train` command.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn eeg_model_load(path: *const c_char, out: *mut *mut EegModel) -> EegStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: caller guarantees a NUL-terminated string.
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| fail(EegStatus::InvalidArgument, "path is not UTF-8"))?;
        let file = ModelFile::load(Path::new(path)).map_err(lib_err)?;
        store_model(file, out);
        Ok(())
    })
}

/// Parses a model from the JSON text of a model file.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn eeg_model_from_json(json: *const c_char, out: *mut *mut EegModel) -> EegStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: caller guarantees a NUL-terminated string.
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|_| fail(EegStatus::InvalidArgument, "model text is not UTF-8"))?;
        let file = ModelFile::from_json(text).map_err(lib_err)?;
        store_model(file, out);
        Ok(())
    })
}

/// Predicts the quadrant (1..4) of one raw 34-value feature vector.
/// `votes`, if non-null, receives the four per-label vote counts.
///
/// # Safety
/// `model` must come from a model constructor; `features` valid for 34
/// reads; `quadrant` for one write; `votes` null or valid for 4 writes.
#[no_mangle]
pub unsafe extern "C" fn eeg_model_predict(
    model: *const EegModel,
    features: *const f64,
    quadrant: *mut i32,
    votes: *mut u32,
) -> EegStatus {
    guard(|| {
        if model.is_null() {
            return Err(null("model"));
        }
        if features.is_null() {
            return Err(null("features"));
        }
        if quadrant.is_null() {
            return Err(null("quadrant"));
        }
        // SAFETY: non-null, caller guarantees a live handle and sizes.
        let m = unsafe { &*model };
        let x = unsafe { std::slice::from_raw_parts(features, FEATURE_COUNT) };
        let ballot = m.model.ballot(x).map_err(lib_err)?;
        let label: EmotionLabel = m.model.predict(x).map_err(lib_err)?;
        unsafe { *quadrant = label.quadrant() as i32 };
        if !votes.is_null() {
            for (i, &v) in ballot.votes.iter().enumerate() {
                unsafe { *votes.add(i) = v as u32 };
            }
        }
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from a model constructor and not be used after.
#[no_mangle]
pub unsafe extern "C" fn eeg_model_free(model: *mut EegModel) {
    if !model.is_null() {
        // SAFETY: pointer came from Box::into_raw in store_model.
        drop(unsafe { Box::from_raw(model) });
    }
}
