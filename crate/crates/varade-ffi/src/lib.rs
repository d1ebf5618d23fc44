//! C ABI over the detection engine: open a checkpoint, push raw samples one
//! at a time, read back anomaly scores. Handles are opaque; every call
//! returns a status code from the `VARADE_*` set.

use std::ffi::CStr;
use std::os::raw::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use varade::checkpoint::{self, Checkpoint, ModelKind};
use varade::detector::{score, WindowBuffer};
use varade::VaradeError;

/// Call succeeded and produced a score.
pub const VARADE_OK: c_int = 0;
/// Call succeeded but the detector is still warming up; no score yet.
pub const VARADE_WARMUP: c_int = 1;
/// A required pointer argument was null.
pub const VARADE_ERR_NULL: c_int = -1;
/// The checkpoint could not be read or is not a valid checkpoint.
pub const VARADE_ERR_CHECKPOINT: c_int = -2;
/// The sample length does not match the model's channel count.
pub const VARADE_ERR_SHAPE: c_int = -3;
/// Scoring hit a numeric failure (non-finite values).
pub const VARADE_ERR_NUMERIC: c_int = -4;
/// A string argument was not valid UTF-8.
pub const VARADE_ERR_ENCODING: c_int = -5;
/// Internal failure (a bug; the call panicked).
pub const VARADE_ERR_INTERNAL: c_int = -6;

/// Opaque streaming detector over one loaded checkpoint.
pub struct VaradeDetector {
    checkpoint: Checkpoint,
    // only used by the forecaster; baselines score point-wise
    buffer: Option<WindowBuffer>,
}

fn code_for(err: &VaradeError) -> c_int {
    match err {
        VaradeError::Shape { .. } => VARADE_ERR_SHAPE,
        VaradeError::Numeric(_) => VARADE_ERR_NUMERIC,
        _ => VARADE_ERR_CHECKPOINT,
    }
}

/// Loads a checkpoint from `path` and writes a fresh detector handle to
/// `out`. On any failure `*out` is left untouched. Free the handle with
/// `varade_detector_free`.
#[no_mangle]
pub unsafe extern "C" fn varade_detector_open(
    path: *const c_char,
    out: *mut *mut VaradeDetector,
) -> c_int {
    if path.is_null() || out.is_null() {
        return VARADE_ERR_NULL;
    }
    let result = catch_unwind(AssertUnwindSafe(|| {
        let path = match CStr::from_ptr(path).to_str() {
            Ok(s) => s,
            Err(_) => return VARADE_ERR_ENCODING,
        };
        let ckpt = match checkpoint::load(path.as_ref()) {
            Ok(c) => c,
            Err(e) => return code_for(&e),
        };
        let buffer = match &ckpt.model {
            ModelKind::Varade(m) => Some(WindowBuffer::new(m.config.window, m.config.channels)),
            _ => None,
        };
        let handle = Box::new(VaradeDetector {
            checkpoint: ckpt,
            buffer,
        });
        *out = Box::into_raw(handle);
        VARADE_OK
    }));
    result.unwrap_or(VARADE_ERR_INTERNAL)
}

/// Number of input channels the detector expects per sample, or a negative
/// error code.
#[no_mangle]
pub unsafe extern "C" fn varade_detector_channels(detector: *const VaradeDetector) -> c_int {
    if detector.is_null() {
        return VARADE_ERR_NULL;
    }
    (*detector).checkpoint.model.channels() as c_int
}

/// Feeds one raw (unnormalized) sample of `len` values. Returns `VARADE_OK`
/// with the anomaly score in `*out_score`, `VARADE_WARMUP` while the
/// forecaster's window is still filling (baselines never warm up), or a
/// negative error code. `*out_score` is only written on `VARADE_OK`.
#[no_mangle]
pub unsafe extern "C" fn varade_detector_push(
    detector: *mut VaradeDetector,
    values: *const f32,
    len: usize,
    out_score: *mut f64,
) -> c_int {
    if detector.is_null() || values.is_null() || out_score.is_null() {
        return VARADE_ERR_NULL;
    }
    let result = catch_unwind(AssertUnwindSafe(|| {
        let d = &mut *detector;
        if len != d.checkpoint.model.channels() {
            return VARADE_ERR_SHAPE;
        }
        let raw = std::slice::from_raw_parts(values, len);
        let normalized = match d.checkpoint.normalizer.apply(raw) {
            Ok(v) => v,
            Err(e) => return code_for(&e),
        };
        let scored = match &d.checkpoint.model {
            ModelKind::Varade(model) => {
                let buffer = d.buffer.as_mut().expect("forecaster handle has a buffer");
                if let Err(e) = buffer.push(&normalized) {
                    return code_for(&e);
                }
                if !buffer.is_full() {
                    return VARADE_WARMUP;
                }
                score(model, buffer)
            }
            ModelKind::Knn(index) => index.score(&normalized),
            ModelKind::IsoForest(forest) => forest.score(&normalized),
        };
        match scored {
            Ok(s) => {
                *out_score = s;
                VARADE_OK
            }
            Err(e) => code_for(&e),
        }
    }));
    result.unwrap_or(VARADE_ERR_INTERNAL)
}

/// Releases a handle returned by `varade_detector_open`. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn varade_detector_free(detector: *mut VaradeDetector) {
    if !detector.is_null() {
        drop(Box::from_raw(detector));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;
    use varade::baselines::knn_fit;
    use varade::data::Normalizer;
    use varade::model::{VaradeConfig, VaradeModel};

    fn write_varade_checkpoint(dir: &std::path::Path) -> std::path::PathBuf {
        let model = VaradeModel::build(
            VaradeConfig {
                window: 8,
                channels: 3,
                base_maps: 2,
                ..VaradeConfig::default()
            },
            11,
        )
        .unwrap();
        let ckpt = Checkpoint {
            normalizer: Normalizer::from_bounds(vec![-1.0; 3], vec![1.0; 3]).unwrap(),
            model: ModelKind::Varade(model),
        };
        let path = dir.join("v.ckpt");
        checkpoint::save(&path, &ckpt).unwrap();
        path
    }

    fn open(path: &std::path::Path) -> *mut VaradeDetector {
        let c_path = CString::new(path.to_str().unwrap()).unwrap();
        let mut handle: *mut VaradeDetector = ptr::null_mut();
        let code = unsafe { varade_detector_open(c_path.as_ptr(), &mut handle) };
        assert_eq!(code, VARADE_OK);
        assert!(!handle.is_null());
        handle
    }

    #[test]
    fn warmup_then_scores() {
        let dir = std::env::temp_dir().join(format!("varade-ffi-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = write_varade_checkpoint(&dir);
        let handle = open(&path);
        assert_eq!(unsafe { varade_detector_channels(handle) }, 3);
        let sample = [0.1f32, -0.2, 0.3];
        let mut s = f64::NAN;
        for _ in 0..7 {
            let code =
                unsafe { varade_detector_push(handle, sample.as_ptr(), sample.len(), &mut s) };
            assert_eq!(code, VARADE_WARMUP);
            assert!(s.is_nan(), "score must stay unwritten during warm-up");
        }
        let code = unsafe { varade_detector_push(handle, sample.as_ptr(), sample.len(), &mut s) };
        assert_eq!(code, VARADE_OK);
        assert!(s.is_finite() && s > 0.0);
        unsafe { varade_detector_free(handle) };
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn wrong_length_is_shape_error() {
        let dir = std::env::temp_dir().join(format!("varade-ffi-shape-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = write_varade_checkpoint(&dir);
        let handle = open(&path);
        let sample = [0.0f32; 5];
        let mut s = 0.0;
        let code = unsafe { varade_detector_push(handle, sample.as_ptr(), 5, &mut s) };
        assert_eq!(code, VARADE_ERR_SHAPE);
        unsafe { varade_detector_free(handle) };
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn knn_checkpoint_scores_immediately() {
        let dir = std::env::temp_dir().join(format!("varade-ffi-knn-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let points: Vec<Vec<f32>> = (0..10).map(|i| vec![i as f32 / 10.0, 0.0]).collect();
        let ckpt = Checkpoint {
            normalizer: Normalizer::from_bounds(vec![-1.0; 2], vec![1.0; 2]).unwrap(),
            model: ModelKind::Knn(knn_fit(points, 3).unwrap()),
        };
        let path = dir.join("k.ckpt");
        checkpoint::save(&path, &ckpt).unwrap();
        let handle = open(&path);
        let sample = [0.5f32, 0.0];
        let mut s = f64::NAN;
        let code = unsafe { varade_detector_push(handle, sample.as_ptr(), 2, &mut s) };
        assert_eq!(code, VARADE_OK);
        assert!(s.is_finite());
        unsafe { varade_detector_free(handle) };
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn null_and_missing_paths() {
        let mut handle: *mut VaradeDetector = ptr::null_mut();
        assert_eq!(
            unsafe { varade_detector_open(ptr::null(), &mut handle) },
            VARADE_ERR_NULL
        );
        let c_path = CString::new("/nonexistent/x.ckpt").unwrap();
        assert_eq!(
            unsafe { varade_detector_open(c_path.as_ptr(), &mut handle) },
            VARADE_ERR_CHECKPOINT
        );
        assert!(handle.is_null());
        unsafe { varade_detector_free(ptr::null_mut()) };
    }
}
