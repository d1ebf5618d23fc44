#ifndef VARADE_H
#define VARADE_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Call succeeded and produced a score.
 */
#define VARADE_OK 0

/**
 * Call succeeded but the detector is still warming up; no score yet.
 */
#define VARADE_WARMUP 1

/**
 * A required pointer argument was null.
 */
#define VARADE_ERR_NULL -1

/**
 * The checkpoint could not be read or is not a valid checkpoint.
 */
#define VARADE_ERR_CHECKPOINT -2

/**
 * The sample length does not match the model's channel count.
 */
#define VARADE_ERR_SHAPE -3

/**
 * Scoring hit a numeric failure (non-finite values).
 */
#define VARADE_ERR_NUMERIC -4

/**
 * A string argument was not valid UTF-8.
 */
#define VARADE_ERR_ENCODING -5

/**
 * Internal failure (a bug; the call panicked).
 */
#define VARADE_ERR_INTERNAL -6

/**
 * Opaque streaming detector over one loaded checkpoint.
 */
typedef struct VaradeDetector VaradeDetector;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a checkpoint from `path` and writes a fresh detector handle to
 * `out`. On any failure `*out` is left untouched. Free the handle with
 * `varade_detector_free`.
 */
int varade_detector_open(const char *path, struct VaradeDetector **out);

/**
 * Number of input channels the detector expects per sample, or a negative
 * error code.
 */
int varade_detector_channels(const struct VaradeDetector *detector);

/**
 * Feeds one raw (unnormalized) sample of `len` values. Returns `VARADE_OK`
 * with the anomaly score in `*out_score`, `VARADE_WARMUP` while the
 * forecaster's window is still filling (baselines never warm up), or a
 * negative error code. `*out_score` is only written on `VARADE_OK`.
 */
int varade_detector_push(struct VaradeDetector *detector,
                         const float *values,
                         uintptr_t len,
                         double *out_score);

/**
 * Releases a handle returned by `varade_detector_open`. Null is a no-op.
 */
void varade_detector_free(struct VaradeDetector *detector);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* VARADE_H */
