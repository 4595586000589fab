#ifndef COPYDRAW_H
#define COPYDRAW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  CD_STATUS_OK = 0,
  CD_STATUS_NULL_POINTER = 1,
  CD_STATUS_INVALID_UTF8 = 2,
  /**
   * Bad input: missing file, schema or invariant violation, bad spec.
   */
  CD_STATUS_VALIDATION = 3,
  /**
   * A computation failed on valid input.
   */
  CD_STATUS_RUNTIME = 4,
  CD_STATUS_BUFFER_TOO_SMALL = 5,
  CD_STATUS_PANIC = 6,
} CdStatus;

typedef enum {
  CD_FEATURE_SET_STANDARD = 0,
  CD_FEATURE_SET_EXTENDED = 1,
  CD_FEATURE_SET_ANGULAR = 2,
} CdFeatureSet;

/**
 * Opaque frozen neural marker.
 */
typedef struct CdMarker CdMarker;

/**
 * Opaque loaded session.
 */
typedef struct CdSession CdSession;

typedef struct {
  double fraction_matched;
  double mean_distance;
  /**
   * `+inf` for a perfect copy.
   */
  double value;
  size_t n_matched;
  double total_cost;
} CdTaskPerformance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *cd_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cd_version(void);

/**
 * Loads a session from its manifest file.
 *
 * # Safety
 * `manifest_path` must be a NUL-terminated string; `out` must be writable.
 */
CdStatus cd_session_load(const char *manifest_path, CdSession **out);

/**
 * # Safety
 * `session` must come from [`cd_session_load`] and not be used afterwards.
 */
void cd_session_free(CdSession *session);

/**
 * Number of blocks and of non-excluded trials.
 *
 * # Safety
 * `session` must be a live handle; outputs must be writable.
 */
CdStatus cd_session_counts(const CdSession *session, size_t *n_blocks, size_t *n_trials);

/**
 * CopyDraw score of every non-excluded trial, in session order. With
 * `out` null only `written` is filled, so callers can size the buffer.
 *
 * # Safety
 * `out` must hold `capacity` doubles when not null; `written` must be writable.
 */
CdStatus cd_copydraw_scores(const CdSession *session,
                            CdFeatureSet feature_set,
                            double *out,
                            size_t capacity,
                            size_t *written);

/**
 * Parses a marker exported by `neural-decode`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
CdStatus cd_marker_from_json(const char *json, CdMarker **out);

/**
 * # Safety
 * `marker` must come from [`cd_marker_from_json`] and not be used afterwards.
 */
void cd_marker_free(CdMarker *marker);

/**
 * # Safety
 * `marker` must be a live handle; outputs must be writable.
 */
CdStatus cd_marker_shape(const CdMarker *marker, size_t *n_channels, double *sample_rate);

/**
 * Predicted behavioral score of one epoch (`n_channels × n_samples`,
 * row-major) sampled at the marker's rate.
 *
 * # Safety
 * `data` must hold `n_channels * n_samples` doubles; `out` must be writable.
 */
CdStatus cd_marker_predict(const CdMarker *marker,
                           const double *data,
                           size_t n_channels,
                           size_t n_samples,
                           double *out);

/**
 * Open-ended DTW of a trace against a template, both as `n` interleaved
 * `x, y` pairs, and the resulting task performance.
 *
 * # Safety
 * `trace_xy` and `template_xy` must hold `2 * n` doubles each; `out` must be writable.
 */
CdStatus cd_task_performance(const double *trace_xy,
                             size_t n_trace,
                             const double *template_xy,
                             size_t n_template,
                             CdTaskPerformance *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COPYDRAW_H */
