#ifndef OPINF_H
#define OPINF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum OpinfStatus {
  OPINF_STATUS_OK = 0,
  OPINF_STATUS_NULL_POINTER = 1,
  OPINF_STATUS_INVALID_ARGUMENT = 2,
  OPINF_STATUS_NUMERICAL = 3,
  OPINF_STATUS_IO = 4,
  OPINF_STATUS_OUTSIDE_HULL = 5,
  OPINF_STATUS_BUFFER_TOO_SMALL = 6,
  OPINF_STATUS_PANIC = 7,
} OpinfStatus;

/**
 * Opaque handle to a loaded model.
 */
typedef struct OpinfModel OpinfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a model archive. On success `*out` owns a handle that must be
 * released with [`opinf_model_free`].
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum OpinfStatus opinf_model_load(const char *path, struct OpinfModel **out);

/**
 * Releases a handle from [`opinf_model_load`]. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void opinf_model_free(struct OpinfModel *model);

/**
 * Reduced dimension r, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t opinf_model_rank(const struct OpinfModel *model);

/**
 * Number of inputs m, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t opinf_model_num_inputs(const struct OpinfModel *model);

/**
 * Full state dimension N, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t opinf_model_state_dim(const struct OpinfModel *model);

/**
 * Number of output times K, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t opinf_model_num_times(const struct OpinfModel *model);

/**
 * Parameter dimension d_p, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t opinf_model_parameter_dim(const struct OpinfModel *model);

/**
 * Column count d(r, m) of the stacked operator, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t opinf_model_operator_cols(const struct OpinfModel *model);

/**
 * Writes the interpolated stacked operator at `mu` (r × d(r, m),
 * column-major) into `out`.
 *
 * # Safety
 * `mu` must point to `mu_len` values and `out` to `out_len` writable values.
 */
enum OpinfStatus opinf_model_interpolate(const struct OpinfModel *model,
                                         const double *mu,
                                         size_t mu_len,
                                         double *out,
                                         size_t out_len);

/**
 * Predicts the reduced trajectory at `mu` (r × K, column-major) with the
 * stored input ramp and reference initial state. The online wall time in
 * seconds goes to `online_seconds` when it is non-null.
 *
 * # Safety
 * `mu` must point to `mu_len` values, `out` to `out_len` writable values,
 * and `online_seconds` must be null or writable.
 */
enum OpinfStatus opinf_model_predict(const struct OpinfModel *model,
                                     const double *mu,
                                     size_t mu_len,
                                     double *out,
                                     size_t out_len,
                                     double *online_seconds);

/**
 * Predicts at `mu` and writes the reconstructed physical trajectory
 * (N × K, column-major).
 *
 * # Safety
 * `mu` must point to `mu_len` values and `out` to `out_len` writable values.
 */
enum OpinfStatus opinf_model_predict_full(const struct OpinfModel *model,
                                          const double *mu,
                                          size_t mu_len,
                                          double *out,
                                          size_t out_len);

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to `len` bytes. Returns the buffer
 * size needed for the full message, including the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t opinf_last_error_message(char *buf, size_t len);

/**
 * Version string of this library, NUL-terminated and statically owned.
 */
const char *opinf_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPINF_H */
