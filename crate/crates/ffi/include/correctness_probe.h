/* SPDX-License-Identifier: MIT OR Apache-2.0 */

#ifndef CORRECTNESS_PROBE_H
#define CORRECTNESS_PROBE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CpStatus {
  CP_STATUS_OK = 0,
  CP_STATUS_NULL_POINTER = 1,
  CP_STATUS_INVALID_UTF8 = 2,
  CP_STATUS_IO = 3,
  CP_STATUS_FORMAT = 4,
  CP_STATUS_NON_FINITE = 5,
  CP_STATUS_DIMENSION_MISMATCH = 6,
  CP_STATUS_EMPTY_CLASS = 7,
  CP_STATUS_DEGENERATE_DIRECTION = 8,
  CP_STATUS_SINGLE_CLASS = 9,
  CP_STATUS_INVALID_ARGUMENT = 10,
  CP_STATUS_SCHEMA = 11,
  CP_STATUS_METADATA = 12,
  CP_STATUS_PANIC = 98,
  CP_STATUS_OTHER = 99,
} CpStatus;

/**
 * Opaque activations joined with their metadata.
 */
typedef struct CpDataset CpDataset;

/**
 * Opaque fitted correctness direction.
 */
typedef struct CpDirection CpDirection;

/**
 * Opaque activation matrix.
 */
typedef struct CpMatrix CpMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next `cp_*` call on the same thread.
 */
const char *cp_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cp_version(void);

/**
 * Read and validate an ACTV1 file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CpStatus cp_matrix_read(const char *path, struct CpMatrix **out);

/**
 * Copy `n·d` row-major floats into a new matrix.
 *
 * # Safety
 * `data` must point to `n * d` readable floats; `out` must be writable.
 */
enum CpStatus cp_matrix_from_f32(const float *data,
                                 size_t n,
                                 size_t d,
                                 uint32_t layer,
                                 struct CpMatrix **out);

/**
 * # Safety
 * `matrix` must be a live handle; `path` a NUL-terminated string.
 */
enum CpStatus cp_matrix_write(const struct CpMatrix *matrix, const char *path);

/**
 * Rows in the matrix, 0 for NULL.
 *
 * # Safety
 * `matrix` must be NULL or a live handle.
 */
size_t cp_matrix_n(const struct CpMatrix *matrix);

/**
 * Hidden width, 0 for NULL.
 *
 * # Safety
 * `matrix` must be NULL or a live handle.
 */
size_t cp_matrix_d(const struct CpMatrix *matrix);

/**
 * # Safety
 * `matrix` must be NULL or a live handle.
 */
uint32_t cp_matrix_layer(const struct CpMatrix *matrix);

/**
 * # Safety
 * `matrix` must be NULL or a handle not yet freed.
 */
void cp_matrix_free(struct CpMatrix *matrix);

/**
 * Load an ACTV1 file and its JSONL sidecar.
 *
 * # Safety
 * Paths must be NUL-terminated strings; `out` must be writable.
 */
enum CpStatus cp_dataset_load(const char *activations_path,
                              const char *meta_path,
                              struct CpDataset **out);

/**
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
size_t cp_dataset_n(const struct CpDataset *dataset);

/**
 * Number of correct samples.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
size_t cp_dataset_n_true(const struct CpDataset *dataset);

/**
 * Copy the 0/1 correctness labels into `labels` (length `len` = n).
 *
 * # Safety
 * `labels` must point to `len` writable bytes.
 */
enum CpStatus cp_dataset_labels(const struct CpDataset *dataset, uint8_t *labels, size_t len);

/**
 * # Safety
 * `dataset` must be NULL or a handle not yet freed.
 */
void cp_dataset_free(struct CpDataset *dataset);

/**
 * Fit the centroid-difference direction on every row of `dataset`.
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum CpStatus cp_direction_fit(const struct CpDataset *dataset, struct CpDirection **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum CpStatus cp_direction_load(const char *path, struct CpDirection **out);

/**
 * # Safety
 * `direction` must be a live handle; `path` a NUL-terminated string.
 */
enum CpStatus cp_direction_save(const struct CpDirection *direction, const char *path);

/**
 * # Safety
 * `direction` must be NULL or a live handle.
 */
size_t cp_direction_d(const struct CpDirection *direction);

/**
 * `‖w‖`, or 0 for NULL.
 *
 * # Safety
 * `direction` must be NULL or a live handle.
 */
double cp_direction_w_norm(const struct CpDirection *direction);

/**
 * Copy `w` (if non-NULL) and `mu` (if non-NULL), each of length `len` = d.
 *
 * # Safety
 * Non-NULL outputs must point to `len` writable doubles.
 */
enum CpStatus cp_direction_vectors(const struct CpDirection *direction,
                                   double *w,
                                   double *mu,
                                   size_t len);

/**
 * `(h − μ)·w / ‖w‖` for one activation vector of length `len`.
 *
 * # Safety
 * `h` must point to `len` readable doubles; `out` must be writable.
 */
enum CpStatus cp_direction_score(const struct CpDirection *direction,
                                 const double *h,
                                 size_t len,
                                 double *out);

/**
 * Score every row of `matrix` into `out` (length `len` = n).
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum CpStatus cp_direction_score_batch(const struct CpDirection *direction,
                                       const struct CpMatrix *matrix,
                                       double *out,
                                       size_t len);

/**
 * Score every row of `dataset` into `out` (length `len` = n).
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum CpStatus cp_direction_score_dataset(const struct CpDirection *direction,
                                         const struct CpDataset *dataset,
                                         double *out,
                                         size_t len);

/**
 * # Safety
 * `direction` must be NULL or a handle not yet freed.
 */
void cp_direction_free(struct CpDirection *direction);

/**
 * Rank-based AUROC of `scores` against 0/1 `labels`, both of length `n`.
 *
 * # Safety
 * `scores` and `labels` must point to `n` readable elements; `out` must be
 * writable.
 */
enum CpStatus cp_auroc(const double *scores, const uint8_t *labels, size_t n, double *out);

/**
 * Closed-form AUROC of two Gaussians separated by `delta`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CpStatus cp_analytic_auc(double delta, double sigma_true, double sigma_false, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CORRECTNESS_PROBE_H */
