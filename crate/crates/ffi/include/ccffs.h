#ifndef CCFFS_H
#define CCFFS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum CcffsStatus {
  CCFFS_STATUS_OK = 0,
  CCFFS_STATUS_NULL_POINTER = 1,
  CCFFS_STATUS_INVALID_ARGUMENT = 2,
  // Malformed, missing or non-numeric input data.
  CCFFS_STATUS_DATA = 3,
  // A block that must have full column rank does not.
  CCFFS_STATUS_DEGENERATE = 4,
  CCFFS_STATUS_NO_INFORMATIVE_CANDIDATE = 5,
  CCFFS_STATUS_ENGINE_DISAGREEMENT = 6,
  CCFFS_STATUS_IO = 7,
  // A verification ran but at least one check failed.
  CCFFS_STATUS_VERIFY_FAILED = 8,
  // Internal error; the library caught a panic.
  CCFFS_STATUS_INTERNAL = 9,
} CcffsStatus;

typedef enum CcffsMode {
  // Coordinate engine when N > n + m, otherwise the data-space engine.
  CCFFS_MODE_AUTO = 0,
  CCFFS_MODE_DEFINITION = 1,
  CCFFS_MODE_H = 2,
  CCFFS_MODE_THETA = 3,
} CcffsMode;

// Encoded dataset: numeric features and responses.
typedef struct CcffsDataset CcffsDataset;

// Outcome of a selection run.
typedef struct CcffsReport CcffsReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null if the last
// call succeeded. Valid until the next call into the library on the same
// thread.
const char *ccffs_last_error(void);

// Library version as a static NUL-terminated string.
const char *ccffs_version(void);

// Loads a CSV file. `targets` is a comma-separated list of response
// column names; every other column is a feature.
//
// # Safety
// `path` and `targets` must be NUL-terminated strings and `out` a valid
// pointer.
enum CcffsStatus ccffs_dataset_from_csv(const char *path,
                                        const char *targets,
                                        bool zscore,
                                        struct CcffsDataset **out);

// Builds a dataset from row-major `x` (`n_instances x n_features`) and
// `y` (`n_instances x n_responses`). The arrays are copied.
//
// # Safety
// `x` and `y` must point to at least the stated number of values and
// `out` must be a valid pointer.
enum CcffsStatus ccffs_dataset_from_arrays(const double *x,
                                           size_t n_instances,
                                           size_t n_features,
                                           const double *y,
                                           size_t n_responses,
                                           struct CcffsDataset **out);

// Writes the dataset shape. Any output pointer may be null.
//
// # Safety
// `dataset` must be a live handle.
enum CcffsStatus ccffs_dataset_shape(const struct CcffsDataset *dataset,
                                     size_t *n_instances,
                                     size_t *n_features,
                                     size_t *n_responses);

// # Safety
// `dataset` must be null or a handle not yet freed.
void ccffs_dataset_free(struct CcffsDataset *dataset);

// Greedily selects `t` features.
//
// # Safety
// `dataset` must be a live handle and `out` a valid pointer.
enum CcffsStatus ccffs_select(const struct CcffsDataset *dataset,
                              size_t t,
                              enum CcffsMode mode,
                              struct CcffsReport **out);

// Number of selected features, or 0 for a null handle.
//
// # Safety
// `report` must be null or a live handle.
size_t ccffs_report_len(const struct CcffsReport *report);

// Engine that produced the report; `Auto` for a null handle.
//
// # Safety
// `report` must be null or a live handle.
enum CcffsMode ccffs_report_mode(const struct CcffsReport *report);

// Copies the selected 0-based feature indices in selection order.
//
// # Safety
// `buf` must have room for `len` values and `len >= ccffs_report_len`.
enum CcffsStatus ccffs_report_indices(const struct CcffsReport *report, size_t *buf, size_t len);

// Copies the per-iteration criterion gains.
//
// # Safety
// As for [`ccffs_report_indices`].
enum CcffsStatus ccffs_report_increments(const struct CcffsReport *report, double *buf, size_t len);

// Copies the running criterion value after each iteration.
//
// # Safety
// As for [`ccffs_report_indices`].
enum CcffsStatus ccffs_report_cumulative(const struct CcffsReport *report, double *buf, size_t len);

// Copies cumulative wall-clock seconds after each iteration.
//
// # Safety
// As for [`ccffs_report_indices`].
enum CcffsStatus ccffs_report_seconds(const struct CcffsReport *report, double *buf, size_t len);

// # Safety
// `report` must be null or a handle not yet freed.
void ccffs_report_free(struct CcffsReport *report);

// Sum of squared canonical correlations between row-major `x`
// (`n_instances x n_x`) and `y` (`n_instances x n_y`).
//
// # Safety
// `x` and `y` must point to at least the stated number of values and
// `out` must be a valid pointer.
enum CcffsStatus ccffs_ssc(const double *x,
                           size_t n_instances,
                           size_t n_x,
                           const double *y,
                           size_t n_y,
                           double *out);

// Replays the bundled seven-instance iris walkthrough. Returns
// `VerifyFailed` if any value is off by more than `tolerance`.
enum CcffsStatus ccffs_verify_iris(enum CcffsMode mode, double tolerance);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CCFFS_H */
