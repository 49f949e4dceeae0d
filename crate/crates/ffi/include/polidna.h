#ifndef POLIDNA_H
#define POLIDNA_H

/* Generated by cbindgen from polidna-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code for every fallible call.
 */
typedef enum PdnaStatus {
  PDNA_STATUS_OK = 0,
  /**
   * Malformed input data or unusable parameters.
   */
  PDNA_STATUS_INPUT_ERROR = 2,
  /**
   * Numerical failure (rank deficiency, singular covariance, ...).
   */
  PDNA_STATUS_NUMERIC_ERROR = 3,
  PDNA_STATUS_NULL_ARGUMENT = 4,
  PDNA_STATUS_INVALID_UTF8 = 5,
  PDNA_STATUS_BUFFER_TOO_SMALL = 6,
  PDNA_STATUS_INDEX_OUT_OF_RANGE = 7,
} PdnaStatus;

/**
 * Dimensionality-reduction choice for `pdna_analyze`.
 */
typedef enum PdnaMethod {
  PDNA_METHOD_PCA = 0,
  PDNA_METHOD_SPCA = 1,
} PdnaMethod;

/**
 * Shrinkage selection for `pdna_analyze`.
 */
typedef enum PdnaLambda {
  PDNA_LAMBDA_AUTO = 0,
  PDNA_LAMBDA_FIXED = 1,
} PdnaLambda;

/**
 * Opaque parsed dataset handle.
 */
typedef struct PdnaDataset PdnaDataset;

/**
 * Opaque analysis result handle.
 */
typedef struct PdnaResult PdnaResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message for this thread into `buf`. Returns the
 * size the message needs, including the NUL terminator; copies only when
 * `len` is large enough.
 *
 * # Safety
 * `buf` must point to at least `len` writable bytes, or be null (the call
 * then only reports the required size).
 */
uintptr_t pdna_last_error(char *buf, uintptr_t len);

/**
 * Library version as a static NUL-terminated string; do not free.
 */
const char *pdna_version(void);

/**
 * Parse the three-file CSV schema into a dataset handle.
 *
 * # Safety
 * All three paths must be NUL-terminated strings; `out` must be a valid
 * pointer to receive the handle.
 */
enum PdnaStatus pdna_dataset_load_csv(const char *votes,
                                      const char *voters,
                                      const char *bills,
                                      struct PdnaDataset **out);

/**
 * Parse the single-document JSON schema into a dataset handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid.
 */
enum PdnaStatus pdna_dataset_load_json(const char *path, struct PdnaDataset **out);

/**
 * Apply the cleaning rules in place (secret ballots, never-voting voters,
 * constant bills, iterated to a fixed point).
 *
 * # Safety
 * `dataset` must be a live handle from a `pdna_dataset_load_*` call.
 */
enum PdnaStatus pdna_dataset_clean(struct PdnaDataset *dataset);

/**
 * # Safety
 * `dataset` must be null or a live handle.
 */
uintptr_t pdna_dataset_n_voters(const struct PdnaDataset *dataset);

/**
 * # Safety
 * `dataset` must be null or a live handle.
 */
uintptr_t pdna_dataset_n_bills(const struct PdnaDataset *dataset);

/**
 * # Safety
 * `dataset` must be null or a live handle.
 */
uintptr_t pdna_dataset_n_groups(const struct PdnaDataset *dataset);

/**
 * Release a dataset handle. Null is a no-op.
 *
 * # Safety
 * `dataset` must be null or a handle not freed before.
 */
void pdna_dataset_free(struct PdnaDataset *dataset);

/**
 * Run the full pipeline on a dataset: clean, encode, standardize, reduce
 * (PCA or sparse PCA with budget `p` and `restarts` extra seeds), fit the
 * per-group Gaussian model (`lambda_mode`/`lambda` control shrinkage),
 * compute every voter's affinity vector and 2-D map position.
 *
 * # Safety
 * `dataset` must be a live handle; `out` must be valid.
 */
enum PdnaStatus pdna_analyze(const struct PdnaDataset *dataset,
                             enum PdnaMethod method,
                             uintptr_t k,
                             uintptr_t p,
                             uintptr_t restarts,
                             enum PdnaLambda lambda_mode,
                             double lambda,
                             bool uniform_priors,
                             struct PdnaResult **out);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
uintptr_t pdna_result_n_voters(const struct PdnaResult *result);

/**
 * # Safety
 * `result` must be null or a live handle.
 */
uintptr_t pdna_result_n_groups(const struct PdnaResult *result);

/**
 * Fraction of total variance captured by the reduction; NaN on null.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
double pdna_result_expressed_variance(const struct PdnaResult *result);

/**
 * Covariance shrinkage actually used by the fit; NaN on null.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
double pdna_result_lambda(const struct PdnaResult *result);

/**
 * Copy one voter's affinity vector (one entry per group, summing to 1)
 * into `buf`.
 *
 * # Safety
 * `result` must be a live handle; `buf` must point to at least `len`
 * writable doubles.
 */
enum PdnaStatus pdna_result_affinity(const struct PdnaResult *result,
                                     uintptr_t voter,
                                     double *buf,
                                     uintptr_t len);

/**
 * Copy one voter's 2-D map position into `xy[0..2]`.
 *
 * # Safety
 * `result` must be a live handle; `xy` must point to two writable doubles.
 */
enum PdnaStatus pdna_result_map_point(const struct PdnaResult *result, uintptr_t voter, double *xy);

/**
 * Copy a voter id. Returns the size needed including the NUL terminator,
 * or 0 when the handle or index is invalid; copies only when `len` is
 * large enough.
 *
 * # Safety
 * `result` must be null or live; `buf` null or `len` writable bytes.
 */
uintptr_t pdna_result_voter_id(const struct PdnaResult *result,
                               uintptr_t voter,
                               char *buf,
                               uintptr_t len);

/**
 * Copy a voter's nominal group id; same contract as
 * `pdna_result_voter_id`.
 *
 * # Safety
 * `result` must be null or live; `buf` null or `len` writable bytes.
 */
uintptr_t pdna_result_nominal_group(const struct PdnaResult *result,
                                    uintptr_t voter,
                                    char *buf,
                                    uintptr_t len);

/**
 * Copy a group id (affinity entries follow this order); same contract as
 * `pdna_result_voter_id`.
 *
 * # Safety
 * `result` must be null or live; `buf` null or `len` writable bytes.
 */
uintptr_t pdna_result_group_id(const struct PdnaResult *result,
                               uintptr_t group,
                               char *buf,
                               uintptr_t len);

/**
 * Release a result handle. Null is a no-op.
 *
 * # Safety
 * `result` must be null or a handle not freed before.
 */
void pdna_result_free(struct PdnaResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLIDNA_H */
