#ifndef PED_FFI_H
#define PED_FFI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PedStatus {
  PED_STATUS_OK = 0,
  PED_STATUS_NULL_POINTER = 1,
  PED_STATUS_INVALID_ARGUMENT = 2,
  PED_STATUS_IO = 3,
  PED_STATUS_NUMERICAL = 4,
  PED_STATUS_NOT_FOUND = 5,
  PED_STATUS_BUFFER_TOO_SMALL = 6,
  PED_STATUS_PANIC = 7,
} PedStatus;

typedef enum PedNormSource {
  PED_NORM_SOURCE_SELF_STATS = 0,
  PED_NORM_SOURCE_NONE = 1,
  PED_NORM_SOURCE_EXTERNAL_STATS = 2,
} PedNormSource;

/**
 * Features and labels of one model on one dataset.
 */
typedef struct PedDataset PedDataset;

/**
 * Outcome of one refinement run.
 */
typedef struct PedRunResult PedRunResult;

/**
 * Refinement settings. Fill with [`ped_config_default`] and adjust.
 */
typedef struct PedConfigC {
  double lambda;
  double k;
  double dt;
  uint32_t max_steps;
  double epsilon;
  enum PedNormSource norm_source;
} PedConfigC;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *ped_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *ped_version(void);

enum PedStatus ped_config_default(struct PedConfigC *out);

/**
 * Copies `n * d` row-major features and `n` labels into a new dataset.
 * Labels may be any `u32` values; they are remapped to `0..C` in sorted
 * order.
 *
 * # Safety
 * `features` must hold `n * d` values and `labels` `n` values.
 */
enum PedStatus ped_dataset_new(const double *features,
                               size_t n,
                               size_t d,
                               const uint32_t *labels,
                               struct PedDataset **out);

/**
 * Loads a feature pack directory.
 *
 * # Safety
 * `path` must be a nul-terminated string.
 */
enum PedStatus ped_dataset_read_pack(const char *path, struct PedDataset **out);

/**
 * # Safety
 * `ds` must be null or a pointer from `ped_dataset_new`/`ped_dataset_read_pack`.
 */
void ped_dataset_free(struct PedDataset *ds);

/**
 * Writes rows, columns and class count of `ds`.
 *
 * # Safety
 * `ds` must be a live dataset; outputs may be null to skip them.
 */
enum PedStatus ped_dataset_shape(const struct PedDataset *ds,
                                 size_t *rows,
                                 size_t *cols,
                                 size_t *classes);

/**
 * Refines the features of `ds`. `stats_mean`/`stats_std` (length `d`)
 * are only read when the config asks for external statistics; pass null
 * otherwise.
 *
 * # Safety
 * Pointers must be valid as described above.
 */
enum PedStatus ped_run(const struct PedDataset *ds,
                       const struct PedConfigC *config,
                       const double *stats_mean,
                       const double *stats_std,
                       struct PedRunResult **out);

/**
 * # Safety
 * `r` must be null or a pointer from `ped_run`.
 */
void ped_result_free(struct PedRunResult *r);

/**
 * # Safety
 * `r` must be a live result.
 */
enum PedStatus ped_result_steps_taken(const struct PedRunResult *r, size_t *out);

/**
 * Copies the energy of every visited state (`steps_taken + 1` values).
 * Passing a null buffer with capacity 0 just reports the length in `len`.
 *
 * # Safety
 * `buf` must hold `capacity` values.
 */
enum PedStatus ped_result_energy_trace(const struct PedRunResult *r,
                                       double *buf,
                                       size_t capacity,
                                       size_t *len);

/**
 * Copies the termination statistic of every executed step.
 *
 * # Safety
 * `buf` must hold `capacity` values.
 */
enum PedStatus ped_result_omega_trace(const struct PedRunResult *r,
                                      double *buf,
                                      size_t capacity,
                                      size_t *len);

/**
 * Copies the refined `n * d` row-major features.
 *
 * # Safety
 * `buf` must hold `capacity` values.
 */
enum PedStatus ped_result_refined(const struct PedRunResult *r,
                                  double *buf,
                                  size_t capacity,
                                  size_t *len);

/**
 * Scores `ds` with `metric` ("logme", "gbc" or "sfda"), refining first
 * when `config` is non-null. Uses the default sfda shrinkage.
 *
 * # Safety
 * `metric` must be nul-terminated; `config` null or valid.
 */
enum PedStatus ped_score(const struct PedDataset *ds,
                         const char *metric,
                         const struct PedConfigC *config,
                         double *out);

/**
 * Rank correlation between ground truth `g` and predictions `p`.
 *
 * # Safety
 * `g` and `p` must hold `n` values.
 */
enum PedStatus ped_kendall_tau(const double *g, const double *p, size_t n, double *out);

/**
 * Fine-tuned accuracy of `model` on `dataset` from the built-in table.
 * Returns `NotFound` when the table has no such cell.
 *
 * # Safety
 * Both strings must be nul-terminated.
 */
enum PedStatus ped_ground_truth(const char *model, const char *dataset, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PED_FFI_H */
