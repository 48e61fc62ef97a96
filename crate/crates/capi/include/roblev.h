#ifndef ROBLEV_H
#define ROBLEV_H

/* Generated by cbindgen from roblev-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum RoblevStatus {
  ROBLEV_STATUS_OK = 0,
  /**
   * Null pointer, invalid UTF-8, or an out-of-range option.
   */
  ROBLEV_STATUS_INVALID_ARGUMENT = 1,
  /**
   * CSV ingestion failed.
   */
  ROBLEV_STATUS_DATA = 3,
  /**
   * Formula parse failed or referenced an unknown column.
   */
  ROBLEV_STATUS_FORMULA = 4,
  /**
   * Design matrix rank deficient or otherwise unusable.
   */
  ROBLEV_STATUS_RANK_DEFICIENT = 5,
  /**
   * MCD exact fit or singularity.
   */
  ROBLEV_STATUS_MCD = 6,
  /**
   * Modified design singular.
   */
  ROBLEV_STATUS_MODIFIED_SINGULAR = 7,
  /**
   * Unexpected internal failure.
   */
  ROBLEV_STATUS_INTERNAL = 8,
} RoblevStatus;

/**
 * Opaque report handle.
 */
typedef struct RoblevReport RoblevReport;

/**
 * Estimator options. Initialize with [`roblev_options_init`] and override
 * fields as needed; integer booleans use 0 = false, nonzero = true.
 */
typedef struct RoblevOptions {
  double alpha;
  uint64_t n_trials;
  double reweight_prob;
  uint64_t seed;
  int32_t small_sample_correction;
  int32_t has_c_override;
  double c_override;
  int32_t has_flag_cutoff;
  double flag_cutoff;
} RoblevOptions;

/**
 * Run-level metadata filled in by [`roblev_report_meta`].
 */
typedef struct RoblevMeta {
  uint64_t n;
  uint64_t p;
  uint64_t p1;
  uint64_t p2;
  uint64_t p3;
  uint64_t h;
  uint64_t sum_w;
  double c;
  double flag_cutoff;
  uint64_t seed;
} RoblevMeta;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *roblev_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *roblev_version(void);

/**
 * Fill `options` with the default estimator settings.
 */
void roblev_options_init(struct RoblevOptions *options);

/**
 * Run the pipeline over CSV text.
 *
 * `categorical` may be null when `n_categorical` is 0; `options` may be
 * null for defaults. On success `*out` owns the report and must be freed
 * with [`roblev_report_free`].
 *
 * # Safety
 * `csv_text` and `formula` must be NUL-terminated strings; `categorical`
 * must point to `n_categorical` NUL-terminated strings; `out` must be a
 * valid, writable pointer.
 */
enum RoblevStatus roblev_run_csv(const char *csv_text,
                                 const char *formula,
                                 const char *const *categorical,
                                 size_t n_categorical,
                                 const struct RoblevOptions *options,
                                 struct RoblevReport **out);

/**
 * Number of observations in the report.
 *
 * # Safety
 * `report` must be a live handle from [`roblev_run_csv`].
 */
size_t roblev_report_len(const struct RoblevReport *report);

/**
 * Fill `meta` with run-level metadata.
 *
 * # Safety
 * `report` must be a live handle; `meta` must be writable.
 */
void roblev_report_meta(const struct RoblevReport *report, struct RoblevMeta *meta);

/**
 * Free a report handle. Null is a no-op.
 *
 * # Safety
 * `report` must be null or a handle from [`roblev_run_csv`] not yet freed.
 */
void roblev_report_free(struct RoblevReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBLEV_H */
