#ifndef MCTSURV_H
#define MCTSURV_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MctMethod {
  MCT_METHOD_LOG_RANK = 0,
  MCT_METHOD_MDIR = 1,
  MCT_METHOD_MAX_WEIGHTED_LR = 2,
  MCT_METHOD_CASANOVA_RADEMACHER = 3,
  MCT_METHOD_CASANOVA_POISSON = 4,
} MctMethod;

/**
 * Result code of every fallible call.
 */
typedef enum MctStatus {
  MCT_STATUS_OK = 0,
  MCT_STATUS_NULL_POINTER = 1,
  MCT_STATUS_INVALID_ARGUMENT = 2,
  MCT_STATUS_INVALID_DATA = 3,
  MCT_STATUS_IO = 4,
  MCT_STATUS_OUT_OF_RANGE = 5,
  MCT_STATUS_PANIC = 6,
} MctStatus;

/**
 * Opaque test report.
 */
typedef struct MctReport MctReport;

/**
 * Opaque survival sample.
 */
typedef struct MctSample MctSample;

/**
 * Test settings. Obtain defaults from [`mct_config_default`].
 */
typedef struct MctConfig {
  double alpha;
  size_t iterations;
  size_t mc_samples;
  uint64_t seed;
  /**
   * One-sided maxwlr test.
   */
  bool upper;
} MctConfig;

/**
 * One local test. `first` and `second` are 1-based group numbers.
 */
typedef struct MctContrastResult {
  size_t first;
  size_t second;
  double statistic;
  double p_adjusted;
  bool rejected;
  bool degenerate;
} MctContrastResult;

typedef struct MctGlobalResult {
  double statistic;
  double critical_value;
  double p_value;
  bool rejected;
} MctGlobalResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *mct_last_error_message(void);

struct MctConfig mct_config_default(void);

/**
 * Builds a sample from parallel arrays. `status` is 1 for an event and 0
 * for a censoring. Group codes are arbitrary and numbered by first
 * appearance.
 *
 * # Safety
 * Each array must hold `len` readable elements and `out` must be writable.
 */
enum MctStatus mct_sample_new(const double *times,
                              const int32_t *status,
                              const uint32_t *groups,
                              size_t len,
                              struct MctSample **out);

/**
 * Reads a CSV file. Null column names select `time`, `status` and `group`.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum MctStatus mct_sample_from_csv(const char *path,
                                   const char *time_col,
                                   const char *status_col,
                                   const char *group_col,
                                   struct MctSample **out);

/**
 * Number of groups, 0 for a null handle.
 *
 * # Safety
 * `sample` must be null or a live handle.
 */
size_t mct_sample_num_groups(const struct MctSample *sample);

/**
 * Number of subjects, 0 for a null handle.
 *
 * # Safety
 * `sample` must be null or a live handle.
 */
size_t mct_sample_len(const struct MctSample *sample);

/**
 * # Safety
 * `sample` must be null or a handle not yet freed.
 */
void mct_sample_free(struct MctSample *sample);

/**
 * Runs one procedure. `contrast` is `dunnett`, `tukey` or
 * `pairs:1-2,1-3`; `weights` is a comma-separated list such as
 * `fh:0:0,cross`. Null strings select `dunnett` and `fh:0:0,cross`.
 *
 * # Safety
 * `sample` must be a live handle, strings null or NUL-terminated, `out`
 * writable.
 */
enum MctStatus mct_run_test(const struct MctSample *sample,
                            enum MctMethod method,
                            const char *contrast,
                            const char *weights,
                            struct MctConfig config,
                            struct MctReport **out);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
size_t mct_report_num_contrasts(const struct MctReport *report);

/**
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum MctStatus mct_report_contrast(const struct MctReport *report,
                                   size_t index,
                                   struct MctContrastResult *out);

/**
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum MctStatus mct_report_global(const struct MctReport *report, struct MctGlobalResult *out);

/**
 * Report as a JSON string owned by the caller, or null on failure.
 * Release with [`mct_string_free`].
 *
 * # Safety
 * `report` must be null or a live handle.
 */
char *mct_report_to_json(const struct MctReport *report);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void mct_string_free(char *s);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void mct_report_free(struct MctReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCTSURV_H */
