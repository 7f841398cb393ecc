#ifndef SIMPSON_H
#define SIMPSON_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SimpsonStatus {
  SIMPSON_STATUS_OK = 0,
  SIMPSON_STATUS_NULL_POINTER = 1,
  SIMPSON_STATUS_INVALID_ARGUMENT = 2,
  SIMPSON_STATUS_INVALID_TABLE = 3,
  SIMPSON_STATUS_ZERO_MARGIN = 4,
  SIMPSON_STATUS_NOT_A_PARADOX = 5,
  SIMPSON_STATUS_SINGULAR_KERNEL = 6,
  SIMPSON_STATUS_INVALID_CAUSE = 7,
  SIMPSON_STATUS_NOT_POSITIVE_DEFINITE = 8,
  SIMPSON_STATUS_DIMENSION_MISMATCH = 9,
  SIMPSON_STATUS_PARSE = 10,
  SIMPSON_STATUS_PANIC = 99,
} SimpsonStatus;

/**
 * Opaque binary joint table.
 */
typedef struct SimpsonTable SimpsonTable;

typedef struct SimpsonParadoxReport {
  /**
   * 0 no paradox, 1 aggregate less, 2 aggregate greater.
   */
  int32_t status;
  double aggregate_gap;
  double fine_gaps[2];
  /**
   * 0 none, 1 SD1, 2 SD2.
   */
  int32_t ordering;
  double b_dependence_sign;
  double aggregate[2];
  double fine_b[2];
  double fine_not_b[2];
  double b_given_a2[2];
} SimpsonParadoxReport;

typedef struct SimpsonCauseView {
  /**
   * `p(a1 | A2 = k, C = c)` at `[k * 2 + c]`.
   */
  double a1_given[4];
  /**
   * `[p(c|a2), p(c|ā2)]`.
   */
  double c_given[2];
  double min_joint_entry;
  bool on_boundary;
  /**
   * Association signs within `c` and `c̄`.
   */
  int8_t signs[2];
} SimpsonCauseView;

typedef struct SimpsonScanSummary {
  uint64_t n_kernels;
  uint64_t n_singular;
  uint64_t n_valid;
  uint64_t n_sign_agree;
  uint64_t n_boundary;
  uint64_t n_boundary_agree;
  uint64_t n_counterexamples;
  int8_t fine_sign;
  bool holds;
} SimpsonScanSummary;

typedef struct SimpsonFrequency {
  double alpha;
  double fraction;
  double stderr_;
  uint64_t n_samples;
  uint64_t n_paradox;
  uint64_t n_zero_margin;
  uint64_t seed;
} SimpsonFrequency;

typedef struct SimpsonContinuousReport {
  double marginal;
  double conditional;
  bool paradox;
} SimpsonContinuousReport;

typedef struct SimpsonMinimalCase {
  double marginal_a1a2;
  double b_conditional_a1a2;
  double x_conditional_a1a2;
  double epsilon;
  bool paradox;
  /**
   * -1 without a paradox, else 1 when `sign(A12)` matches the conditional sign.
   */
  int8_t fine_sign_matches_cause;
} SimpsonMinimalCase;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *simpson_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *simpson_version(void);

/**
 * Table from eight probabilities in `(a1, a2, b)` order, index `i*4 + k*2 + m`
 * with 0 for the event and 1 for its complement.
 *
 * # Safety
 * `cells` must point to 8 readable doubles and `out` to a writable handle slot.
 */
enum SimpsonStatus simpson_table_from_probabilities(const double *cells, struct SimpsonTable **out);

/**
 * Table from eight counts, same order as the probabilities.
 *
 * # Safety
 * `counts` must point to 8 readable values and `out` to a writable handle slot.
 */
enum SimpsonStatus simpson_table_from_counts(const uint64_t *counts, struct SimpsonTable **out);

/**
 * Table from the JSON dataset format. For a `B` with more than two levels
 * pass the indices merged into `b` in `b_levels`; otherwise pass null and 0.
 *
 * # Safety
 * `json` must be a NUL-terminated string, `b_levels` null or readable for
 * `n_b_levels` entries, and `out` a writable handle slot.
 */
enum SimpsonStatus simpson_table_from_json(const char *json,
                                           const size_t *b_levels,
                                           size_t n_b_levels,
                                           struct SimpsonTable **out);

/**
 * Releases a table. Null is ignored.
 *
 * # Safety
 * `table` must be null or a handle from `simpson_table_*` not yet freed.
 */
void simpson_table_free(struct SimpsonTable *table);

/**
 * Copies the eight normalised cells into `out`.
 *
 * # Safety
 * `table` must be a live handle and `out` writable for 8 doubles.
 */
enum SimpsonStatus simpson_table_cells(const struct SimpsonTable *table, double *out);

/**
 * # Safety
 * `table` must be a live handle and `out` writable.
 */
enum SimpsonStatus simpson_detect(const struct SimpsonTable *table,
                                  struct SimpsonParadoxReport *out);

/**
 * Inverts the table through the binary kernel `p(b|c) = beta`,
 * `p(b̄|c̄) = gamma`.
 *
 * # Safety
 * `table` must be a live handle and `out` writable.
 */
enum SimpsonStatus simpson_invert(const struct SimpsonTable *table,
                                  double beta,
                                  double gamma,
                                  struct SimpsonCauseView *out);

/**
 * Samples `n_kernels` binary kernels and checks the sign of every valid
 * inversion against the fine-grained option. `threads = 0` uses the default
 * pool; the result does not depend on it.
 *
 * # Safety
 * `table` must be a live handle and `out` writable.
 */
enum SimpsonStatus simpson_theorem1_scan(const struct SimpsonTable *table,
                                         uint64_t n_kernels,
                                         uint64_t seed,
                                         size_t n_threads,
                                         struct SimpsonScanSummary *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum SimpsonStatus simpson_estimate_frequency(double alpha,
                                              uint64_t n_samples,
                                              uint64_t seed,
                                              size_t n_threads,
                                              struct SimpsonFrequency *out);

/**
 * Continuous test on a row-major 3×3 covariance of `(a1, a2, b)`.
 *
 * # Safety
 * `cov` must be readable for 9 doubles and `out` writable.
 */
enum SimpsonStatus simpson_gauss_detect(const double *cov, struct SimpsonContinuousReport *out);

/**
 * Closed forms for the minimal model with row-major 2×2 `cov_a`, scalar
 * `cov_b` and `cov_x`, and coupling `(c11, c21, c31)`.
 *
 * # Safety
 * `cov_a` must be readable for 4 doubles, `coupling` for 3, `out` writable.
 */
enum SimpsonStatus simpson_gauss_minimal(const double *cov_a,
                                         double cov_b,
                                         double cov_x,
                                         const double *coupling,
                                         struct SimpsonMinimalCase *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIMPSON_H */
