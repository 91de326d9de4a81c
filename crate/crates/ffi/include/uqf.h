#ifndef UQF_H
#define UQF_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Census kinds, matching the CLI's `--kind`.
 */
typedef enum UqfCensusKind {
  UQF_CENSUS_KIND_XI = 0,
  UQF_CENSUS_KIND_SQRT_ALL = 1,
  UQF_CENSUS_KIND_HALF_ALL = 2,
} UqfCensusKind;

/**
 * Result codes.
 */
typedef enum UqfStatus {
  UQF_STATUS_OK = 0,
  UQF_STATUS_INVALID_INPUT = 1,
  UQF_STATUS_DOMAIN = 2,
  UQF_STATUS_SEARCH_EXHAUSTED = 3,
  UQF_STATUS_BUDGET_EXCEEDED = 4,
  UQF_STATUS_ASSERTION_FAILED = 5,
  UQF_STATUS_PARSE = 6,
  UQF_STATUS_NULL_POINTER = 7,
  UQF_STATUS_OVERFLOW = 8,
  UQF_STATUS_PANIC = 9,
} UqfStatus;

/**
 * Continued fraction expansion of `xi_D`.
 */
typedef struct UqfCf UqfCf;

/**
 * Positive definite integral Gram matrix.
 */
typedef struct UqfGram UqfGram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *uqf_last_error(void);

/**
 * Expands `xi_D` for squarefree `D > 1`, `D` not divisible by 4.
 */
enum UqfStatus uqf_cf_expand_xi(uint64_t d, struct UqfCf **out_cf);

/**
 * Releases a handle from [`uqf_cf_expand_xi`]. Null is ignored.
 */
void uqf_cf_free(struct UqfCf *cf);

enum UqfStatus uqf_cf_preperiod_len(const struct UqfCf *cf, size_t *out_len);

enum UqfStatus uqf_cf_period_len(const struct UqfCf *cf, size_t *out_len);

/**
 * `u_j`, for any `j >= 0` (the period repeats).
 */
enum UqfStatus uqf_cf_coefficient(const struct UqfCf *cf, size_t j, int64_t *out_value);

/**
 * Renders the expansion as `[u0; ..., (period)]`. Free the string with
 * [`uqf_string_free`].
 */
enum UqfStatus uqf_cf_to_string(const struct UqfCf *cf, char **out_str);

void uqf_string_free(char *s);

/**
 * Largest odd-indexed coefficient of `xi_D` and the first odd index where
 * it occurs.
 */
enum UqfStatus uqf_max_odd_coefficient(uint64_t d, uint64_t *out_u, size_t *out_index);

/**
 * Builds a Gram matrix from `rank * rank` row-major entries. The matrix
 * must be symmetric and positive definite.
 */
enum UqfStatus uqf_gram_new(const int64_t *entries, size_t rank, struct UqfGram **out_gram);

/**
 * Parses the text Gram format (rank line, then rows; `#` comments).
 */
enum UqfStatus uqf_gram_parse(const char *text, struct UqfGram **out_gram);

void uqf_gram_free(struct UqfGram *g);

enum UqfStatus uqf_gram_det(const struct UqfGram *g, int64_t *out_det);

/**
 * `#{v : v^T G v = n}`. A `budget` of 0 selects the default node cap.
 */
enum UqfStatus uqf_gram_count_vectors(const struct UqfGram *g,
                                      uint64_t n,
                                      uint64_t budget,
                                      uint64_t *out_count);

/**
 * Upper bound `C(r, n)` for a lattice of determinant `det`, rounded up to
 * a double.
 */
enum UqfStatus uqf_bound_c(uint64_t r, uint64_t n, int64_t det, double *out_value);

/**
 * Upper bound `B(R, m)`, rounded up to a double.
 */
enum UqfStatus uqf_bound_b(uint64_t r, uint64_t m, double *out_value);

/**
 * Smallest `R` with `B(R, m) > u`.
 */
enum UqfStatus uqf_min_rank_classical(uint64_t u, uint64_t m, uint64_t *out_rank);

/**
 * Number of `D <= x` whose number under `kind` has all odd-indexed
 * coefficients at most `b`.
 */
enum UqfStatus uqf_census(uint64_t x,
                          uint64_t b,
                          enum UqfCensusKind kind,
                          bool squarefree_only,
                          uint64_t *out_count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UQF_H */
