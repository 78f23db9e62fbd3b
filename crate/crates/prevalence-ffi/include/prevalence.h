/* C interface to the prevalence estimators. Generated by cbindgen; do not edit. */

#ifndef PREVALENCE_H
#define PREVALENCE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
enum PrevStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  PREV_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PREV_STATUS_NULL_POINTER = 1,
  /**
   * Input data was rejected (score range, label values, weights, ...).
   */
  PREV_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Estimator configuration was rejected.
   */
  PREV_STATUS_INVALID_CONFIG = 3,
  /**
   * A panic was caught at the boundary; state is unchanged.
   */
  PREV_STATUS_INTERNAL = 4,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum PrevStatus PrevStatus;
#else
typedef int32_t PrevStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Full population of classifier scores (raw or histogram form).
 */
typedef struct PrevPopulation PrevPopulation;

/**
 * Labeled sample with optional inclusion weights.
 */
typedef struct PrevSample PrevSample;

/**
 * Point estimate, 95% interval, and the posterior moments behind them.
 * `rhat` is NaN for non-MCMC methods; `converged` is always true for them.
 */
typedef struct PrevInterval {
  double point;
  double lower;
  double upper;
  double mean;
  double variance;
  double rhat;
  bool converged;
} PrevInterval;

/**
 * Latent-field estimator settings; get defaults from
 * `prev_gp_options_default` and override fields as needed.
 */
typedef struct PrevGpOptions {
  size_t k;
  double rho;
  double alpha;
  double jitter;
  size_t chains;
  size_t warmup;
  size_t kept;
  uint64_t seed;
} PrevGpOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static C string.
 */
const char *prev_version(void);

/**
 * Message for the most recent failure on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *prev_last_error_message(void);

/**
 * Builds a population from `len` raw scores in [0, 1].
 *
 * # Safety
 * `scores` must point to `len` readable doubles; `out` must be writable.
 */
PrevStatus prev_population_from_scores(const double *scores,
                                       size_t len,
                                       struct PrevPopulation **out);

/**
 * Builds a population from `len` per-bucket counts (equal-width buckets
 * over [0, 1], in order).
 *
 * # Safety
 * `counts` must point to `len` readable uint64s; `out` must be writable.
 */
PrevStatus prev_population_from_histogram(const uint64_t *counts,
                                          size_t len,
                                          struct PrevPopulation **out);

/**
 * Frees a population handle; null is a no-op.
 *
 * # Safety
 * `population` must be a pointer returned by a population constructor, not
 * yet freed.
 */
void prev_population_free(struct PrevPopulation *population);

/**
 * Builds a labeled sample from parallel arrays. `labels` entries must be 0
 * or 1. `weights` may be null for unit weights; entries must be positive.
 *
 * # Safety
 * `scores` and `labels` must point to `len` readable elements, `weights` to
 * `len` readable doubles or be null; `out` must be writable.
 */
PrevStatus prev_sample_new(const double *scores,
                           const uint8_t *labels,
                           const double *weights,
                           size_t len,
                           struct PrevSample **out);

/**
 * Frees a sample handle; null is a no-op.
 *
 * # Safety
 * `sample` must be a pointer returned by `prev_sample_new`, not yet freed.
 */
void prev_sample_free(struct PrevSample *sample);

/**
 * Conjugate per-bucket estimator with `k` buckets. Pass `a <= 0` or
 * `b <= 0` to use the pseudo-count-preserving default 1/k.
 *
 * # Safety
 * `population` and `sample` must be live handles; `out` must be writable.
 */
PrevStatus prev_estimate_bbb(const struct PrevPopulation *population,
                             const struct PrevSample *sample,
                             size_t k,
                             double a,
                             double b,
                             struct PrevInterval *out);

/**
 * Defaults for the latent-field estimator (100 buckets, length-scale 0.1,
 * unit amplitude, 4 chains of 1000 warm-up + 1000 kept draws).
 */
struct PrevGpOptions prev_gp_options_default(void);

/**
 * Latent-field estimator. `options` may be null for defaults. A
 * non-converged run still fills `out` (check `out->converged`).
 *
 * # Safety
 * `population` and `sample` must be live handles; `options` must be null or
 * readable; `out` must be writable.
 */
PrevStatus prev_estimate_gp(const struct PrevPopulation *population,
                            const struct PrevSample *sample,
                            const struct PrevGpOptions *options,
                            struct PrevInterval *out);

/**
 * Weighted-resampling baseline. `resamples` must be at least 2.
 *
 * # Safety
 * `sample` must be a live handle; `out` must be writable.
 */
PrevStatus prev_estimate_bootstrap(const struct PrevSample *sample,
                                   size_t resamples,
                                   uint64_t seed,
                                   struct PrevInterval *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PREVALENCE_H */
