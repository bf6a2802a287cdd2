/* C interface for the egue-strengths moment/cumulant library. Generated; do not edit. */

#ifndef EGUE_STRENGTHS_H
#define EGUE_STRENGTHS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible entry point.
 */
enum EgueStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  /**
   * Success; out-parameters are filled.
   */
  EGUE_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  EGUE_STATUS_NULL_POINTER = 1,
  /**
   * Parameters outside the model's domain (bad ranks, bad mode flag,
   * missing seed semantics, …).
   */
  EGUE_STATUS_INVALID = 2,
  /**
   * The request is valid but the deliberately bounded exact routines
   * refuse it; see the library's cost-guard limits.
   */
  EGUE_STATUS_COST_GUARD = 3,
  /**
   * Numerical failure or an internal invariant violation.
   */
  EGUE_STATUS_INTERNAL = 4,
};
#ifndef __cplusplus
typedef int32_t EgueStatus;
#endif // __cplusplus

/**
 * Opaque parameter handle: (N, m, k, k0) plus the two coupling variances.
 */
typedef struct EgueParams EgueParams;

/**
 * Bivariate moments at one parameter point. `m22` is the hybrid
 * reconstruction when produced by `egue_exact_moments` and the direct
 * estimate when produced by `egue_mc_moments`.
 */
typedef struct EgueMoments {
  double m00;
  double m20;
  double m02;
  double m11;
  double m40;
  double m04;
  double m31;
  double m13;
  double m22;
} EgueMoments;

/**
 * Scale-free cumulants: correlation coefficient and the four fourth-order
 * excesses plus k22.
 */
typedef struct EgueCumulants {
  double xi;
  double k40;
  double k04;
  double k31;
  double k13;
  double k22;
} EgueCumulants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Allocate a parameter handle. On success writes the new handle to `out`
 * and returns OK; the handle must be released with `egue_params_free`.
 */
EgueStatus egue_params_new(int64_t n,
                           int64_t m,
                           int64_t k,
                           int64_t k0,
                           double vh2,
                           double vo2,
                           struct EgueParams **out);

/**
 * Release a handle from `egue_params_new`. NULL is a no-op. Passing any
 * other pointer, or freeing twice, is undefined behavior.
 */
void egue_params_free(struct EgueParams *params);

/**
 * Exact finite-N moments (closed forms; M22 hybrid). `mode` is 0 for
 * particle removal, 1 for addition.
 */
EgueStatus egue_exact_moments(const struct EgueParams *params,
                              int32_t mode,
                              struct EgueMoments *out);

/**
 * Exact finite-N cumulants derived from the closed-form moments.
 */
EgueStatus egue_exact_cumulants(const struct EgueParams *params,
                                int32_t mode,
                                struct EgueCumulants *out);

/**
 * Large-N asymptotic cumulants; depend on (m, k, k0) only, no handle needed.
 */
EgueStatus egue_asymp_cumulants(int64_t m, int64_t k, int64_t k0, struct EgueCumulants *out);

/**
 * Dilute-limit leading terms: ξ → 1 − k·k0/2m and the common fourth-order
 * value −k²/m.
 */
EgueStatus egue_dilute_expansion(int64_t m, int64_t k, int64_t k0, double *xi_out, double *krs_out);

/**
 * One ensemble-averaged moment M_PQ from the independent Wick-contraction
 * oracle. Strong cost guards apply; P+Q ≤ 4.
 */
EgueStatus egue_wick_moment(const struct EgueParams *params,
                            int32_t mode,
                            uint32_t p_order,
                            uint32_t q_order,
                            double *out);

/**
 * Monte Carlo moment estimates over `n_samples` ensemble realizations with
 * an explicit seed. Writes the even-order means into `mean`; when `se` is
 * non-NULL it receives the matching standard errors.
 */
EgueStatus egue_mc_moments(const struct EgueParams *params,
                           int32_t mode,
                           size_t n_samples,
                           uint64_t seed,
                           struct EgueMoments *mean,
                           struct EgueMoments *se);

/**
 * Static description of a status code; never NULL.
 */
const char *egue_error_message(int32_t status);

/**
 * Library version as a static NUL-terminated string.
 */
const char *egue_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EGUE_STRENGTHS_H */
