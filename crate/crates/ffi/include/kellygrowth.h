#ifndef KELLYGROWTH_H
#define KELLYGROWTH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum KgStatus {
  KG_STATUS_OK = 0,
  KG_STATUS_NULL_POINTER = 1,
  KG_STATUS_DIMENSION_MISMATCH = 2,
  KG_STATUS_NOT_POSITIVE_DEFINITE = 3,
  KG_STATUS_ILL_CONDITIONED = 4,
  KG_STATUS_INVALID_ARGUMENT = 5,
  KG_STATUS_NOT_INVERTIBLE = 6,
  KG_STATUS_INSUFFICIENT_DATA = 7,
  KG_STATUS_INTERNAL = 99,
} KgStatus;

typedef enum KgRiskClass {
  KG_RISK_CLASS_FRACTIONAL = 0,
  KG_RISK_CLASS_SUB_OPTIMAL = 1,
  KG_RISK_CLASS_COLLAPSE_BOUND = 2,
} KgRiskClass;

// Opaque parameter set.
typedef struct KgParams KgParams;

typedef struct KgGrowthProfile {
  double expected_log_growth;
  double log_return_variance;
  double sharpe;
  // NaN when the leverage is not a multiple of the full-Kelly vector.
  double kelly_fraction;
  bool over_kelly;
} KgGrowthProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or an empty string.
const char *kg_last_error_message(void);

// Parameters from drift `mu[m]`, volatilities `sigma[m]` and correlation
// `corr[m*m]`.
//
// # Safety
// Pointers must reference arrays of the stated lengths; `out` must be valid.
enum KgStatus kg_params_new(uintptr_t m,
                            const double *mu,
                            const double *sigma,
                            const double *corr,
                            struct KgParams **out_params);

// Parameters from drift `mu[m]` and covariance `cov[m*m]`.
//
// # Safety
// As for [`kg_params_new`].
enum KgStatus kg_params_from_covariance(uintptr_t m,
                                        const double *mu,
                                        const double *cov,
                                        struct KgParams **out_params);

// # Safety
// `p` must come from a constructor above and not be freed twice. Null is
// ignored.
void kg_params_free(struct KgParams *p);

// Number of instruments, or 0 for a null handle.
//
// # Safety
// `p` must be null or a live handle.
uintptr_t kg_params_dim(const struct KgParams *p);

// # Safety
// `p` must be a live handle and `out_sharpe` valid.
enum KgStatus kg_sharpe_ratio(const struct KgParams *p, double risk_free_rate, double *out_sharpe);

// Writes the growth-optimal leverage to `k_out[m]`.
//
// # Safety
// `k_out` must have room for `kg_params_dim(p)` doubles.
enum KgStatus kg_full_kelly(const struct KgParams *p, double risk_free_rate, double *k_out);

// # Safety
// As for [`kg_full_kelly`].
enum KgStatus kg_fractional_kelly(const struct KgParams *p,
                                  double risk_free_rate,
                                  double alpha,
                                  double *k_out);

// Growth-optimal leverage with total leverage fixed at `kappa0`.
//
// # Safety
// As for [`kg_full_kelly`]; `lambda_out` may be null.
enum KgStatus kg_constrained_kelly(const struct KgParams *p,
                                   double risk_free_rate,
                                   double kappa0,
                                   double *k_out,
                                   double *lambda_out);

// # Safety
// `k` must hold `kg_params_dim(p)` doubles; `out_growth` must be valid.
enum KgStatus kg_expected_log_growth(const struct KgParams *p,
                                     double risk_free_rate,
                                     const double *k,
                                     double *out_growth);

// # Safety
// As for [`kg_expected_log_growth`].
enum KgStatus kg_log_return_variance(const struct KgParams *p,
                                     const double *k,
                                     double *out_variance);

// Implied Kelly fraction of `k`; NaN when `k` is not a multiple of the
// full-Kelly vector.
//
// # Safety
// As for [`kg_expected_log_growth`].
enum KgStatus kg_kelly_fraction_estimate(const struct KgParams *p,
                                         double risk_free_rate,
                                         const double *k,
                                         double *out_alpha);

// Growth and variance of a fractional Kelly book from its Sharpe ratio.
//
// # Safety
// `out_profile` must be valid.
enum KgStatus kg_fractional_profile(double sharpe,
                                    double alpha,
                                    double risk_free_rate,
                                    struct KgGrowthProfile *out_profile);

// Implied Kelly fraction and Sharpe ratio from annualized mean log-return
// and log-return variance.
//
// # Safety
// Output pointers must be valid; `out_class` may be null.
enum KgStatus kg_reverse_engineer(double mean_log_return,
                                  double log_return_variance,
                                  double risk_free_rate,
                                  double *out_alpha,
                                  double *out_sharpe,
                                  enum KgRiskClass *out_class);

// Maximum drawdown of `values[n]`: fraction plus peak and trough indices.
//
// # Safety
// `values` must hold `n` doubles; output pointers must be valid.
enum KgStatus kg_max_drawdown(const double *values,
                              uintptr_t n,
                              double *out_fraction,
                              uintptr_t *out_peak,
                              uintptr_t *out_trough);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KELLYGROWTH_H */
