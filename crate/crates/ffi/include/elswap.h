#ifndef ELSWAP_H
#define ELSWAP_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call.
typedef enum ElswapStatus {
  ELSWAP_STATUS_OK = 0,
  // A required pointer argument was null.
  ELSWAP_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  ELSWAP_STATUS_INVALID_UTF8 = 2,
  // An argument or the model configuration is out of range.
  ELSWAP_STATUS_INVALID_ARGUMENT = 3,
  // A numerical method failed (quadrature, Riccati solver, simulation).
  ELSWAP_STATUS_NUMERICAL = 4,
  // An internal panic was caught.
  ELSWAP_STATUS_PANIC = 5,
} ElswapStatus;

// Opaque model handle.
typedef struct ElswapModel ElswapModel;

// Feller and Novikov diagnostics; an unbounded `novikov_lhs` is reported as infinity.
typedef struct ElswapConditions {
  bool feller_ok;
  double feller_lhs;
  double feller_rhs;
  bool novikov_ok;
  double novikov_lhs;
  double novikov_rhs;
} ElswapConditions;

// Option price and exercise probabilities.
typedef struct ElswapPrice {
  double call;
  double put;
  double q1;
  double q2;
  // Monte-Carlo standard error of the call; zero for the Fourier method.
  double std_error;
} ElswapPrice;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds a model from a JSON run configuration; `"{}"` gives the reference model.
//
// # Safety
// `json` must be a NUL-terminated string and `out` valid for one pointer write.
// The handle written to `out` must be released with [`elswap_model_free`].
enum ElswapStatus elswap_model_from_json(const char *json, struct ElswapModel **out);

// Releases a model handle; null is ignored.
//
// # Safety
// `model` must be null or a handle from [`elswap_model_from_json`] not yet freed.
void elswap_model_free(struct ElswapModel *model);

// Last error message of the calling thread, or null after a successful call.
//
// The string stays valid until the next `elswap_*` call on the same thread.
const char *elswap_last_error(void);

// Swap volatility factor `S(t)` of the model.
//
// # Safety
// `model` must be a live handle and `out` valid for one `double` write.
enum ElswapStatus elswap_swap_vol_factor(const struct ElswapModel *model, double t, double *out);

// Market price of delivery risk factor `xi(t)` of the model.
//
// # Safety
// `model` must be a live handle and `out` valid for one `double` write.
enum ElswapStatus elswap_market_price_factor(const struct ElswapModel *model,
                                             double t,
                                             double *out);

// Feller and Novikov conditions, with Feller checked up to the start of delivery.
//
// # Safety
// `model` must be a live handle and `out` valid for one struct write.
enum ElswapStatus elswap_check(const struct ElswapModel *model, struct ElswapConditions *out);

// Semi-analytic call and put at `t = 0` from the model's initial state.
//
// # Safety
// `model` must be a live handle and `out` valid for one struct write.
enum ElswapStatus elswap_price_fourier(const struct ElswapModel *model,
                                       double strike,
                                       double exercise,
                                       struct ElswapPrice *out);

// Monte-Carlo call and put under the swap measure on `steps` steps to `exercise`.
//
// # Safety
// `model` must be a live handle and `out` valid for one struct write.
enum ElswapStatus elswap_price_mc(const struct ElswapModel *model,
                                  double strike,
                                  double exercise,
                                  uint64_t seed,
                                  size_t paths,
                                  size_t steps,
                                  struct ElswapPrice *out);

// Samuelson averaging factors for decay `lambda` over a delivery period of length `x`.
//
// # Safety
// `d1` and `d2` must be valid for one `double` write each.
enum ElswapStatus elswap_samuelson_factors(double lambda, double x, double *d1, double *d2);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ELSWAP_H */
