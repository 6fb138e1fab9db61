#ifndef KELLY_GAME_H
#define KELLY_GAME_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KgStatus {
  KG_STATUS_OK = 0,
  KG_STATUS_NULL_POINTER = 1,
  KG_STATUS_DIMENSION_MISMATCH = 2,
  KG_STATUS_NON_POSITIVE_VOLATILITY = 3,
  KG_STATUS_INVALID_CORRELATION = 4,
  KG_STATUS_SINGULAR_COVARIANCE = 5,
  KG_STATUS_NON_FINITE = 6,
  KG_STATUS_TIME_OFF_GRID = 7,
  KG_STATUS_INVALID_CONFIG = 8,
  KG_STATUS_INVALID_RANDOMIZATION = 9,
  KG_STATUS_DIVISION_DEGENERATE = 10,
  KG_STATUS_DOMAIN_VIOLATION = 11,
  KG_STATUS_UNSUPPORTED = 12,
  KG_STATUS_PANIC = 99,
} KgStatus;

typedef enum KgResponseKind {
  KG_RESPONSE_KIND_FINITE = 0,
  KG_RESPONSE_KIND_UNBOUNDED_ABOVE = 1,
  KG_RESPONSE_KIND_UNBOUNDED_BELOW = 2,
  KG_RESPONSE_KIND_INDIFFERENT = 3,
} KgResponseKind;

/**
 * Opaque market handle.
 */
typedef struct KgMarket KgMarket;

/**
 * Monte Carlo estimate with its standard error.
 */
typedef struct KgEstimate {
  double estimate;
  double std_error;
  uint64_t paths;
  uint64_t seed;
} KgEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a validated market. `rho` is row-major `n * n`.
 *
 * # Safety
 * `mu` and `sigma` must point to `n` doubles, `rho` to `n * n` doubles, and
 * `out` to writable storage for one handle pointer.
 */
enum KgStatus kg_market_new(double r,
                            const double *mu,
                            const double *sigma,
                            const double *rho,
                            size_t n,
                            struct KgMarket **out);

/**
 * The zero-rate single-stock market with `sigma = ln 2`, `mu = sigma^2 / 2`.
 *
 * # Safety
 * `out` must point to writable storage for one handle pointer.
 */
enum KgStatus kg_market_shannon_demon(struct KgMarket **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `m` must come from `kg_market_new` or `kg_market_shannon_demon` and not
 * have been freed already.
 */
void kg_market_free(struct KgMarket *m);

/**
 * Number of stocks, or 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t kg_market_dim(const struct KgMarket *m);

/**
 * Copies the row-major covariance matrix into `out` (`len = n * n`).
 *
 * # Safety
 * `m` must be a live handle and `out` must hold `len` doubles.
 */
enum KgStatus kg_market_covariance(const struct KgMarket *m, double *out, size_t len);

/**
 * Kelly rule `Sigma^{-1}(mu - r 1)` into `out` (`len = n`).
 *
 * # Safety
 * `m` must be a live handle and `out` must hold `len` doubles.
 */
enum KgStatus kg_kelly_rule(const struct KgMarket *m, double *out, size_t len);

/**
 * # Safety
 * `b` must hold `n` doubles; `out` must be writable.
 */
enum KgStatus kg_growth_rate(const struct KgMarket *m, const double *b, size_t n, double *out);

/**
 * Kernel `(mu - r 1 - Sigma c)'(b - c)`.
 *
 * # Safety
 * `b` and `c` must hold `n` doubles; `out` must be writable.
 */
enum KgStatus kg_payoff_kernel(const struct KgMarket *m,
                               const double *b,
                               const double *c,
                               size_t n,
                               double *out);

/**
 * `E[V_t(b) / V_t(c)]` in closed form.
 *
 * # Safety
 * `b` and `c` must hold `n` doubles; `out` must be writable.
 */
enum KgStatus kg_expected_ratio(const struct KgMarket *m,
                                const double *b,
                                const double *c,
                                size_t n,
                                double t,
                                double *out);

/**
 * `P{V_t(b) >= V_t(c)}` in closed form.
 *
 * # Safety
 * `b` and `c` must hold `n` doubles; `out` must be writable.
 */
enum KgStatus kg_win_probability(const struct KgMarket *m,
                                 const double *b,
                                 const double *c,
                                 size_t n,
                                 double t,
                                 double *out);

/**
 * Player 1's response kind per coordinate against `c`.
 *
 * # Safety
 * `c` must hold `n` doubles and `kinds` must hold `n` entries.
 */
enum KgStatus kg_best_response_p1(const struct KgMarket *m,
                                  const double *c,
                                  size_t n,
                                  enum KgResponseKind *kinds);

/**
 * Player 2's best response `(b + kelly) / 2` into `out`.
 *
 * # Safety
 * `b` and `out` must hold `n` doubles.
 */
enum KgStatus kg_best_response_p2(const struct KgMarket *m, const double *b, size_t n, double *out);

/**
 * Monte Carlo `E[V_t(b) / V_t(c)]` on `paths` seeded paths over
 * `[0, horizon]` with `steps` steps; `t` must be a grid time.
 *
 * # Safety
 * `b` and `c` must hold `n` doubles; `out` must be writable.
 */
enum KgStatus kg_estimate_expected_ratio(const struct KgMarket *m,
                                         const double *b,
                                         const double *c,
                                         size_t n,
                                         double t,
                                         double horizon,
                                         size_t steps,
                                         size_t paths,
                                         uint64_t seed,
                                         struct KgEstimate *out);

/**
 * Monte Carlo `P{V_t(b) >= V_t(c)}`; arguments as for
 * `kg_estimate_expected_ratio`.
 *
 * # Safety
 * `b` and `c` must hold `n` doubles; `out` must be writable.
 */
enum KgStatus kg_estimate_win_probability(const struct KgMarket *m,
                                          const double *b,
                                          const double *c,
                                          size_t n,
                                          double t,
                                          double horizon,
                                          size_t steps,
                                          size_t paths,
                                          uint64_t seed,
                                          struct KgEstimate *out);

/**
 * Finite-difference HJB residual of `J = M1 / M2` at `(s, t, m1, m2)`
 * under controls `b`, `c` with relative step `h`. Single-stock markets only.
 *
 * # Safety
 * `m` must be a live handle and `out` writable.
 */
enum KgStatus kg_hjb_ratio_residual(const struct KgMarket *m,
                                    double s,
                                    double t,
                                    double m1,
                                    double m2,
                                    double b,
                                    double c,
                                    double h,
                                    double *out);

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to `len - 1` bytes, into `buf`. Returns the full message length
 * in bytes (excluding the NUL).
 *
 * # Safety
 * `buf` must be null or hold `len` bytes.
 */
size_t kg_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *kg_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KELLY_GAME_H */
