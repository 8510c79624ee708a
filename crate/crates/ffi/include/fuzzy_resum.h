#ifndef FUZZY_RESUM_H
#define FUZZY_RESUM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Return code of every fallible call.
 */
typedef enum FrStatus {
  FR_STATUS_OK = 0,
  FR_STATUS_NULL_POINTER = 1,
  FR_STATUS_INVALID_UTF8 = 2,
  FR_STATUS_INVALID_ARGUMENT = 3,
  FR_STATUS_NUMERIC = 4,
  FR_STATUS_NOT_AVAILABLE = 5,
  FR_STATUS_PANIC = 6,
} FrStatus;

typedef enum FrSumStatus {
  FR_SUM_STATUS_CONVERGED = 0,
  FR_SUM_STATUS_STALLED = 1,
  FR_SUM_STATUS_KERNEL_INVALID = 2,
} FrSumStatus;

typedef enum FrTauberianClass {
  FR_TAUBERIAN_CLASS_VANISHING = 0,
  FR_TAUBERIAN_CLASS_BOUNDED = 1,
  FR_TAUBERIAN_CLASS_UNBOUNDED = 2,
  FR_TAUBERIAN_CLASS_INCONCLUSIVE = 3,
} FrTauberianClass;

/**
 * Fuzzy number on an α-grid.
 */
typedef struct FrFuzzy FrFuzzy;

/**
 * Summation method with its kernel.
 */
typedef struct FrMethod FrMethod;

/**
 * Outcome of [`fr_phi_limit`].
 */
typedef struct FrResult FrResult;

/**
 * Lazily evaluated series of fuzzy numbers.
 */
typedef struct FrSeries FrSeries;

/**
 * Options for [`fr_phi_limit`]. Start from [`fr_sum_options_default`].
 */
typedef struct FrSumOptions {
  double s_max;
  size_t s_steps;
  double outer_tol;
  double inner_tol;
  size_t n_max;
  bool euler_accel;
  bool linear_extrapolation;
} FrSumOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *fr_last_error(void);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void fr_string_free(char *s);

/**
 * Triangular number `(a, b, c)` on `levels` equally spaced α-levels.
 *
 * # Safety
 * `out` must be writable.
 */
enum FrStatus fr_fuzzy_triangular(double a,
                                  double b,
                                  double c,
                                  size_t levels,
                                  struct FrFuzzy **out);

/**
 * Builds a number from `len` α-levels with lower and upper endpoints.
 *
 * # Safety
 * The three arrays must hold `len` values each.
 */
enum FrStatus fr_fuzzy_from_levels(const double *alphas,
                                   const double *lower,
                                   const double *upper,
                                   size_t len,
                                   struct FrFuzzy **out);

/**
 * Number of α-levels.
 *
 * # Safety
 * `u` must be a live handle.
 */
size_t fr_fuzzy_levels(const struct FrFuzzy *u);

/**
 * Copies α-levels, lower and upper endpoints into caller buffers of
 * length `len`, which must be at least [`fr_fuzzy_levels`]. Any buffer may
 * be null to skip it.
 *
 * # Safety
 * Non-null buffers must hold `len` values.
 */
enum FrStatus fr_fuzzy_copy(const struct FrFuzzy *u,
                            double *alphas,
                            double *lower,
                            double *upper,
                            size_t len);

/**
 * `D(u, v)`, the supremum over α of the Hausdorff distance between cuts.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum FrStatus fr_fuzzy_distance(const struct FrFuzzy *u, const struct FrFuzzy *v, double *out);

/**
 * # Safety
 * Handles must be live and `out` writable.
 */
enum FrStatus fr_fuzzy_add(const struct FrFuzzy *u, const struct FrFuzzy *v, struct FrFuzzy **out);

/**
 * # Safety
 * `u` must be live and `out` writable.
 */
enum FrStatus fr_fuzzy_scale(const struct FrFuzzy *u, double k, struct FrFuzzy **out);

/**
 * # Safety
 * `u` must come from this library and not be freed twice.
 */
void fr_fuzzy_free(struct FrFuzzy *u);

/**
 * Parses a series from `preset:NAME`, inline JSON, or a JSON file path.
 * `q` is the ratio of the geometric preset; pass NaN for the default.
 *
 * # Safety
 * `spec` must be a nul-terminated string and `out` writable.
 */
enum FrStatus fr_series_parse(const char *spec, size_t levels, double q, struct FrSeries **out);

/**
 * `s_n = u_0 + … + u_n`.
 *
 * # Safety
 * `series` must be live and `out` writable.
 */
enum FrStatus fr_series_partial_sum(const struct FrSeries *series, size_t n, struct FrFuzzy **out);

/**
 * # Safety
 * `series` must come from this library and not be freed twice.
 */
void fr_series_free(struct FrSeries *series);

/**
 * Parses `abel`, `mittag-leffler`, `dirichlet:<lambda>`, `factorial:<lambda>`
 * or a JSON method object. With `relaxed` the kernel is not validated
 * before summing.
 *
 * # Safety
 * `spec` must be a nul-terminated string and `out` writable.
 */
enum FrStatus fr_method_parse(const char *spec, bool relaxed, struct FrMethod **out);

/**
 * # Safety
 * `method` must come from this library and not be freed twice.
 */
void fr_method_free(struct FrMethod *method);

struct FrSumOptions fr_sum_options_default(void);

/**
 * Drives `s → 0⁺`. A stalled run or an invalid kernel still yields a
 * result; check it with [`fr_result_status`].
 *
 * # Safety
 * Handles must be live; `options` may be null for defaults.
 */
enum FrStatus fr_phi_limit(const struct FrSeries *series,
                           const struct FrMethod *method,
                           const struct FrSumOptions *options,
                           struct FrResult **out);

/**
 * # Safety
 * `result` must be live.
 */
enum FrSumStatus fr_result_status(const struct FrResult *result);

/**
 * Copies out the limit; `NotAvailable` when the run produced none.
 *
 * # Safety
 * `result` must be live and `out` writable.
 */
enum FrStatus fr_result_limit(const struct FrResult *result, struct FrFuzzy **out);

/**
 * The full result as JSON; free with [`fr_string_free`].
 *
 * # Safety
 * `result` must be live and `out` writable.
 */
enum FrStatus fr_result_json(const struct FrResult *result, char **out);

/**
 * # Safety
 * `result` must come from this library and not be freed twice.
 */
void fr_result_free(struct FrResult *result);

/**
 * Abel-Poisson mean `P_r(f; x)` of a preset periodic function
 * (`smooth`, `constant`, `cos`, `sin`, `square`).
 *
 * # Safety
 * `name` must be a nul-terminated string and `out` writable.
 */
enum FrStatus fr_abel_poisson_preset(const char *name,
                                     double r,
                                     double x,
                                     size_t sample_count,
                                     size_t levels,
                                     struct FrFuzzy **out);

/**
 * Classifies `τ_n` for `n ≤ n_max`. `slope` receives the fitted log-log
 * slope, or NaN when there is none.
 *
 * # Safety
 * Handles must be live and the outputs writable.
 */
enum FrStatus fr_tauberian_classify(const struct FrSeries *series,
                                    const struct FrMethod *method,
                                    size_t n_max,
                                    enum FrTauberianClass *class_,
                                    double *slope);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FUZZY_RESUM_H */
