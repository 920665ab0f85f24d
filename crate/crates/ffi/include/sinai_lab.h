#ifndef SINAI_LAB_H
#define SINAI_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit by hand. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum SinaiStatus {
  SINAI_STATUS_OK = 0,
  SINAI_STATUS_INVALID_ARGUMENT = 1,
  SINAI_STATUS_INVALID_DISTRIBUTION = 2,
  SINAI_STATUS_WINDOW_EXHAUSTED = 3,
  SINAI_STATUS_NOT_APPLICABLE = 4,
  SINAI_STATUS_PARSE = 5,
  SINAI_STATUS_IO = 6,
  SINAI_STATUS_INTERNAL = 7,
  SINAI_STATUS_NULL_POINTER = 8,
  SINAI_STATUS_PANIC = 9,
} SinaiStatus;

/**
 * Site law of an environment.
 */
typedef enum SinaiFamily {
  /**
   * Rates `(e^{-c/2}, e^{c/2})` or the swap, with probability 1/2 each.
   */
  SINAI_FAMILY_TWO_POINT = 0,
  /**
   * `log ω⁻`, `log ω⁺` i.i.d. uniform on `[-c/2, c/2]`.
   */
  SINAI_FAMILY_LOG_UNIFORM = 1,
} SinaiFamily;

/**
 * Opaque environment handle.
 */
typedef struct SinaiEnvironment SinaiEnvironment;

/**
 * Opaque stable-landscape handle.
 */
typedef struct SinaiLandscape SinaiLandscape;

/**
 * The landmarks around the origin, as positions.
 */
typedef struct SinaiLandmarks {
  double m_minus;
  double h_minus;
  double m_minus_minus;
  double h_minus_minus;
  double m_plus;
  double h_plus;
  double m_plus_plus;
  double h_plus_plus;
  double m_t;
  /**
   * `f(h⁻) = f(h⁺)`; `m_t` was resolved to `m⁻`.
   */
  bool tie;
} SinaiLandmarks;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *sinai_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sinai_version(void);

/**
 * Free a string returned by the library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void sinai_string_free(char *s);

/**
 * Sample an environment on `[lo, hi]`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SinaiStatus sinai_env_sample(enum SinaiFamily family,
                                  double c,
                                  uint64_t seed,
                                  int64_t lo,
                                  int64_t hi,
                                  struct SinaiEnvironment **out_env);

/**
 * Read an environment from its JSON file format.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out_env` a valid pointer.
 */
enum SinaiStatus sinai_env_from_json(const char *json, struct SinaiEnvironment **out_env);

/**
 * Write an environment as JSON; free the result with [`sinai_string_free`].
 *
 * # Safety
 * `env` must be a live handle and `out_json` a valid pointer.
 */
enum SinaiStatus sinai_env_to_json(const struct SinaiEnvironment *env, char **out_json);

/**
 * Release an environment. NULL is ignored.
 *
 * # Safety
 * `env` must come from this library and not be freed twice.
 */
void sinai_env_free(struct SinaiEnvironment *env);

/**
 * Window `[lo, hi]` of an environment.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SinaiStatus sinai_env_window(const struct SinaiEnvironment *env, int64_t *lo, int64_t *hi);

/**
 * Jump rates of site `x`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SinaiStatus sinai_env_rates(const struct SinaiEnvironment *env,
                                 int64_t x,
                                 double *minus,
                                 double *plus);

/**
 * `P_z(τ_a < τ_b)` in closed form.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SinaiStatus sinai_ruin_probability(const struct SinaiEnvironment *env,
                                        int64_t a,
                                        int64_t z,
                                        int64_t b,
                                        double *out_p);

/**
 * Run walk number `trial` of stream `seed` from `start` until `horizon`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SinaiStatus sinai_simulate(const struct SinaiEnvironment *env,
                                int64_t start,
                                double horizon,
                                uint64_t seed,
                                uint64_t trial,
                                int64_t *out_position);

/**
 * Stable landscape of the environment's potential at `log t`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum SinaiStatus sinai_landscape_new(const struct SinaiEnvironment *env,
                                     double log_t,
                                     struct SinaiLandscape **out_landscape);

/**
 * Release a landscape. NULL is ignored.
 *
 * # Safety
 * `ls` must come from this library and not be freed twice.
 */
void sinai_landscape_free(struct SinaiLandscape *ls);

/**
 * # Safety
 * Pointers must be valid.
 */
enum SinaiStatus sinai_landscape_landmarks(const struct SinaiLandscape *ls,
                                           struct SinaiLandmarks *out_marks);

/**
 * Copy up to `cap` stable points into `buf`; `count` receives the total.
 * Pass `buf = NULL` to query the count only.
 *
 * # Safety
 * `buf` must hold `cap` doubles when non-NULL.
 */
enum SinaiStatus sinai_landscape_stable_points(const struct SinaiLandscape *ls,
                                               double *buf,
                                               uintptr_t cap,
                                               uintptr_t *count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SINAI_LAB_H */
