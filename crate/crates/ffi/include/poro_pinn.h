#ifndef PORO_PINN_H
#define PORO_PINN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum PpStatus {
  PP_STATUS_OK = 0,
  PP_STATUS_NULL_POINTER = 1,
  PP_STATUS_INVALID_ARGUMENT = 2,
  PP_STATUS_IO = 3,
  PP_STATUS_PARSE = 4,
  PP_STATUS_NUMERICAL = 5,
  PP_STATUS_PANIC = 6,
} PpStatus;

/**
 * Trained network with its normalization maps.
 */
typedef struct PpModel PpModel;

/**
 * Nondimensional problem constants. `mass_balance` is 0 for the form the
 * analytical series satisfies and 1 for the opposite Laplacian sign.
 */
typedef struct PpProblem {
  double eta;
  double beta;
  double omega;
  double x0;
  double z0;
  double a;
  double b;
  int32_t mass_balance;
} PpProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *pp_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pp_version(void);

/**
 * Loads a checkpoint file. On success `*out` owns a new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PpStatus pp_model_load(const char *path, struct PpModel **out);

/**
 * Releases a handle from [`pp_model_load`]. Null is ignored.
 *
 * # Safety
 * `model` must come from [`pp_model_load`] and not be used afterwards.
 */
void pp_model_free(struct PpModel *model);

/**
 * Number of trainable parameters, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t pp_model_param_count(const struct PpModel *model);

/**
 * Writes `(u, v, p)` at `(x, z, t)` to `out[0..3]`.
 *
 * # Safety
 * `model` must be a live handle and `out` point to 3 writable doubles.
 */
enum PpStatus pp_model_forward(const struct PpModel *model,
                               double x,
                               double z,
                               double t,
                               double *out);

/**
 * Writes 30 values: for u, v, p in turn the value, the derivatives in x,
 * z, t, and the second derivatives xx, zz, tt, xz, xt, zt.
 *
 * # Safety
 * `model` must be a live handle and `out` point to 30 writable doubles.
 */
enum PpStatus pp_model_forward_jet(const struct PpModel *model,
                                   double x,
                                   double z,
                                   double t,
                                   double *out);

/**
 * Fills `out` with the default problem constants.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PpStatus pp_problem_default(struct PpProblem *out);

/**
 * Analytical `(u, v, p)` at `(x, z, t)` from the double series truncated
 * at `n_max × q_max` modes. A null `problem` selects the defaults.
 *
 * # Safety
 * `problem` must be null or valid; `out` must point to 3 writable doubles.
 */
enum PpStatus pp_analytical_solution(const struct PpProblem *problem,
                                     size_t n_max,
                                     size_t q_max,
                                     double x,
                                     double z,
                                     double t,
                                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PORO_PINN_H */
