#ifndef OPBURGERS_H
#define OPBURGERS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OpbStatus {
  OPB_STATUS_OK = 0,
  OPB_STATUS_NULL_POINTER = 1,
  OPB_STATUS_INVALID_UTF8 = 2,
  OPB_STATUS_UNKNOWN_SCENARIO = 3,
  OPB_STATUS_PARAMETER = 4,
  OPB_STATUS_DOMAIN = 5,
  OPB_STATUS_NUMERICAL = 6,
  OPB_STATUS_PANIC = 7,
} OpbStatus;

/**
 * Opaque scenario handle.
 */
typedef struct OpbScenario OpbScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *opb_last_error(void);

/**
 * Library version as a static string.
 */
const char *opb_version(void);

/**
 * Γ(x).
 *
 * # Safety
 * `out` must be null or valid for writing one double.
 */
enum OpbStatus opb_gamma(double x, double *out);

/**
 * E_β(z), the one-parameter Mittag-Leffler function.
 *
 * # Safety
 * `out` must be null or valid for writing one double.
 */
enum OpbStatus opb_ml(double beta, double z, double *out);

/**
 * Heat polynomial H_n(f, h).
 *
 * # Safety
 * `out` must be null or valid for writing one double.
 */
enum OpbStatus opb_hermite(uint32_t n, double f, double h, double *out);

/**
 * Radial hyperbolic heat kernel φ(η, t).
 *
 * # Safety
 * `out` must be null or valid for writing one double.
 */
enum OpbStatus opb_kernel(double eta, double t, double rel_tol, double *out);

/**
 * Looks up a catalog scenario by id and stores a new handle in `out`.
 *
 * # Safety
 * `id` must be null or a NUL-terminated string; `out` must be null or
 * valid for writing one pointer.
 */
enum OpbStatus opb_scenario_new(const char *id, struct OpbScenario **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `sc` must be null or a handle from [`opb_scenario_new`] not yet freed.
 */
void opb_scenario_free(struct OpbScenario *sc);

/**
 * Number of spatial dimensions.
 *
 * # Safety
 * `sc` must be null or a live handle; `out` null or writable.
 */
enum OpbStatus opb_scenario_ndim(const struct OpbScenario *sc, size_t *out);

/**
 * The scenario's primary exact solution at (x, t).
 *
 * # Safety
 * `sc` must be null or a live handle; `x` null or valid for `len`
 * doubles; `out` null or writable.
 */
enum OpbStatus opb_scenario_eval(const struct OpbScenario *sc,
                                 const double *x,
                                 size_t len,
                                 double t,
                                 double *out);

/**
 * Residual of the primary exact solution on a grid with `nodes` per
 * spatial axis and `time_nodes` times. Writes the maximum and the RMS.
 *
 * # Safety
 * `sc` must be null or a live handle; the outputs null or writable.
 */
enum OpbStatus opb_scenario_residual(const struct OpbScenario *sc,
                                     size_t nodes,
                                     size_t time_nodes,
                                     double *max_abs,
                                     double *l2);

/**
 * JSON descriptor of the scenario. Release with [`opb_string_free`].
 *
 * # Safety
 * `sc` must be null or a live handle; `out` null or writable.
 */
enum OpbStatus opb_scenario_describe_json(const struct OpbScenario *sc, char **out);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void opb_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPBURGERS_H */
