#ifndef STABLE_MCE_H
#define STABLE_MCE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SmceStatus {
  SmceStatus_Ok = 0,
  SmceStatus_NullPointer = 1,
  SmceStatus_InvalidArgument = 2,
  SmceStatus_Domain = 3,
  SmceStatus_Config = 4,
  SmceStatus_Numeric = 5,
  SmceStatus_Unsupported = 6,
  SmceStatus_NotIdentifiable = 7,
  SmceStatus_Io = 8,
  SmceStatus_Panic = 9,
} SmceStatus;

/*
 Opaque kernel model handle.
 */
typedef struct SmceModel SmceModel;

/*
 Estimate returned by [`smce_estimate`] besides the parameter vector.
 */
typedef struct SmceFit {
  double contrast;
  uintptr_t iterations;
  uintptr_t evaluations;
  bool converged;
} SmceFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer
 stays valid until the next call into this library on the same thread.
 */
const char *smce_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *smce_version(void);

/*
 Creates a model for the family id (`ou`, `lfsm`, `periodic-ou`,
 `modulated-ou`, `gen-modulated-ou`, `carma21`). `lfsm_order` selects the
 increment order for `lfsm`; pass 0 for the default.

 # Safety
 `family` must be a NUL-terminated string and `out` a writable pointer.
 */
enum SmceStatus smce_model_new(const char *family, uint32_t lfsm_order, struct SmceModel **out);

/*
 Releases a model handle; null is ignored.

 # Safety
 `model` must come from [`smce_model_new`] and not be freed twice.
 */
void smce_model_free(struct SmceModel *model);

/*
 Length of the parameter vector `(beta, theta...)`, 0 for null.

 # Safety
 `model` must be null or a live handle.
 */
uintptr_t smce_model_param_count(const struct SmceModel *model);

/*
 Joint characteristic function at `u` (length `m`).

 # Safety
 Pointers must reference arrays of the stated lengths.
 */
enum SmceStatus smce_theoretical_cf(const struct SmceModel *model,
                                    const double *xi,
                                    uintptr_t n_xi,
                                    const double *u,
                                    uintptr_t m,
                                    double *out);

/*
 Empirical characteristic function of `values` at `u` (length `m`).

 # Safety
 Pointers must reference arrays of the stated lengths.
 */
enum SmceStatus smce_empirical_cf(const double *values,
                                  uintptr_t n,
                                  const double *u,
                                  uintptr_t m,
                                  double *out);

/*
 Simulates `X_1..X_n` into `out` with the default grid and truncation.

 # Safety
 `xi` must hold `n_xi` values and `out` room for `n`.
 */
enum SmceStatus smce_simulate(const struct SmceModel *model,
                              const double *xi,
                              uintptr_t n_xi,
                              uintptr_t n,
                              uint64_t seed,
                              double *out);

/*
 Minimal contrast fit on an `m`-dimensional grid with `nodes_per_dim`
 Gauss–Laguerre nodes and weight width `nu`. `free` may be null to
 estimate every coordinate; otherwise nonzero entries are estimated and
 the rest stay at `start`. Writes `n_params` values to `xi_out`.

 # Safety
 Pointers must reference arrays of the stated lengths; `free` is null or
 holds `n_params` bytes.
 */
enum SmceStatus smce_estimate(const struct SmceModel *model,
                              const double *values,
                              uintptr_t n,
                              uintptr_t m,
                              uintptr_t nodes_per_dim,
                              double nu,
                              const double *start,
                              const uint8_t *free,
                              uintptr_t n_params,
                              double *xi_out,
                              struct SmceFit *fit_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STABLE_MCE_H */
