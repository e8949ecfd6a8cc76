#ifndef QSV_H
#define QSV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every fallible entry point.
 */
typedef enum QsvStatus {
  QSV_STATUS_OK = 0,
  QSV_STATUS_NULL_POINTER = 1,
  QSV_STATUS_INVALID_ARGUMENT = 2,
  QSV_STATUS_CAPACITY = 3,
  QSV_STATUS_NOT_HERMITIAN = 4,
  QSV_STATUS_CONSTRUCTION = 5,
  QSV_STATUS_ZERO_GAP = 6,
  QSV_STATUS_ZERO_BRANCH = 7,
  QSV_STATUS_INCOMPATIBLE_MEASUREMENT = 8,
  QSV_STATUS_SOLVER_NON_CONVERGENCE = 9,
  QSV_STATUS_EIGEN_NON_CONVERGENCE = 10,
  QSV_STATUS_IO = 11,
  QSV_STATUS_PARSE = 12,
  QSV_STATUS_UTF8 = 13,
  QSV_STATUS_PANIC = 14,
} QsvStatus;

/**
 * A distribution over measurement layouts.
 */
typedef struct QsvPlan QsvPlan;

/**
 * A strategy operator with its cached spectrum.
 */
typedef struct QsvStrategy QsvStrategy;

/**
 * A target state.
 */
typedef struct QsvTarget QsvTarget;

/**
 * Outcome of a verification run.
 */
typedef struct QsvVerdict {
  bool accepted;
  uint64_t trials;
  double mean;
  double threshold;
  double nu;
  double type_i_bound;
  double type_ii_bound;
} QsvVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *qsv_version(void);

/**
 * Copy of the last error message on this thread, or null when none was
 * recorded. Release it with [`qsv_string_free`].
 */
char *qsv_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void qsv_string_free(char *s);

/**
 * `n`-qubit GHZ target with its stabilizer description.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum QsvStatus qsv_target_ghz(size_t n, struct QsvTarget **out);

/**
 * Haar-random `n`-qubit target drawn from `seed`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum QsvStatus qsv_target_haar(size_t n, uint64_t seed, struct QsvTarget **out);

/**
 * Dense target from a JSON array of `[re, im]` amplitudes.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be valid for one write.
 */
enum QsvStatus qsv_target_from_json(const char *json, struct QsvTarget **out);

/**
 * Matrix-product-state target from its JSON description.
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be valid for one write.
 */
enum QsvStatus qsv_target_mps_from_json(const char *json, struct QsvTarget **out);

/**
 * Stabilizer target from whitespace- or comma-separated generators such as
 * `"+XXX +ZZI +ZIZ"`.
 *
 * # Safety
 * `generators` must be a nul-terminated string; `out` must be valid for one
 * write.
 */
enum QsvStatus qsv_target_stabilizer(const char *generators, struct QsvTarget **out);

/**
 * # Safety
 * `target` must be null or a live target handle.
 */
size_t qsv_target_num_qubits(const struct QsvTarget *target);

/**
 * # Safety
 * `target` must be null or a handle not yet freed.
 */
void qsv_target_free(struct QsvTarget *target);

/**
 * Uniform plan over every layout with `r` unmeasured qubits.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum QsvStatus qsv_plan_naive(size_t n, size_t r, struct QsvPlan **out);

/**
 * Plan uniform over GHZ equivalence classes.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum QsvStatus qsv_plan_ghz_classes(size_t n, size_t r, struct QsvPlan **out);

/**
 * # Safety
 * `json` must be a nul-terminated string; `out` must be valid for one write.
 */
enum QsvStatus qsv_plan_from_json(const char *json, struct QsvPlan **out);

/**
 * JSON form of the plan; release it with [`qsv_string_free`]. Null when
 * `plan` is null.
 *
 * # Safety
 * `plan` must be null or a live plan handle.
 */
char *qsv_plan_to_json(const struct QsvPlan *plan);

/**
 * # Safety
 * `plan` must be null or a handle not yet freed.
 */
void qsv_plan_free(struct QsvPlan *plan);

/**
 * Averaged partial-shadow-overlap operator of `plan` for `target`.
 *
 * # Safety
 * `target` and `plan` must be live handles; `out` must be valid for one
 * write.
 */
enum QsvStatus qsv_strategy_dpso(const struct QsvTarget *target,
                                 const struct QsvPlan *plan,
                                 struct QsvStrategy **out);

/**
 * Level-`level` shadow-overlap operator for `target`.
 *
 * # Safety
 * `target` must be a live handle; `out` must be valid for one write.
 */
enum QsvStatus qsv_strategy_sop(const struct QsvTarget *target,
                                size_t level,
                                struct QsvStrategy **out);

/**
 * Spectral gap `1 - λ₂`.
 *
 * # Safety
 * `strategy` must be a live handle; `nu` must be valid for one write.
 */
enum QsvStatus qsv_strategy_gap(const struct QsvStrategy *strategy, double *nu);

/**
 * Copies the eigenvalues, largest first, into `values` (capacity `len`).
 * Returns the number of eigenvalues, which may exceed `len`.
 *
 * # Safety
 * `strategy` must be null or a live handle; `values` must be null or valid
 * for `len` writes.
 */
size_t qsv_strategy_eigenvalues(const struct QsvStrategy *strategy, double *values, size_t len);

/**
 * # Safety
 * `strategy` must be null or a handle not yet freed.
 */
void qsv_strategy_free(struct QsvStrategy *strategy);

/**
 * Copies needed by the pass/fail protocol.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum QsvStatus qsv_plm_sample_complexity(double epsilon, double delta, double nu, uint64_t *out);

/**
 * Copies needed by the level-`level` shadow-overlap protocol.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum QsvStatus qsv_sop_sample_complexity(size_t level,
                                         double epsilon,
                                         double delta,
                                         double nu,
                                         uint64_t *out);

/**
 * Copies needed by the level-`r` partial-shadow-overlap protocol.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum QsvStatus qsv_dpso_sample_complexity(size_t r,
                                          double epsilon,
                                          double delta,
                                          double nu,
                                          uint64_t *out);

/**
 * Runs the partial-shadow-overlap protocol against a simulated device.
 * `device_infidelity = 0` emits the target exactly; a positive value emits
 * the worst case at that infidelity. `trials = 0` uses the sample
 * complexity.
 *
 * # Safety
 * `target` and `plan` must be live handles; `verdict` must be valid for one
 * write.
 */
enum QsvStatus qsv_dpso_verify(const struct QsvTarget *target,
                               const struct QsvPlan *plan,
                               double epsilon,
                               double delta,
                               double device_infidelity,
                               uint64_t trials,
                               uint64_t seed,
                               struct QsvVerdict *verdict);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QSV_H */
