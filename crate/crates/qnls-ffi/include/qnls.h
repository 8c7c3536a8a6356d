#ifndef QNLS_H
#define QNLS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QnlsStatus {
  QNLS_STATUS_OK = 0,
  QNLS_STATUS_NULL_POINTER = 1,
  QNLS_STATUS_INVALID_ARGUMENT = 2,
  QNLS_STATUS_NUMERIC = 3,
  QNLS_STATUS_IO = 4,
  QNLS_STATUS_PANIC = 5,
} QnlsStatus;

/**
 * Field pair on a uniform periodic grid.
 */
typedef struct QnlsFieldPair QnlsFieldPair;

/**
 * Converged radial ground state.
 */
typedef struct QnlsGroundState QnlsGroundState;

typedef struct QnlsGroundStateConstants {
  double mass;
  double kinetic;
  double potential;
  /**
   * `H/M` and `R/M`.
   */
  double ratio_kinetic;
  double ratio_potential;
  double c_gn;
  double me_threshold;
  double mh_threshold;
  double residual;
  uint64_t iterations;
} QnlsGroundStateConstants;

typedef struct QnlsConserved {
  double mass;
  double kinetic;
  double potential;
  double energy;
  /**
   * Unused axes are zero.
   */
  double momentum[3];
} QnlsConserved;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, empty after a
 * success. The pointer stays valid until the next call on this thread.
 */
const char *qnls_last_error_message(void);

/**
 * Solves for the radial ground state on `m` nodes in `[0, r_max]`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum QnlsStatus qnls_ground_state_solve(uintptr_t m,
                                        double r_max,
                                        double kappa,
                                        double tol,
                                        uintptr_t max_iter,
                                        struct QnlsGroundState **out);

/**
 * # Safety
 * `gs` must come from [`qnls_ground_state_solve`]; `out` must be writable.
 */
enum QnlsStatus qnls_ground_state_constants(const struct QnlsGroundState *gs,
                                            struct QnlsGroundStateConstants *out);

/**
 * # Safety
 * `gs` must be null or a handle not yet freed.
 */
void qnls_ground_state_free(struct QnlsGroundState *gs);

/**
 * Builds a pair on the cubic grid with `n` points per axis from
 * interleaved `(re, im)` arrays of `2 nᵈ` doubles each.
 *
 * # Safety
 * `u` and `v` must point to `2 nᵈ` readable doubles; `out` must be writable.
 */
enum QnlsStatus qnls_pair_new(uintptr_t dim,
                              uintptr_t n,
                              double length,
                              double kappa,
                              const double *u,
                              const double *v,
                              struct QnlsFieldPair **out);

/**
 * Number of complex samples per field.
 *
 * # Safety
 * `pair` must be a live handle and `out` writable.
 */
enum QnlsStatus qnls_pair_size(const struct QnlsFieldPair *pair, uintptr_t *out);

/**
 * # Safety
 * `pair` must be a live handle and `out` writable.
 */
enum QnlsStatus qnls_pair_conserved(const struct QnlsFieldPair *pair, struct QnlsConserved *out);

/**
 * Applies the Galilean boost `(e^{iκx·ξ}u, e^{ix·ξ}v)` in place; `xi`
 * holds one component per grid axis.
 *
 * # Safety
 * `pair` must be a live handle; `xi` must point to `len` doubles.
 */
enum QnlsStatus qnls_pair_boost(struct QnlsFieldPair *pair, const double *xi, uintptr_t len);

/**
 * Advances the pair to `t_final` with step `dt` in place. A flagged
 * blow-up returns a numeric error and leaves the pair unchanged.
 *
 * # Safety
 * `pair` must be a live handle.
 */
enum QnlsStatus qnls_pair_evolve(struct QnlsFieldPair *pair, double dt, double t_final);

/**
 * Copies interleaved `(re, im)` samples into `u_out` and `v_out`, each of
 * `2 · len` doubles where `len` must equal [`qnls_pair_size`].
 *
 * # Safety
 * `pair` must be a live handle; the outputs must hold `2 · len` doubles.
 */
enum QnlsStatus qnls_pair_copy_fields(const struct QnlsFieldPair *pair,
                                      double *u_out,
                                      double *v_out,
                                      uintptr_t len);

/**
 * # Safety
 * `pair` must be a live handle; `path` a NUL-terminated UTF-8 string.
 */
enum QnlsStatus qnls_pair_write_snapshot(const struct QnlsFieldPair *pair,
                                         double t,
                                         const char *path);

/**
 * Reads a uniform-grid snapshot; `t_out` may be null.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
 */
enum QnlsStatus qnls_pair_read_snapshot(const char *path,
                                        struct QnlsFieldPair **out,
                                        double *t_out);

/**
 * # Safety
 * `pair` must be null or a handle not yet freed.
 */
void qnls_pair_free(struct QnlsFieldPair *pair);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QNLS_H */
