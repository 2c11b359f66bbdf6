#ifndef NOZZLEFLOW_H
#define NOZZLEFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Nozzle wall shapes.
 */
typedef enum NfProfileKind {
  /**
   * `p1` = radius.
   */
  NF_PROFILE_KIND_CYLINDER = 0,
  /**
   * `p1` = upstream radius, `p2` = downstream radius, `p3` = transition length.
   */
  NF_PROFILE_KIND_TANH_EXPANSION = 1,
  /**
   * `p1` = radius, `p2` = throat depth, `p3` = throat width.
   */
  NF_PROFILE_KIND_GAUSSIAN_THROAT = 2,
} NfProfileKind;

/**
 * Result codes shared by all entry points.
 */
typedef enum NfStatus {
  NF_STATUS_OK = 0,
  NF_STATUS_NULL_POINTER = 1,
  NF_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Input outside the physical range (e.g. speed beyond the vacuum limit).
   */
  NF_STATUS_DOMAIN = 3,
  NF_STATUS_NO_CONVERGENCE = 4,
  NF_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * The handle has no solution yet.
   */
  NF_STATUS_NOT_SOLVED = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  NF_STATUS_PANIC = 7,
} NfStatus;

/**
 * Opaque solver handle.
 */
typedef struct NfSolver NfSolver;

/**
 * Problem description passed to [`nf_solver_new`].
 */
typedef struct NfProblem {
  double gamma;
  /**
   * Truncation margin; pass 0 for the default.
   */
  double delta0;
  /**
   * 2 or 3.
   */
  uint32_t dim;
  /**
   * One of the `NfProfileKind` values.
   */
  uint32_t kind;
  double p1;
  double p2;
  double p3;
  double half_length;
  uint32_t transverse_cells;
  uint32_t axial_cells;
} NfProblem;

/**
 * Outcome of [`nf_solver_solve`].
 */
typedef struct NfSolveSummary {
  uint32_t iterations;
  /**
   * 1 when the maximum speed stays below the certified limit.
   */
  int32_t certified;
  double max_speed;
  double flux_error;
  double final_energy;
  double final_residual;
} NfSolveSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of the calling thread into `buf` (NUL
 * terminated, truncated to `cap`) and returns the full length including
 * the terminator; returns 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes.
 */
size_t nf_last_error(char *buf, size_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *nf_version(void);

/**
 * Density `ρ(q²)` of the isentropic gas with exponent `gamma`.
 *
 * # Safety
 * `out` must be null or point to writable storage for one `double`.
 */
enum NfStatus nf_gas_density(double gamma, double q2, double *out);

/**
 * Subsonic speed `q` with `ρ(q²)q = j`.
 *
 * # Safety
 * `out` must be null or point to writable storage for one `double`.
 */
enum NfStatus nf_gas_speed_from_flux(double gamma, double j, double *out);

/**
 * Builds the mesh and discretization for `problem` and stores a new handle
 * in `*out`.
 *
 * # Safety
 * `problem` must be null or point to a valid `NfProblem`; `out` must be null
 * or writable.
 */
enum NfStatus nf_solver_new(const struct NfProblem *problem, struct NfSolver **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `solver` must be null or a handle from [`nf_solver_new`] not yet freed.
 */
void nf_solver_free(struct NfSolver *solver);

/**
 * Number of mesh nodes (and potential coefficients).
 *
 * # Safety
 * `solver` must be null or a live handle; `out` must be null or writable.
 */
enum NfStatus nf_solver_node_count(const struct NfSolver *solver, size_t *out);

/**
 * Solves at flux `m0` from the zero field. `summary` may be null.
 *
 * # Safety
 * `solver` must be null or a live handle; `summary` must be null or writable.
 */
enum NfStatus nf_solver_solve(struct NfSolver *solver, double m0, struct NfSolveSummary *summary);

/**
 * Copies the nodal potential of the last solution into `buf`.
 *
 * # Safety
 * `solver` must be null or a live handle; `buf` must be null or valid for
 * `len` doubles.
 */
enum NfStatus nf_solver_copy_potential(const struct NfSolver *solver, double *buf, size_t len);

/**
 * Copies physical node coordinates (`dim` doubles per node, in node order)
 * into `buf`.
 *
 * # Safety
 * `solver` must be null or a live handle; `buf` must be null or valid for
 * `len` doubles.
 */
enum NfStatus nf_solver_copy_nodes(const struct NfSolver *solver, double *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOZZLEFLOW_H */
