#ifndef MECHPDE_H
#define MECHPDE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Solver path selector for [`mpd_solve`].
typedef enum MpdPath {
  MPD_PATH_AUTO = 0,
  MPD_PATH_DIRECT = 1,
  MPD_PATH_ITERATIVE = 2,
} MpdPath;

typedef enum MpdStatus {
  MPD_STATUS_OK = 0,
  MPD_STATUS_NULL_POINTER = 1,
  MPD_STATUS_INVALID_ARGUMENT = 2,
  MPD_STATUS_SHAPE = 3,
  MPD_STATUS_SOLVER = 4,
  MPD_STATUS_PARSE = 5,
  MPD_STATUS_IO = 6,
  MPD_STATUS_PANIC = 7,
} MpdStatus;

// Dataset of named fields.
typedef struct MpdDataset MpdDataset;

// Forward solution of a system.
typedef struct MpdSolution MpdSolution;

// Assembled constraint system.
typedef struct MpdSystem MpdSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Owned by the
// library; valid until the next call.
const char *mpd_last_error(void);

// Builds and assembles a constant-coefficient problem from TOML text with
// keys `sizes`, `steps`, `time`, `derivatives`, `coefficients`, `rhs`,
// `boundary`.
//
// # Safety
// `toml` must be a valid C string and `out` a valid pointer.
enum MpdStatus mpd_system_from_toml(const char *toml, struct MpdSystem **out);

// # Safety
// `sys` must come from [`mpd_system_from_toml`] or be null.
void mpd_system_free(struct MpdSystem *sys);

// Writes the number of unknowns, constraints, grid points, multi-indices
// and boundary points.
//
// # Safety
// `sys` must be a live handle; each output pointer may be null.
enum MpdStatus mpd_system_dims(const struct MpdSystem *sys,
                               uintptr_t *n_vars,
                               uintptr_t *n_constraints,
                               uintptr_t *n_points,
                               uintptr_t *n_multi,
                               uintptr_t *n_boundary);

// Solves the least-squares system.
//
// # Safety
// `sys` must be a live handle and `out` a valid pointer.
enum MpdStatus mpd_solve(const struct MpdSystem *sys, enum MpdPath path, struct MpdSolution **out);

// # Safety
// `sol` must come from [`mpd_solve`] or be null.
void mpd_solution_free(struct MpdSolution *sol);

// Copies the block of multi-index `m` (0 is the solution itself) into `buf`,
// which must hold exactly one value per grid point.
//
// # Safety
// `sol` must be a live handle and `buf` valid for `len` writes.
enum MpdStatus mpd_solution_field(const struct MpdSolution *sol,
                                  uintptr_t m,
                                  double *buf,
                                  uintptr_t len);

// Relative normal-equation residual `‖Aᵀλ‖ / ‖Aᵀd‖` and iteration count.
//
// # Safety
// `sol` must be a live handle; output pointers may be null.
enum MpdStatus mpd_solution_stats(const struct MpdSolution *sol,
                                  double *residual,
                                  uintptr_t *iterations);

// Backpropagates `g_z` (length `n_vars`) to the problem fields:
// `grad_coeff` (`n_multi × n_points`, multi-index major), `grad_rhs`
// (`n_points`) and `grad_bnd` (`n_boundary`).
//
// # Safety
// Handles must be live and every buffer valid for its stated length.
enum MpdStatus mpd_backward(const struct MpdSystem *sys,
                            const struct MpdSolution *sol,
                            const double *g_z,
                            uintptr_t g_len,
                            double *grad_coeff,
                            uintptr_t coeff_len,
                            double *grad_rhs,
                            uintptr_t rhs_len,
                            double *grad_bnd,
                            uintptr_t bnd_len);

// True positivity ratio between two JSON objects mapping term labels to
// coefficients; `est` is thresholded at `tau` first.
//
// # Safety
// Strings must be valid C strings and `out` a valid pointer.
enum MpdStatus mpd_tpr(const char *truth, const char *est, double tau, double *out);

// Largest relative coefficient error over the true nonzero terms.
//
// # Safety
// Strings must be valid C strings and `out` a valid pointer.
enum MpdStatus mpd_e_inf(const char *truth, const char *est, double *out);

// Adds seeded Gaussian noise with standard deviation `sigma_nr · rms(values)`.
//
// # Safety
// `values` must be valid for `len` reads and writes.
enum MpdStatus mpd_add_noise(double *values, uintptr_t len, double sigma_nr, uint64_t seed);

// Runs a generator described by TOML, e.g. `kind = "burgers"` plus its
// parameters.
//
// # Safety
// `toml` must be a valid C string and `out` a valid pointer.
enum MpdStatus mpd_dataset_generate(const char *toml, struct MpdDataset **out);

// # Safety
// `path` must be a valid C string and `out` a valid pointer.
enum MpdStatus mpd_dataset_load(const char *path, struct MpdDataset **out);

// # Safety
// `ds` must be a live handle and `path` a valid C string.
enum MpdStatus mpd_dataset_save(const struct MpdDataset *ds, const char *path);

// # Safety
// `ds` must come from a dataset constructor or be null.
void mpd_dataset_free(struct MpdDataset *ds);

// Number of grid points of the dataset.
//
// # Safety
// `ds` must be a live handle and `out` a valid pointer.
enum MpdStatus mpd_dataset_points(const struct MpdDataset *ds, uintptr_t *out);

// Copies field `name` into `buf` (exactly one value per grid point).
//
// # Safety
// `ds` must be a live handle, `name` a valid C string and `buf` valid for
// `len` writes.
enum MpdStatus mpd_dataset_field(const struct MpdDataset *ds,
                                 const char *name,
                                 double *buf,
                                 uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MECHPDE_H */
