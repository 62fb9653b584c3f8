#ifndef INTERF_H
#define INTERF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of the C interface.
typedef enum InterfStatus {
  // Success.
  INTERF_STATUS_OK = 0,
  // A required pointer argument was null.
  INTERF_STATUS_NULL_POINTER = 1,
  // An argument is out of range or malformed.
  INTERF_STATUS_INVALID_ARGUMENT = 2,
  // Matrix dimensions do not fit the operation.
  INTERF_STATUS_SHAPE_ERROR = 3,
  // A matrix that must be unitary is not.
  INTERF_STATUS_NOT_UNITARY = 4,
  // A numerical routine failed to converge or met a singular input.
  INTERF_STATUS_NUMERICAL_FAILURE = 5,
  // The requested size exceeds a hard limit.
  INTERF_STATUS_COMPLEXITY_LIMIT = 6,
  // Any other toolkit error.
  INTERF_STATUS_DOMAIN_ERROR = 7,
  // A panic was caught inside the library.
  INTERF_STATUS_INTERNAL = 8,
} InterfStatus;

// Opaque complex matrix.
typedef struct InterfMatrix InterfMatrix;

// Opaque decomposition plan.
typedef struct InterfPlan InterfPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on the calling thread (empty after a
// success). The pointer stays valid until the next call on this thread.
const char *interf_last_error(void);

// Static name of a status code.
const char *interf_status_name(enum InterfStatus status);

// Creates a `rows × cols` matrix from row-major real and imaginary parts
// (`rows·cols` values each).
//
// # Safety
// `re` and `im` must point to `rows·cols` readable doubles; `out` must be writable.
enum InterfStatus interf_matrix_new(size_t rows,
                                    size_t cols,
                                    const double *re,
                                    const double *im,
                                    struct InterfMatrix **out);

// Haar-random `n × n` unitary, deterministic in `seed`.
//
// # Safety
// `out` must be writable.
enum InterfStatus interf_haar_unitary(size_t n, uint64_t seed, struct InterfMatrix **out);

// Releases a matrix (null is ignored).
//
// # Safety
// `m` must come from this library and not be used afterwards.
void interf_matrix_free(struct InterfMatrix *m);

// Number of rows and columns.
//
// # Safety
// `m` must be a live matrix handle; `rows` and `cols` must be writable.
enum InterfStatus interf_matrix_shape(const struct InterfMatrix *m, size_t *rows, size_t *cols);

// Copies the row-major entries into `re` and `im`, each of capacity `len`
// (at least `rows·cols`).
//
// # Safety
// `m` must be a live handle; `re` and `im` must point to `len` writable doubles.
enum InterfStatus interf_matrix_data(const struct InterfMatrix *m,
                                     double *re,
                                     double *im,
                                     size_t len);

// Realizes an `(ns·np)`-dimensional unitary as a beam-splitter plan.
// Fails with [`InterfStatus::NotUnitary`] if `u` is not unitary within `tol`.
//
// # Safety
// `u` must be a live handle; `out` must be writable.
enum InterfStatus interf_decompose(const struct InterfMatrix *u,
                                   size_t ns,
                                   size_t np,
                                   double tol,
                                   struct InterfPlan **out);

// Number of optical elements in a plan.
//
// # Safety
// `plan` must be a live handle; `count` must be writable.
enum InterfStatus interf_plan_len(const struct InterfPlan *plan, size_t *count);

// Multiplies a plan back into its unitary.
//
// # Safety
// `plan` must be a live handle; `out` must be writable.
enum InterfStatus interf_reconstruct(const struct InterfPlan *plan, struct InterfMatrix **out);

// Releases a plan (null is ignored).
//
// # Safety
// `plan` must come from this library and not be used afterwards.
void interf_plan_free(struct InterfPlan *plan);

// Permanent of a square matrix.
//
// # Safety
// `m` must be a live handle; `re` and `im` must be writable.
enum InterfStatus interf_permanent(const struct InterfMatrix *m, double *re, double *im);

// Immanant of a square matrix for the partition `parts[0..nparts]`
// (nonincreasing, summing to the matrix order).
//
// # Safety
// `m` must be a live handle; `parts` must point to `nparts` values; `re` and `im` must be writable.
enum InterfStatus interf_immanant(const struct InterfMatrix *m,
                                  const uint32_t *parts,
                                  size_t nparts,
                                  double *re,
                                  double *im);

// D-matrix of the `SU(n)` irrep with Dynkin label `kappas[0..nk]` (trailing
// zeros may be omitted) at the group element `v` (an `n × n` unitary).
//
// # Safety
// `v` must be a live handle; `kappas` must point to `nk` values; `out` must be writable.
enum InterfStatus interf_dfunction_matrix(size_t n,
                                          const uint32_t *kappas,
                                          size_t nk,
                                          const struct InterfMatrix *v,
                                          struct InterfMatrix **out);

// Coincidence probability of three photons entering inputs 1–3 of the 3×3
// matrix `u` with delays `taus[0..3]` and a common Gaussian power spectrum
// of standard deviation `sigma`.
//
// # Safety
// `u` must be a live handle; `taus` must point to three doubles; `out` must be writable.
enum InterfStatus interf_three_photon_coincidence(const struct InterfMatrix *u,
                                                  const double *taus,
                                                  double sigma,
                                                  double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* INTERF_H */
