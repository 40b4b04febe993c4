#ifndef LAME_SPECTRA_H
#define LAME_SPECTRA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes returned by every fallible function.
 */
typedef enum LsStatus {
  LS_STATUS_OK = 0,
  LS_STATUS_NULL_POINTER = 1,
  LS_STATUS_INVALID_ARGUMENT = 2,
  LS_STATUS_IO = 3,
  /**
   * An iterative method or eigensolver failed.
   */
  LS_STATUS_NUMERICAL = 4,
  /**
   * The problem exceeds the dense size cap.
   */
  LS_STATUS_TOO_LARGE = 5,
  /**
   * The spectral parameter is too close to the free spectrum.
   */
  LS_STATUS_NEAR_SINGULAR = 6,
  /**
   * A buffer supplied by the caller is too short.
   */
  LS_STATUS_BUFFER_TOO_SMALL = 7,
  LS_STATUS_INTERNAL = 8,
} LsStatus;

typedef enum LsBoundKind {
  LS_BOUND_KIND_LEBESGUE = 0,
  LS_BOUND_KIND_MORREY_CAMPANATO = 1,
  LS_BOUND_KIND_KERMAN_SAWYER = 2,
} LsBoundKind;

/**
 * Opaque periodic grid.
 */
typedef struct LsGrid LsGrid;

/**
 * Opaque matrix-valued potential.
 */
typedef struct LsPotential LsPotential;

/**
 * Opaque computed spectrum.
 */
typedef struct LsSpectrum LsSpectrum;

typedef struct LsComplex {
  double re;
  double im;
} LsComplex;

/**
 * Enclosure data. For `gamma > 0` `has_radius` is set; for `gamma = 0`
 * `absence_satisfied` is 0 or 1 and `absence_margin` is `1 - c N^{d/2}`.
 */
typedef struct LsDisk {
  double constant;
  /**
   * 1 when the constant is proven for these parameters, 0 when configured.
   */
  int32_t constant_proven;
  int32_t has_radius;
  double radius;
  /**
   * -1 when not applicable.
   */
  int32_t absence_satisfied;
  double absence_margin;
} LsDisk;

typedef struct LsEigenvalue {
  double re;
  double im;
  double residual;
} LsEigenvalue;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ls_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t ls_last_error_message(char *buf, size_t len);

/**
 * # Safety
 * `out_grid` must be valid for writes.
 */
enum LsStatus ls_grid_new(size_t dim, size_t n, double length, struct LsGrid **out_grid);

/**
 * Number of grid points, `n^dim`; 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t ls_grid_len(const struct LsGrid *grid);

/**
 * # Safety
 * `grid` must be null or a handle from [`ls_grid_new`] not yet freed.
 */
void ls_grid_free(struct LsGrid *grid);

/**
 * Samples a potential family described by JSON, e.g.
 * `{"family":"gaussian_scalar","amplitude":1,"width":1}`.
 *
 * # Safety
 * `grid` must be a live handle, `json` a NUL-terminated string and
 * `out_potential` valid for writes.
 */
enum LsStatus ls_potential_from_json(const struct LsGrid *grid,
                                     const char *json,
                                     struct LsPotential **out_potential);

/**
 * Builds a potential from `len = n^dim · dim²` entries, each point's matrix
 * stored row-major.
 *
 * # Safety
 * `entries` must be valid for `len` reads and `out_potential` for writes.
 */
enum LsStatus ls_potential_from_entries(const struct LsGrid *grid,
                                        const struct LsComplex *entries,
                                        size_t len,
                                        struct LsPotential **out_potential);

/**
 * Loads a matrix field from a binary field file.
 *
 * # Safety
 * `path` must be NUL-terminated and `out_potential` valid for writes.
 */
enum LsStatus ls_potential_load(const char *path, struct LsPotential **out_potential);

/**
 * # Safety
 * `potential` must be null or a live handle.
 */
void ls_potential_free(struct LsPotential *potential);

/**
 * `‖ |V|₂ ‖_{L^p}` of the pointwise operator norm.
 *
 * # Safety
 * `potential` must be a live handle and `out_norm` valid for writes.
 */
enum LsStatus ls_potential_lp_norm(const struct LsPotential *potential, double p, double *out_norm);

/**
 * Power-iteration estimate of the Birman–Schwinger norm at `z`.
 * `max_iter = 0` selects the library default.
 *
 * # Safety
 * `potential` must be a live handle; `out_estimate` valid for writes and
 * `out_iterations` null or valid for writes.
 */
enum LsStatus ls_bs_norm(const struct LsPotential *potential,
                         double lambda,
                         double mu,
                         struct LsComplex z,
                         double tol,
                         size_t max_iter,
                         double *out_estimate,
                         size_t *out_iterations);

/**
 * Enclosure disk or absence predicate for a norm value. `configured_constant`
 * is used whenever no proven constant exists for the parameters.
 *
 * # Safety
 * `out_disk` must be valid for writes.
 */
enum LsStatus ls_enclosure_disk(enum LsBoundKind kind,
                                double gamma,
                                size_t d,
                                double p,
                                double lambda,
                                double mu,
                                double configured_constant,
                                double norm_value,
                                struct LsDisk *out_disk);

/**
 * Whether `z` is compatible with the disk inflated by `tol`: 1 or 0.
 *
 * # Safety
 * `disk` must be null or point to a valid [`LsDisk`]; null yields 0.
 */
int32_t ls_disk_admits(const struct LsDisk *disk, struct LsComplex z, double tol);

/**
 * Applies the free resolvent `(-Δ* - z)^{-1}` to a vector field of
 * `n^dim · dim` interleaved values, writing the same number to `out_values`.
 *
 * # Safety
 * `values` and `out_values` must be valid for `len` elements.
 */
enum LsStatus ls_free_resolvent_apply(const struct LsGrid *grid,
                                      const struct LsComplex *values,
                                      size_t len,
                                      struct LsComplex z,
                                      double lambda,
                                      double mu,
                                      struct LsComplex *out_values);

/**
 * Dense eigenvalues of the discretized operator `-Δ* + V`. Fails with
 * [`LsStatus::TooLarge`] when `n^dim · dim` exceeds `dense_cap`
 * (0 selects the library default).
 *
 * # Safety
 * `potential` must be a live handle and `out_spectrum` valid for writes.
 */
enum LsStatus ls_spectrum_compute(const struct LsPotential *potential,
                                  double lambda,
                                  double mu,
                                  size_t dense_cap,
                                  struct LsSpectrum **out_spectrum);

/**
 * # Safety
 * `spectrum` must be null or a live handle.
 */
size_t ls_spectrum_len(const struct LsSpectrum *spectrum);

/**
 * Copies up to `capacity` eigenvalues, sorted by real then imaginary part.
 * Returns [`LsStatus::BufferTooSmall`] (after copying) if the spectrum is longer.
 *
 * # Safety
 * `out_values` must be valid for `capacity` writes.
 */
enum LsStatus ls_spectrum_values(const struct LsSpectrum *spectrum,
                                 struct LsEigenvalue *out_values,
                                 size_t capacity);

/**
 * # Safety
 * `spectrum` must be null or a live handle.
 */
void ls_spectrum_free(struct LsSpectrum *spectrum);

/**
 * Runs one verification suite by name with default settings and the given
 * seed; `out_passed` receives 1 or 0.
 *
 * # Safety
 * `suite` must be NUL-terminated and `out_passed` valid for writes.
 */
enum LsStatus ls_verify_suite(const char *suite, uint64_t seed, int32_t *out_passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LAME_SPECTRA_H */
