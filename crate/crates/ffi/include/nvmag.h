#ifndef NVMAG_H
#define NVMAG_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NvmagStatus {
  NVMAG_STATUS_OK = 0,
  NVMAG_STATUS_NULL_POINTER = 1,
  NVMAG_STATUS_INVALID_INPUT = 2,
  NVMAG_STATUS_PARSE = 3,
  NVMAG_STATUS_IO = 4,
  NVMAG_STATUS_NUMERICAL = 5,
  NVMAG_STATUS_OUT_OF_RANGE = 6,
  NVMAG_STATUS_PANIC = 7,
} NvmagStatus;

/**
 * Opaque PL map.
 */
typedef struct NvmagPlMap NvmagPlMap;

/**
 * Opaque posterior.
 */
typedef struct NvmagPosterior NvmagPosterior;

/**
 * Crystal orientation angles in radians.
 */
typedef struct NvmagOrientation {
  double alpha;
  double beta;
  double zeta;
} NvmagOrientation;

/**
 * External field: axial component and in-plane magnitude in tesla, in-plane
 * azimuth in radians.
 */
typedef struct NvmagField {
  double b_z;
  double b_perp;
  double phi0;
} NvmagField;

/**
 * Lorentzian half width (tesla) and contrast; default weights.
 */
typedef struct NvmagLineshape {
  double gamma;
  double contrast;
} NvmagLineshape;

/**
 * PL noise (dimensionless), bias uncertainty (tesla), angle uncertainty (radians).
 */
typedef struct NvmagNoise {
  double sigma_noise;
  double sigma_bias;
  double sigma_phi;
} NvmagNoise;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL terminated,
 * truncated to `len`). Returns the full message length in bytes excluding
 * the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t nvmag_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *nvmag_version(void);

/**
 * Normalized PL at one bias field and rotation angle.
 *
 * # Safety
 * Pointer arguments must be null or valid.
 */
enum NvmagStatus nvmag_pl_value(double b_bias,
                                double phi,
                                const struct NvmagOrientation *orientation,
                                const struct NvmagField *field,
                                const struct NvmagLineshape *lineshape,
                                double *out);

/**
 * Noise-free PL map on a uniform grid: `n_bias` points spanning
 * `[bias_min, bias_max]` tesla and `n_phi` angles over one turn.
 *
 * # Safety
 * Pointer arguments must be null or valid; `*out` receives a new handle.
 */
enum NvmagStatus nvmag_simulate(double bias_min,
                                double bias_max,
                                size_t n_bias,
                                size_t n_phi,
                                const struct NvmagOrientation *orientation,
                                const struct NvmagField *field,
                                const struct NvmagLineshape *lineshape,
                                struct NvmagPlMap **out);

/**
 * Reads a map file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `*out` receives a new handle.
 */
enum NvmagStatus nvmag_plmap_read(const char *path, struct NvmagPlMap **out);

/**
 * # Safety
 * `map` must be a live handle and `path` a NUL-terminated string.
 */
enum NvmagStatus nvmag_plmap_write(const struct NvmagPlMap *map, const char *path);

/**
 * # Safety
 * `map` must be a live handle; the outputs must be null or valid.
 */
enum NvmagStatus nvmag_plmap_dims(const struct NvmagPlMap *map, size_t *n_bias, size_t *n_phi);

/**
 * Copies the PL values, angle-major (`values[i_phi * n_bias + i_bias]`),
 * into `buf`, which must hold `n_bias * n_phi` doubles.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum NvmagStatus nvmag_plmap_values(const struct NvmagPlMap *map, double *buf, size_t len);

/**
 * # Safety
 * `map` must be null or a handle not yet freed.
 */
void nvmag_plmap_free(struct NvmagPlMap *map);

/**
 * Orientation posterior over the default angle grid for a known field.
 *
 * # Safety
 * Pointer arguments must be null or valid; `*out` receives a new handle.
 */
enum NvmagStatus nvmag_infer_orientation(const struct NvmagPlMap *map,
                                         const struct NvmagField *field,
                                         const struct NvmagLineshape *lineshape,
                                         const struct NvmagNoise *noise,
                                         struct NvmagPosterior **out);

/**
 * Field posterior over the default field grid for a known orientation.
 *
 * # Safety
 * Pointer arguments must be null or valid; `*out` receives a new handle.
 */
enum NvmagStatus nvmag_infer_field(const struct NvmagPlMap *map,
                                   const struct NvmagOrientation *orientation,
                                   const struct NvmagLineshape *lineshape,
                                   const struct NvmagNoise *noise,
                                   struct NvmagPosterior **out);

/**
 * Number of posterior modes.
 *
 * # Safety
 * `post` must be a live handle.
 */
enum NvmagStatus nvmag_posterior_n_modes(const struct NvmagPosterior *post, size_t *out);

/**
 * MAP point, marginal standard deviations and log evidence. Any output
 * pointer may be null; arrays hold three values in parameter order.
 *
 * # Safety
 * `post` must be a live handle; non-null outputs must be writable.
 */
enum NvmagStatus nvmag_posterior_summary(const struct NvmagPosterior *post,
                                         double *map_estimate,
                                         double *std,
                                         double *log_evidence);

/**
 * Location, width and probability mass of mode `index`.
 *
 * # Safety
 * `post` must be a live handle; non-null outputs must be writable.
 */
enum NvmagStatus nvmag_posterior_mode(const struct NvmagPosterior *post,
                                      size_t index,
                                      double *point,
                                      double *std,
                                      double *mass_fraction);

/**
 * # Safety
 * `post` must be null or a handle not yet freed.
 */
void nvmag_posterior_free(struct NvmagPosterior *post);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NVMAG_H */
