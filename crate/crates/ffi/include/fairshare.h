#ifndef FAIRSHARE_H
#define FAIRSHARE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  FS_MODE_EXACT = 0,
  FS_MODE_FLOAT = 1,
} FsMode;

typedef enum {
  FS_STATUS_OK = 0,
  FS_STATUS_NULL_POINTER = 1,
  FS_STATUS_INVALID_ARGUMENT = 2,
  FS_STATUS_PARSE = 3,
  FS_STATUS_SOLVER = 4,
  FS_STATUS_IO = 5,
  FS_STATUS_PANIC = 6,
} FsStatus;

typedef enum {
  FS_SHARE_KIND_PROP = 0,
  FS_SHARE_KIND_CCS = 1,
  FS_SHARE_KIND_EF = 2,
  FS_SHARE_KIND_EFS = 3,
  FS_SHARE_KIND_EFS_DELTA = 4,
} FsShareKind;

/**
 * Opaque instance handle.
 */
typedef struct FsInstance FsInstance;

/**
 * Opaque share-vector handle.
 */
typedef struct FsShares FsShares;

/**
 * Solver and EFS^Δ options. `delta_numer / delta_denom` and `samples` are
 * read only for `FsShareKind::EfsDelta`.
 */
typedef struct {
  FsMode mode;
  double tolerance;
  int64_t delta_numer;
  int64_t delta_denom;
  uint32_t samples;
  uint64_t seed;
} FsOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *fs_last_error(void);

/**
 * Defaults: exact mode, tolerance 1e-9, Δ = 1, 20 samples, seed 0.
 */
FsOptions fs_options_default(void);

/**
 * Builds an instance from `n * m` row-major values; each `f64` is taken exactly.
 *
 * # Safety
 * `values` must point to `n * m` readable doubles; `out` must be writable.
 */
FsStatus fs_instance_new(size_t n, size_t m, const double *values, FsInstance **out);

/**
 * Parses instance CSV text (header row, one row per agent).
 *
 * # Safety
 * `csv` must be a nul-terminated string; `out` must be writable.
 */
FsStatus fs_instance_from_csv(const char *csv, FsInstance **out);

/**
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
FsStatus fs_instance_load(const char *path, FsInstance **out);

/**
 * # Safety
 * `inst` must be null or a handle from this library that was not yet freed.
 */
void fs_instance_free(FsInstance *inst);

/**
 * Number of agents, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t fs_instance_agents(const FsInstance *inst);

/**
 * Number of items, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t fs_instance_items(const FsInstance *inst);

/**
 * # Safety
 * `inst` must be a live handle, `options` null or readable (null means
 * defaults), `out` writable.
 */
FsStatus fs_shares_compute(const FsInstance *inst,
                           FsShareKind kind,
                           const FsOptions *options,
                           FsShares **out);

/**
 * # Safety
 * `shares` must be null or a live handle.
 */
void fs_shares_free(FsShares *shares);

/**
 * # Safety
 * `shares` must be null or a live handle.
 */
size_t fs_shares_len(const FsShares *shares);

/**
 * Share of `agent` rounded to the nearest double.
 *
 * # Safety
 * `shares` must be a live handle and `out` writable.
 */
FsStatus fs_shares_get(const FsShares *shares, size_t agent, double *out);

/**
 * Exact share of `agent` as `"p/q"`; free it with `fs_string_free`.
 *
 * # Safety
 * `shares` must be a live handle and `out` writable.
 */
FsStatus fs_shares_get_exact(const FsShares *shares, size_t agent, char **out);

/**
 * Optimal θ for `shares` on `inst`. `*unconstrained` is set when every
 * share is zero, in which case `*theta` is infinity.
 *
 * # Safety
 * Handles must be live; `options` null or readable; outputs writable.
 */
FsStatus fs_optimal_theta(const FsInstance *inst,
                          const FsShares *shares,
                          const FsOptions *options,
                          double *theta,
                          bool *unconstrained);

/**
 * Runs the projective-plane lower-bound check for prime `q`.
 *
 * # Safety
 * `options` must be null or readable; `passed` writable.
 */
FsStatus fs_certify_plane(size_t q, const FsOptions *options, bool *passed);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void fs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAIRSHARE_H */
