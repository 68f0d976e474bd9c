#ifndef HINTBID_H
#define HINTBID_H

/* Generated with cbindgen:0.27.0 */

/* Generated by cbindgen from the hintbid-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Hindsight oracle selector for [`hb_regret`].
 */
typedef enum HbOracle {
  /**
   * Best constant bid (stream may have varying values).
   */
  HB_ORACLE_CONSTANT = 0,
  /**
   * Best monotone 1-Lipschitz grid function (200 value bins, 1000-point
   * bid grid).
   */
  HB_ORACLE_LIPSCHITZ = 1,
  /**
   * Best monotone step function over the distinct observed `m` values.
   */
  HB_ORACLE_SPARSE = 2,
} HbOracle;

/**
 * Status code of every fallible FFI call.
 */
typedef enum HbStatus {
  HB_STATUS_OK = 0,
  HB_STATUS_NULL_POINTER = 1,
  HB_STATUS_INVALID_UTF8 = 2,
  HB_STATUS_INVALID_ARGUMENT = 3,
  HB_STATUS_RUNTIME_ERROR = 4,
  HB_STATUS_BUFFER_TOO_SMALL = 5,
} HbStatus;

/**
 * Opaque auction stream handle.
 */
typedef struct HbStream HbStream;

/**
 * Opaque policy trajectory handle.
 */
typedef struct HbTrajectory HbTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the calling thread's most recent failure. Valid until the
 * next failing call on the same thread; never null.
 */
const char *hb_last_error(void);

/**
 * Final regret of a trajectory against a hindsight oracle on the same
 * stream.
 *
 * # Safety
 * Pointers must be valid; the trajectory must come from this stream.
 */
enum HbStatus hb_regret(const struct HbStream *stream,
                        const struct HbTrajectory *traj,
                        enum HbOracle oracle,
                        double *out);

/**
 * Run an algorithm over the stream. `algorithm_toml` is a TOML table with a
 * `kind` key (`alg1`, `single_hint`, `sparse_dp`, `meta`, `doubling_meta`,
 * `no_hint`, `bid_hint_only`, `binned`); omitted fields take the documented
 * defaults. Deterministic given the seed.
 *
 * # Safety
 * Pointers must be valid; `algorithm_toml` NUL-terminated.
 */
enum HbStatus hb_run(const struct HbStream *stream,
                     const char *algorithm_toml,
                     uint64_t seed,
                     struct HbTrajectory **out);

/**
 * Whether the stream satisfies its declared hint-accuracy moment bound
 * (sample-mean for finite q, pointwise for q = inf).
 *
 * # Safety
 * Pointers must be valid.
 */
enum HbStatus hb_stream_check_moment(const struct HbStream *stream, bool *pass);

/**
 * Free a stream handle; null is a no-op.
 *
 * # Safety
 * `stream` must have come from this library and not been freed before.
 */
void hb_stream_free(struct HbStream *stream);

/**
 * Load a `v,m,h,sigma` CSV file into a stream handle. Rows outside `[0,1]`
 * or with `v <= m` are pruned like the CLI loader.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HbStatus hb_stream_from_csv(const char *path, bool sigma_visible, struct HbStream **out);

/**
 * Build a synthetic stream from a TOML table with a `family` key
 * (`two_point`, `single_hint_lb`, `blocks`, `sparse`).
 *
 * # Safety
 * `spec_toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HbStatus hb_stream_generate(const char *spec_toml, struct HbStream **out);

/**
 * Number of rounds in the stream.
 *
 * # Safety
 * Pointers must be valid.
 */
enum HbStatus hb_stream_len(const struct HbStream *stream, size_t *out);

/**
 * Copy per-round bids and rewards into caller buffers. Either buffer may be
 * null to skip it; `cap` is the capacity of each non-null buffer and
 * `written` receives the number of rounds copied.
 *
 * # Safety
 * Non-null buffers must hold at least `cap` doubles.
 */
enum HbStatus hb_trajectory_copy(const struct HbTrajectory *traj,
                                 double *bids,
                                 double *rewards,
                                 size_t cap,
                                 size_t *written);

/**
 * Total reward of the trajectory.
 *
 * # Safety
 * Pointers must be valid.
 */
enum HbStatus hb_trajectory_cumulative_reward(const struct HbTrajectory *traj, double *out);

/**
 * Free a trajectory handle; null is a no-op.
 *
 * # Safety
 * `traj` must have come from this library and not been freed before.
 */
void hb_trajectory_free(struct HbTrajectory *traj);

/**
 * Number of rounds in the trajectory.
 *
 * # Safety
 * Pointers must be valid.
 */
enum HbStatus hb_trajectory_len(const struct HbTrajectory *traj, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HINTBID_H */
