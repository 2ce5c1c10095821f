/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef TRIFREE_H
#define TRIFREE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum TrifreeStatus {
  TRIFREE_STATUS_OK = 0,
  TRIFREE_STATUS_NULL_POINTER = 1,
  TRIFREE_STATUS_INVALID_ARGUMENT = 2,
  TRIFREE_STATUS_PRECONDITION = 3,
  TRIFREE_STATUS_TERMINATED = 4,
  TRIFREE_STATUS_REFUSED = 5,
  TRIFREE_STATUS_PARSE = 6,
  TRIFREE_STATUS_IO = 7,
  TRIFREE_STATUS_INTERNAL = 8,
} TrifreeStatus;

/**
 * Named variables accepted by [`trifree_scaling`].
 */
typedef enum TrifreeVariable {
  TRIFREE_VARIABLE_Q = 0,
  TRIFREE_VARIABLE_R = 1,
  TRIFREE_VARIABLE_S = 2,
  TRIFREE_VARIABLE_XUV = 3,
  TRIFREE_VARIABLE_YUV = 4,
  TRIFREE_VARIABLE_XU = 5,
  TRIFREE_VARIABLE_YU = 6,
} TrifreeVariable;

/**
 * An opaque process run.
 */
typedef struct TrifreeProcess TrifreeProcess;

/**
 * Counters of a process handle.
 */
typedef struct TrifreeCounts {
  uint32_t n;
  uint64_t steps;
  uint64_t edges;
  uint64_t open;
  uint64_t closed;
} TrifreeCounts;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. Valid until
 * the next call into this library on the same thread.
 */
const char *trifree_last_error(void);

/**
 * Starts a run on `n` vertices with `seed`; stores the handle in `*out`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum TrifreeStatus trifree_process_new(uint32_t n, uint64_t seed, struct TrifreeProcess **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `p` must be null or a handle from [`trifree_process_new`] not yet freed.
 */
void trifree_process_free(struct TrifreeProcess *p);

/**
 * Adds one uniformly random open pair and reports it in `*u < *v`.
 * Returns `TRIFREE_TERMINATED` when no open pair remains.
 *
 * # Safety
 * `p` must be a live handle; `u` and `v` may be null.
 */
enum TrifreeStatus trifree_process_step(struct TrifreeProcess *p, uint32_t *u, uint32_t *v);

/**
 * Runs to termination; writes the final edge count to `*edges` if non-null.
 *
 * # Safety
 * `p` must be a live handle.
 */
enum TrifreeStatus trifree_process_run(struct TrifreeProcess *p, uint64_t *edges);

/**
 * Status of pair `{u, v}`: 0 open, 1 edge, 2 closed.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum TrifreeStatus trifree_process_status(const struct TrifreeProcess *p,
                                          uint32_t u,
                                          uint32_t v,
                                          uint32_t *out);

/**
 * Current counters.
 *
 * # Safety
 * `p` must be a live handle and `out` writable.
 */
enum TrifreeStatus trifree_process_counts(const struct TrifreeProcess *p,
                                          struct TrifreeCounts *out);

/**
 * Writes the edge list (`u v` per line, insertion order) to `path`.
 *
 * # Safety
 * `p` must be a live handle and `path` a nul-terminated string.
 */
enum TrifreeStatus trifree_process_write_edges(const struct TrifreeProcess *p, const char *path);

/**
 * Number of embeddings of stacking word `word` rooted at `(u, v)` in the
 * current graph.
 *
 * # Safety
 * `p` must be a live handle, `word` nul-terminated and `out` writable.
 */
enum TrifreeStatus trifree_stacking_count(const struct TrifreeProcess *p,
                                          const char *word,
                                          uint32_t u,
                                          uint32_t v,
                                          uint64_t *out);

/**
 * Weights `w1` and `w2` of a stacking word.
 *
 * # Safety
 * `word` must be nul-terminated; `w1`, `w2` writable.
 */
enum TrifreeStatus trifree_stacking_weights(const char *word, uint32_t *w1, uint32_t *w2);

/**
 * Scaling of a named variable at size `n` and time `t`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TrifreeStatus trifree_scaling(enum TrifreeVariable kind, double n, double t, double *out);

/**
 * Largest tracked time for size `n` and exponent slack `epsilon`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TrifreeStatus trifree_t_max(double n, double epsilon, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRIFREE_H */
