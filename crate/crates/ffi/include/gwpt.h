#ifndef GWPT_H
#define GWPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum GwptStatus {
  GWPT_STATUS_OK = 0,
  GWPT_STATUS_NULL_POINTER = 1,
  GWPT_STATUS_INVALID_ARGUMENT = 2,
  GWPT_STATUS_CONFIG = 3,
  GWPT_STATUS_ODE = 4,
  GWPT_STATUS_WPROP = 5,
  GWPT_STATUS_RECONSTRUCT = 6,
  GWPT_STATUS_REFERENCE = 7,
  GWPT_STATUS_STATS = 8,
  GWPT_STATUS_CLASSICAL = 9,
  GWPT_STATUS_OUTPUT = 10,
  GWPT_STATUS_BUFFER_TOO_SMALL = 11,
  GWPT_STATUS_PANIC = 12,
} GwptStatus;

/**
 * Probability law of the random variable.
 */
typedef enum GwptDistribution {
  GWPT_DISTRIBUTION_UNIFORM = 0,
  GWPT_DISTRIBUTION_STANDARD_NORMAL = 1,
} GwptDistribution;

/**
 * Opaque experiment configuration.
 */
typedef struct GwptConfig GwptConfig;

/**
 * Opaque result of a reconstructed GWPT run.
 */
typedef struct GwptRun GwptRun;

/**
 * Relative errors of a GWPT run against the reference solver.
 */
typedef struct GwptErrors {
  double er_psi;
  double er1_j;
  double er2_j;
} GwptErrors;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *gwpt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gwpt_version(void);

/**
 * Nodes and probability weights of the `n`-point Gauss rule.
 *
 * # Safety
 * `nodes` and `weights` must each point to `n` writable doubles.
 */
enum GwptStatus gwpt_gauss_rule(enum GwptDistribution dist,
                                size_t n,
                                double *nodes,
                                double *weights);

/**
 * Preset configuration for a named test (`a1i`, `a1ii`, `a2`, `a3`, `a4`,
 * `b`, `c`, `d`) at the given ε.
 *
 * # Safety
 * `test` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GwptStatus gwpt_config_preset(const char *test, double eps, struct GwptConfig **out);

/**
 * Configuration from a JSON document (fields override the named preset).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum GwptStatus gwpt_config_from_json(const char *json, struct GwptConfig **out);

/**
 * Set the collocation sizes per axis for the levels M1 to M4.
 *
 * # Safety
 * `cfg` must come from a `gwpt_config_*` constructor.
 */
enum GwptStatus gwpt_config_set_nodes(struct GwptConfig *cfg,
                                      size_t nz1,
                                      size_t nz2,
                                      size_t nz3,
                                      size_t nz4);

/**
 * Set the final time.
 *
 * # Safety
 * `cfg` must come from a `gwpt_config_*` constructor.
 */
enum GwptStatus gwpt_config_set_final_time(struct GwptConfig *cfg, double t_final);

/**
 * Release a configuration. Null is ignored.
 *
 * # Safety
 * `cfg` must be null or come from a `gwpt_config_*` constructor, and must
 * not be used afterwards.
 */
void gwpt_config_free(struct GwptConfig *cfg);

/**
 * Run GWPT through reconstruction.
 *
 * # Safety
 * `cfg` must be a live configuration and `out` a valid pointer.
 */
enum GwptStatus gwpt_run(const struct GwptConfig *cfg, struct GwptRun **out);

/**
 * Number of reconstruction nodes (M3) of a run, or 0 for null.
 *
 * # Safety
 * `run` must be null or a live run.
 */
size_t gwpt_run_node_count(const struct GwptRun *run);

/**
 * Number of x grid points of a run, or 0 for null.
 *
 * # Safety
 * `run` must be null or a live run.
 */
size_t gwpt_run_x_len(const struct GwptRun *run);

/**
 * Real and imaginary parts of ψ at one node.
 *
 * # Safety
 * `re` and `im` must each point to `len` writable doubles.
 */
enum GwptStatus gwpt_run_psi(const struct GwptRun *run,
                             size_t node,
                             double *re,
                             double *im,
                             size_t len);

/**
 * Mean and standard deviation of the position density (`which = 0`) or
 * the current (`which = 1`) over the random variable.
 *
 * # Safety
 * `mean` and `sd` must each point to `len` writable doubles.
 */
enum GwptStatus gwpt_run_profile(const struct GwptRun *run,
                                 uint32_t which,
                                 double *mean,
                                 double *sd,
                                 size_t len);

/**
 * Release a run. Null is ignored.
 *
 * # Safety
 * `run` must be null or come from `gwpt_run`, and must not be used afterwards.
 */
void gwpt_run_free(struct GwptRun *run);

/**
 * Run GWPT and the reference solver and compare them on M3.
 *
 * # Safety
 * `cfg` must be a live configuration and `out` a valid pointer.
 */
enum GwptStatus gwpt_compare(const struct GwptConfig *cfg, struct GwptErrors *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GWPT_H */
