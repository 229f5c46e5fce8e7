#ifndef POTMMCP_H
#define POTMMCP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PotmmcpStatus {
  POTMMCP_STATUS_OK = 0,
  POTMMCP_STATUS_NULL_POINTER = 1,
  POTMMCP_STATUS_INVALID_ARGUMENT = 2,
  POTMMCP_STATUS_CONFIG = 3,
  POTMMCP_STATUS_VALIDATION = 4,
  POTMMCP_STATUS_UNKNOWN_POLICY = 5,
  POTMMCP_STATUS_DEPLETION = 6,
  POTMMCP_STATUS_CAP_EXCEEDED = 7,
  POTMMCP_STATUS_IO = 8,
  POTMMCP_STATUS_UNSUPPORTED = 9,
  POTMMCP_STATUS_PANIC = 10,
} PotmmcpStatus;

/**
 * Softmax meta-policy over a payoff table.
 */
typedef struct PotmmcpMetaPolicy PotmmcpMetaPolicy;

/**
 * An interactive planner on a tiny game, whose observations are integers.
 */
typedef struct PotmmcpPlanner PotmmcpPlanner;

/**
 * An evaluation problem built from a run configuration.
 */
typedef struct PotmmcpSession PotmmcpSession;

typedef struct PotmmcpSummary {
  uintptr_t episodes;
  double mean_return;
  double ci95;
  double mean_steps;
  double mean_max_depth;
  double mean_prob_true_type;
} PotmmcpSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t potmmcp_last_error_message(char *buf, uintptr_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *potmmcp_version(void);

/**
 * Build `σ^τ` from a payoff table in JSON. A negative or infinite `tau`
 * gives the uniform meta-policy.
 *
 * # Safety
 * `payoffs_json` must be a NUL-terminated string; `out` must be writable.
 */
enum PotmmcpStatus potmmcp_meta_policy_from_payoffs(const char *payoffs_json,
                                                    double tau,
                                                    struct PotmmcpMetaPolicy **out);

/**
 * Number of joint policies (rows) and candidates (columns).
 *
 * # Safety
 * `meta` must be a live handle; the outputs must be writable.
 */
enum PotmmcpStatus potmmcp_meta_policy_shape(struct PotmmcpMetaPolicy *meta,
                                             uintptr_t *joints,
                                             uintptr_t *candidates);

/**
 * `σ(candidate | joint)`.
 *
 * # Safety
 * `meta` must be a live handle; `out` must be writable.
 */
enum PotmmcpStatus potmmcp_meta_policy_prob(struct PotmmcpMetaPolicy *meta,
                                            uintptr_t joint,
                                            uintptr_t candidate,
                                            double *out);

/**
 * # Safety
 * `meta` must be null or a handle not yet freed.
 */
void potmmcp_meta_policy_free(struct PotmmcpMetaPolicy *meta);

/**
 * Build the environment, policy set and payoff table of a JSON run
 * configuration.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out` must be writable.
 */
enum PotmmcpStatus potmmcp_session_new(const char *config_json, struct PotmmcpSession **out);

/**
 * Run `episodes` episodes with seed `seed` and summarise the planner's
 * returns. Writes no files.
 *
 * # Safety
 * `session` must be a live handle; `out` must be writable.
 */
enum PotmmcpStatus potmmcp_session_evaluate(struct PotmmcpSession *session,
                                            uintptr_t episodes,
                                            uint64_t seed,
                                            struct PotmmcpSummary *out);

/**
 * # Safety
 * `session` must be null or a handle not yet freed.
 */
void potmmcp_session_free(struct PotmmcpSession *session);

/**
 * Build a planner from a JSON run configuration whose environment is a
 * tiny instance.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out` must be writable.
 */
enum PotmmcpStatus potmmcp_planner_new(const char *config_json,
                                       uint64_t seed,
                                       struct PotmmcpPlanner **out);

/**
 * Start an episode after the planner's initial observation.
 *
 * # Safety
 * `planner` must be a live handle.
 */
enum PotmmcpStatus potmmcp_planner_reset(struct PotmmcpPlanner *planner, uintptr_t initial_obs);

/**
 * Search from the current root and write the chosen action.
 *
 * # Safety
 * `planner` must be a live handle; `action` must be writable.
 */
enum PotmmcpStatus potmmcp_planner_search(struct PotmmcpPlanner *planner, uintptr_t *action);

/**
 * Root value estimate of the last search.
 *
 * # Safety
 * `planner` must be a live handle; `value` must be writable.
 */
enum PotmmcpStatus potmmcp_planner_root_value(struct PotmmcpPlanner *planner, double *value);

/**
 * Move the root to the child reached by `action` and `obs`.
 *
 * # Safety
 * `planner` must be a live handle.
 */
enum PotmmcpStatus potmmcp_planner_advance(struct PotmmcpPlanner *planner,
                                           uintptr_t action,
                                           uintptr_t obs);

/**
 * # Safety
 * `planner` must be null or a handle not yet freed.
 */
void potmmcp_planner_free(struct PotmmcpPlanner *planner);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POTMMCP_H */
