#ifndef GINI_RL_H
#define GINI_RL_H

/* Generated by cbindgen from gini-rl-ffi; do not edit by hand. */

#include <stdint.h>
#include <stddef.h>
#include <stdbool.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum {
  GINI_RL_OK = 0,
  GINI_RL_NULL_POINTER = 1,
  GINI_RL_INVALID_ARGUMENT = 2,
  GINI_RL_NUMERIC_ERROR = 3,
} gini_rl_status;

/**
 * Opaque exact finite distribution.
 */
typedef struct gini_rl_dist gini_rl_dist;

/**
 * Opaque guarded-maze environment with its RNG stream.
 */
typedef struct gini_rl_maze gini_rl_maze;

/**
 * Closed-form MVPI quantities of the guarded maze.
 */
typedef struct {
  double y;
  double modified_goal;
  double modified_red_mean;
  double random_walk_return;
  double safe_path_return;
} gini_rl_mvpi_analysis;

/**
 * Result of one maze step.
 */
typedef struct {
  uint32_t next_state;
  double reward;
  uint8_t done;
  uint8_t visited_red;
  double x_position;
} gini_rl_step_result;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static name of a status code.
 */
const char *gini_rl_status_name(gini_rl_status status);

/**
 * Empirical Gini deviation `(1/2n^2) sum_ij |x_i - x_j|` of `values`.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `out` must be writable.
 */
gini_rl_status gini_rl_gd_pairwise(const double *values, uintptr_t len, double *out);

/**
 * Gini deviation through the step-quantile form; `values` must be sorted
 * non-decreasing.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `out` must be writable.
 */
gini_rl_status gini_rl_gd_quantile(const double *values, uintptr_t len, double *out);

/**
 * Population variance of `values`.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `out` must be writable.
 */
gini_rl_status gini_rl_variance(const double *values, uintptr_t len, double *out);

/**
 * Eta-weights of `len` sorted returns; writes `len - 1` doubles to `out`.
 *
 * # Safety
 * `sorted_returns` must point to `len` readable doubles and `out` to
 * `len - 1` writable doubles.
 */
gini_rl_status gini_rl_eta_weights(const double *sorted_returns, uintptr_t len, double *out);

/**
 * `r - lambda r^2 + 2 lambda r y`.
 */
double gini_rl_mvpi_reward_modification(double r, double y, double lambda);

/**
 * Fills `out` with the MVPI maze analysis for the given parameters.
 *
 * # Safety
 * `out` must point to writable space for one `gini_rl_mvpi_analysis`.
 */
gini_rl_status gini_rl_mvpi_maze_analysis(double goal_reward,
                                          double lambda,
                                          double gamma,
                                          uint32_t max_len,
                                          gini_rl_mvpi_analysis *out);

/**
 * Builds a distribution from parallel `values`/`probs` arrays. Values are
 * sorted and merged internally; weights must be non-negative and are
 * normalized to probabilities.
 *
 * # Safety
 * `values` and `probs` must each point to `len` readable doubles; `out`
 * must be writable. A non-null result must be released with
 * [`gini_rl_dist_free`].
 */
gini_rl_status gini_rl_dist_new(const double *values,
                                const double *probs,
                                uintptr_t len,
                                gini_rl_dist **out);

/**
 * Releases a distribution handle; a null pointer is ignored.
 *
 * # Safety
 * `dist` must be null or a pointer obtained from [`gini_rl_dist_new`] that
 * has not been freed yet.
 */
void gini_rl_dist_free(gini_rl_dist *dist);

/**
 * Creates the canonical guarded maze with the given goal reward. The seed
 * fixes the reward stream; identical seeds and action sequences reproduce
 * identical rewards.
 *
 * # Safety
 * `out` must be writable. A non-null result must be released with
 * [`gini_rl_maze_free`].
 */
gini_rl_status gini_rl_maze_new(double goal_reward, uint64_t seed, gini_rl_maze **out);

/**
 * Releases a maze handle; a null pointer is ignored.
 *
 * # Safety
 * `maze` must be null or a pointer obtained from [`gini_rl_maze_new`] that
 * has not been freed yet.
 */
void gini_rl_maze_free(gini_rl_maze *maze);

/**
 * Starts a new episode; writes the initial state index.
 *
 * # Safety
 * `maze` must be a live handle; `state_out` must be writable.
 */
gini_rl_status gini_rl_maze_reset(gini_rl_maze *maze, uint32_t *state_out);

/**
 * Takes one step. Actions: 0 up, 1 down, 2 left, 3 right.
 *
 * # Safety
 * `maze` must be a live handle; `out` must be writable.
 */
gini_rl_status gini_rl_maze_step(gini_rl_maze *maze, uint32_t action, gini_rl_step_result *out);

/**
 * Number of maze states (36 in the canonical layout).
 */
uint32_t gini_rl_maze_n_states(void);

/**
 * Exact discounted return of the canonical safe path at the given goal
 * reward.
 */
double gini_rl_maze_safe_path_return(double goal_reward);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GINI_RL_H */
