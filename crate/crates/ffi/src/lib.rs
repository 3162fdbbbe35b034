//! C ABI for the gini-rl toolkit.
//!
//! Plain-array entry points for the Gini-deviation estimators and
//! eta-weights, plus opaque handles for exact finite distributions and the
//! guarded-maze environment. Every fallible function returns a
//! [`gini_rl_status`]; outputs travel through caller-provided pointers.
//!
//! The generated header is written to `include/gini_rl.h` at build time.

#![allow(non_camel_case_types)]

use std::os::raw::c_char;

use gini_rl::env::{Environment, GuardedMaze, GuardedMazeConfig};
use gini_rl::gini_grad::eta_weights_from_sorted_returns;
use gini_rl::oracle;
use gini_rl::risk::{
    exact_gd, exact_mean, exact_variance, gd_pairwise, gd_quantile, variance_pairwise,
    CategoricalDist, SampleSet,
};
use gini_rl::rng::{master_rng, Rng};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum gini_rl_status {
    GINI_RL_OK = 0,
    GINI_RL_NULL_POINTER = 1,
    GINI_RL_INVALID_ARGUMENT = 2,
    GINI_RL_NUMERIC_ERROR = 3,
}

use gini_rl_status::*;

fn status_of(err: &gini_rl::Error) -> gini_rl_status {
    match err {
        gini_rl::Error::NonFinite(_) => GINI_RL_NUMERIC_ERROR,
        _ => GINI_RL_INVALID_ARGUMENT,
    }
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn gini_rl_status_name(status: gini_rl_status) -> *const c_char {
    let name: &'static [u8] = match status {
        GINI_RL_OK => b"ok\0",
        GINI_RL_NULL_POINTER => b"null pointer\0",
        GINI_RL_INVALID_ARGUMENT => b"invalid argument\0",
        GINI_RL_NUMERIC_ERROR => b"numeric error\0",
    };
    name.as_ptr() as *const c_char
}

unsafe fn slice_arg<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        return None;
    }
    Some(std::slice::from_raw_parts(ptr, len))
}

/// Empirical Gini deviation `(1/2n^2) sum_ij |x_i - x_j|` of `values`.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gini_rl_gd_pairwise(
    values: *const f64,
    len: usize,
    out: *mut f64,
) -> gini_rl_status {
    let (Some(values), false) = (slice_arg(values, len), out.is_null()) else {
        return GINI_RL_NULL_POINTER;
    };
    match SampleSet::new(values.to_vec()) {
        Ok(s) => {
            *out = gd_pairwise(&s);
            GINI_RL_OK
        }
        Err(e) => status_of(&e),
    }
}

/// Gini deviation through the step-quantile form; `values` must be sorted
/// non-decreasing.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gini_rl_gd_quantile(
    values: *const f64,
    len: usize,
    out: *mut f64,
) -> gini_rl_status {
    let (Some(values), false) = (slice_arg(values, len), out.is_null()) else {
        return GINI_RL_NULL_POINTER;
    };
    let set = match SampleSet::new(values.to_vec()) {
        Ok(s) => s,
        Err(e) => return status_of(&e),
    };
    match gd_quantile(&set) {
        Ok(v) => {
            *out = v;
            GINI_RL_OK
        }
        Err(e) => status_of(&e),
    }
}

/// Population variance of `values`.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gini_rl_variance(
    values: *const f64,
    len: usize,
    out: *mut f64,
) -> gini_rl_status {
    let (Some(values), false) = (slice_arg(values, len), out.is_null()) else {
        return GINI_RL_NULL_POINTER;
    };
    match SampleSet::new(values.to_vec()) {
        Ok(s) => {
            *out = variance_pairwise(&s);
            GINI_RL_OK
        }
        Err(e) => status_of(&e),
    }
}

/// Eta-weights of `len` sorted returns; writes `len - 1` doubles to `out`.
///
/// # Safety
/// `sorted_returns` must point to `len` readable doubles and `out` to
/// `len - 1` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn gini_rl_eta_weights(
    sorted_returns: *const f64,
    len: usize,
    out: *mut f64,
) -> gini_rl_status {
    let (Some(returns), false) = (slice_arg(sorted_returns, len), out.is_null()) else {
        return GINI_RL_NULL_POINTER;
    };
    match eta_weights_from_sorted_returns(returns) {
        Ok(eta) => {
            std::ptr::copy_nonoverlapping(eta.as_ptr(), out, eta.len());
            GINI_RL_OK
        }
        Err(e) => status_of(&e),
    }
}

/// `r - lambda r^2 + 2 lambda r y`.
#[no_mangle]
pub extern "C" fn gini_rl_mvpi_reward_modification(r: f64, y: f64, lambda: f64) -> f64 {
    oracle::mvpi_reward_modification(r, y, lambda)
}

/// Closed-form MVPI quantities of the guarded maze.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct gini_rl_mvpi_analysis {
    pub y: f64,
    pub modified_goal: f64,
    pub modified_red_mean: f64,
    pub random_walk_return: f64,
    pub safe_path_return: f64,
}

/// Fills `out` with the MVPI maze analysis for the given parameters.
///
/// # Safety
/// `out` must point to writable space for one `gini_rl_mvpi_analysis`.
#[no_mangle]
pub unsafe extern "C" fn gini_rl_mvpi_maze_analysis(
    goal_reward: f64,
    lambda: f64,
    gamma: f64,
    max_len: u32,
    out: *mut gini_rl_mvpi_analysis,
) -> gini_rl_status {
    if out.is_null() {
        return GINI_RL_NULL_POINTER;
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return GINI_RL_INVALID_ARGUMENT;
    }
    let a = oracle::mvpi_maze_analysis(goal_reward, lambda, gamma, max_len as usize);
    *out = gini_rl_mvpi_analysis {
        y: a.y,
        modified_goal: a.modified_goal,
        modified_red_mean: a.modified_red_mean,
        random_walk_return: a.random_walk_return,
        safe_path_return: a.safe_path_return,
    };
    GINI_RL_OK
}

/// Opaque exact finite distribution.
pub struct gini_rl_dist {
    inner: CategoricalDist,
}

/// Builds a distribution from parallel `values`/`probs` arrays. Values are
/// sorted and merged internally; weights must be non-negative and are
/// normalized to probabilities.
///
/// # Safety
/// `values` and `probs` must each point to `len` readable doubles; `out`
/// must be writable. A non-null result must be released with
/// [`gini_rl_dist_free`].
#[no_mangle]
pub unsafe extern "C" fn gini_rl_dist_new(
    values: *const f64,
    probs: *const f64,
    len: usize,
    out: *mut *mut gini_rl_dist,
) -> gini_rl_status {
    let (Some(values), Some(probs), false) =
        (slice_arg(values, len), slice_arg(probs, len), out.is_null())
    else {
        return GINI_RL_NULL_POINTER;
    };
    let pairs: Vec<(f64, f64)> = values.iter().copied().zip(probs.iter().copied()).collect();
    match CategoricalDist::from_weighted_values(pairs) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(gini_rl_dist { inner }));
            GINI_RL_OK
        }
        Err(e) => status_of(&e),
    }
}

/// Releases a distribution handle; a null pointer is ignored.
///
/// # Safety
/// `dist` must be null or a pointer obtained from [`gini_rl_dist_new`] that
/// has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn gini_rl_dist_free(dist: *mut gini_rl_dist) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

macro_rules! dist_stat {
    ($name:ident, $fn:path, $doc:literal) => {
        #[doc = $doc]
        ///
        /// # Safety
        /// `dist` must be a live handle from `gini_rl_dist_new`; `out` must
        /// be writable.
        #[no_mangle]
        pub unsafe extern "C" fn $name(dist: *const gini_rl_dist, out: *mut f64) -> gini_rl_status {
            if dist.is_null() || out.is_null() {
                return GINI_RL_NULL_POINTER;
            }
            *out = $fn(&(*dist).inner);
            GINI_RL_OK
        }
    };
}

dist_stat!(gini_rl_dist_mean, exact_mean, "Exact mean of the distribution.");
dist_stat!(gini_rl_dist_variance, exact_variance, "Exact variance of the distribution.");
dist_stat!(gini_rl_dist_gd, exact_gd, "Exact Gini deviation of the distribution.");

/// Result of one maze step.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct gini_rl_step_result {
    pub next_state: u32,
    pub reward: f64,
    pub done: u8,
    pub visited_red: u8,
    pub x_position: f64,
}

/// Opaque guarded-maze environment with its RNG stream.
pub struct gini_rl_maze {
    env: GuardedMaze,
    rng: Rng,
}

/// Creates the canonical guarded maze with the given goal reward. The seed
/// fixes the reward stream; identical seeds and action sequences reproduce
/// identical rewards.
///
/// # Safety
/// `out` must be writable. A non-null result must be released with
/// [`gini_rl_maze_free`].
#[no_mangle]
pub unsafe extern "C" fn gini_rl_maze_new(
    goal_reward: f64,
    seed: u64,
    out: *mut *mut gini_rl_maze,
) -> gini_rl_status {
    if out.is_null() {
        return GINI_RL_NULL_POINTER;
    }
    match GuardedMaze::new(GuardedMazeConfig::with_goal_reward(goal_reward)) {
        Ok(env) => {
            *out = Box::into_raw(Box::new(gini_rl_maze { env, rng: master_rng(seed) }));
            GINI_RL_OK
        }
        Err(e) => status_of(&e),
    }
}

/// Releases a maze handle; a null pointer is ignored.
///
/// # Safety
/// `maze` must be null or a pointer obtained from [`gini_rl_maze_new`] that
/// has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn gini_rl_maze_free(maze: *mut gini_rl_maze) {
    if !maze.is_null() {
        drop(Box::from_raw(maze));
    }
}

/// Starts a new episode; writes the initial state index.
///
/// # Safety
/// `maze` must be a live handle; `state_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gini_rl_maze_reset(
    maze: *mut gini_rl_maze,
    state_out: *mut u32,
) -> gini_rl_status {
    if maze.is_null() || state_out.is_null() {
        return GINI_RL_NULL_POINTER;
    }
    *state_out = (*maze).env.reset() as u32;
    GINI_RL_OK
}

/// Takes one step. Actions: 0 up, 1 down, 2 left, 3 right.
///
/// # Safety
/// `maze` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gini_rl_maze_step(
    maze: *mut gini_rl_maze,
    action: u32,
    out: *mut gini_rl_step_result,
) -> gini_rl_status {
    if maze.is_null() || out.is_null() {
        return GINI_RL_NULL_POINTER;
    }
    let handle = &mut *maze;
    match handle.env.step(action as usize, &mut handle.rng) {
        Ok(r) => {
            *out = gini_rl_step_result {
                next_state: r.next_state as u32,
                reward: r.reward,
                done: u8::from(r.done),
                visited_red: u8::from(r.info.visited_red),
                x_position: r.info.x_position,
            };
            GINI_RL_OK
        }
        Err(e) => status_of(&e),
    }
}

/// Number of maze states (36 in the canonical layout).
#[no_mangle]
pub extern "C" fn gini_rl_maze_n_states() -> u32 {
    let env = GuardedMaze::new(GuardedMazeConfig::default()).expect("canonical layout is valid");
    env.n_states() as u32
}

/// Exact discounted return of the canonical safe path at the given goal
/// reward.
#[no_mangle]
pub extern "C" fn gini_rl_maze_safe_path_return(goal_reward: f64) -> f64 {
    gini_rl::env::safe_path_return(&GuardedMazeConfig::with_goal_reward(goal_reward))
}
