//! Variance-based risk-averse baselines.
//!
//! Four methods that penalize return variance instead of Gini deviation:
//!
//! - MVO: vanilla mean-variance gradient with double sampling, splitting the
//!   batch into two halves so `J grad J` is estimated without bias.
//! - Tamar-style two-timescale updates of a penalized objective
//!   `E[G0] - lambda (max(0, V[G0] - b))^2`, with fast running estimates of
//!   the return mean and variance and a slow policy step.
//! - MVP: Fenchel-dual ascent on `2y(E[G0] + 1/(2 lambda)) - y^2 - E[G0^2]`.
//! - Tabular MVPI: alternates the dual variable `y = (1 - gamma) E[G0]` with
//!   Q-learning on rewards modified by `r - lambda r^2 + 2 lambda r y`.
//!
//! All of these inherit a quadratic sensitivity to the reward scale through
//! `E[G0^2]`; the point of keeping them here is to reproduce that failure.

use rand::Rng as _;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::gini_grad::score_sum;
use crate::oracle::mvpi_reward_modification;
use crate::policy::{GradientVector, PolicyParams};
use crate::rng::{episode_rng, Purpose};
use crate::trajectory::{SortedBatch, Trajectory};

fn ratio(traj: &Trajectory) -> Result<f64> {
    let rho = (traj.log_prob_new - traj.log_prob_old).exp();
    if !rho.is_finite() {
        return Err(Error::NonFinite("importance ratio".into()));
    }
    Ok(rho)
}

/// The two pieces of the MVO gradient: the mean part `grad J` and the
/// variance part `grad M - 2 J grad J`, estimated with double sampling.
///
/// Trajectories are split by collection order (`Trajectory::index`): the
/// first half estimates `J`, the second half the gradients. Importance
/// ratios from the stored log-probabilities weight every term, so the
/// estimate stays valid across inner reuse loops (ratios are all one on
/// fresh batches).
pub fn mvo_gradient_parts(
    batch: &SortedBatch,
    policy: &PolicyParams,
) -> Result<(GradientVector, GradientVector)> {
    let n = batch.n();
    if n < 4 || n % 2 != 0 {
        return Err(Error::InsufficientTrajectories { need: 4, got: n });
    }
    let mut by_collection: Vec<&Trajectory> = batch.trajectories().iter().collect();
    by_collection.sort_by_key(|t| t.index);
    let (half_a, half_b) = by_collection.split_at(n / 2);

    let mut j_a = 0.0;
    for t in half_a {
        j_a += ratio(t)? * t.return_value;
    }
    j_a /= half_a.len() as f64;

    let dim = policy.dim();
    let mut grad_j = GradientVector::zeros(dim);
    let mut grad_m = GradientVector::zeros(dim);
    for t in half_b {
        let rho = ratio(t)?;
        let omega = score_sum(policy, t)?;
        grad_j.add_scaled(&omega, rho * t.return_value)?;
        grad_m.add_scaled(&omega, rho * t.return_value * t.return_value)?;
    }
    grad_j.scale(1.0 / half_b.len() as f64);
    grad_m.scale(1.0 / half_b.len() as f64);

    let mut variance_part = grad_m;
    variance_part.add_scaled(&grad_j, -2.0 * j_a)?;
    Ok((grad_j, variance_part))
}

/// MVO update direction `grad J - lambda (grad M - 2 J grad J)`.
pub fn mvo_gradient(
    batch: &SortedBatch,
    lambda: f64,
    policy: &PolicyParams,
) -> Result<GradientVector> {
    let (mut mean_part, variance_part) = mvo_gradient_parts(batch, policy)?;
    mean_part.add_scaled(&variance_part, -lambda)?;
    Ok(mean_part)
}

/// MVO update with a REINFORCE-baseline mean term: `grad J` is estimated
/// from half B as `rho sum_t grad log pi (g_t - V(s_t))` while the variance
/// part keeps the plain double-sampling form. The baseline leaves the
/// expectation unchanged (state baselines are mean-zero against the score)
/// but is what makes the mean term competitive at maze return scales.
pub fn mvo_gradient_with_baseline(
    batch: &SortedBatch,
    lambda: f64,
    policy: &PolicyParams,
    value: &crate::policy::ValueParams,
    gamma: f64,
) -> Result<GradientVector> {
    let n = batch.n();
    if n < 4 || n % 2 != 0 {
        return Err(Error::InsufficientTrajectories { need: 4, got: n });
    }
    let (_, variance_part) = mvo_gradient_parts(batch, policy)?;
    let mut by_collection: Vec<&Trajectory> = batch.trajectories().iter().collect();
    by_collection.sort_by_key(|t| t.index);
    let (_, half_b) = by_collection.split_at(n / 2);
    let mut mean_part = GradientVector::zeros(policy.dim());
    for t in half_b {
        let rho = ratio(t)?;
        crate::gini_grad::reinforce_traj_term(t, rho, policy, value, gamma, &mut mean_part)?;
    }
    mean_part.scale(1.0 / half_b.len() as f64);
    mean_part.add_scaled(&variance_part, -lambda)?;
    Ok(mean_part)
}

/// Running statistics of the Tamar-style two-timescale method.
#[derive(Clone, Copy, Debug)]
pub struct TamarState {
    /// Running estimate of the mean return.
    pub j_hat: f64,
    /// Running estimate of the return variance.
    pub v_hat: f64,
    /// Variance tolerance (the constraint bound).
    pub b_threshold: f64,
    pub lambda: f64,
}

impl TamarState {
    pub fn new(b_threshold: f64, lambda: f64) -> Self {
        Self { j_hat: 0.0, v_hat: 0.0, b_threshold, lambda }
    }
}

/// One per-episode update: fast `J, V` tracking, then a slow policy step on
/// the penalized objective. Requires `lr_stats > lr_policy`.
pub fn tamar_update(
    state: &TamarState,
    policy: &PolicyParams,
    traj: &Trajectory,
    lr_policy: f64,
    lr_stats: f64,
) -> Result<(TamarState, PolicyParams)> {
    if !(lr_stats > lr_policy && lr_policy > 0.0) {
        return Err(Error::InvalidArgument(
            "two-timescale ordering requires lr_stats > lr_policy > 0".into(),
        ));
    }
    let r = traj.return_value;
    let mut next = *state;
    next.j_hat += lr_stats * (r - next.j_hat);
    next.v_hat += lr_stats * (r * r - next.j_hat * next.j_hat - next.v_hat);
    let penalty = 2.0 * next.lambda * (next.v_hat - next.b_threshold).max(0.0);
    let coef = r - penalty * (r * r - 2.0 * next.j_hat * r);
    let omega = score_sum(policy, traj)?;
    let mut direction = GradientVector::zeros(policy.dim());
    direction.add_scaled(&omega, coef)?;
    let new_policy = policy.ascend(&direction, lr_policy)?;
    Ok((next, new_policy))
}

/// Dual variable of the Fenchel-dual method.
#[derive(Clone, Copy, Debug)]
pub struct MvpState {
    pub y: f64,
    pub lambda: f64,
}

impl MvpState {
    pub fn new(lambda: f64) -> Self {
        Self { y: 0.0, lambda }
    }
}

/// One per-episode stochastic ascent step on
/// `L3(theta, y) = 2y(E[G0] + 1/(2 lambda)) - y^2 - E[G0^2]`.
pub fn mvp_update(
    state: &MvpState,
    policy: &PolicyParams,
    traj: &Trajectory,
    lr: f64,
) -> Result<(MvpState, PolicyParams)> {
    if state.lambda == 0.0 {
        return Err(Error::InvalidArgument("MVP requires lambda != 0".into()));
    }
    if !(lr > 0.0) {
        return Err(Error::InvalidArgument("learning rate must be positive".into()));
    }
    let r = traj.return_value;
    let shift = 1.0 / (2.0 * state.lambda);
    let mut next = *state;
    next.y += lr * (2.0 * (r + shift) - 2.0 * next.y);
    let coef = 2.0 * next.y * (r + shift) - r * r;
    let omega = score_sum(policy, traj)?;
    let mut direction = GradientVector::zeros(policy.dim());
    direction.add_scaled(&omega, coef)?;
    let new_policy = policy.ascend(&direction, lr)?;
    Ok((next, new_policy))
}

/// Parameters of tabular MVPI.
#[derive(Clone, Debug)]
pub struct MvpiParams {
    pub lambda: f64,
    pub gamma: f64,
    pub q_lr: f64,
    /// Outer policy-iteration count.
    pub iterations: usize,
    /// Q-learning episodes per outer iteration.
    pub inner_episodes: usize,
    /// Monte Carlo episodes for estimating `E[G0]` of the current policy.
    pub mc_episodes: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub seed: u64,
}

impl Default for MvpiParams {
    fn default() -> Self {
        Self {
            lambda: 0.2,
            gamma: 0.999,
            q_lr: 5e-3,
            iterations: 6,
            inner_episodes: 4000,
            mc_episodes: 1000,
            epsilon_start: 0.1,
            epsilon_end: 0.01,
            seed: 0,
        }
    }
}

/// One recorded outer iteration of MVPI.
#[derive(Clone, Debug)]
pub struct MvpiIterate {
    pub y: f64,
    /// `E[G0]` Monte Carlo estimate that produced `y`.
    pub j_estimate: f64,
    pub greedy: Vec<usize>,
    pub q_table: Vec<Vec<f64>>,
    /// Environment episodes consumed so far (MC plus Q-learning).
    pub episodes_used: usize,
}

fn greedy_action(q_row: &[f64], rng: &mut crate::rng::Rng) -> usize {
    let best = q_row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = q_row
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == best)
        .map(|(a, _)| a)
        .collect();
    ties[rng.gen_range(0..ties.len())]
}

/// Monte Carlo estimate of `E[G0]` under the greedy policy of `q` with
/// random tie-breaking and no exploration, using original rewards.
fn estimate_return(
    env: &mut dyn Environment,
    q: &[Vec<f64>],
    gamma: f64,
    episodes: usize,
    seed: u64,
    iteration: u64,
) -> Result<f64> {
    let mut total = 0.0;
    for e in 0..episodes {
        let mut rng = episode_rng(seed, Purpose::Eval, iteration, e as u64);
        let mut state = env.reset();
        let mut ret = 0.0;
        let mut t = 0;
        loop {
            let action = greedy_action(&q[state], &mut rng);
            let r = env.step(action, &mut rng)?;
            ret += gamma.powi(t) * r.reward;
            state = r.next_state;
            t += 1;
            if r.done {
                break;
            }
        }
        total += ret;
    }
    Ok(total / episodes as f64)
}

/// Tabular MVPI: policy iteration alternating the analytic dual update with
/// epsilon-greedy Q-learning on the modified rewards. Episode cutoffs
/// (goal or step budget) are treated as terminal in the Q-target, matching
/// the finite-horizon account of the maze.
pub fn mvpi_tabular(env: &mut dyn Environment, params: &MvpiParams) -> Result<Vec<MvpiIterate>> {
    let n_states = env.n_states();
    let n_actions = env.n_actions();
    let mut q = vec![vec![0.0f64; n_actions]; n_states];
    let mut iterates = Vec::with_capacity(params.iterations);
    let mut episodes_used = 0usize;
    for k in 0..params.iterations {
        let j_estimate = estimate_return(
            env,
            &q,
            params.gamma,
            params.mc_episodes,
            params.seed,
            k as u64,
        )?;
        episodes_used += params.mc_episodes;
        let y = (1.0 - params.gamma) * j_estimate;

        for e in 0..params.inner_episodes {
            let mut rng = episode_rng(params.seed, Purpose::Inner, k as u64, e as u64);
            let frac = if params.inner_episodes > 1 {
                e as f64 / (params.inner_episodes - 1) as f64
            } else {
                0.0
            };
            let epsilon =
                params.epsilon_start + (params.epsilon_end - params.epsilon_start) * frac;
            let mut state = env.reset();
            loop {
                let action = if rng.gen::<f64>() < epsilon {
                    rng.gen_range(0..n_actions)
                } else {
                    greedy_action(&q[state], &mut rng)
                };
                let r = env.step(action, &mut rng)?;
                let modified = mvpi_reward_modification(r.reward, y, params.lambda);
                let bootstrap = if r.done {
                    0.0
                } else {
                    q[r.next_state].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                };
                let target = modified + params.gamma * bootstrap;
                q[state][action] += params.q_lr * (target - q[state][action]);
                state = r.next_state;
                if r.done {
                    break;
                }
            }
        }
        episodes_used += params.inner_episodes;

        let mut tie_rng = episode_rng(params.seed, Purpose::Oracle, k as u64, 0);
        let greedy: Vec<usize> = (0..n_states).map(|s| greedy_action(&q[s], &mut tie_rng)).collect();
        iterates.push(MvpiIterate { y, j_estimate, greedy, q_table: q.clone(), episodes_used });
    }
    Ok(iterates)
}
