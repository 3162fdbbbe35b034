//! Sampled Gini-deviation policy gradient.
//!
//! Sorting a batch of `n` trajectory returns turns them into step-function
//! quantiles of the return distribution; each trajectory then receives an
//! eta-weight built from the sorted return gaps,
//!
//! `eta_i = sum_{j=i}^{n-1} (2j/n)(R_{j+1} - R_j) - (R_n - R_i)`,
//!
//! and the Gini-deviation gradient estimate is a weighted sum of score
//! functions. [`gd_gradient_term`] returns `(1/(n-1)) sum_i rho_i eta_i
//! sum_t grad log pi(a_it|s_it)` with per-trajectory importance ratios
//! `rho_i`: the ascent direction of `-D[G0]`. The full update direction for
//! `E[G0] - lambda D[G0]` is `mean_term + lambda * gd_term`, where the mean
//! term carries either a REINFORCE baseline or a PPO clipped surrogate.

use crate::error::{Error, Result};
use crate::policy::{GradientVector, PolicyParams, ValueParams};
use crate::trajectory::{SortedBatch, Trajectory};

/// Importance-sampling stabilization strategy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ISConfig {
    /// Keep only trajectories with ratio in `[1 - delta, 1 + delta]`; signal
    /// the caller to stop when fewer than `beta * n` survive.
    Window { delta: f64, beta: f64 },
    /// Cap every ratio at `zeta`, keep all trajectories.
    Clip { zeta: f64 },
}

impl ISConfig {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ISConfig::Window { delta, beta } => {
                if !(delta > 0.0) {
                    return Err(Error::InvalidArgument("window delta must be > 0".into()));
                }
                if !(beta > 0.0 && beta < 1.0) {
                    return Err(Error::InvalidArgument("beta must be in (0,1)".into()));
                }
                Ok(())
            }
            ISConfig::Clip { zeta } => {
                if !(zeta > 0.0) {
                    return Err(Error::InvalidArgument("clip bound must be > 0".into()));
                }
                Ok(())
            }
        }
    }
}

/// Eta-weights from non-decreasing returns, one per entry except the last.
pub fn eta_weights_from_sorted_returns(returns: &[f64]) -> Result<Vec<f64>> {
    let n = returns.len();
    if n < 2 {
        return Err(Error::InsufficientTrajectories { need: 2, got: n });
    }
    if returns.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::UnsortedSample);
    }
    let nf = n as f64;
    // Suffix sums of (2j/n)(R_{j+1} - R_j), built backwards.
    let mut eta = vec![0.0; n - 1];
    let mut suffix = 0.0;
    for i in (0..n - 1).rev() {
        let j = (i + 1) as f64; // 1-indexed position of the gap
        suffix += 2.0 * j / nf * (returns[i + 1] - returns[i]);
        eta[i] = suffix - (returns[n - 1] - returns[i]);
    }
    Ok(eta)
}

/// Eta-weights of a sorted batch, one per trajectory except the last.
pub fn eta_weights(batch: &SortedBatch) -> Result<Vec<f64>> {
    eta_weights_from_sorted_returns(&batch.returns())
}

/// Per-trajectory importance ratios `exp(log_prob_new - log_prob_old)`.
pub fn is_ratios(batch: &SortedBatch) -> Result<Vec<f64>> {
    batch
        .trajectories()
        .iter()
        .map(|t| {
            let rho = (t.log_prob_new - t.log_prob_old).exp();
            if !rho.is_finite() {
                return Err(Error::NonFinite("importance ratio".into()));
            }
            Ok(rho)
        })
        .collect()
}

/// Applies an IS strategy to a sorted batch with precomputed ratios.
///
/// Window mode retains trajectories whose ratio lies inside the window and
/// reports whether at least `beta * n` survive (`n` is the original batch
/// size); clip mode retains everything and caps the ratios.
pub fn apply_is_strategy(
    batch: &SortedBatch,
    rho: &[f64],
    cfg: &ISConfig,
) -> Result<(SortedBatch, Vec<f64>, bool)> {
    cfg.validate()?;
    if rho.len() != batch.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} ratios for {} trajectories",
            rho.len(),
            batch.n()
        )));
    }
    match *cfg {
        ISConfig::Window { delta, beta } => {
            let mut kept = Vec::new();
            let mut kept_rho = Vec::new();
            for (t, &r) in batch.trajectories().iter().zip(rho) {
                if r >= 1.0 - delta && r <= 1.0 + delta {
                    kept.push(t.clone());
                    kept_rho.push(r);
                }
            }
            let go_on = kept.len() as f64 >= beta * batch.n() as f64;
            Ok((SortedBatch::new(kept), kept_rho, go_on))
        }
        ISConfig::Clip { zeta } => {
            let capped: Vec<f64> = rho.iter().map(|&r| r.min(zeta)).collect();
            Ok((batch.clone(), capped, true))
        }
    }
}

/// Sum of score functions of one trajectory under the current policy.
fn accumulate_score(policy: &PolicyParams, traj: &Trajectory, w: f64, out: &mut [f64]) -> Result<()> {
    for s in &traj.steps {
        policy.accumulate_grad_log_prob(s.state, s.action, w, out)?;
    }
    Ok(())
}

/// `omega_tau = sum_t grad log pi(a_t|s_t)` of one trajectory.
pub fn score_sum(policy: &PolicyParams, traj: &Trajectory) -> Result<GradientVector> {
    let mut out = GradientVector::zeros(policy.dim());
    accumulate_score(policy, traj, 1.0, out.as_mut_slice())?;
    Ok(out)
}

/// The Gini-deviation term `(1/(n-1)) sum_{i<n} rho_i eta_i sum_t grad log pi`.
///
/// This is the ascent direction of `-D[G0]`; the combined update adds it
/// with coefficient `lambda`. Its negation estimates `grad D[G0]`.
pub fn gd_gradient_term(
    batch: &SortedBatch,
    rho: &[f64],
    policy: &PolicyParams,
) -> Result<GradientVector> {
    if rho.len() != batch.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} ratios for {} trajectories",
            rho.len(),
            batch.n()
        )));
    }
    let eta = eta_weights(batch)?;
    let mut out = GradientVector::zeros(policy.dim());
    for (i, traj) in batch.trajectories().iter().take(batch.n() - 1).enumerate() {
        let w = rho[i] * eta[i];
        if w == 0.0 {
            continue;
        }
        accumulate_score(policy, traj, w, out.as_mut_slice())?;
    }
    out.scale(1.0 / (batch.n() as f64 - 1.0));
    Ok(out)
}

/// One trajectory's REINFORCE-with-baseline contribution
/// `rho sum_t grad log pi(a_t|s_t) (g_t - V(s_t))`, not yet averaged.
pub fn reinforce_traj_term(
    traj: &Trajectory,
    rho: f64,
    policy: &PolicyParams,
    value: &ValueParams,
    gamma: f64,
    out: &mut GradientVector,
) -> Result<()> {
    let g = traj.rewards_to_go(gamma);
    for (s, &g_t) in traj.steps.iter().zip(&g) {
        let advantage = g_t - value.predict(s.state);
        policy.accumulate_grad_log_prob(s.state, s.action, rho * advantage, out.as_mut_slice())?;
    }
    Ok(())
}

/// REINFORCE-with-baseline mean term
/// `(1/n) sum_i rho_i sum_t grad log pi (g_it - V(s_it))`.
pub fn reinforce_mean_term(
    batch: &SortedBatch,
    rho: &[f64],
    policy: &PolicyParams,
    value: &ValueParams,
    gamma: f64,
) -> Result<GradientVector> {
    if rho.len() != batch.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} ratios for {} trajectories",
            rho.len(),
            batch.n()
        )));
    }
    let mut out = GradientVector::zeros(policy.dim());
    for (traj, &r) in batch.trajectories().iter().zip(rho) {
        reinforce_traj_term(traj, r, policy, value, gamma, &mut out)?;
    }
    out.scale(1.0 / batch.n() as f64);
    Ok(out)
}

/// One trajectory's PPO-Clip contribution
/// `sum_t grad min(ratio_t A_t, clip(ratio_t, 1-eps, 1+eps) A_t)`.
///
/// The gradient of the clipped branch is zero, so a step contributes
/// `ratio_t A_t grad log pi` only while unclipped.
pub fn ppo_clip_traj_term(
    traj: &Trajectory,
    advantages: &[f64],
    epsilon: f64,
    policy: &PolicyParams,
    out: &mut GradientVector,
) -> Result<()> {
    if advantages.len() != traj.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} advantages for {} steps",
            advantages.len(),
            traj.len()
        )));
    }
    for (s, &a_t) in traj.steps.iter().zip(advantages) {
        let log_new = policy.log_prob(s.state, s.action)?;
        let ratio = (log_new - s.log_prob_old).exp();
        if !ratio.is_finite() {
            return Err(Error::NonFinite("per-step ratio".into()));
        }
        let clipped_high = a_t >= 0.0 && ratio >= 1.0 + epsilon;
        let clipped_low = a_t <= 0.0 && ratio <= 1.0 - epsilon;
        if clipped_high || clipped_low {
            continue;
        }
        policy.accumulate_grad_log_prob(s.state, s.action, ratio * a_t, out.as_mut_slice())?;
    }
    Ok(())
}

/// PPO-Clip mean term `(1/n) sum_i sum_t grad min(ratio A, clip(ratio) A)`,
/// with per-step ratios taken against the stored per-step old log-probs.
pub fn ppo_clip_mean_term(
    batch: &SortedBatch,
    advantages: &[Vec<f64>],
    epsilon: f64,
    policy: &PolicyParams,
) -> Result<GradientVector> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("clip epsilon must be > 0".into()));
    }
    if advantages.len() != batch.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} advantage rows for {} trajectories",
            advantages.len(),
            batch.n()
        )));
    }
    let mut out = GradientVector::zeros(policy.dim());
    for (traj, adv) in batch.trajectories().iter().zip(advantages) {
        ppo_clip_traj_term(traj, adv, epsilon, policy, &mut out)?;
    }
    out.scale(1.0 / batch.n() as f64);
    Ok(out)
}

/// Policy-entropy bonus direction `(1/n) sum_i sum_t grad H(pi(.|s_it))`.
pub fn entropy_term(batch: &SortedBatch, policy: &PolicyParams) -> Result<GradientVector> {
    let mut out = GradientVector::zeros(policy.dim());
    for traj in batch.trajectories() {
        for s in &traj.steps {
            policy.accumulate_entropy_grad(s.state, 1.0, out.as_mut_slice())?;
        }
    }
    out.scale(1.0 / batch.n() as f64);
    Ok(out)
}

/// Generalized advantage estimates
/// `A_t = sum_k (gamma lambda)^k delta_{t+k}` with
/// `delta_t = r_t + gamma V(s_{t+1}) - V(s_t)` and terminal `V = 0`.
pub fn compute_gae(
    traj: &Trajectory,
    value: &ValueParams,
    gamma: f64,
    lambda_gae: f64,
) -> Vec<f64> {
    let n = traj.len();
    let mut out = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let next_v = if t + 1 < n { value.predict(traj.steps[t + 1].state) } else { 0.0 };
        let delta = traj.steps[t].reward + gamma * next_v - value.predict(traj.steps[t].state);
        acc = delta + gamma * lambda_gae * acc;
        out[t] = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{FeatureMap, StateFeatureMap};
    use crate::trajectory::Step;

    fn one_step_traj(action: usize, reward: f64, log_prob_old: f64, index: usize) -> Trajectory {
        Trajectory::from_steps(
            vec![Step { state: 0, action, reward, log_prob_old }],
            1.0,
            index,
        )
        .unwrap()
    }

    fn batch_with_returns(returns: &[f64]) -> SortedBatch {
        SortedBatch::new(
            returns
                .iter()
                .enumerate()
                .map(|(i, &r)| one_step_traj(0, r, -0.1, i))
                .collect(),
        )
    }

    #[test]
    fn eta_weights_frozen_examples() {
        let eta = eta_weights(&batch_with_returns(&[0.0, 1.0, 2.0])).unwrap();
        assert!(eta[0].abs() < 1e-12, "{eta:?}");
        assert!((eta[1] - 1.0 / 3.0).abs() < 1e-12, "{eta:?}");

        let equal = eta_weights(&batch_with_returns(&[4.0, 4.0, 4.0, 4.0])).unwrap();
        assert!(equal.iter().all(|e| e.abs() < 1e-12));

        let pair = eta_weights(&batch_with_returns(&[-3.0, 9.0])).unwrap();
        assert!(pair[0].abs() < 1e-12);
    }

    #[test]
    fn eta_weights_need_two_trajectories() {
        assert!(matches!(
            eta_weights(&batch_with_returns(&[1.0])),
            Err(Error::InsufficientTrajectories { .. })
        ));
    }

    #[test]
    fn eta_weights_are_translation_invariant_and_homogeneous() {
        let base = [0.3, -1.2, 5.0, 2.2, 2.2];
        let eta0 = eta_weights(&batch_with_returns(&base)).unwrap();
        let shifted: Vec<f64> = base.iter().map(|r| r + 17.25).collect();
        let eta1 = eta_weights(&batch_with_returns(&shifted)).unwrap();
        for (a, b) in eta0.iter().zip(&eta1) {
            assert!((a - b).abs() < 1e-12);
        }
        let scaled: Vec<f64> = base.iter().map(|r| 3.0 * r).collect();
        let eta2 = eta_weights(&batch_with_returns(&scaled)).unwrap();
        for (a, b) in eta0.iter().zip(&eta2) {
            assert!((3.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn is_ratios_identity_when_policies_match() {
        let batch = batch_with_returns(&[1.0, 2.0]);
        let rho = is_ratios(&batch).unwrap();
        assert_eq!(rho, vec![1.0, 1.0]);
    }

    #[test]
    fn is_ratio_single_step_quotient() {
        let mut t = one_step_traj(0, 1.0, 0.25f64.ln(), 0);
        t.log_prob_new = 0.75f64.ln();
        let batch = SortedBatch::new(vec![t, one_step_traj(0, 2.0, -0.1, 1)]);
        let rho = is_ratios(&batch).unwrap();
        assert!((rho[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn window_strategy_filters_and_signals_termination() {
        let batch = batch_with_returns(&[1.0, 2.0, 3.0]);
        let cfg = ISConfig::Window { delta: 0.5, beta: 0.6 };
        let (kept, rho, go_on) = apply_is_strategy(&batch, &[1.0, 1.0, 1.0], &cfg).unwrap();
        assert_eq!(kept.n(), 3);
        assert_eq!(rho, vec![1.0, 1.0, 1.0]);
        assert!(go_on);

        let (kept, rho, go_on) = apply_is_strategy(&batch, &[0.2, 1.0, 3.0], &cfg).unwrap();
        assert_eq!(kept.n(), 1);
        assert_eq!(rho, vec![1.0]);
        assert!(!go_on, "1 retained < beta * n = 1.8");
    }

    #[test]
    fn clip_strategy_caps_ratios() {
        let batch = batch_with_returns(&[1.0, 2.0]);
        let cfg = ISConfig::Clip { zeta: 2.0 };
        let (kept, rho, go_on) = apply_is_strategy(&batch, &[0.2, 5.0], &cfg).unwrap();
        assert_eq!(kept.n(), 2);
        assert_eq!(rho, vec![0.2, 2.0]);
        assert!(go_on);
    }

    #[test]
    fn gd_term_zero_for_equal_returns_and_pairs() {
        let policy = PolicyParams::zeros(FeatureMap::tabular(1, 3));
        let batch = batch_with_returns(&[2.0, 2.0, 2.0]);
        let g = gd_gradient_term(&batch, &[1.0; 3], &policy).unwrap();
        assert!(g.max_abs() < 1e-12);

        let pair = batch_with_returns(&[-1.0, 4.0]);
        let g = gd_gradient_term(&pair, &[1.0; 2], &policy).unwrap();
        assert!(g.max_abs() < 1e-12, "eta_1 = 0 identically for n = 2");
    }

    #[test]
    fn gd_term_invariant_to_trajectory_identity_permutation() {
        // Same multiset of (return, action) pairs in different collection
        // order must produce the same gradient.
        let policy = PolicyParams::zeros(FeatureMap::tabular(1, 3));
        let t = |a: usize, r: f64, i: usize| one_step_traj(a, r, -0.3, i);
        let b1 = SortedBatch::new(vec![t(0, 1.0, 0), t(1, 3.0, 1), t(2, 2.0, 2)]);
        let b2 = SortedBatch::new(vec![t(2, 2.0, 0), t(0, 1.0, 1), t(1, 3.0, 2)]);
        let g1 = gd_gradient_term(&b1, &[1.0; 3], &policy).unwrap();
        let g2 = gd_gradient_term(&b2, &[1.0; 3], &policy).unwrap();
        for (a, b) in g1.as_slice().iter().zip(g2.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn reinforce_term_zero_when_baseline_matches() {
        let policy = PolicyParams::zeros(FeatureMap::tabular(1, 2));
        let mut value = ValueParams::zeros(StateFeatureMap::tabular(1));
        // V(0) = 1.0 matches every reward-to-go below.
        value = value.update(0, 1.0, 0.5); // one step of lr 0.5: omega = 1.0
        assert!((value.predict(0) - 1.0).abs() < 1e-12);
        let batch = batch_with_returns(&[1.0, 1.0]);
        let g = reinforce_mean_term(&batch, &[1.0; 2], &policy, &value, 1.0).unwrap();
        assert!(g.max_abs() < 1e-12);
    }

    #[test]
    fn reinforce_term_increases_rewarded_action() {
        let policy = PolicyParams::zeros(FeatureMap::tabular(1, 2));
        let value = ValueParams::zeros(StateFeatureMap::tabular(1));
        let batch = SortedBatch::new(vec![
            one_step_traj(0, 1.0, 0.5f64.ln(), 0),
            one_step_traj(1, 0.0, 0.5f64.ln(), 1),
        ]);
        let g = reinforce_mean_term(&batch, &[1.0; 2], &policy, &value, 1.0).unwrap();
        // Hand computation: (1/2)[1 * (phi(0) - mean phi)] = (1/2)(0.5, -0.5).
        assert!((g.as_slice()[0] - 0.25).abs() < 1e-12);
        assert!((g.as_slice()[1] + 0.25).abs() < 1e-12);
    }

    #[test]
    fn ppo_clip_zero_cases_and_active_branch() {
        let policy = PolicyParams::zeros(FeatureMap::tabular(1, 2));
        // theta = theta_old, A = 0 -> zero vector.
        let batch = SortedBatch::new(vec![one_step_traj(0, 1.0, 0.5f64.ln(), 0)]);
        let g = ppo_clip_mean_term(&batch, &[vec![0.0]], 0.2, &policy).unwrap();
        assert!(g.max_abs() < 1e-12);

        // ratio 1.4 > 1 + eps with A > 0: clipped branch, zero gradient.
        let old_lp = (0.5f64 / 1.4).ln();
        let clipped = SortedBatch::new(vec![one_step_traj(0, 1.0, old_lp, 0)]);
        let g = ppo_clip_mean_term(&clipped, &[vec![2.0]], 0.2, &policy).unwrap();
        assert!(g.max_abs() < 1e-12);

        // ratio 1.0, unclipped: contribution equals A * grad log pi.
        let unclipped = SortedBatch::new(vec![one_step_traj(0, 1.0, 0.5f64.ln(), 0)]);
        let g = ppo_clip_mean_term(&unclipped, &[vec![2.0]], 0.2, &policy).unwrap();
        let score = policy.grad_log_prob(0, 0).unwrap();
        for (a, b) in g.as_slice().iter().zip(score.as_slice()) {
            assert!((a - 2.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn gae_reduces_to_known_forms() {
        let traj = Trajectory::from_steps(
            vec![
                Step { state: 0, action: 0, reward: 1.0, log_prob_old: -0.1 },
                Step { state: 0, action: 0, reward: 1.0, log_prob_old: -0.1 },
            ],
            1.0,
            0,
        )
        .unwrap();
        let value = ValueParams::zeros(StateFeatureMap::tabular(1));
        // lambda = 1, V = 0: advantages are rewards-to-go.
        let a1 = compute_gae(&traj, &value, 1.0, 1.0);
        assert_eq!(a1, traj.rewards_to_go(1.0));
        // lambda = 0: advantages are one-step TD errors.
        let a0 = compute_gae(&traj, &value, 1.0, 0.0);
        assert!((a0[0] - 1.0).abs() < 1e-12);
        assert!((a0[1] - 1.0).abs() < 1e-12);
        // lambda = 0.5 hand recursion: A_1 = 1, A_0 = 1 + 0.5 * 1 = 1.5.
        let ah = compute_gae(&traj, &value, 1.0, 0.5);
        assert!((ah[1] - 1.0).abs() < 1e-12);
        assert!((ah[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatches_are_errors() {
        let policy = PolicyParams::zeros(FeatureMap::tabular(1, 2));
        let batch = batch_with_returns(&[1.0, 2.0]);
        assert!(matches!(
            gd_gradient_term(&batch, &[1.0], &policy),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
