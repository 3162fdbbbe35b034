//! Frozen invariant suites.
//!
//! Each check returns `Ok(detail)` or `Err(why)` so the CLI `selftest`
//! subcommand and the acceptance suite can share one implementation. All
//! randomness is seeded; the checks are deterministic.

use rand::Rng as _;

use crate::gini_grad::gd_gradient_term;
use crate::oracle::{
    analytic_gd_gradient, enumerate_return_distribution, finite_difference, mvpi_maze_analysis,
    random_small_mdp, SmallMdp, FD_STEP,
};
use crate::policy::{FeatureMap, GradientVector, PolicyParams, StateFeatureMap, ValueParams};
use crate::risk::{
    exact_gd, exact_mean, exact_variance, gd_pairwise, gd_quantile,
    CategoricalDist, SampleSet,
};
use crate::rng::master_rng;
use crate::trajectory::{SortedBatch, Step, Trajectory};

pub type Check = std::result::Result<String, String>;

/// Quantile and pairwise estimators agree to 1e-10 on 1000 random samples
/// (n in [2, 256]), and exactly reproduce the hand-derived 4/9.
pub fn check_estimator_identity() -> Check {
    let s = SampleSet::sorted(vec![1.0, 2.0, 3.0]).map_err(|e| e.to_string())?;
    let q = gd_quantile(&s).map_err(|e| e.to_string())?;
    if (q - 4.0 / 9.0).abs() > 1e-15 || (gd_pairwise(&s) - 4.0 / 9.0).abs() > 1e-15 {
        return Err(format!("{{1,2,3}} gave quantile {q}, pairwise {}", gd_pairwise(&s)));
    }
    let mut rng = master_rng(0x1d3);
    let mut max_gap: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=256usize);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let s = SampleSet::sorted(values).map_err(|e| e.to_string())?;
        let gap = (gd_quantile(&s).map_err(|e| e.to_string())? - gd_pairwise(&s)).abs();
        max_gap = max_gap.max(gap);
        if gap > 1e-10 {
            return Err(format!("representation gap {gap} at n = {n}"));
        }
    }
    Ok(format!("1000 samples, max |quantile - pairwise| = {max_gap:.2e}"))
}

/// Positive homogeneity and location invariance to 1e-12; the standard-
/// deviation form of Glasser's bound; convex-order monotonicity on
/// constructed mean-preserving spreads.
pub fn check_gd_properties() -> Check {
    let mut rng = master_rng(0x9a7);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=64usize);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c: f64 = rng.gen_range(0.1..2.0);
        let m: f64 = rng.gen_range(-1.0..1.0);
        let s = SampleSet::new(values.clone()).map_err(|e| e.to_string())?;
        let scaled = SampleSet::new(values.iter().map(|v| c * v).collect())
            .map_err(|e| e.to_string())?;
        let shifted = SampleSet::new(values.iter().map(|v| v + m).collect())
            .map_err(|e| e.to_string())?;
        let base = gd_pairwise(&s);
        if (gd_pairwise(&scaled) - c * base).abs() > 1e-12 {
            return Err(format!("homogeneity violated at c = {c}"));
        }
        if (gd_pairwise(&shifted) - base).abs() > 1e-12 {
            return Err(format!("location invariance violated at m = {m}"));
        }
    }

    for _ in 0..1000 {
        let k = rng.gen_range(1..=12usize);
        let pairs: Vec<(f64, f64)> = (0..k)
            .map(|_| (rng.gen_range(-100.0..100.0), rng.gen_range(0.01..1.0)))
            .collect();
        let d = CategoricalDist::from_weighted_values(pairs).map_err(|e| e.to_string())?;
        let sd = exact_variance(&d).sqrt();
        let gd = exact_gd(&d);
        if sd < 3.0f64.sqrt() * gd - 1e-9 {
            return Err(format!("Glasser violated: sd {sd} < sqrt(3) * {gd}"));
        }
    }

    for _ in 0..200 {
        let k = rng.gen_range(1..=6usize);
        let pairs: Vec<(f64, f64)> = (0..k)
            .map(|_| (rng.gen_range(-10.0..10.0), rng.gen_range(0.05..1.0)))
            .collect();
        let x = CategoricalDist::from_weighted_values(pairs.clone()).map_err(|e| e.to_string())?;
        // Mean-preserving spread: split every atom symmetrically.
        let mut spread = Vec::with_capacity(2 * pairs.len());
        for &(v, w) in &pairs {
            let s: f64 = rng.gen_range(0.1..5.0);
            spread.push((v - s, w / 2.0));
            spread.push((v + s, w / 2.0));
        }
        let y = CategoricalDist::from_weighted_values(spread).map_err(|e| e.to_string())?;
        if (exact_mean(&x) - exact_mean(&y)).abs() > 1e-9 {
            return Err("spread construction changed the mean".into());
        }
        if exact_gd(&x) > exact_gd(&y) + 1e-12 || exact_variance(&x) > exact_variance(&y) + 1e-10 {
            return Err("convex-order monotonicity violated".into());
        }
    }
    Ok("1000 homogeneity/location samples, 1000 Glasser distributions, 200 spread pairs".into())
}

fn relative_gap(a: &GradientVector, b: &GradientVector) -> f64 {
    let mut diff2 = 0.0;
    for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
        diff2 += (x - y) * (x - y);
    }
    diff2.sqrt() / a.norm().max(1e-6)
}

/// Analytic GD gradient vs central finite differences of the enumerated
/// exact GD, on 50 random small MDPs: relative error below 1e-5.
pub fn check_gradient_agreement() -> Check {
    let mut rng = master_rng(0x51ed);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let (mdp, policy) = random_small_mdp(&mut rng);
        let analytic = analytic_gd_gradient(&mdp, &policy).map_err(|e| e.to_string())?;
        let features = policy.features().clone();
        let fd = finite_difference(
            |t| {
                let p = PolicyParams::new(t.to_vec(), features.clone()).expect("finite probe");
                exact_gd(&enumerate_return_distribution(&mdp, &p).expect("small enumeration"))
            },
            policy.theta(),
            FD_STEP,
        )
        .map_err(|e| e.to_string())?;
        let rel = relative_gap(&analytic, &fd);
        worst = worst.max(rel);
        if rel > 1e-5 {
            return Err(format!("MDP {i}: relative error {rel:.2e}"));
        }
    }
    Ok(format!("50 random MDPs, worst relative error {worst:.2e}"))
}

fn bandit_batch_from_stream(rewards: &[f64], n: usize, rng: &mut crate::rng::Rng) -> SortedBatch {
    let arms = rewards.len();
    let log_uniform = (1.0 / arms as f64).ln();
    let trajs: Vec<Trajectory> = (0..n)
        .map(|i| {
            let a = rng.gen_range(0..arms);
            Trajectory::from_steps(
                vec![Step { state: 0, action: a, reward: rewards[a], log_prob_old: log_uniform }],
                1.0,
                i,
            )
            .expect("one-step trajectory")
        })
        .collect();
    SortedBatch::new(trajs)
}

/// Sampled GD gradient on the 3-armed bandit: the mean of the negated
/// [`gd_gradient_term`] over 30 batches of 2000 trajectories stays within
/// 3 standard errors of the analytic gradient, per coordinate.
pub fn check_sampled_gd_consistency() -> Check {
    let rewards = [0.0, 1.0, 2.0];
    let policy = PolicyParams::zeros(FeatureMap::tabular(1, 3));
    let mdp = SmallMdp::deterministic_bandit(&rewards, 1.0);
    let analytic = analytic_gd_gradient(&mdp, &policy).map_err(|e| e.to_string())?;

    let reps = 30;
    let n = 2000;
    let dim = policy.dim();
    let mut sums = vec![0.0; dim];
    let mut sums_sq = vec![0.0; dim];
    let mut rng = master_rng(0xb4d1);
    for _ in 0..reps {
        let batch = bandit_batch_from_stream(&rewards, n, &mut rng);
        let term = gd_gradient_term(&batch, &vec![1.0; n], &policy).map_err(|e| e.to_string())?;
        for (k, v) in term.as_slice().iter().enumerate() {
            let est = -v; // negated term estimates grad D
            sums[k] += est;
            sums_sq[k] += est * est;
        }
    }
    let mut detail = String::new();
    for k in 0..dim {
        let mean = sums[k] / reps as f64;
        let var = (sums_sq[k] / reps as f64 - mean * mean).max(0.0);
        let se = (var / reps as f64).sqrt();
        let gap = (mean - analytic.as_slice()[k]).abs();
        if gap > 3.0 * se + 1e-9 {
            return Err(format!(
                "coordinate {k}: |{mean:.6} - {:.6}| = {gap:.2e} > 3 se = {:.2e}",
                analytic.as_slice()[k],
                3.0 * se
            ));
        }
        detail.push_str(&format!("coord {k}: gap {gap:.2e} (se {se:.2e}); "));
    }
    Ok(detail)
}

/// One small ascent step along `mean_term + lambda * gd_term` increases the
/// exact objective `E[G0] - lambda D[G0]` on the bandit.
pub fn check_combined_objective_ascent() -> Check {
    let rewards = [0.0, 1.0, 2.0];
    let mdp = SmallMdp::deterministic_bandit(&rewards, 1.0);
    let policy = PolicyParams::zeros(FeatureMap::tabular(1, 3));
    let value = ValueParams::zeros(StateFeatureMap::tabular(1));
    let mut rng = master_rng(0xcafe);
    let batch = bandit_batch_from_stream(&rewards, 2000, &mut rng);
    let rho = vec![1.0; batch.n()];
    for lambda in [0.5, 1.0] {
        let mean = crate::gini_grad::reinforce_mean_term(&batch, &rho, &policy, &value, 1.0)
            .map_err(|e| e.to_string())?;
        let gd = gd_gradient_term(&batch, &rho, &policy).map_err(|e| e.to_string())?;
        let mut direction = mean;
        direction.add_scaled(&gd, lambda).map_err(|e| e.to_string())?;
        let objective = |p: &PolicyParams| -> f64 {
            let d = enumerate_return_distribution(&mdp, p).expect("bandit enumeration");
            exact_mean(&d) - lambda * exact_gd(&d)
        };
        let before = objective(&policy);
        let stepped = policy.ascend(&direction, 1e-3).map_err(|e| e.to_string())?;
        let after = objective(&stepped);
        if after <= before {
            return Err(format!("lambda {lambda}: objective moved {before} -> {after}"));
        }
    }
    Ok("objective increased for lambda in {0.5, 1.0}".into())
}

/// Frozen MVPI analytics of the maze (dual variable, modified rewards,
/// canonical path values).
pub fn check_mvpi_analytics() -> Check {
    let a = mvpi_maze_analysis(20.0, 0.2, 0.999, 100);
    let checks: [(&str, f64, f64, f64); 5] = [
        ("y", a.y, -0.0952, 1e-3),
        ("modified_goal", a.modified_goal, -60.7, 0.1),
        ("modified_red_mean", a.modified_red_mean, -32.472, 0.15),
        ("random_walk_return", a.random_walk_return, -95.2, 0.1),
        ("safe_path_return", a.safe_path_return, -70.0, 0.5),
    ];
    for (name, got, want, tol) in checks {
        if (got - want).abs() > tol {
            return Err(format!("{name} = {got}, expected {want} +- {tol}"));
        }
    }
    let b = mvpi_maze_analysis(40.0, 0.2, 0.999, 100);
    if (b.modified_goal - (-281.5)).abs() > 0.1 {
        return Err(format!("goal-40 modified_goal = {}", b.modified_goal));
    }
    Ok(format!(
        "y = {:.4}, goal 20 -> {:.2}, goal 40 -> {:.2}, red mean {:.3}",
        a.y, a.modified_goal, b.modified_goal, a.modified_red_mean
    ))
}

/// Safe-trajectory per-step reward variance vs total-return variance:
/// `V[G0] = 0` exactly while `V[R]` is near 10 (goal 10) and 36.4 (goal 20).
pub fn check_reward_variance_critique() -> Check {
    use crate::env::{safe_path_reward_variance, GuardedMazeConfig};
    let goal10 = GuardedMazeConfig { goal_reward: 10.0, ..GuardedMazeConfig::default() };
    let a = safe_path_reward_variance(&goal10);
    if a.return_variance != 0.0 {
        return Err("V[G0] must be exactly zero on the safe trajectory".into());
    }
    if (a.reward_variance - 10.0).abs() > 1.0 {
        return Err(format!("goal 10: V[R] = {}", a.reward_variance));
    }
    let goal20 = GuardedMazeConfig::default();
    let b = safe_path_reward_variance(&goal20);
    if b.return_variance != 0.0 {
        return Err("V[G0] must be exactly zero on the safe trajectory".into());
    }
    if (b.reward_variance - 36.4).abs() > 3.64 {
        return Err(format!("goal 20: V[R] = {}", b.reward_variance));
    }
    Ok(format!("V[R] = {:.3} (goal 10), {:.3} (goal 20), V[G0] = 0", a.reward_variance, b.reward_variance))
}

/// Name plus outcome, for the CLI report.
pub fn run_all() -> Vec<(&'static str, Check)> {
    vec![
        ("estimator_identity", check_estimator_identity()),
        ("gd_properties", check_gd_properties()),
        ("gradient_agreement", check_gradient_agreement()),
        ("sampled_gd_consistency", check_sampled_gd_consistency()),
        ("combined_objective_ascent", check_combined_objective_ascent()),
        ("mvpi_analytics", check_mvpi_analytics()),
        ("reward_variance_critique", check_reward_variance_critique()),
    ]
}
