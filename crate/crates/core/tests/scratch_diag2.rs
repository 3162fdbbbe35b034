use gini_rl::env::{Environment, GuardedMaze, GuardedMazeConfig};
use gini_rl::gini_grad::{apply_is_strategy, gd_gradient_term, is_ratios, reinforce_traj_term, ISConfig};
use gini_rl::harness::{evaluate, rollout};
use gini_rl::policy::{FeatureMap, GradientVector, PolicyParams, StateFeatureMap, ValueParams};
use gini_rl::rng::{episode_rng, Purpose};
use gini_rl::trajectory::SortedBatch;

fn nine_move_cfg() -> GuardedMazeConfig {
    GuardedMazeConfig {
        red: (2, 2),
        walls: (1..=4).flat_map(|x| [(x, 0), (x, 1)]).collect(),
        ..GuardedMazeConfig::default()
    }
}

fn safe_biased_theta(bias: f64) -> Vec<f64> {
    let mut theta = vec![0.0; 36 * 4];
    let idx = |x: usize, y: usize, a: usize| (y * 6 + x) * 4 + a;
    // Up the left wall, right along row 3, down the right wall.
    theta[idx(0, 0, 0)] = bias;
    theta[idx(0, 1, 0)] = bias;
    theta[idx(0, 2, 0)] = bias;
    for x in 0..5 {
        theta[idx(x, 3, 3)] = bias;
    }
    theta[idx(5, 3, 1)] = bias;
    theta[idx(5, 2, 1)] = bias;
    theta[idx(5, 1, 1)] = bias;
    theta
}

fn run_mg(theta0: Vec<f64>, label: &str, iters: usize) {
    let cfg = nine_move_cfg();
    let mut env = GuardedMaze::new(cfg.clone()).unwrap();
    let gamma = cfg.gamma;
    let mut policy = PolicyParams::new(theta0, FeatureMap::tabular(36, 4)).unwrap();
    let mut value = ValueParams::zeros(StateFeatureMap::tabular(36));
    let (n, m, lr, lr_v, lambda) = (50usize, 10usize, 1e-4f64, 1e-2f64, 1.2f64);
    let window = ISConfig::Window { delta: 0.5, beta: 0.6 };
    for k in 0..iters {
        let mut trajs = Vec::with_capacity(n);
        for i in 0..n {
            let mut rng = episode_rng(777, Purpose::Rollout, k as u64, i as u64);
            trajs.push(rollout(&mut env, &policy, gamma, &mut rng, i).unwrap().0);
        }
        let mut batch = SortedBatch::new(trajs);
        for _ in 0..m {
            batch.refresh_log_probs(&policy).unwrap();
            let ratios = is_ratios(&batch).unwrap();
            let (d, rho, go_on) = apply_is_strategy(&batch, &ratios, &window).unwrap();
            if !go_on { break; }
            let mut mean = GradientVector::zeros(policy.dim());
            for (i, t) in d.trajectories().iter().enumerate() {
                reinforce_traj_term(t, rho[i], &policy, &value, gamma, &mut mean).unwrap();
                let states: Vec<usize> = t.steps.iter().map(|s| s.state).collect();
                value = value.update_batch(&states, &t.rewards_to_go(gamma), lr_v);
            }
            mean.scale(1.0 / d.n() as f64);
            let mut dir = mean;
            let gd = gd_gradient_term(&d, &rho, &policy).unwrap();
            dir.add_scaled(&gd, lambda).unwrap();
            policy = policy.ascend(&dir, lr).unwrap();
        }
        if (k + 1) % (iters / 10).max(1) == 0 {
            let s = evaluate(&policy, &mut env, gamma, 50, 31337, k as u64).unwrap();
            println!(
                "{label} iter {:4}: mean {:8.3} gd {:7.3} risk_rate {:.2} red_rate {:.3}",
                k + 1, s.mean_return, s.return_gd, s.optimal_risk_rate, s.noisy_visit_rate
            );
        }
    }
}

#[test]
fn safe_init_stability() {
    run_mg(safe_biased_theta(3.0), "safe-init", 400);
}

#[test]
fn mixed_init_tipping() {
    run_mg(safe_biased_theta(0.8), "mixed-init", 600);
}
