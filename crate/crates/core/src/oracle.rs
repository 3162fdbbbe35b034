//! Brute-force ground truth for small MDPs.
//!
//! Enumerates the exact return distribution of a finite-horizon MDP under a
//! fixed softmax policy, differentiates the exact Gini deviation through the
//! path probabilities, and cross-checks everything with central finite
//! differences. Also reproduces the closed-form analysis of tabular
//! mean-variance policy iteration (MVPI) on the guarded maze.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::policy::{GradientVector, PolicyParams};
use crate::risk::{CategoricalDist, ATOM_MERGE_EPS};
use crate::rng::Rng;

/// Hard cap on enumerated paths.
pub const PATH_GUARD: u64 = 10_000_000;

/// Branches with probability below this are pruned during enumeration.
pub const PRUNE_EPS: f64 = 1e-15;

/// A finite MDP small enough for exhaustive path enumeration.
///
/// Transitions and rewards are dense tables indexed by `(state, action)`;
/// `transition[s][a]` is a sparse distribution over next states and
/// `reward[s][a]` an exact reward distribution. Episodes end on entering a
/// terminal state or after `horizon` steps.
#[derive(Clone, Debug)]
pub struct SmallMdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub transition: Vec<Vec<Vec<(usize, f64)>>>,
    pub reward: Vec<Vec<CategoricalDist>>,
    pub start: Vec<(usize, f64)>,
    pub gamma: f64,
    pub horizon: usize,
    pub terminal: Vec<bool>,
}

impl SmallMdp {
    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(Error::InvalidArgument("empty state or action space".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidArgument(format!("gamma {} not in (0,1]", self.gamma)));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        if self.transition.len() != self.n_states
            || self.reward.len() != self.n_states
            || self.terminal.len() != self.n_states
        {
            return Err(Error::DimensionMismatch("MDP table shapes".into()));
        }
        let check_dist = |pairs: &[(usize, f64)]| -> Result<()> {
            let total: f64 = pairs.iter().map(|&(_, p)| p).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidDistribution(format!("distribution sums to {total}")));
            }
            if pairs.iter().any(|&(s, p)| s >= self.n_states || p < 0.0) {
                return Err(Error::InvalidDistribution("bad transition entry".into()));
            }
            Ok(())
        };
        check_dist(&self.start)?;
        for s in 0..self.n_states {
            if self.transition[s].len() != self.n_actions || self.reward[s].len() != self.n_actions
            {
                return Err(Error::DimensionMismatch("MDP action tables".into()));
            }
            for a in 0..self.n_actions {
                check_dist(&self.transition[s][a])?;
            }
        }
        Ok(())
    }

    /// One-state, one-step MDP: pulling arm `a` pays `rewards[a]`.
    pub fn bandit(rewards: Vec<CategoricalDist>, gamma: f64) -> Self {
        let n_actions = rewards.len();
        SmallMdp {
            n_states: 1,
            n_actions,
            transition: vec![vec![vec![(0, 1.0)]; n_actions]],
            reward: vec![rewards],
            start: vec![(0, 1.0)],
            gamma,
            horizon: 1,
            terminal: vec![false],
        }
    }

    /// Bandit with deterministic per-arm rewards.
    pub fn deterministic_bandit(rewards: &[f64], gamma: f64) -> Self {
        Self::bandit(rewards.iter().map(|&r| CategoricalDist::point_mass(r)).collect(), gamma)
    }
}

struct Walker<'a> {
    mdp: &'a SmallMdp,
    policy: &'a PolicyParams,
    probs: Vec<Vec<f64>>,
    with_scores: bool,
    paths: u64,
    leaves: Vec<(f64, f64)>,
    score_leaves: Vec<(f64, f64, Vec<f64>)>,
}

impl<'a> Walker<'a> {
    fn new(mdp: &'a SmallMdp, policy: &'a PolicyParams, with_scores: bool) -> Result<Self> {
        mdp.validate()?;
        let mut probs = Vec::with_capacity(mdp.n_states);
        for s in 0..mdp.n_states {
            probs.push(policy.action_probs(s)?);
        }
        Ok(Self {
            mdp,
            policy,
            probs,
            with_scores,
            paths: 0,
            leaves: Vec::new(),
            score_leaves: Vec::new(),
        })
    }

    fn emit(&mut self, value: f64, prob: f64, score: &[f64]) {
        if self.with_scores {
            self.score_leaves.push((value, prob, score.to_vec()));
        } else {
            self.leaves.push((value, prob));
        }
    }

    fn walk(&mut self, state: usize, t: usize, prob: f64, value: f64, score: &mut Vec<f64>) -> Result<()> {
        // The guard counts visited tree nodes, which bounds the path count.
        self.paths += 1;
        if self.paths > PATH_GUARD {
            return Err(Error::EnumerationTooLarge(PATH_GUARD));
        }
        let mdp = self.mdp;
        if t == mdp.horizon || mdp.terminal[state] {
            self.emit(value, prob, score);
            return Ok(());
        }
        let discount = mdp.gamma.powi(t as i32);
        for a in 0..mdp.n_actions {
            let pa = self.probs[state][a];
            if pa * prob < PRUNE_EPS {
                continue;
            }
            if self.with_scores {
                self.policy.accumulate_grad_log_prob(state, a, 1.0, score)?;
            }
            for &(rv, rp) in mdp.reward[state][a].atoms() {
                let p_ar = prob * pa * rp;
                if p_ar < PRUNE_EPS {
                    continue;
                }
                for &(next, tp) in &mdp.transition[state][a] {
                    let p = p_ar * tp;
                    if p < PRUNE_EPS {
                        continue;
                    }
                    self.walk(next, t + 1, p, value + discount * rv, score)?;
                }
            }
            if self.with_scores {
                self.policy.accumulate_grad_log_prob(state, a, -1.0, score)?;
            }
        }
        Ok(())
    }

    fn run(&mut self) -> Result<()> {
        let mut score = vec![0.0; self.policy.dim()];
        let start = self.mdp.start.clone();
        for (s, p) in start {
            if p < PRUNE_EPS {
                continue;
            }
            self.walk(s, 0, p, 0.0, &mut score)?;
        }
        Ok(())
    }
}

/// Exact distribution of the discounted return under `policy`, with atoms
/// merged when values coincide within `1e-12`.
pub fn enumerate_return_distribution(
    mdp: &SmallMdp,
    policy: &PolicyParams,
) -> Result<CategoricalDist> {
    let mut w = Walker::new(mdp, policy, false)?;
    w.run()?;
    CategoricalDist::from_weighted_values(w.leaves)
}

/// Merged return atoms with the exact gradient of each atom's probability.
struct AtomGradients {
    values: Vec<f64>,
    probs: Vec<f64>,
    grads: Vec<Vec<f64>>,
}

fn atom_gradients(mdp: &SmallMdp, policy: &PolicyParams) -> Result<AtomGradients> {
    let mut w = Walker::new(mdp, policy, true)?;
    w.run()?;
    let mut leaves = w.score_leaves;
    if leaves.is_empty() {
        return Err(Error::InvalidDistribution("no paths enumerated".into()));
    }
    leaves.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite returns"));
    let dim = policy.dim();
    let mut values = Vec::new();
    let mut probs: Vec<f64> = Vec::new();
    let mut grads: Vec<Vec<f64>> = Vec::new();
    for (v, p, score) in leaves {
        let is_new = match values.last() {
            Some(&last) => (v - last) > ATOM_MERGE_EPS,
            None => true,
        };
        if is_new {
            values.push(v);
            probs.push(0.0);
            grads.push(vec![0.0; dim]);
        }
        let k = values.len() - 1;
        probs[k] += p;
        // d p_path / d theta = p_path * score, summed into the atom gradient.
        for (g, s) in grads[k].iter_mut().zip(&score) {
            *g += p * s;
        }
    }
    Ok(AtomGradients { values, probs, grads })
}

/// Exact gradient of the Gini deviation of the return distribution:
/// differentiates `D = (1/2) sum_ij p_i p_j |v_i - v_j|` through the path
/// probabilities, after merging atoms with equal values.
pub fn analytic_gd_gradient(mdp: &SmallMdp, policy: &PolicyParams) -> Result<GradientVector> {
    let ag = atom_gradients(mdp, policy)?;
    let k = ag.values.len();
    let mut out = vec![0.0; policy.dim()];
    for i in 0..k {
        // c_i = sum_j p_j |v_i - v_j|; then grad D = sum_i c_i grad p_i.
        let mut c = 0.0;
        for j in 0..k {
            c += ag.probs[j] * (ag.values[i] - ag.values[j]).abs();
        }
        for (o, g) in out.iter_mut().zip(&ag.grads[i]) {
            *o += c * g;
        }
    }
    Ok(GradientVector::from_vec(out))
}

/// Exact gradient of the mean return.
pub fn analytic_mean_gradient(mdp: &SmallMdp, policy: &PolicyParams) -> Result<GradientVector> {
    let ag = atom_gradients(mdp, policy)?;
    let mut out = vec![0.0; policy.dim()];
    for (v, g) in ag.values.iter().zip(&ag.grads) {
        for (o, gi) in out.iter_mut().zip(g) {
            *o += v * gi;
        }
    }
    Ok(GradientVector::from_vec(out))
}

/// Exact gradient of the return variance (`grad M - 2 E grad E`).
pub fn analytic_variance_gradient(mdp: &SmallMdp, policy: &PolicyParams) -> Result<GradientVector> {
    let ag = atom_gradients(mdp, policy)?;
    let mean: f64 = ag.values.iter().zip(&ag.probs).map(|(v, p)| v * p).sum();
    let mut out = vec![0.0; policy.dim()];
    for (v, g) in ag.values.iter().zip(&ag.grads) {
        let coef = v * v - 2.0 * mean * v;
        for (o, gi) in out.iter_mut().zip(g) {
            *o += coef * gi;
        }
    }
    Ok(GradientVector::from_vec(out))
}

/// Central finite differences `(f(theta + h e_k) - f(theta - h e_k)) / 2h`.
pub fn finite_difference<F>(f: F, theta: &[f64], step: f64) -> Result<GradientVector>
where
    F: Fn(&[f64]) -> f64,
{
    if !(step > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be positive".into()));
    }
    let mut out = vec![0.0; theta.len()];
    let mut probe = theta.to_vec();
    for k in 0..theta.len() {
        probe[k] = theta[k] + step;
        let up = f(&probe);
        probe[k] = theta[k] - step;
        let down = f(&probe);
        probe[k] = theta[k];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite("finite-difference function value".into()));
        }
        out[k] = (up - down) / (2.0 * step);
    }
    Ok(GradientVector::from_vec(out))
}

/// Default step used for finite-difference oracles.
pub const FD_STEP: f64 = 1e-5;

/// The MVPI reward modification `r_hat = r - lambda r^2 + 2 lambda r y`.
pub fn mvpi_reward_modification(r: f64, y: f64, lambda: f64) -> f64 {
    r - lambda * r * r + 2.0 * lambda * r * y
}

/// Closed-form MVPI quantities on the guarded maze.
#[derive(Clone, Debug, Serialize)]
pub struct MvpiMazeAnalysis {
    /// Dual variable `y = (1 - gamma) E[G0]` of the initial random policy.
    pub y: f64,
    /// Goal reward after modification with that `y`.
    pub modified_goal: f64,
    /// Mean of the modified red-state reward distribution.
    pub modified_red_mean: f64,
    /// Return of a `max_len`-step random walk collecting -1 per step.
    pub random_walk_return: f64,
    /// Return of the safe path: ten -1 steps, then the modified goal.
    pub safe_path_return: f64,
}

/// Reproduces the analytic MVPI account of the maze: the initial random
/// policy walks for `max_len` steps at -1 per step, fixing `y`; rewards are
/// then modified and the canonical paths re-valued.
pub fn mvpi_maze_analysis(
    goal_reward: f64,
    lambda: f64,
    gamma: f64,
    max_len: usize,
) -> MvpiMazeAnalysis {
    let random_walk_return: f64 = (0..max_len).map(|t| gamma.powi(t as i32) * -1.0).sum();
    let y = (1.0 - gamma) * random_walk_return;
    let modified_goal = mvpi_reward_modification(goal_reward, y, lambda);
    let red = crate::env::guarded_maze_red_dist();
    let modified_red_mean: f64 = red
        .atoms()
        .iter()
        .map(|&(v, p)| p * mvpi_reward_modification(v, y, lambda))
        .sum();
    let safe_path_return: f64 = (0..10).map(|t| gamma.powi(t) * -1.0).sum::<f64>()
        + gamma.powi(10) * modified_goal;
    MvpiMazeAnalysis { y, modified_goal, modified_red_mean, random_walk_return, safe_path_return }
}

/// Samples one discounted return from the MDP under `policy`.
pub fn sample_return(mdp: &SmallMdp, policy: &PolicyParams, rng: &mut Rng) -> Result<f64> {
    let mut state = sample_sparse(&mdp.start, rng);
    let mut value = 0.0;
    for t in 0..mdp.horizon {
        if mdp.terminal[state] {
            break;
        }
        let (action, _) = policy.sample_action(state, rng)?;
        let r = mdp.reward[state][action].sample(rng);
        value += mdp.gamma.powi(t as i32) * r;
        state = sample_sparse(&mdp.transition[state][action], rng);
    }
    Ok(value)
}

fn sample_sparse(pairs: &[(usize, f64)], rng: &mut Rng) -> usize {
    use rand::Rng as _;
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for &(s, p) in pairs {
        cum += p;
        if u < cum {
            return s;
        }
    }
    pairs.last().expect("non-empty distribution").0
}

/// Random small MDP plus a random tabular policy, for oracle cross-checks.
pub fn random_small_mdp(rng: &mut Rng) -> (SmallMdp, PolicyParams) {
    use rand::Rng as _;
    let n_states = rng.gen_range(2..=4usize);
    let n_actions = rng.gen_range(2..=3usize);
    let horizon = rng.gen_range(2..=4usize);
    let gamma = [1.0, 0.99, 0.9][rng.gen_range(0..3usize)];
    let mut transition = Vec::with_capacity(n_states);
    let mut reward = Vec::with_capacity(n_states);
    for _ in 0..n_states {
        let mut row_t = Vec::with_capacity(n_actions);
        let mut row_r = Vec::with_capacity(n_actions);
        for _ in 0..n_actions {
            // Sparse transition over two random successors.
            let s1 = rng.gen_range(0..n_states);
            let mut s2 = rng.gen_range(0..n_states);
            if s2 == s1 {
                s2 = (s1 + 1) % n_states;
            }
            let p = rng.gen_range(0.1..0.9);
            row_t.push(vec![(s1, p), (s2, 1.0 - p)]);
            // Integer-grid rewards so exact ties across paths occur.
            let v1 = rng.gen_range(-3..=3) as f64;
            if rng.gen_bool(0.5) {
                row_r.push(CategoricalDist::point_mass(v1));
            } else {
                let mut v2 = rng.gen_range(-3..=3) as f64;
                if (v2 - v1).abs() < 0.5 {
                    v2 = v1 + 1.0;
                }
                let q = rng.gen_range(0.2..0.8);
                row_r.push(
                    CategoricalDist::from_weighted_values(vec![(v1, q), (v2, 1.0 - q)])
                        .expect("valid reward atoms"),
                );
            }
        }
        transition.push(row_t);
        reward.push(row_r);
    }
    let mdp = SmallMdp {
        n_states,
        n_actions,
        transition,
        reward,
        start: vec![(0, 1.0)],
        gamma,
        horizon,
        terminal: vec![false; n_states],
    };
    let theta: Vec<f64> = (0..n_states * n_actions).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let policy = PolicyParams::new(theta, crate::policy::FeatureMap::tabular(n_states, n_actions))
        .expect("finite random theta");
    (mdp, policy)
}
