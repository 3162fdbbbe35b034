//! Differentiable softmax policies and linear value baselines.
//!
//! Policies are `pi(a|s) = exp(phi(s,a).theta) / sum_b exp(phi(s,b).theta)`
//! over a feature map `phi`, with the tabular case using one-hot features of
//! dimension `n_states * n_actions`. Parameter objects are immutable values;
//! updates return new parameters.

use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// A parameter-shaped gradient (or update direction).
#[derive(Clone, Debug, PartialEq)]
pub struct GradientVector {
    entries: Vec<f64>,
}

impl GradientVector {
    pub fn zeros(dim: usize) -> Self {
        Self { entries: vec![0.0; dim] }
    }

    pub fn from_vec(entries: Vec<f64>) -> Self {
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }

    /// `self += w * other`.
    pub fn add_scaled(&mut self, other: &GradientVector, w: f64) -> Result<()> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "gradient dims {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += w * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, c: f64) {
        for a in &mut self.entries {
            *a *= c;
        }
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }
}

/// State-action feature map.
#[derive(Clone)]
pub enum FeatureMap {
    /// One-hot over `(state, action)`; index `state * n_actions + action`.
    TabularOneHot { n_states: usize, n_actions: usize },
    /// Arbitrary linear features supplied by the caller.
    Linear {
        dim: usize,
        n_actions: usize,
        map: Arc<dyn Fn(usize, usize) -> Vec<f64> + Send + Sync>,
    },
}

impl std::fmt::Debug for FeatureMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureMap::TabularOneHot { n_states, n_actions } => f
                .debug_struct("TabularOneHot")
                .field("n_states", n_states)
                .field("n_actions", n_actions)
                .finish(),
            FeatureMap::Linear { dim, n_actions, .. } => f
                .debug_struct("Linear")
                .field("dim", dim)
                .field("n_actions", n_actions)
                .finish(),
        }
    }
}

impl FeatureMap {
    pub fn tabular(n_states: usize, n_actions: usize) -> Self {
        FeatureMap::TabularOneHot { n_states, n_actions }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureMap::TabularOneHot { n_states, n_actions } => n_states * n_actions,
            FeatureMap::Linear { dim, .. } => *dim,
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            FeatureMap::TabularOneHot { n_actions, .. } => *n_actions,
            FeatureMap::Linear { n_actions, .. } => *n_actions,
        }
    }

    /// `phi(s,a) . theta`.
    pub fn dot(&self, state: usize, action: usize, theta: &[f64]) -> f64 {
        match self {
            FeatureMap::TabularOneHot { n_actions, .. } => theta[state * n_actions + action],
            FeatureMap::Linear { map, .. } => {
                let phi = map(state, action);
                phi.iter().zip(theta).map(|(x, t)| x * t).sum()
            }
        }
    }

    /// `out += w * phi(s,a)`. The one-hot case touches a single entry.
    pub fn accumulate(&self, state: usize, action: usize, w: f64, out: &mut [f64]) {
        match self {
            FeatureMap::TabularOneHot { n_actions, .. } => out[state * n_actions + action] += w,
            FeatureMap::Linear { map, .. } => {
                let phi = map(state, action);
                for (o, x) in out.iter_mut().zip(&phi) {
                    *o += w * x;
                }
            }
        }
    }
}

/// Softmax policy parameters over a feature map.
#[derive(Clone, Debug)]
pub struct PolicyParams {
    theta: Vec<f64>,
    features: FeatureMap,
}

impl PolicyParams {
    /// Zero-initialized parameters (uniform policy).
    pub fn zeros(features: FeatureMap) -> Self {
        let dim = features.dim();
        Self { theta: vec![0.0; dim], features }
    }

    pub fn new(theta: Vec<f64>, features: FeatureMap) -> Result<Self> {
        if theta.len() != features.dim() {
            return Err(Error::DimensionMismatch(format!(
                "theta has {} entries, features expect {}",
                theta.len(),
                features.dim()
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("policy parameters".into()));
        }
        Ok(Self { theta, features })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn features(&self) -> &FeatureMap {
        &self.features
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn n_actions(&self) -> usize {
        self.features.n_actions()
    }

    fn logits(&self, state: usize) -> Vec<f64> {
        (0..self.n_actions())
            .map(|a| self.features.dot(state, a, &self.theta))
            .collect()
    }

    /// Action distribution at `state`, computed with max-subtraction so
    /// finite parameters can never overflow.
    pub fn action_probs(&self, state: usize) -> Result<Vec<f64>> {
        let logits = self.logits(state);
        if logits.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite("policy logits".into()));
        }
        let max = logits.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(l));
        let mut probs: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        Ok(probs)
    }

    /// `log pi(a|s)` via a numerically stable log-softmax.
    pub fn log_prob(&self, state: usize, action: usize) -> Result<f64> {
        let logits = self.logits(state);
        if logits.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite("policy logits".into()));
        }
        let max = logits.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(l));
        let log_sum = logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln() + max;
        Ok(logits[action] - log_sum)
    }

    /// Score function `grad log pi(a|s) = phi(s,a) - E_{b~pi}[phi(s,b)]`.
    pub fn grad_log_prob(&self, state: usize, action: usize) -> Result<GradientVector> {
        let mut out = GradientVector::zeros(self.dim());
        self.accumulate_grad_log_prob(state, action, 1.0, out.as_mut_slice())?;
        Ok(out)
    }

    /// `out += w * grad log pi(a|s)`; sparse for one-hot features.
    pub fn accumulate_grad_log_prob(
        &self,
        state: usize,
        action: usize,
        w: f64,
        out: &mut [f64],
    ) -> Result<()> {
        let probs = self.action_probs(state)?;
        self.features.accumulate(state, action, w, out);
        for (b, &p) in probs.iter().enumerate() {
            self.features.accumulate(state, b, -w * p, out);
        }
        Ok(())
    }

    /// `out += w * grad H(pi(.|s))` where `H` is the policy entropy at `state`.
    /// Uses `grad H = -sum_a pi(a|s) log pi(a|s) grad log pi(a|s)`.
    pub fn accumulate_entropy_grad(&self, state: usize, w: f64, out: &mut [f64]) -> Result<()> {
        let probs = self.action_probs(state)?;
        // E[phi] under pi, reused for every action's score.
        for (a, &pa) in probs.iter().enumerate() {
            if pa <= 0.0 {
                continue;
            }
            let coef = -w * pa * pa.ln();
            self.features.accumulate(state, a, coef, out);
            for (b, &pb) in probs.iter().enumerate() {
                self.features.accumulate(state, b, -coef * pb, out);
            }
        }
        Ok(())
    }

    /// Samples an action and returns it with its log-probability.
    pub fn sample_action(&self, state: usize, rng: &mut Rng) -> Result<(usize, f64)> {
        let probs = self.action_probs(state)?;
        let u: f64 = rng.gen();
        let mut cum = 0.0;
        let mut chosen = probs.len() - 1;
        for (a, &p) in probs.iter().enumerate() {
            cum += p;
            if u < cum {
                chosen = a;
                break;
            }
        }
        Ok((chosen, probs[chosen].ln()))
    }

    pub fn to_checkpoint(&self) -> PolicyCheckpoint {
        PolicyCheckpoint { feature_dim: self.dim(), theta: self.theta.clone() }
    }

    /// Restores parameters from a checkpoint against a concrete feature map.
    pub fn from_checkpoint(cp: PolicyCheckpoint, features: FeatureMap) -> Result<Self> {
        if cp.feature_dim != features.dim() || cp.theta.len() != cp.feature_dim {
            return Err(Error::DimensionMismatch(format!(
                "checkpoint dim {} vs feature dim {}",
                cp.feature_dim,
                features.dim()
            )));
        }
        PolicyParams::new(cp.theta, features)
    }

    /// Gradient-ascent step `theta' = theta + lr * direction`.
    pub fn ascend(&self, direction: &GradientVector, lr: f64) -> Result<PolicyParams> {
        if direction.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "direction has {} entries, theta has {}",
                direction.dim(),
                self.dim()
            )));
        }
        let theta: Vec<f64> = self
            .theta
            .iter()
            .zip(direction.as_slice())
            .map(|(t, g)| t + lr * g)
            .collect();
        PolicyParams::new(theta, self.features.clone())
    }
}

/// Serialized policy parameters: `{feature_dim, theta: [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub feature_dim: usize,
    pub theta: Vec<f64>,
}

/// State feature map for linear value functions.
#[derive(Clone)]
pub enum StateFeatureMap {
    TabularOneHot { n_states: usize },
    Linear {
        dim: usize,
        map: Arc<dyn Fn(usize) -> Vec<f64> + Send + Sync>,
    },
}

impl std::fmt::Debug for StateFeatureMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateFeatureMap::TabularOneHot { n_states } => {
                f.debug_struct("TabularOneHot").field("n_states", n_states).finish()
            }
            StateFeatureMap::Linear { dim, .. } => {
                f.debug_struct("Linear").field("dim", dim).finish()
            }
        }
    }
}

impl StateFeatureMap {
    pub fn tabular(n_states: usize) -> Self {
        StateFeatureMap::TabularOneHot { n_states }
    }

    pub fn dim(&self) -> usize {
        match self {
            StateFeatureMap::TabularOneHot { n_states } => *n_states,
            StateFeatureMap::Linear { dim, .. } => *dim,
        }
    }

    fn dot(&self, state: usize, omega: &[f64]) -> f64 {
        match self {
            StateFeatureMap::TabularOneHot { .. } => omega[state],
            StateFeatureMap::Linear { map, .. } => {
                map(state).iter().zip(omega).map(|(x, w)| x * w).sum()
            }
        }
    }

    fn accumulate(&self, state: usize, w: f64, out: &mut [f64]) {
        match self {
            StateFeatureMap::TabularOneHot { .. } => out[state] += w,
            StateFeatureMap::Linear { map, .. } => {
                for (o, x) in out.iter_mut().zip(&map(state)) {
                    *o += w * x;
                }
            }
        }
    }
}

/// Linear value-function parameters `V(s) = omega . phi(s)`.
#[derive(Clone, Debug)]
pub struct ValueParams {
    omega: Vec<f64>,
    features: StateFeatureMap,
}

impl ValueParams {
    pub fn zeros(features: StateFeatureMap) -> Self {
        let dim = features.dim();
        Self { omega: vec![0.0; dim], features }
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn predict(&self, state: usize) -> f64 {
        self.features.dot(state, &self.omega)
    }

    /// One SGD step on `(V(s) - target)^2`. The factor 2 from the square is
    /// kept (no 1/2 convention), so `omega' = omega - lr * 2 (V(s) - target) phi(s)`.
    pub fn update(&self, state: usize, target: f64, lr: f64) -> ValueParams {
        let mut omega = self.omega.clone();
        let err = self.predict(state) - target;
        self.features.accumulate(state, -lr * 2.0 * err, &mut omega);
        ValueParams { omega, features: self.features.clone() }
    }

    /// One SGD step on the trajectory loss `(1/T) sum_t (V(s_t) - g_t)^2`.
    pub fn update_batch(&self, states: &[usize], targets: &[f64], lr: f64) -> ValueParams {
        debug_assert_eq!(states.len(), targets.len());
        let mut omega = self.omega.clone();
        let scale = -lr * 2.0 / states.len() as f64;
        for (&s, &g) in states.iter().zip(targets) {
            let err = self.predict(s) - g;
            self.features.accumulate(s, scale * err, &mut omega);
        }
        ValueParams { omega, features: self.features.clone() }
    }
}

/// Convenience for value prediction matching the operation-style API.
pub fn value_predict(v: &ValueParams, state: usize) -> f64 {
    v.predict(state)
}

/// Convenience for a single-sample value update.
pub fn value_update(v: &ValueParams, state: usize, target: f64, lr: f64) -> ValueParams {
    v.update(state, target, lr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::finite_difference;

    fn tabular_policy(n_states: usize, n_actions: usize) -> PolicyParams {
        PolicyParams::zeros(FeatureMap::tabular(n_states, n_actions))
    }

    #[test]
    fn zero_theta_gives_uniform_probs() {
        let p = tabular_policy(3, 4);
        let probs = p.action_probs(1).unwrap();
        for &pr in &probs {
            assert!((pr - 0.25).abs() < 1e-15);
        }
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_shift_invariance_is_exact() {
        let mut theta = vec![0.3, -1.2, 0.7, 2.0];
        let features = FeatureMap::tabular(1, 4);
        let p = PolicyParams::new(theta.clone(), features.clone()).unwrap();
        let base = p.action_probs(0).unwrap();
        for t in &mut theta {
            *t += 5.5;
        }
        let shifted = PolicyParams::new(theta, features).unwrap();
        let got = shifted.action_probs(0).unwrap();
        for (a, b) in base.iter().zip(&got) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn ln3_logit_gives_three_quarters() {
        let mut theta = vec![0.0; 2];
        theta[0] = 3.0f64.ln();
        let p = PolicyParams::new(theta, FeatureMap::tabular(1, 2)).unwrap();
        let probs = p.action_probs(0).unwrap();
        assert!((probs[0] - 0.75).abs() < 1e-12);
        assert!((probs[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn grad_log_prob_uniform_one_hot() {
        let p = tabular_policy(1, 4);
        let g = p.grad_log_prob(0, 2).unwrap();
        let g = g.as_slice();
        assert!((g[2] - 0.75).abs() < 1e-12);
        for &i in &[0usize, 1, 3] {
            assert!((g[i] + 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn score_function_has_zero_mean() {
        let theta = vec![0.4, -0.9, 1.3, 0.0, 2.2, -1.7, 0.5, 0.1];
        let p = PolicyParams::new(theta, FeatureMap::tabular(2, 4)).unwrap();
        for s in 0..2 {
            let probs = p.action_probs(s).unwrap();
            let mut mean = GradientVector::zeros(p.dim());
            for (a, &pa) in probs.iter().enumerate() {
                let g = p.grad_log_prob(s, a).unwrap();
                mean.add_scaled(&g, pa).unwrap();
            }
            assert!(mean.max_abs() < 1e-10);
        }
    }

    #[test]
    fn grad_log_prob_matches_finite_differences() {
        let theta = vec![0.2, -0.5, 0.8, 1.1, -0.3, 0.0];
        let features = FeatureMap::tabular(2, 3);
        let p = PolicyParams::new(theta.clone(), features.clone()).unwrap();
        for (s, a) in [(0usize, 1usize), (1, 2), (0, 0)] {
            let analytic = p.grad_log_prob(s, a).unwrap();
            let features = features.clone();
            let fd = finite_difference(
                |t| {
                    PolicyParams::new(t.to_vec(), features.clone())
                        .unwrap()
                        .log_prob(s, a)
                        .unwrap()
                },
                &theta,
                1e-6,
            )
            .unwrap();
            for (x, y) in analytic.as_slice().iter().zip(fd.as_slice()) {
                assert!((x - y).abs() < 1e-7, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn argmax_preserved_under_positive_scaling() {
        let theta = vec![0.4, -0.9, 1.3, 0.0];
        let p = PolicyParams::new(theta.clone(), FeatureMap::tabular(1, 4)).unwrap();
        let argmax = |probs: &[f64]| {
            probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
        };
        let base = argmax(&p.action_probs(0).unwrap());
        for c in [0.5, 2.0, 7.0] {
            let scaled: Vec<f64> = theta.iter().map(|t| c * t).collect();
            let q = PolicyParams::new(scaled, FeatureMap::tabular(1, 4)).unwrap();
            assert_eq!(argmax(&q.action_probs(0).unwrap()), base);
        }
    }

    #[test]
    fn entropy_grad_matches_finite_differences() {
        let theta = vec![0.7, -0.2, 0.1, 1.4];
        let features = FeatureMap::tabular(1, 4);
        let p = PolicyParams::new(theta.clone(), features.clone()).unwrap();
        let mut analytic = GradientVector::zeros(p.dim());
        p.accumulate_entropy_grad(0, 1.0, analytic.as_mut_slice()).unwrap();
        let fd = finite_difference(
            |t| {
                let q = PolicyParams::new(t.to_vec(), features.clone()).unwrap();
                let probs = q.action_probs(0).unwrap();
                -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
            },
            &theta,
            1e-6,
        )
        .unwrap();
        for (x, y) in analytic.as_slice().iter().zip(fd.as_slice()) {
            assert!((x - y).abs() < 1e-7, "{x} vs {y}");
        }
    }

    #[test]
    fn value_update_frozen_example() {
        let v = ValueParams::zeros(StateFeatureMap::tabular(1));
        assert_eq!(v.predict(0), 0.0);
        let v2 = v.update(0, 10.0, 0.1);
        assert!((v2.predict(0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn value_update_converges_to_target() {
        let mut v = ValueParams::zeros(StateFeatureMap::tabular(1));
        for _ in 0..200 {
            v = v.update(0, 3.5, 0.1);
        }
        assert!((v.predict(0) - 3.5).abs() < 1e-3);
    }
}
