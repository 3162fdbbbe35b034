//! Episode records and return-sorted batches.

use crate::error::{Error, Result};
use crate::policy::PolicyParams;

/// One environment transition as stored in a trajectory. `log_prob_old` is
/// the log-probability of `action` under the behavior policy at collection
/// time; it never changes afterwards.
#[derive(Clone, Debug)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub log_prob_old: f64,
}

/// One episode: its steps, discounted return, and the trajectory
/// log-probabilities under the behavior policy (`log_prob_old`, fixed) and
/// the current policy (`log_prob_new`, refreshed before each reuse).
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub return_value: f64,
    pub log_prob_old: f64,
    pub log_prob_new: f64,
    /// Collection index within its batch; preserves the sampling order after
    /// sorting (used e.g. to split batches into independent halves).
    pub index: usize,
}

impl Trajectory {
    /// Builds a trajectory from raw steps, computing the discounted return
    /// and summing the stored per-step old log-probabilities.
    pub fn from_steps(steps: Vec<Step>, gamma: f64, index: usize) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidArgument("trajectory needs at least one step".into()));
        }
        let mut return_value = 0.0;
        let mut log_prob_old = 0.0;
        for (t, s) in steps.iter().enumerate() {
            return_value += gamma.powi(t as i32) * s.reward;
            log_prob_old += s.log_prob_old;
        }
        Ok(Self { steps, return_value, log_prob_old, log_prob_new: log_prob_old, index })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Rewards-to-go `g_t = sum_{t' >= t} gamma^(t'-t) r_t'`.
    pub fn rewards_to_go(&self, gamma: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.steps.len()];
        let mut acc = 0.0;
        for (t, s) in self.steps.iter().enumerate().rev() {
            acc = s.reward + gamma * acc;
            out[t] = acc;
        }
        out
    }

    /// Recomputes `log_prob_new` under `policy`.
    pub fn refresh_log_prob(&mut self, policy: &PolicyParams) -> Result<()> {
        let mut total = 0.0;
        for s in &self.steps {
            total += policy.log_prob(s.state, s.action)?;
        }
        self.log_prob_new = total;
        Ok(())
    }

    /// Checks that the stored return matches the steps within `1e-9`.
    pub fn validate(&self, gamma: f64) -> Result<()> {
        let recomputed: f64 = self
            .steps
            .iter()
            .enumerate()
            .map(|(t, s)| gamma.powi(t as i32) * s.reward)
            .sum();
        if (recomputed - self.return_value).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "return {} inconsistent with steps (recomputed {recomputed})",
                self.return_value
            )));
        }
        Ok(())
    }
}

/// Trajectories sorted by return, ascending. Ties keep collection order
/// (stable sort), which leaves eta-weights well-defined since tied
/// differences contribute zero.
#[derive(Clone, Debug)]
pub struct SortedBatch {
    trajectories: Vec<Trajectory>,
}

impl SortedBatch {
    pub fn new(mut trajectories: Vec<Trajectory>) -> Self {
        trajectories
            .sort_by(|a, b| a.return_value.partial_cmp(&b.return_value).expect("finite returns"));
        Self { trajectories }
    }

    pub fn n(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn returns(&self) -> Vec<f64> {
        self.trajectories.iter().map(|t| t.return_value).collect()
    }

    /// Refreshes every trajectory's `log_prob_new` under `policy`.
    pub fn refresh_log_probs(&mut self, policy: &PolicyParams) -> Result<()> {
        for t in &mut self.trajectories {
            t.refresh_log_prob(policy)?;
        }
        Ok(())
    }
}
