//! Training configuration, loaded from TOML.

use serde::{Deserialize, Serialize};

use crate::env::{Environment, GuardedMaze, GuardedMazeConfig, NoisyRegionGrid, NoisyRegionGridConfig};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Mean-GD policy gradient with a REINFORCE-baseline mean term and
    /// window importance sampling.
    MgReinforce,
    /// Mean-GD policy gradient with a PPO-Clip mean term and clipped
    /// trajectory ratios.
    MgPpo,
    /// REINFORCE with baseline (risk-neutral).
    Reinforce,
    /// Mean-variance gradient with double sampling.
    Mvo,
    /// Two-timescale penalized mean-variance updates.
    Tamar,
    /// Fenchel-dual mean-variance updates.
    Mvp,
    /// Tabular mean-variance policy iteration.
    Mvpi,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::MgReinforce => "mg_reinforce",
            Method::MgPpo => "mg_ppo",
            Method::Reinforce => "reinforce",
            Method::Mvo => "mvo",
            Method::Tamar => "tamar",
            Method::Mvp => "mvp",
            Method::Mvpi => "mvpi",
        }
    }
}

/// Environment selection, embedded in the training config under `[env]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EnvConfig {
    GuardedMaze(GuardedMazeConfig),
    NoisyGrid(NoisyRegionGridConfig),
}

impl EnvConfig {
    pub fn build(&self) -> Result<Box<dyn Environment>> {
        match self {
            EnvConfig::GuardedMaze(cfg) => Ok(Box::new(GuardedMaze::new(cfg.clone())?)),
            EnvConfig::NoisyGrid(cfg) => Ok(Box::new(NoisyRegionGrid::new(cfg.clone())?)),
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            EnvConfig::GuardedMaze(cfg) => cfg.gamma,
            EnvConfig::NoisyGrid(cfg) => cfg.gamma,
        }
    }
}

fn default_m() -> usize {
    10
}

fn default_eval_episodes() -> usize {
    10
}

fn default_entropy_coef() -> f64 {
    0.01
}

fn default_b_threshold() -> f64 {
    50.0
}

fn default_lr_stats_multiplier() -> f64 {
    100.0
}

fn default_q_lr() -> f64 {
    5e-3
}

fn default_mvpi_inner() -> usize {
    4000
}

fn default_mvpi_mc() -> usize {
    1000
}

/// Full specification of one training run.
///
/// `k` counts outer iterations for the batch methods (`mg_reinforce`,
/// `mg_ppo`, `reinforce`, `mvo`), so the episode budget is `k * n`. The
/// per-episode methods (`tamar`, `mvp`) run the same `k * n` episodes for
/// budget parity, and `mvpi` uses `k` outer policy-iteration rounds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub method: Method,
    pub env: EnvConfig,
    pub k: usize,
    pub n: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    pub lr_policy: f64,
    /// Value-function learning rate; defaults to `100 * lr_policy` for the
    /// REINFORCE-carrier methods and `lr_policy` for the PPO carrier.
    #[serde(default)]
    pub lr_value: Option<f64>,
    #[serde(default)]
    pub lambda: f64,
    /// Window half-width for the REINFORCE-carrier IS strategy.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Inner-loop termination fraction for the window strategy.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Ratio cap for the PPO-carrier IS strategy; only valid for `mg_ppo`.
    #[serde(default)]
    pub zeta: Option<f64>,
    #[serde(default)]
    pub epsilon_clip: Option<f64>,
    #[serde(default)]
    pub lambda_gae: Option<f64>,
    #[serde(default = "default_entropy_coef")]
    pub entropy_coef: f64,
    /// Discount; defaults to the environment's.
    #[serde(default)]
    pub gamma: Option<f64>,
    pub seed: u64,
    /// Record metrics every this many outer iterations.
    pub eval_every: usize,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    #[serde(default = "default_b_threshold")]
    pub b_threshold: f64,
    #[serde(default = "default_lr_stats_multiplier")]
    pub lr_stats_multiplier: f64,
    #[serde(default = "default_q_lr")]
    pub q_lr: f64,
    #[serde(default = "default_mvpi_inner")]
    pub mvpi_inner_episodes: usize,
    #[serde(default = "default_mvpi_mc")]
    pub mvpi_mc_episodes: usize,
}

impl TrainConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: TrainConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn effective_gamma(&self) -> f64 {
        self.gamma.unwrap_or_else(|| self.env.gamma())
    }

    pub fn effective_lr_value(&self) -> f64 {
        match self.method {
            Method::MgPpo => self.lr_value.unwrap_or(self.lr_policy),
            _ => self.lr_value.unwrap_or(self.lr_policy * 100.0),
        }
    }

    pub fn effective_delta(&self) -> f64 {
        self.delta.unwrap_or(0.5)
    }

    pub fn effective_beta(&self) -> f64 {
        self.beta.unwrap_or(0.6)
    }

    pub fn effective_zeta(&self) -> f64 {
        self.zeta.unwrap_or(2.0)
    }

    pub fn effective_epsilon_clip(&self) -> f64 {
        self.epsilon_clip.unwrap_or(0.2)
    }

    pub fn effective_lambda_gae(&self) -> f64 {
        self.lambda_gae.unwrap_or(0.95)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k == 0 || self.n == 0 || self.m == 0 {
            return err("k, n, and m must be positive".into());
        }
        if !(self.lr_policy > 0.0) {
            return err("lr_policy must be positive".into());
        }
        if let Some(lr) = self.lr_value {
            if !(lr > 0.0) {
                return err("lr_value must be positive".into());
            }
        }
        if self.lambda < 0.0 {
            return err("lambda must be non-negative".into());
        }
        let gamma = self.effective_gamma();
        if !(gamma > 0.0 && gamma <= 1.0) {
            return err(format!("gamma {gamma} not in (0,1]"));
        }
        if self.eval_every == 0 || self.eval_episodes == 0 {
            return err("eval_every and eval_episodes must be positive".into());
        }
        if self.zeta.is_some() && self.method != Method::MgPpo {
            return err("zeta is only valid for mg_ppo".into());
        }
        if (self.epsilon_clip.is_some() || self.lambda_gae.is_some())
            && self.method != Method::MgPpo
        {
            return err("epsilon_clip and lambda_gae are only valid for mg_ppo".into());
        }
        if (self.delta.is_some() || self.beta.is_some())
            && !matches!(self.method, Method::MgReinforce | Method::Mvo)
        {
            return err("delta and beta are only valid for the window-IS methods".into());
        }
        match self.method {
            Method::MgReinforce => {
                if self.n < 2 {
                    return err("mg_reinforce needs n >= 2 for the GD term".into());
                }
                let d = self.effective_delta();
                let b = self.effective_beta();
                if !(d > 0.0) || !(b > 0.0 && b < 1.0) {
                    return err("window IS needs delta > 0 and beta in (0,1)".into());
                }
            }
            Method::MgPpo => {
                let z = self.effective_zeta();
                let e = self.effective_epsilon_clip();
                let lg = self.effective_lambda_gae();
                if !(z > 0.0) || !(e > 0.0) || !(0.0..=1.0).contains(&lg) {
                    return err("mg_ppo needs zeta > 0, epsilon_clip > 0, lambda_gae in [0,1]".into());
                }
            }
            Method::Mvo => {
                if self.n < 4 || self.n % 2 != 0 {
                    return err("mvo needs an even batch size n >= 4".into());
                }
            }
            Method::Tamar => {
                if !(self.lr_stats_multiplier > 1.0) {
                    return err("tamar needs lr_stats_multiplier > 1".into());
                }
            }
            Method::Mvp => {
                if self.lambda == 0.0 {
                    return err("mvp needs lambda != 0".into());
                }
            }
            Method::Mvpi => {
                if !(self.q_lr > 0.0) {
                    return err("mvpi needs q_lr > 0".into());
                }
                if self.mvpi_inner_episodes == 0 || self.mvpi_mc_episodes == 0 {
                    return err("mvpi episode budgets must be positive".into());
                }
            }
            Method::Reinforce => {}
        }
        match &self.env {
            EnvConfig::GuardedMaze(cfg) => cfg.validate()?,
            EnvConfig::NoisyGrid(cfg) => cfg.validate()?,
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAZE_MG: &str = r#"
method = "mg_reinforce"
k = 100
n = 50
m = 10
lr_policy = 1e-4
lambda = 1.2
delta = 0.5
beta = 0.6
seed = 7
eval_every = 10

[env]
type = "guarded_maze"
goal_reward = 20.0
"#;

    #[test]
    fn parses_maze_config_with_defaults() {
        let cfg = TrainConfig::from_toml_str(MAZE_MG).unwrap();
        assert_eq!(cfg.method, Method::MgReinforce);
        assert_eq!(cfg.n, 50);
        assert!((cfg.effective_gamma() - 0.999).abs() < 1e-12);
        assert!((cfg.effective_lr_value() - 1e-2).abs() < 1e-15);
        assert_eq!(cfg.eval_episodes, 10);
        match &cfg.env {
            EnvConfig::GuardedMaze(m) => assert_eq!(m.goal_reward, 20.0),
            other => panic!("wrong env {other:?}"),
        }
    }

    #[test]
    fn zeta_outside_mg_ppo_is_rejected() {
        let text = MAZE_MG.replace("beta = 0.6", "beta = 0.6\nzeta = 2.0");
        let got = TrainConfig::from_toml_str(&text);
        assert!(matches!(got, Err(Error::InvalidConfig(_))), "{got:?}");
    }

    #[test]
    fn unknown_method_is_rejected() {
        let text = MAZE_MG.replace("mg_reinforce", "spicy_sgd");
        assert!(TrainConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn odd_mvo_batch_is_rejected() {
        let text = MAZE_MG
            .replace("mg_reinforce", "mvo")
            .replace("n = 50", "n = 49");
        assert!(TrainConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = TrainConfig::from_toml_str(MAZE_MG).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let back = TrainConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.method, cfg.method);
        assert_eq!(back.n, cfg.n);
        assert_eq!(back.seed, cfg.seed);
    }
}
