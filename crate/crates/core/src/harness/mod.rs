//! Seeded experiment orchestration: training loops for the mean-GD methods
//! and the variance baselines, evaluation metrics, and CSV/JSON emission.

pub mod config;
pub mod metrics;
pub mod selftest;
pub mod train;

pub use config::{EnvConfig, Method, TrainConfig};
pub use metrics::{MetricsRow, RunManifest, RunMetrics, CSV_HEADER};
pub use train::{evaluate, mean_noise_exposure, rollout, train, TrainOutcome};
